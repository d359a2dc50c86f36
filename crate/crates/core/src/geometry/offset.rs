use super::{ConvexPolygon, Point2};
use crate::error::{DcpfError, Result};
use crate::scalar::Scalar;

/// Moves every edge of `p` outward by `d` (inward for negative `d`) and
/// returns the intersection of the shifted half-planes.
pub fn offset<T: Scalar>(p: &ConvexPolygon<T>, d: T) -> Result<ConvexPolygon<T>> {
    let v = p.vertices();
    let n = v.len();
    if d == T::zero() {
        return Ok(p.clone());
    }
    let unit_normal = |i: usize| {
        let e = v[(i + 1) % n] - v[i];
        let len = e.norm();
        Point2::new(e.y / len, -e.x / len)
    };
    if d > T::zero() {
        // growing a convex polygon keeps every edge; each vertex moves to the miter point
        let out = (0..n)
            .map(|i| {
                let n1 = unit_normal((i + n - 1) % n);
                let n2 = unit_normal(i);
                v[i] + (n1 + n2) * (d / (T::one() + n1.dot(n2)))
            })
            .collect();
        return ConvexPolygon::new(out);
    }

    let mut poly: Vec<Point2<T>> = v.to_vec();
    for i in 0..n {
        let a = v[i];
        let nrm = unit_normal(i);
        // signed distance inside the shifted edge line
        let f = |q: Point2<T>| -nrm.dot(q - a) + d;
        poly = clip(&poly, f);
        if poly.len() < 3 {
            break;
        }
    }
    let collapsed = || DcpfError::EmptyResult(format!("inward offset {d} collapses the polygon"));
    if poly.len() < 3 {
        return Err(collapsed());
    }
    ConvexPolygon::new(poly).map_err(|_| collapsed())
}

/// Sutherland–Hodgman step keeping the region `f >= 0`.
fn clip<T: Scalar>(poly: &[Point2<T>], f: impl Fn(Point2<T>) -> T) -> Vec<Point2<T>> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let cur = poly[i];
        let next = poly[(i + 1) % n];
        let fc = f(cur);
        let fn_ = f(next);
        if fc >= T::zero() {
            out.push(cur);
        }
        if (fc >= T::zero()) != (fn_ >= T::zero()) {
            let t = fc / (fc - fn_);
            out.push(cur + (next - cur) * t);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{rect_polygon, Pose2};

    fn square(side: f64) -> ConvexPolygon<f64> {
        rect_polygon::<f64>(side, side, &Pose2::identity()).unwrap()
    }

    #[test]
    fn grow_unit_square() {
        let s = offset(&square(1.0), 0.5).unwrap();
        assert_eq!(s.len(), 4);
        assert!((s.area() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn shrink_unit_square() {
        let s = offset(&square(1.0), -0.25).unwrap();
        assert_eq!(s.len(), 4);
        assert!((s.area() - 0.25).abs() < 1e-12);
        let (lo, hi) = s.bounds();
        assert!((lo.x + 0.25).abs() < 1e-12 && (hi.y - 0.25).abs() < 1e-12);
    }

    #[test]
    fn shrink_past_inradius_fails() {
        assert!(matches!(offset(&square(1.0), -0.5), Err(DcpfError::EmptyResult(_))));
        assert!(matches!(offset(&square(1.0), -0.7), Err(DcpfError::EmptyResult(_))));
    }

    #[test]
    fn closing_is_identity() {
        let p = rect_polygon::<f64>(2.0, 0.7, &Pose2::new(1.0, -3.0, 0.9)).unwrap();
        let q = offset(&offset(&p, 0.8).unwrap(), -0.8).unwrap();
        assert_eq!(q.len(), p.len());
        for v in p.vertices() {
            assert!(q.vertices().iter().any(|w| w.dist(*v) < 1e-9));
        }
    }

    #[test]
    fn shrink_drops_short_edges() {
        // a triangle-ish pentagon whose short edge vanishes when shrunk
        let p = ConvexPolygon::new(vec![
            Point2::<f64>::new(0.0, 0.0),
            Point2::<f64>::new(4.0, 0.0),
            Point2::<f64>::new(4.0, 0.1),
            Point2::<f64>::new(2.0, 3.0),
            Point2::<f64>::new(0.0, 0.1),
        ])
        .unwrap();
        let q = offset(&p, -0.3).unwrap();
        assert!(q.len() <= 5);
        assert!(p.contains_polygon(&q));
    }
}
