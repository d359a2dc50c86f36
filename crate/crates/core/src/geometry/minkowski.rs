use super::{ConvexPolygon, Point2};
use crate::error::{DcpfError, Result};
use crate::scalar::Scalar;

/// Minkowski sum `{p + q : p ∈ a, q ∈ b}` of two convex polygons.
pub fn minkowski_sum<T: Scalar>(a: &ConvexPolygon<T>, b: &ConvexPolygon<T>) -> ConvexPolygon<T> {
    minkowski_sum_points(a.vertices(), b.vertices())
        .expect("sum of two non-degenerate convex polygons is non-degenerate")
}

/// Minkowski sum of two convex CCW vertex rings by the rotating-edge merge.
///
/// Degenerate operands are accepted: a ring that collapses to one point acts
/// as a translation, a two-point ring as a segment.
pub fn minkowski_sum_points<T: Scalar>(a: &[Point2<T>], b: &[Point2<T>]) -> Result<ConvexPolygon<T>> {
    let a = collapse(a);
    let b = collapse(b);
    if a.is_empty() || b.is_empty() {
        return Err(DcpfError::DegenerateInput("empty vertex list".into()));
    }
    if b.len() == 1 {
        return ConvexPolygon::new(a.iter().map(|&p| p + b[0]).collect());
    }
    if a.len() == 1 {
        return ConvexPolygon::new(b.iter().map(|&p| p + a[0]).collect());
    }
    let a = rotate_to_lowest(&a);
    let b = rotate_to_lowest(&b);
    let (n, m) = (a.len(), b.len());
    let edge_a = |i: usize| a[(i + 1) % n] - a[i % n];
    let edge_b = |j: usize| b[(j + 1) % m] - b[j % m];

    let mut out = Vec::with_capacity(n + m);
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        out.push(a[i % n] + b[j % m]);
        if i == n {
            j += 1;
        } else if j == m {
            i += 1;
        } else {
            let c = edge_a(i).cross(edge_b(j));
            if c >= T::zero() {
                i += 1;
            }
            if c <= T::zero() {
                j += 1;
            }
        }
    }
    ConvexPolygon::new(out)
}

fn collapse<T: Scalar>(v: &[Point2<T>]) -> Vec<Point2<T>> {
    let mut out: Vec<Point2<T>> = Vec::with_capacity(v.len());
    for &p in v {
        if out.iter().all(|q| q.dist(p) > T::GEOM_TOL) {
            out.push(p);
        }
    }
    out
}

fn rotate_to_lowest<T: Scalar>(v: &[Point2<T>]) -> Vec<Point2<T>> {
    let start = (0..v.len())
        .min_by(|&i, &j| {
            (v[i].y, v[i].x)
                .partial_cmp(&(v[j].y, v[j].x))
                .expect("finite vertices")
        })
        .unwrap_or(0);
    v[start..].iter().chain(&v[..start]).copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{rect_polygon, Pose2};

    #[test]
    fn boxes_add_extents() {
        let a = rect_polygon::<f64>(2.0, 1.0, &Pose2::identity()).unwrap();
        let b = rect_polygon::<f64>(4.0, 2.0, &Pose2::identity()).unwrap();
        let s = minkowski_sum(&a, &b);
        assert_eq!(s.len(), 4);
        let (lo, hi) = s.bounds();
        assert!((lo.x + 3.0).abs() < 1e-12 && (hi.x - 3.0).abs() < 1e-12);
        assert!((lo.y + 1.5).abs() < 1e-12 && (hi.y - 1.5).abs() < 1e-12);
        assert!((s.area() - 18.0).abs() < 1e-12);
    }

    #[test]
    fn point_operand_translates() {
        let a = rect_polygon::<f64>(2.0, 1.0, &Pose2::new(0.0, 0.0, 0.4)).unwrap();
        let pt = [Point2::<f64>::new(1.0, 2.0); 3];
        let s = minkowski_sum_points(a.vertices(), &pt).unwrap();
        let expect = a.translated(Point2::<f64>::new(1.0, 2.0));
        assert_eq!(s.len(), 4);
        for v in expect.vertices() {
            assert!(s.vertices().iter().any(|w| w.dist(*v) < 1e-12));
        }
    }

    #[test]
    fn segment_operand_sweeps() {
        let a = rect_polygon::<f64>(1.0, 1.0, &Pose2::identity()).unwrap();
        let seg = [Point2::<f64>::new(0.0, 0.0), Point2::<f64>::new(2.0, 0.0)];
        let s = minkowski_sum_points(a.vertices(), &seg).unwrap();
        assert!((s.area() - 3.0).abs() < 1e-12);
    }
}
