use super::{ConvexPolygon, Point2};
use crate::error::{DcpfError, Result};
use crate::scalar::Scalar;

/// Convex hull by Andrew's monotone chain; collinear boundary points are dropped.
pub fn convex_hull<T: Scalar>(points: &[Point2<T>]) -> Result<ConvexPolygon<T>> {
    if points.len() < 3 {
        return Err(DcpfError::DegenerateInput(format!(
            "hull needs at least 3 points, got {}",
            points.len()
        )));
    }
    let mut pts = points.to_vec();
    if pts.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(DcpfError::invalid("non-finite point"));
    }
    pts.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).expect("finite"));

    let turns_left = |o: Point2<T>, a: Point2<T>, b: Point2<T>| {
        let base = b - o;
        let len = base.norm();
        let c = (a - o).cross(b - a);
        // `a` must sit strictly off the chord o→b
        c > T::zero() && (len <= T::zero() || base.cross(a - o).abs() / len > T::GEOM_TOL)
    };

    let mut lower: Vec<Point2<T>> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && !turns_left(lower[lower.len() - 2], lower[lower.len() - 1], p) {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point2<T>> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && !turns_left(upper[upper.len() - 2], upper[upper.len() - 1], p) {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 3 {
        return Err(DcpfError::DegenerateInput("all points are collinear".into()));
    }
    ConvexPolygon::new(lower)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_with_center() {
        let pts: Vec<_> = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.5, 0.5), (0.5, 0.0)]
            .into_iter()
            .map(Point2::<f64>::from)
            .collect();
        let h = convex_hull(&pts).unwrap();
        assert_eq!(h.len(), 4);
        assert!((h.area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn collinear_rejected() {
        let pts: Vec<_> = (0..5).map(|i| Point2::<f64>::new(i as f64, 2.0 * i as f64)).collect();
        assert!(matches!(convex_hull(&pts), Err(DcpfError::DegenerateInput(_))));
    }
}
