use super::{ConvexPolygon, Point2};
use crate::scalar::Scalar;

/// Separating-axis test on two convex polygons.
///
/// Returns `true` iff the closed polygons share at least one point; touching
/// boundaries count as intersecting.
pub fn intersects<T: Scalar>(a: &ConvexPolygon<T>, b: &ConvexPolygon<T>) -> bool {
    intersects_points(a.vertices(), b.vertices())
}

/// Slice form of [`intersects`] for callers that keep vertices on the stack.
///
/// Both slices must describe convex polygons in counter-clockwise order.
#[inline]
pub fn intersects_points<T: Scalar>(a: &[Point2<T>], b: &[Point2<T>]) -> bool {
    !has_separating_edge(a, b) && !has_separating_edge(b, a)
}

/// True if some edge normal of `a` separates the two vertex sets.
#[inline]
fn has_separating_edge<T: Scalar>(a: &[Point2<T>], b: &[Point2<T>]) -> bool {
    let Some(&last) = a.last() else {
        return false;
    };
    let mut p = last;
    for &q in a {
        let e = q - p;
        let start = p;
        p = q;
        // outward normal of a CCW edge
        let normal = Point2::new(e.y, -e.x);
        // a lies entirely on the non-positive side of its own edge, with max at p
        let a_max = normal.dot(start);
        let mut b_min = T::infinity();
        for &v in b {
            let d = normal.dot(v);
            if d < b_min {
                b_min = d;
            }
        }
        let gap = b_min - a_max;
        if gap > T::zero() && gap * gap > T::GEOM_TOL * T::GEOM_TOL * normal.dot(normal) {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{rect_polygon, Pose2};

    fn unit_at(x: f64, y: f64) -> ConvexPolygon<f64> {
        rect_polygon::<f64>(1.0, 1.0, &Pose2::new(x, y, 0.0)).unwrap()
    }

    #[test]
    fn disjoint_squares() {
        assert!(!intersects(&unit_at(0.0, 0.0), &unit_at(3.0, 0.0)));
    }

    #[test]
    fn coincident_squares() {
        assert!(intersects(&unit_at(0.0, 0.0), &unit_at(0.0, 0.0)));
    }

    #[test]
    fn edge_and_corner_contact_count() {
        assert!(intersects(&unit_at(0.0, 0.0), &unit_at(1.0, 0.0)));
        assert!(intersects(&unit_at(0.0, 0.0), &unit_at(1.0, 1.0)));
        assert!(!intersects(&unit_at(0.0, 0.0), &unit_at(1.0 + 1e-6, 1.0)));
    }

    #[test]
    fn rotated_diamond_gap() {
        // diamond corner pointing at a square face, 0.05 m apart
        let d = rect_polygon::<f64>(1.0, 1.0, &Pose2::new(0.0, 0.0, std::f64::consts::FRAC_PI_4)).unwrap();
        let half_diag = 0.5 * 2f64.sqrt();
        let s = unit_at(half_diag + 0.5 + 0.05, 0.0);
        assert!(!intersects(&d, &s));
        let s = unit_at(half_diag + 0.5 - 0.05, 0.0);
        assert!(intersects(&d, &s));
    }

    #[test]
    fn contained_polygon() {
        let big = rect_polygon::<f64>(10.0, 10.0, &Pose2::identity()).unwrap();
        let small = rect_polygon::<f64>(0.1, 0.2, &Pose2::new(1.0, 2.0, 0.3)).unwrap();
        assert!(intersects(&big, &small));
        assert!(intersects(&small, &big));
    }
}
