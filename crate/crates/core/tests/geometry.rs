mod common;

use common::*;
use dcpf::geometry::*;
use proptest::prelude::*;

#[test]
fn sat_matches_raster_oracle() {
    let (agreed, compared, skipped) = sat_vs_raster(300, 11);
    assert_eq!(agreed, compared, "skipped {skipped} grazing pairs");
    assert!(skipped < compared / 10);
}

#[test]
fn minkowski_matches_pairwise_hull() {
    let (ok, n) = minkowski_vs_oracle(100, 5);
    assert_eq!(ok, n);
}

#[test]
fn raster_oracle_sanity() {
    let a = rect_polygon(1.0, 1.0, &Pose2::new(0.0, 0.0, 0.0)).unwrap();
    assert!(raster_overlap(&a, &a.translated(Point2::new(0.9, 0.0))));
    assert!(!raster_overlap(&a, &a.translated(Point2::new(1.01, 0.0))));
    assert!(signed_gap(&a, &a.translated(Point2::new(1.5, 0.0))) > 0.49);
    assert!((signed_gap(&a, &a.translated(Point2::new(0.75, 0.0))) + 0.25).abs() < 1e-12);
}

fn rect() -> impl Strategy<Value = ConvexPolygon<f64>> {
    (-3.0..3.0f64, -3.0..3.0f64, -3.2..3.2f64, 0.1..3.0f64, 0.1..3.0f64)
        .prop_map(|(x, y, phi, l1, l2)| rect_polygon(l1, l2, &Pose2::new(x, y, phi)).unwrap())
}

fn cloud() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 3..20)
}

proptest! {
    #[test]
    fn sat_is_symmetric(a in rect(), b in rect()) {
        prop_assert_eq!(intersects(&a, &b), intersects(&b, &a));
    }

    #[test]
    fn polygon_intersects_itself_and_not_far_copy(a in rect(), dx in 7.0..20.0f64) {
        prop_assert!(intersects(&a, &a));
        prop_assert!(!intersects(&a, &a.translated(Point2::new(dx, 0.0))));
    }

    #[test]
    fn minkowski_area_and_commutativity(a in rect(), b in rect()) {
        let ab = minkowski_sum(&a, &b);
        let ba = minkowski_sum(&b, &a);
        prop_assert!(ab.area() >= a.area() + b.area() - 1e-9);
        prop_assert!((ab.area() - ba.area()).abs() < 1e-9);
        prop_assert!(ab.len() <= a.len() + b.len());
    }

    #[test]
    fn minkowski_with_reflection_detects_overlap(a in rect(), b in rect()) {
        // a and b overlap iff the origin lies in a ⊕ (−b)
        let m = minkowski_sum(&a, &b.reflected());
        let gap = signed_gap(&a, &b);
        prop_assume!(gap.abs() > 1e-6);
        prop_assert_eq!(m.contains_point(Point2::new(0.0, 0.0)), gap < 0.0);
    }

    #[test]
    fn hull_contains_every_point(pts in cloud()) {
        let pts: Vec<Point2<f64>> = pts.into_iter().map(|(x, y)| Point2::new(x, y)).collect();
        if let Ok(h) = convex_hull(&pts) {
            for p in &pts {
                let q = *p;
                prop_assert!(h.contains_point(q) || h.vertices().iter().any(|v| v.dist(q) < 1e-9));
            }
        }
    }

    #[test]
    fn offset_grows_and_contains(a in rect(), d in 0.01..1.0f64) {
        let o = offset(&a, d).unwrap();
        prop_assert!(o.contains_polygon(&a));
        prop_assert!(o.area() > a.area());
        let back = offset(&o, -d).unwrap();
        prop_assert!((back.area() - a.area()).abs() < 1e-6);
    }

    #[test]
    fn transform_preserves_area(a in rect(), x in -5.0..5.0f64, y in -5.0..5.0f64, phi in -3.2..3.2f64) {
        let t = a.transformed(&Pose2::new(x, y, phi));
        prop_assert!((t.area() - a.area()).abs() < 1e-9);
    }
}
