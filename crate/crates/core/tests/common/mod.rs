#![allow(dead_code)]

use dcpf::dataset::DatasetRecord;
use dcpf::geometry::{convex_hull, rect_polygon, ConvexPolygon, Point2, Pose2};
use dcpf::model::{Arch, FourierConfig, Member};
use dcpf::training::{loss, loss_and_gradients};
use dcpf::mc::stream_rng;
use rand::Rng;

/// Raster step of the overlap oracle (m).
pub const RASTER: f64 = 1e-3;

/// x-interval of a convex polygon on the horizontal line at height `y`.
fn row_span(p: &ConvexPolygon<f64>, y: f64) -> Option<(f64, f64)> {
    let v = p.vertices();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..v.len() {
        let (a, b) = (v[i], v[(i + 1) % v.len()]);
        if (a.y - y) * (b.y - y) <= 0.0 && a.y != b.y {
            let x = a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x);
            lo = lo.min(x);
            hi = hi.max(x);
        } else if a.y == y {
            lo = lo.min(a.x);
            hi = hi.max(a.x);
        }
    }
    (lo <= hi).then_some((lo, hi))
}

/// True iff some point of the 1 mm lattice lies in both polygons.
///
/// Rows are scanned exactly; within a row, lattice columns are tested by
/// interval arithmetic, which is the same as testing every pixel centre.
pub fn raster_overlap(a: &ConvexPolygon<f64>, b: &ConvexPolygon<f64>) -> bool {
    let (amin, amax) = a.bounds();
    let (bmin, bmax) = b.bounds();
    let y0 = (amin.y.max(bmin.y) / RASTER).ceil() as i64;
    let y1 = (amax.y.min(bmax.y) / RASTER).floor() as i64;
    for r in y0..=y1 {
        let y = r as f64 * RASTER;
        if let (Some((al, ah)), Some((bl, bh))) = (row_span(a, y), row_span(b, y)) {
            let lo = (al.max(bl) / RASTER).ceil();
            let hi = (ah.min(bh) / RASTER).floor();
            if lo <= hi {
                return true;
            }
        }
    }
    false
}

/// Largest separation along any edge normal: positive when the polygons are
/// apart (a lower bound on their distance), minus the penetration depth otherwise.
pub fn signed_gap(a: &ConvexPolygon<f64>, b: &ConvexPolygon<f64>) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for (p, q) in [(a, b), (b, a)] {
        let v = p.vertices();
        for i in 0..v.len() {
            let e = v[(i + 1) % v.len()] - v[i];
            let n = Point2::new(e.y, -e.x) * (1.0 / e.norm());
            let pmax = v.iter().map(|&x| n.dot(x)).fold(f64::NEG_INFINITY, f64::max);
            let qmin = q.vertices().iter().map(|&x| n.dot(x)).fold(f64::INFINITY, f64::min);
            best = best.max(qmin - pmax);
        }
    }
    best
}

pub fn random_rect<R: Rng>(rng: &mut R, spread: f64) -> ConvexPolygon<f64> {
    let pose = Pose2::new(
        rng.gen_range(-spread..spread),
        rng.gen_range(-spread..spread),
        rng.gen_range(-3.2..3.2),
    );
    rect_polygon(rng.gen_range(0.1..2.0), rng.gen_range(0.1..2.0), &pose).unwrap()
}

pub fn random_convex<R: Rng>(rng: &mut R) -> ConvexPolygon<f64> {
    loop {
        let n = rng.gen_range(3..12);
        let c = Point2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let pts: Vec<Point2<f64>> = (0..n)
            .map(|_| c + Point2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
            .collect();
        if let Ok(p) = convex_hull(&pts) {
            return p;
        }
    }
}

/// Hull of all pairwise vertex sums.
pub fn minkowski_oracle(a: &ConvexPolygon<f64>, b: &ConvexPolygon<f64>) -> ConvexPolygon<f64> {
    let sums: Vec<Point2<f64>> = a
        .vertices()
        .iter()
        .flat_map(|&p| b.vertices().iter().map(move |&q| p + q))
        .collect();
    convex_hull(&sums).unwrap()
}

/// Same vertex set up to `tol`, in any cyclic order.
pub fn same_vertex_set(a: &ConvexPolygon<f64>, b: &ConvexPolygon<f64>, tol: f64) -> bool {
    a.len() == b.len()
        && a.vertices().iter().all(|p| b.vertices().iter().any(|q| p.dist(*q) <= tol))
        && b.vertices().iter().all(|p| a.vertices().iter().any(|q| p.dist(*q) <= tol))
}

/// Agreement counts of SAT against the raster oracle: `(agreed, compared, skipped_grazing)`.
pub fn sat_vs_raster(n_pairs: usize, seed: u64) -> (usize, usize, usize) {
    let mut rng = stream_rng(seed, 0);
    let (mut agreed, mut compared, mut skipped) = (0, 0, 0);
    while compared < n_pairs {
        let a = random_rect(&mut rng, 1.5);
        let b = random_rect(&mut rng, 1.5);
        // within a few pixels of contact the lattice cannot resolve the answer
        if signed_gap(&a, &b).abs() < 5.0 * RASTER {
            skipped += 1;
            continue;
        }
        compared += 1;
        if dcpf::geometry::intersects(&a, &b) == raster_overlap(&a, &b) {
            agreed += 1;
        }
    }
    (agreed, compared, skipped)
}

pub fn minkowski_vs_oracle(n_pairs: usize, seed: u64) -> (usize, usize) {
    let mut rng = stream_rng(seed, 1);
    let mut ok = 0;
    for _ in 0..n_pairs {
        let a = random_convex(&mut rng);
        let b = random_convex(&mut rng);
        if same_vertex_set(&dcpf::geometry::minkowski_sum(&a, &b), &minkowski_oracle(&a, &b), 1e-9) {
            ok += 1;
        }
    }
    (ok, n_pairs)
}

pub const FD_STEP: f64 = 1e-5;

pub fn toy_member() -> Member<f64> {
    let arch = Arch {
        main_width: 8,
        main_depth: 2,
        shaping_width: 8,
        shaping_depth: 2,
    };
    let fourier = FourierConfig {
        n_frequencies: 2,
        ..Default::default()
    };
    let mut m = Member::<f64>::init(&arch, fourier, 17).unwrap();
    // soften α so the switching sigmoids are not saturated on the toy batch
    let b = m.params.shaping_bias_mut();
    b[0] = -2.0;
    b[1] = -2.5;
    b[2] = -1.0;
    b[3] = 1.5;
    m
}

pub fn toy_batch() -> Vec<DatasetRecord> {
    (0..12)
        .map(|i| {
            let t = i as f64;
            DatasetRecord {
                rx: 0.6 * t - 1.0,
                ry: 0.3 * t.cos() + 1.0,
                rphi: 0.5 * t - 2.0,
                l1: 1.0 + 0.2 * t,
                l2: 0.8 + 0.1 * t,
                s_x: 0.05 * t,
                s_y: 0.1,
                s_phi: 0.02 * t,
                s_l1: 0.3,
                s_l2: 0.01,
                p_bar: (0.07 * t + 0.05).min(0.95),
                ci_half_width: 0.01,
                n_samples: 1,
            }
        })
        .collect()
}

/// Largest relative error between analytic and central-difference gradients
/// over every weight, plus the counts of tensors touched.
pub fn max_relative_error(gamma: f64) -> (f64, usize) {
    let member = toy_member();
    let recs = toy_batch();
    let rows: Vec<[f64; 10]> = recs.iter().map(|r| r.features()).collect();
    let targets: Vec<f64> = recs.iter().map(|r| r.p_bar).collect();
    let x = member.encoder.encode_batch::<f64>(&rows).unwrap();
    let (_, grad) = loss_and_gradients(&member.params, &x, &targets, gamma);
    let analytic: Vec<Vec<f64>> = grad.tensors().iter().map(|t| t.to_vec()).collect();

    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut params = member.params.clone();
    for (ti, g) in analytic.iter().enumerate() {
        for (wi, &ga) in g.iter().enumerate() {
            let orig = params.tensors()[ti][wi];
            params.tensors_mut()[ti][wi] = orig + FD_STEP;
            let up = loss(&params, &x, &targets, gamma).loss;
            params.tensors_mut()[ti][wi] = orig - FD_STEP;
            let down = loss(&params, &x, &targets, gamma).loss;
            params.tensors_mut()[ti][wi] = orig;
            let fd = (up - down) / (2.0 * FD_STEP);
            // Central differences of an O(1) loss carry ~1e-10 of roundoff and
            // truncation error, so entries below 1e-5 are compared against that floor.
            let rel = (ga - fd).abs() / ga.abs().max(fd.abs()).max(1e-5);
            worst = worst.max(rel);
            checked += 1;
        }
    }
    (worst, checked)
}

