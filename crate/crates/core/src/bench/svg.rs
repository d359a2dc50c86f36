use std::fmt::Write;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::geometry::{rect_corners, Point2, Pose2};
use crate::mc::stream_rng;
use crate::planner::{predict_obstacle, PlanResult, Scenario};

const PX_PER_M: f64 = 20.0;

fn poly_points(pts: &[Point2<f64>], flip: &impl Fn(Point2<f64>) -> (f64, f64)) -> String {
    pts.iter()
        .map(|&p| {
            let (x, y) = flip(p);
            format!("{x:.2},{y:.2}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// SVG overlay of a scenario and, if solved, the returned path: workspace,
/// static obstacles, obstacle mean rectangles at t = 0, `draws` sampled
/// obstacle configurations per obstacle, robot footprints and one path polyline.
pub fn render_svg(sc: &Scenario, result: Option<&PlanResult>, draws: usize, seed: u64) -> String {
    let ws = &sc.workspace;
    let (w, h) = (ws.width() * PX_PER_M, ws.height() * PX_PER_M);
    let flip = |p: Point2<f64>| ((p.x - ws.min[0]) * PX_PER_M, (ws.max[1] - p.y) * PX_PER_M);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#
    );
    let _ = writeln!(s, r##"<rect x="0" y="0" width="{w:.2}" height="{h:.2}" fill="#ffffff" stroke="#000000"/>"##);
    for r in &sc.static_obstacles {
        let c = rect_corners(r[3], r[4], &Pose2::new(r[0], r[1], r[2]));
        let _ = writeln!(s, r##"<polygon points="{}" fill="#555555"/>"##, poly_points(&c, &flip));
    }
    let mut rng = stream_rng(seed, 0x737667);
    for o in &sc.uncertain_obstacles {
        for _ in 0..draws {
            let z: [f64; 5] = std::array::from_fn(|_| rng.sample(StandardNormal));
            let m = o.spec.mean;
            let sd = o.spec.sigma;
            let local = Point2::new(sd[0] * z[0], sd[1] * z[1]);
            let c = o.spec.mean_pose().transform_point(local);
            let pose = Pose2::new(c.x, c.y, m[2] + sd[2] * z[2]);
            let l1 = (m[3] + sd[3] * z[3]).max(1e-3);
            let l2 = (m[4] + sd[4] * z[4]).max(1e-3);
            let _ = writeln!(
                s,
                r##"<polygon points="{}" fill="none" stroke="#6fa8dc" stroke-opacity="0.35"/>"##,
                poly_points(&rect_corners(l1, l2, &pose), &flip)
            );
        }
        let c = rect_corners(o.spec.mean[3], o.spec.mean[4], &o.spec.mean_pose());
        let _ = writeln!(s, r##"<polygon points="{}" fill="none" stroke="#1c4587" stroke-width="2"/>"##, poly_points(&c, &flip));
    }
    let g = flip(Point2::new(sc.goal.center[0], sc.goal.center[1]));
    let _ = writeln!(
        s,
        r##"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" fill="#b6d7a8" fill-opacity="0.5"/>"##,
        g.0,
        g.1,
        sc.goal.radius * PX_PER_M
    );
    if let Some(res) = result.filter(|r| r.solved()) {
        for st in &res.path {
            let fp = sc.robot.footprint(&st.state.pose);
            let _ = writeln!(
                s,
                r##"<polygon points="{}" fill="#274e13" fill-opacity="0.15" stroke="#274e13"/>"##,
                poly_points(fp.vertices(), &flip)
            );
            // dynamic obstacles where they are predicted at this state
            if st.state.t > 0.0 {
                for o in &sc.uncertain_obstacles {
                    if let Ok(p) = predict_obstacle(o, st.state.t) {
                        let c = rect_corners(p.spec.mean[3], p.spec.mean[4], &p.spec.mean_pose());
                        let _ = writeln!(
                            s,
                            r##"<polygon points="{}" fill="none" stroke="#cc0000" stroke-opacity="0.3"/>"##,
                            poly_points(&c, &flip)
                        );
                    }
                }
            }
        }
        let pts: Vec<Point2<f64>> = res.path.iter().map(|p| p.state.pose.position()).collect();
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#38761d" stroke-width="3"/>"##,
            poly_points(&pts, &flip)
        );
    }
    s.push_str("</svg>\n");
    s
}
