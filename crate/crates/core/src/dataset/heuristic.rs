use rand::Rng;

use crate::error::{DcpfError, Result};
use crate::geometry::{
    convex_hull, ellipse_polygon, minkowski_sum, rect_polygon, ConvexPolygon, Point2, Pose2, RobotSpec,
};
use crate::mc::ObstacleSpec;

/// Vertex count used when polygonizing the uncertainty ellipse.
pub const ELLIPSE_VERTICES: usize = 32;

/// Smallest ellipse semi-axis; zero-variance directions collapse to this.
const MIN_SEMI_AXIS: f64 = 1e-6;

/// Region in the obstacle frame whose boundary roughly tracks the
/// collision-probability isolines.
#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicShape {
    pub boundary: ConvexPolygon<f64>,
}

/// Inflated configuration-space obstacle used to place robot samples.
///
/// The obstacle footprint is summed with a 1-σ ellipse (semi-axes
/// `σx+σl1`, `σy+σl2`) and the robot footprint; heading noise is covered by
/// repeating this for the rotations `{−φm, 0, +φm}` with `φm ~ U(σφ, 3.1σφ)`
/// and taking the hull of the three shapes.
pub fn heuristic_shape<R: Rng + ?Sized>(
    robot: &RobotSpec<f64>,
    obstacle: &ObstacleSpec,
    rng: &mut R,
) -> Result<HeuristicShape> {
    robot.validate()?;
    obstacle.validate()?;
    let s = &obstacle.sigma;
    let (l1, l2) = obstacle.lengths();
    let robot_rect = rect_polygon(robot.width, robot.height, &Pose2::identity())?;
    let rx = s[0] + s[3];
    let ry = s[1] + s[4];
    let kernel = if rx > 0.0 || ry > 0.0 {
        let ellipse = ellipse_polygon(rx.max(MIN_SEMI_AXIS), ry.max(MIN_SEMI_AXIS), ELLIPSE_VERTICES)?;
        // the sum with −robot equals the sum with robot for a centered rectangle
        minkowski_sum(&ellipse, &robot_rect.reflected())
    } else {
        robot_rect.reflected()
    };

    let phi_m = if s[2] > 0.0 {
        rng.gen_range(s[2]..3.1 * s[2])
    } else {
        0.0
    };
    let rotations: &[f64] = if phi_m > 0.0 { &[-1.0, 0.0, 1.0] } else { &[0.0] };
    let mut points: Vec<Point2<f64>> = Vec::new();
    for &k in rotations {
        let rect = rect_polygon(l1, l2, &Pose2::new(0.0, 0.0, k * phi_m))?;
        points.extend_from_slice(minkowski_sum(&rect, &kernel).vertices());
    }
    let boundary = convex_hull(&points)?;
    if !(boundary.area() > 0.0) {
        return Err(DcpfError::DegenerateInput("heuristic shape has zero area".into()));
    }
    Ok(HeuristicShape { boundary })
}

/// How robot configurations are drawn around a [`HeuristicShape`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PlacementMix {
    /// Probability of a boundary-scaled draw; the rest are background draws.
    pub boundary_fraction: f64,
    pub scale_min: f64,
    pub scale_max: f64,
    /// Background draws come from the shape's bounding box grown by this factor.
    pub background_inflation: f64,
}

impl Default for PlacementMix {
    fn default() -> Self {
        PlacementMix {
            boundary_fraction: 0.8,
            scale_min: 0.5,
            scale_max: 2.0,
            background_inflation: 3.0,
        }
    }
}

/// Boundary point at arc fraction `u`, scaled radially from the obstacle center.
pub fn scaled_boundary_point(shape: &HeuristicShape, u: f64, scale: f64) -> Point2<f64> {
    shape.boundary.boundary_point(u) * scale
}

/// Draws a robot pose around the heuristic shape.
pub fn sample_robot_config<R: Rng + ?Sized>(shape: &HeuristicShape, mix: &PlacementMix, rng: &mut R) -> Pose2<f64> {
    let p = if rng.gen::<f64>() < mix.boundary_fraction {
        let u = rng.gen::<f64>();
        let scale = rng.gen_range(mix.scale_min..=mix.scale_max);
        scaled_boundary_point(shape, u, scale)
    } else {
        let (lo, hi) = shape.boundary.bounds();
        let c = (lo + hi) * 0.5;
        let half = (hi - lo) * (0.5 * mix.background_inflation);
        Point2::new(
            rng.gen_range(c.x - half.x..=c.x + half.x),
            rng.gen_range(c.y - half.y..=c.y + half.y),
        )
    };
    let pi = std::f64::consts::PI;
    // (−π, π]
    let phi = pi - rng.gen::<f64>() * 2.0 * pi;
    Pose2::new(p.x, p.y, phi)
}
