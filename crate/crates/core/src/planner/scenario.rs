use std::path::Path;

use serde::{Deserialize, Serialize};

use super::primitives::PrimitiveParams;
use crate::error::{DcpfError, Result};
use crate::geometry::{intersects, normalize_angle, rect_polygon, ConvexPolygon, Point2, Pose2, RobotSpec};
use crate::mc::ObstacleSpec;

/// Axis-aligned planning area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Workspace {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Workspace {
            min: [x0, y0],
            max: [x1, y1],
        }
    }

    pub fn contains(&self, p: Point2<f64>) -> bool {
        p.x >= self.min[0] && p.x <= self.max[0] && p.y >= self.min[1] && p.y <= self.max[1]
    }

    pub fn contains_polygon(&self, poly: &ConvexPolygon<f64>) -> bool {
        poly.vertices().iter().all(|&v| self.contains(v))
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }
}

/// Mean pose of an uncertain obstacle at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub phi: f64,
}

/// Gaussian obstacle with an optional timed trajectory and per-dimension
/// variance growth (variance units per second).
///
/// When waypoints are present they define the mean pose; `spec.mean` then
/// only supplies the side lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertainObstacle {
    pub spec: ObstacleSpec,
    #[serde(default)]
    pub waypoints: Vec<Waypoint>,
    #[serde(default)]
    pub growth: [f64; 5],
}

impl UncertainObstacle {
    pub fn fixed(spec: ObstacleSpec) -> Self {
        UncertainObstacle {
            spec,
            waypoints: Vec::new(),
            growth: [0.0; 5],
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.growth.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(DcpfError::invalid("variance growth must be finite and >= 0"));
        }
        for w in &self.waypoints {
            if ![w.t, w.x, w.y, w.phi].iter().all(|v| v.is_finite()) || w.t < 0.0 {
                return Err(DcpfError::invalid("waypoints must be finite with t >= 0"));
            }
        }
        if self.waypoints.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(DcpfError::invalid("waypoint times must be strictly increasing"));
        }
        Ok(())
    }

    pub fn is_dynamic(&self) -> bool {
        self.waypoints.len() > 1 || self.growth.iter().any(|&g| g > 0.0)
    }
}

/// Obstacle distribution at some time, flagged when the trajectory had to be
/// extrapolated by holding its last waypoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub spec: ObstacleSpec,
    pub past_horizon: bool,
}

/// Obstacle distribution at time `t`: mean interpolated along the waypoints
/// (constant velocity, heading along the shorter arc), variance grown by `t·Q`.
pub fn predict_obstacle(o: &UncertainObstacle, t: f64) -> Result<Prediction> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(DcpfError::invalid(format!("prediction time must be >= 0, got {t}")));
    }
    let mut spec = o.spec;
    let mut past_horizon = false;
    let wps = &o.waypoints;
    if let (Some(first), Some(last)) = (wps.first(), wps.last()) {
        let (x, y, phi) = if t <= first.t {
            (first.x, first.y, first.phi)
        } else if t >= last.t {
            past_horizon = t > last.t;
            (last.x, last.y, last.phi)
        } else {
            let i = wps.partition_point(|w| w.t <= t) - 1;
            let (a, b) = (wps[i], wps[i + 1]);
            let u = (t - a.t) / (b.t - a.t);
            let dphi = normalize_angle(b.phi - a.phi);
            (a.x + u * (b.x - a.x), a.y + u * (b.y - a.y), normalize_angle(a.phi + u * dphi))
        };
        spec.mean[0] = x;
        spec.mean[1] = y;
        spec.mean[2] = phi;
    }
    for d in 0..5 {
        spec.sigma[d] = (o.spec.sigma[d].powi(2) + t * o.growth[d]).sqrt();
    }
    Ok(Prediction { spec, past_horizon })
}

/// Goal region: disc around `center`, optionally with a heading constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Goal {
    pub center: [f64; 2],
    pub radius: f64,
    #[serde(default)]
    pub heading: Option<f64>,
    #[serde(default = "default_heading_tol")]
    pub heading_tol: f64,
}

fn default_heading_tol() -> f64 {
    std::f64::consts::PI
}

impl Goal {
    pub fn contains(&self, pose: &Pose2<f64>) -> bool {
        let d = Point2::new(pose.x - self.center[0], pose.y - self.center[1]).norm();
        if d > self.radius {
            return false;
        }
        match self.heading {
            Some(h) => normalize_angle(pose.phi - h).abs() <= self.heading_tol,
            None => true,
        }
    }

    /// Distance from `p` to the goal disc.
    pub fn distance(&self, p: Point2<f64>) -> f64 {
        (p.dist(Point2::new(self.center[0], self.center[1])) - self.radius).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    pub grid_xy: f64,
    pub n_heading: usize,
    pub time_bin: f64,
    /// Expansion budget.
    pub max_expansions: usize,
    /// Plan in time with duration cost (dynamic obstacles).
    pub time_indexed: bool,
    /// Wall-clock limit in seconds, none by default.
    #[serde(default)]
    pub timeout: Option<f64>,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            grid_xy: 0.5,
            n_heading: 16,
            time_bin: 0.5,
            max_expansions: 200_000,
            time_indexed: false,
            timeout: None,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.grid_xy > 0.0 && self.time_bin > 0.0 && self.n_heading > 0 && self.max_expansions > 0) {
            return Err(DcpfError::invalid("search resolutions and budget must be positive"));
        }
        if let Some(t) = self.timeout {
            if !(t > 0.0) {
                return Err(DcpfError::invalid("timeout must be positive"));
            }
        }
        Ok(())
    }
}

/// Complete planning problem. Static obstacles are rectangles `[x, y, φ, l1, l2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub workspace: Workspace,
    #[serde(default)]
    pub static_obstacles: Vec<[f64; 5]>,
    #[serde(default)]
    pub uncertain_obstacles: Vec<UncertainObstacle>,
    pub robot: RobotSpec<f64>,
    pub start: Pose2<f64>,
    pub goal: Goal,
    pub p_max: f64,
    #[serde(default)]
    pub primitives: PrimitiveParams,
    #[serde(default)]
    pub search: SearchParams,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_max > 0.0 && self.p_max < 1.0) {
            return Err(DcpfError::invalid(format!("p_max must lie in (0, 1), got {}", self.p_max)));
        }
        let ws = &self.workspace;
        if !(ws.min[0] < ws.max[0] && ws.min[1] < ws.max[1]) {
            return Err(DcpfError::invalid("workspace bounds are empty"));
        }
        if !(self.goal.radius >= 0.0 && self.goal.heading_tol >= 0.0) {
            return Err(DcpfError::invalid("goal radius and heading tolerance must be >= 0"));
        }
        self.robot.validate()?;
        self.primitives.validate()?;
        self.search.validate()?;
        for o in &self.uncertain_obstacles {
            o.validate()?;
        }
        self.static_polygons()?;
        Ok(())
    }

    pub fn static_polygons(&self) -> Result<Vec<ConvexPolygon<f64>>> {
        self.static_obstacles
            .iter()
            .map(|r| rect_polygon(r[3], r[4], &Pose2::new(r[0], r[1], r[2])))
            .collect()
    }

    /// Whether the footprint at `pose` lies in the workspace and clear of static obstacles.
    pub fn pose_free(&self, pose: &Pose2<f64>, statics: &[ConvexPolygon<f64>]) -> bool {
        let fp = self.robot.footprint(pose);
        self.workspace.contains_polygon(&fp) && !statics.iter().any(|s| intersects(&fp, s))
    }

    pub fn with_p_max(&self, p_max: f64) -> Scenario {
        Scenario {
            p_max,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Scenario> {
        let sc: Scenario = serde_json::from_str(s)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| DcpfError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Scenario> {
        let path = path.as_ref();
        Scenario::from_json(&std::fs::read_to_string(path).map_err(|e| DcpfError::io(path, e))?)
    }
}

/// `1 − Π(1 − pᵢ)`, the probability that at least one independent event occurs.
pub fn combined_cp(per_obstacle: &[f64]) -> f64 {
    1.0 - per_obstacle.iter().map(|p| 1.0 - p).product::<f64>()
}
