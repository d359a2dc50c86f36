use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DcpfError, Result};
use crate::geometry::{intersects, rect_polygon, Pose2, RobotSpec};
use crate::mc::{stream_rng, ObstacleSpec};
use crate::planner::{
    Goal, PlanResult, PrimitiveParams, Scenario, SearchParams, UncertainObstacle, Waypoint, Workspace,
};

/// Standard deviations of the better-known narrow-passage obstacle.
pub const SIGMA_1: [f64; 5] = [0.05, 0.2, 0.03, 0.0001, 0.0001];
/// Standard deviations of the less certain narrow-passage obstacle.
pub const SIGMA_2: [f64; 5] = [0.15, 0.4, 0.13, 0.01, 0.015];

/// Free width between the two obstacles' mean edges at scale 1 (m).
pub const NARROW_GAP: f64 = 3.8;

/// Two uncertain obstacles leaving a gap across a square workspace. The robot
/// starts on the right facing left; the goal region is on the left.
pub fn make_narrow_passage(scale: f64) -> Result<Scenario> {
    narrow_passage_with_gap(scale, NARROW_GAP)
}

pub fn narrow_passage_with_gap(scale: f64, gap: f64) -> Result<Scenario> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(DcpfError::invalid(format!("scale must be positive, got {scale}")));
    }
    if !(gap > 0.0) {
        return Err(DcpfError::invalid("gap must be positive"));
    }
    let s = scale;
    let (l1, l2) = (4.0 * s, 5.0 * s);
    let cy = 0.5 * gap * s + 0.5 * l2;
    let obstacle = |y: f64, sigma: [f64; 5]| -> Result<UncertainObstacle> {
        Ok(UncertainObstacle::fixed(ObstacleSpec::new([15.0 * s, y, 0.0, l1, l2], sigma)?))
    };
    let sc = Scenario {
        name: format!("narrow_passage_s{scale}"),
        workspace: Workspace::new(0.0, -15.0 * s, 30.0 * s, 15.0 * s),
        static_obstacles: Vec::new(),
        uncertain_obstacles: vec![obstacle(cy, SIGMA_1)?, obstacle(-cy, SIGMA_2)?],
        robot: RobotSpec::default(),
        start: Pose2::new(26.0 * s, 0.0, std::f64::consts::PI),
        goal: Goal {
            center: [4.0 * s, 0.0],
            radius: 1.5 * s,
            heading: None,
            heading_tol: std::f64::consts::PI,
        },
        p_max: 0.01,
        primitives: PrimitiveParams::default(),
        search: SearchParams::default(),
    };
    sc.validate()?;
    Ok(sc)
}

/// Random-obstacle map parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomMapConfig {
    /// Side of the square workspace (m).
    pub side: f64,
    /// Obstacles per square metre of free area.
    pub density: f64,
    pub side_range: (f64, f64),
    pub sigma_range: (f64, f64),
    pub distance_band: (f64, f64),
    /// Clearance kept between obstacle means and the start/goal footprints.
    pub clearance: f64,
}

impl Default for RandomMapConfig {
    /// 120 obstacles per 100 m², sides 0.1–3 m, σ ~ U(0.001, 0.1), start–goal 35–40 m.
    fn default() -> Self {
        RandomMapConfig {
            side: 50.0,
            density: 1.2,
            side_range: (0.1, 3.0),
            sigma_range: (0.001, 0.1),
            distance_band: (35.0, 40.0),
            clearance: 0.5,
        }
    }
}

impl RandomMapConfig {
    /// 50 obstacles in an otherwise empty 50 m × 50 m map.
    pub fn sparse() -> Self {
        RandomMapConfig {
            density: 50.0 / 2500.0,
            ..Default::default()
        }
    }
}

/// Square map with uniformly placed uncertain rectangles and a start/goal
/// pair whose straight-line distance lies in the configured band.
pub fn make_random_map(seed: u64, cfg: &RandomMapConfig) -> Result<Scenario> {
    let (dlo, dhi) = cfg.distance_band;
    let robot = RobotSpec::default();
    let margin = 0.5 * robot.width.hypot(robot.height) + 0.5;
    let usable = cfg.side - 2.0 * margin;
    if !(dlo > 0.0 && dhi >= dlo && usable * std::f64::consts::SQRT_2 > dhi) {
        return Err(DcpfError::invalid("workspace too small for the start-goal distance band"));
    }
    if !(cfg.sigma_range.0 >= 0.0 && cfg.sigma_range.1 >= cfg.sigma_range.0) {
        return Err(DcpfError::invalid("bad sigma range"));
    }
    if !(cfg.side_range.0 > 0.0 && cfg.side_range.1 >= cfg.side_range.0 && cfg.density >= 0.0) {
        return Err(DcpfError::invalid("bad obstacle side range or density"));
    }
    let mut rng = stream_rng(seed, 0x006d_6170);
    let lo = margin;
    let hi = cfg.side - margin;
    let (start, goal) = loop {
        let a = Pose2::new(rng.gen_range(lo..hi), rng.gen_range(lo..hi), rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
        let ang: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let d = rng.gen_range(dlo..=dhi);
        let g = [a.x + d * ang.cos(), a.y + d * ang.sin()];
        if (lo..hi).contains(&g[0]) && (lo..hi).contains(&g[1]) {
            break (a, g);
        }
    };
    let goal = Goal {
        center: goal,
        radius: 1.5,
        heading: None,
        heading_tol: std::f64::consts::PI,
    };
    let keep_out = [
        robot.footprint(&start),
        rect_polygon(2.0 * goal.radius, 2.0 * goal.radius, &Pose2::new(goal.center[0], goal.center[1], 0.0))?,
    ];
    let span = |r: (f64, f64), rng: &mut crate::mc::StreamRng| if r.1 > r.0 { rng.gen_range(r.0..r.1) } else { r.0 };
    let n = (cfg.density * cfg.side * cfg.side).round() as usize;
    let mut obstacles = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while obstacles.len() < n {
        attempts += 1;
        if attempts > 1000 * (n + 1) {
            return Err(DcpfError::invalid("could not place the requested number of obstacles"));
        }
        let l1 = span(cfg.side_range, &mut rng);
        let l2 = span(cfg.side_range, &mut rng);
        let pose = Pose2::new(
            rng.gen_range(0.0..cfg.side),
            rng.gen_range(0.0..cfg.side),
            rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
        );
        let mut sigma = [0.0; 5];
        for s in &mut sigma {
            *s = span(cfg.sigma_range, &mut rng);
        }
        let inflated = rect_polygon(l1 + 2.0 * cfg.clearance, l2 + 2.0 * cfg.clearance, &pose)?;
        if keep_out.iter().any(|k| intersects(k, &inflated)) {
            continue;
        }
        obstacles.push(UncertainObstacle::fixed(ObstacleSpec::new([pose.x, pose.y, pose.phi, l1, l2], sigma)?));
    }
    let sc = Scenario {
        name: format!("random_map_{seed}"),
        workspace: Workspace::new(0.0, 0.0, cfg.side, cfg.side),
        static_obstacles: Vec::new(),
        uncertain_obstacles: obstacles,
        robot,
        start,
        goal,
        p_max: 1e-3,
        primitives: PrimitiveParams::default(),
        search: SearchParams::default(),
    };
    sc.validate()?;
    Ok(sc)
}

/// Lane centre of the controlled car.
pub const OWN_LANE_Y: f64 = -1.75;
pub const ONCOMING_LANE_Y: f64 = 1.75;
const ROAD_LENGTH: f64 = 70.0;
const HORIZON: f64 = 60.0;

/// Randomized quantities of one overtake episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OvertakeParams {
    /// Lead car start x and speed (m, m/s).
    pub lead_x: f64,
    pub lead_speed: f64,
    /// Oncoming car start x and speed (moving towards −x).
    pub oncoming_x: f64,
    pub oncoming_speed: f64,
    pub sigma: [f64; 5],
    pub growth: [f64; 5],
}

impl Default for OvertakeParams {
    fn default() -> Self {
        OvertakeParams {
            lead_x: 12.0,
            lead_speed: 2.0,
            oncoming_x: 45.0,
            oncoming_speed: 4.0,
            sigma: [0.1, 0.1, 0.02, 0.01, 0.01],
            growth: [0.02, 0.01, 0.0005, 0.0, 0.0],
        }
    }
}

impl OvertakeParams {
    /// Episode `seed`: lead and oncoming cars jittered around the defaults.
    pub fn seeded(seed: u64) -> Self {
        let mut rng = stream_rng(seed, 0x6f76_6572);
        let d = OvertakeParams::default();
        OvertakeParams {
            lead_x: d.lead_x + rng.gen_range(-2.0..2.0),
            lead_speed: d.lead_speed + rng.gen_range(-0.3..0.3),
            oncoming_x: d.oncoming_x + rng.gen_range(-15.0..15.0),
            oncoming_speed: d.oncoming_speed + rng.gen_range(-1.0..1.0),
            ..d
        }
    }

    /// Time at which the oncoming car reaches the lead car's x position.
    pub fn meeting_time(&self) -> f64 {
        (self.oncoming_x - self.lead_x) / (self.lead_speed + self.oncoming_speed)
    }
}

/// Two-lane road: a slow lead car ahead in the controlled car's lane and an
/// oncoming car in the other lane, both with growing uncertainty. The goal is
/// the end of the lane; planning is time-indexed.
pub fn make_overtake() -> Result<Scenario> {
    make_overtake_with(&OvertakeParams::default())
}

pub fn make_overtake_with(p: &OvertakeParams) -> Result<Scenario> {
    let robot = RobotSpec::default();
    let car = |x0: f64, y: f64, v: f64, phi: f64| -> Result<UncertainObstacle> {
        let wp = |t: f64| Waypoint {
            t,
            x: x0 + v * phi.cos() * t,
            y,
            phi,
        };
        Ok(UncertainObstacle {
            spec: ObstacleSpec::new([x0, y, phi, robot.width, robot.height], p.sigma)?,
            waypoints: vec![wp(0.0), wp(HORIZON)],
            growth: p.growth,
        })
    };
    let sc = Scenario {
        name: "overtake".into(),
        workspace: Workspace::new(0.0, -3.5, ROAD_LENGTH, 3.5),
        static_obstacles: Vec::new(),
        uncertain_obstacles: vec![
            car(p.lead_x, OWN_LANE_Y, p.lead_speed, 0.0)?,
            car(p.oncoming_x, ONCOMING_LANE_Y, p.oncoming_speed, std::f64::consts::PI)?,
        ],
        robot,
        start: Pose2::new(3.0, OWN_LANE_Y, 0.0),
        goal: Goal {
            center: [ROAD_LENGTH - 4.0, OWN_LANE_Y],
            radius: 1.5,
            heading: Some(0.0),
            heading_tol: 0.3,
        },
        p_max: 0.01,
        primitives: PrimitiveParams {
            max_steer: 0.4,
            short_length: 1.5,
            long_length: 5.0,
            duration: 1.0,
            n_sweep: 5,
        },
        search: SearchParams {
            time_indexed: true,
            max_expansions: 60_000,
            ..Default::default()
        },
    };
    sc.validate()?;
    Ok(sc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OvertakeClass {
    Before,
    After,
    /// Never got past the lead car, including episodes without a path.
    None,
}

/// Classifies an overtake episode.
///
/// An overtake is the first state at which the controlled car is ahead of the
/// lead car and back in its own lane; it counts as "before" when that happens
/// earlier than the oncoming car reaching the lead car.
pub fn classify_overtake(sc: &Scenario, params: &OvertakeParams, res: &PlanResult) -> Result<OvertakeClass> {
    if !res.solved() {
        return Ok(OvertakeClass::None);
    }
    let lead = sc
        .uncertain_obstacles
        .first()
        .ok_or_else(|| DcpfError::invalid("overtake scenario needs a lead car"))?;
    let half = 0.5 * sc.robot.width;
    for step in &res.path {
        let p = step.state.pose;
        let lx = crate::planner::predict_obstacle(lead, step.state.t)?.spec.mean[0];
        let ahead = p.x - half > lx + 0.5 * lead.spec.mean[3];
        // back on its own side of the centre line
        if ahead && (p.y - OWN_LANE_Y).abs() < 0.5 * (ONCOMING_LANE_Y - OWN_LANE_Y) {
            return Ok(if step.state.t < params.meeting_time() {
                OvertakeClass::Before
            } else {
                OvertakeClass::After
            });
        }
    }
    Ok(OvertakeClass::None)
}
