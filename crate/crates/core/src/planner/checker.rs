use rayon::prelude::*;

use super::scenario::combined_cp;
use crate::error::{DcpfError, Result};
use crate::geometry::{intersects_points, rect_corners, Pose2, RobotSpec};
use crate::mc::{
    clt_interval, estimate_cp, sprt_check, stream_rng, ztest_check, CpQuery, JointQuery, ObstacleSpec, SafetyDecision,
    SprtParams, ZTestSchedule,
};
use crate::model::EnsembleModel;
use crate::scalar::Scalar;

/// Standard deviations beyond which an obstacle is treated as unreachable.
pub const PRUNE_SIGMAS: f64 = 8.0;

/// Robot pose and the obstacle distributions it must be checked against.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRequest {
    pub pose: Pose2<f64>,
    pub obstacles: Vec<ObstacleSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateCheck {
    pub safe: bool,
    /// Combined collision probability as seen by the checker.
    pub cp_estimate: f64,
    /// Monte-Carlo samples drawn (0 for the network).
    pub samples: u64,
}

impl StateCheck {
    fn clear() -> Self {
        StateCheck {
            safe: true,
            cp_estimate: 0.0,
            samples: 0,
        }
    }
}

/// Per-state chance-constraint checker.
pub trait CpChecker: Sync {
    fn name(&self) -> &str;

    /// Decides `P(collision with any obstacle) ≤ p_max` for every request.
    fn check_batch(&self, robot: &RobotSpec<f64>, requests: &[CheckRequest], p_max: f64) -> Result<Vec<StateCheck>>;
}

/// Whether an obstacle can plausibly reach the robot footprint at `pose`.
///
/// Uses bounding circles inflated by [`PRUNE_SIGMAS`] standard deviations of
/// position and side length.
pub fn obstacle_relevant(pose: &Pose2<f64>, robot: &RobotSpec<f64>, o: &ObstacleSpec) -> bool {
    let r_robot = 0.5 * robot.width.hypot(robot.height);
    let l1 = o.mean[3] + PRUNE_SIGMAS * o.sigma[3];
    let l2 = o.mean[4] + PRUNE_SIGMAS * o.sigma[4];
    let r_obs = 0.5 * l1.hypot(l2);
    let reach = r_robot + r_obs + PRUNE_SIGMAS * o.sigma[0].hypot(o.sigma[1]);
    (pose.x - o.mean[0]).hypot(pose.y - o.mean[1]) <= reach
}

fn is_deterministic(o: &ObstacleSpec) -> bool {
    o.sigma.iter().all(|&s| s == 0.0)
}

/// Exact overlap test for an obstacle without uncertainty.
fn deterministic_hit(pose: &Pose2<f64>, robot: &RobotSpec<f64>, o: &ObstacleSpec) -> bool {
    let fp = robot.footprint(pose);
    let rect = rect_corners(o.mean[3], o.mean[4], &o.mean_pose());
    intersects_points(fp.vertices(), &rect)
}

/// Deterministic RNG stream for a request so results do not depend on batching.
pub fn request_stream(seed: u64, req: &CheckRequest) -> crate::mc::StreamRng {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |v: f64| {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    eat(req.pose.x);
    eat(req.pose.y);
    eat(req.pose.phi);
    for o in &req.obstacles {
        o.mean.iter().chain(&o.sigma).for_each(|&v| eat(v));
    }
    stream_rng(seed, h)
}

/// Network checker: one batched forward pass per call.
///
/// Obstacles without any uncertainty are decided by exact geometry.
pub struct DcpfChecker<T> {
    pub model: EnsembleModel<T>,
}

impl<T: Scalar> DcpfChecker<T> {
    pub fn new(model: EnsembleModel<T>) -> Result<Self> {
        model.validate()?;
        Ok(DcpfChecker { model })
    }
}

impl<T: Scalar> CpChecker for DcpfChecker<T> {
    fn name(&self) -> &str {
        "dcpf"
    }

    fn check_batch(&self, robot: &RobotSpec<f64>, requests: &[CheckRequest], p_max: f64) -> Result<Vec<StateCheck>> {
        if *robot != self.model.robot {
            return Err(DcpfError::invalid("model was trained for a different robot"));
        }
        let mut rows = Vec::new();
        let mut owner = Vec::new();
        let mut fixed = vec![Vec::new(); requests.len()];
        for (i, r) in requests.iter().enumerate() {
            for o in r.obstacles.iter().filter(|o| obstacle_relevant(&r.pose, robot, o)) {
                if is_deterministic(o) {
                    fixed[i].push(if deterministic_hit(&r.pose, robot, o) { 1.0 } else { 0.0 });
                } else {
                    rows.push(CpQuery::from_world(&r.pose, *robot, o).features());
                    owner.push(i);
                }
            }
        }
        let preds = self.model.predict_rows(&rows)?;
        let mut per = fixed;
        for (i, p) in owner.into_iter().zip(preds) {
            per[i].push(p);
        }
        Ok(per
            .iter()
            .map(|ps| {
                let cp = combined_cp(ps);
                StateCheck {
                    safe: cp <= p_max,
                    cp_estimate: cp,
                    samples: 0,
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum SamplingTest {
    ZTest(ZTestSchedule),
    Sprt(SprtParams),
}

/// Sampling baseline testing the union event over all obstacles directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingChecker {
    test: SamplingTest,
    pub max_samples: u64,
    pub seed: u64,
}

impl SamplingChecker {
    pub fn ztest(max_samples: u64, schedule: ZTestSchedule, seed: u64) -> Self {
        SamplingChecker {
            test: SamplingTest::ZTest(schedule),
            max_samples,
            seed,
        }
    }

    pub fn sprt(max_samples: u64, params: SprtParams, seed: u64) -> Self {
        SamplingChecker {
            test: SamplingTest::Sprt(params),
            max_samples,
            seed,
        }
    }

    fn check_one(&self, robot: &RobotSpec<f64>, req: &CheckRequest, p_max: f64) -> Result<StateCheck> {
        let relevant: Vec<ObstacleSpec> = req
            .obstacles
            .iter()
            .filter(|o| obstacle_relevant(&req.pose, robot, o))
            .copied()
            .collect();
        if relevant.is_empty() {
            return Ok(StateCheck::clear());
        }
        let joint = JointQuery::new(&req.pose, *robot, &relevant);
        let mut rng = request_stream(self.seed, req);
        let d: SafetyDecision = match self.test {
            SamplingTest::ZTest(s) => ztest_check(&joint, p_max, self.max_samples, s, &mut rng)?,
            SamplingTest::Sprt(s) => sprt_check(&joint, p_max, self.max_samples, s, &mut rng)?,
        };
        Ok(StateCheck {
            safe: d.is_safe(),
            cp_estimate: d.p_hat(),
            samples: d.samples_used,
        })
    }
}

impl CpChecker for SamplingChecker {
    fn name(&self) -> &str {
        match self.test {
            SamplingTest::ZTest(_) => "ztest",
            SamplingTest::Sprt(_) => "sprt",
        }
    }

    fn check_batch(&self, robot: &RobotSpec<f64>, requests: &[CheckRequest], p_max: f64) -> Result<Vec<StateCheck>> {
        requests.par_iter().map(|r| self.check_one(robot, r, p_max)).collect()
    }
}

/// Large-sample estimate of the joint collision probability at a state,
/// returned as `(p̂, ci_lower, ci_upper)`.
pub fn oracle_cp(robot: &RobotSpec<f64>, req: &CheckRequest, n: u64, seed: u64) -> Result<(f64, f64, f64)> {
    let relevant: Vec<ObstacleSpec> = req
        .obstacles
        .iter()
        .filter(|o| obstacle_relevant(&req.pose, robot, o))
        .copied()
        .collect();
    if relevant.is_empty() {
        return Ok((0.0, 0.0, 0.0));
    }
    let joint = JointQuery::new(&req.pose, *robot, &relevant);
    let est = estimate_cp(&joint, n, &mut request_stream(seed ^ 0x6f72_6163_6c65, req))?;
    let (lo, hi) = clt_interval(est.hits, est.n)?;
    Ok((est.p_hat, lo, hi))
}
