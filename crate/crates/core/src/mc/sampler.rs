use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{DcpfError, Result};
use crate::geometry::{intersects_points, rect_corners, Point2, Pose2, RobotSpec};

/// Lower clamp applied to sampled obstacle side lengths.
pub const MIN_SIDE_LENGTH: f64 = 1e-3;

/// Gaussian obstacle: mean configuration `[x, y, φ, l1, l2]` and per-dimension
/// standard deviations (diagonal covariance).
///
/// Positional and heading noise are expressed in the obstacle's own mean frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleSpec {
    pub mean: [f64; 5],
    pub sigma: [f64; 5],
}

impl ObstacleSpec {
    pub fn new(mean: [f64; 5], sigma: [f64; 5]) -> Result<Self> {
        let spec = ObstacleSpec { mean, sigma };
        spec.validate()?;
        Ok(spec)
    }

    /// Obstacle at the origin of its own frame.
    pub fn centered(l1: f64, l2: f64, sigma: [f64; 5]) -> Result<Self> {
        ObstacleSpec::new([0.0, 0.0, 0.0, l1, l2], sigma)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mean.iter().chain(&self.sigma).all(|v| v.is_finite()) {
            return Err(DcpfError::invalid("obstacle parameters must be finite"));
        }
        if !(self.mean[3] > 0.0 && self.mean[4] > 0.0) {
            return Err(DcpfError::invalid("obstacle side lengths must be positive"));
        }
        if self.sigma.iter().any(|&s| s < 0.0) {
            return Err(DcpfError::invalid("obstacle standard deviations must be >= 0"));
        }
        Ok(())
    }

    pub fn mean_pose(&self) -> Pose2<f64> {
        Pose2::new(self.mean[0], self.mean[1], self.mean[2])
    }

    pub fn lengths(&self) -> (f64, f64) {
        (self.mean[3], self.mean[4])
    }

    /// Same distribution re-expressed with its mean pose at the origin.
    pub fn centered_copy(&self) -> ObstacleSpec {
        ObstacleSpec {
            mean: [0.0, 0.0, 0.0, self.mean[3], self.mean[4]],
            sigma: self.sigma,
        }
    }
}

/// Robot pose in an obstacle's mean frame together with the obstacle's
/// distribution parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpQuery {
    pub robot_pose: Pose2<f64>,
    pub robot: RobotSpec<f64>,
    pub obstacle: ObstacleSpec,
}

impl CpQuery {
    pub fn new(robot_pose: Pose2<f64>, robot: RobotSpec<f64>, obstacle: ObstacleSpec) -> Result<Self> {
        let q = CpQuery {
            robot_pose,
            robot,
            obstacle,
        };
        q.validate()?;
        Ok(q)
    }

    /// Builds the obstacle-centric query from world-frame poses.
    pub fn from_world(robot_world: &Pose2<f64>, robot: RobotSpec<f64>, obstacle_world: &ObstacleSpec) -> Self {
        CpQuery {
            robot_pose: obstacle_world.mean_pose().relative(robot_world),
            robot,
            obstacle: obstacle_world.centered_copy(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.robot.validate()?;
        self.obstacle.validate()?;
        if self.obstacle.mean[..3].iter().any(|&v| v != 0.0) {
            return Err(DcpfError::invalid(
                "query obstacle must sit at the origin of its own frame",
            ));
        }
        let p = &self.robot_pose;
        if !(p.x.is_finite() && p.y.is_finite() && p.phi.is_finite()) {
            return Err(DcpfError::invalid("robot pose must be finite"));
        }
        Ok(())
    }

    /// Flat `[rx, ry, rφ, l1, l2, σx, σy, σφ, σl1, σl2]`.
    pub fn features(&self) -> [f64; 10] {
        let o = &self.obstacle;
        [
            self.robot_pose.x,
            self.robot_pose.y,
            self.robot_pose.phi,
            o.mean[3],
            o.mean[4],
            o.sigma[0],
            o.sigma[1],
            o.sigma[2],
            o.sigma[3],
            o.sigma[4],
        ]
    }

    pub fn from_features(f: &[f64; 10], robot: RobotSpec<f64>) -> Result<Self> {
        CpQuery::new(
            Pose2::new(f[0], f[1], f[2]),
            robot,
            ObstacleSpec::centered(f[3], f[4], [f[5], f[6], f[7], f[8], f[9]])?,
        )
    }

    pub fn prepare(&self) -> PreparedQuery {
        PreparedQuery::new(self)
    }
}

/// A Bernoulli event that can be sampled repeatedly.
pub trait CollisionSource {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> bool;

    fn count_hits<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> u64 {
        let mut hits = 0;
        for _ in 0..n {
            hits += self.sample(rng) as u64;
        }
        hits
    }
}

/// Synthetic event with known probability, used for calibration.
#[derive(Debug, Clone, Copy)]
pub struct Bernoulli(pub f64);

impl CollisionSource for Bernoulli {
    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        rng.gen::<f64>() < self.0
    }
}

/// Query with the robot footprint precomputed in the obstacle frame.
#[derive(Debug, Clone)]
pub struct PreparedQuery {
    robot: [Point2<f64>; 4],
    lengths: [f64; 2],
    sigma: [f64; 5],
}

impl PreparedQuery {
    pub fn new(q: &CpQuery) -> Self {
        PreparedQuery {
            robot: rect_corners(q.robot.width, q.robot.height, &q.robot_pose),
            lengths: [q.obstacle.mean[3], q.obstacle.mean[4]],
            sigma: q.obstacle.sigma,
        }
    }

    /// One draw of the obstacle configuration; true if it overlaps the robot.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        let s = &self.sigma;
        let mut draw = |k: usize| {
            if s[k] > 0.0 {
                s[k] * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            }
        };
        let x = draw(0);
        let y = draw(1);
        let phi = draw(2);
        let l1 = (self.lengths[0] + draw(3)).max(MIN_SIDE_LENGTH);
        let l2 = (self.lengths[1] + draw(4)).max(MIN_SIDE_LENGTH);
        // heading wraps inside sin/cos, no normalization needed
        let obstacle = rect_corners(l1, l2, &Pose2 { x, y, phi });
        intersects_points(&self.robot, &obstacle)
    }
}

impl CollisionSource for PreparedQuery {
    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        PreparedQuery::sample(self, rng)
    }
}

impl CollisionSource for CpQuery {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        PreparedQuery::new(self).sample(rng)
    }

    fn count_hits<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> u64 {
        PreparedQuery::new(self).count_hits(n, rng)
    }
}

/// Draws one obstacle configuration and reports whether it overlaps the robot.
pub fn sample_collision<R: Rng + ?Sized>(q: &CpQuery, rng: &mut R) -> bool {
    PreparedQuery::new(q).sample(rng)
}

/// Union event "the robot hits at least one obstacle" over independent obstacles.
#[derive(Debug, Clone, Default)]
pub struct JointQuery {
    parts: Vec<PreparedQuery>,
}

impl JointQuery {
    pub fn new(robot_world: &Pose2<f64>, robot: RobotSpec<f64>, obstacles: &[ObstacleSpec]) -> Self {
        JointQuery {
            parts: obstacles
                .iter()
                .map(|o| PreparedQuery::new(&CpQuery::from_world(robot_world, robot, o)))
                .collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }
}

impl CollisionSource for JointQuery {
    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        // every obstacle is drawn on every sample to keep streams aligned
        let mut hit = false;
        for p in &self.parts {
            hit |= p.sample(rng);
        }
        hit
    }
}
