use serde::{Deserialize, Serialize};

use crate::error::{DcpfError, Result};
use crate::geometry::{Pose2, RobotSpec};

/// Motion-primitive set parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveParams {
    /// Largest steering angle (rad); five angles span `[−max, +max]`.
    pub max_steer: f64,
    pub short_length: f64,
    pub long_length: f64,
    /// Duration of every primitive in time-indexed planning (s).
    pub duration: f64,
    /// Interior sweep poses checked along each primitive.
    pub n_sweep: usize,
}

impl Default for PrimitiveParams {
    fn default() -> Self {
        PrimitiveParams {
            max_steer: 0.5,
            short_length: 1.5,
            long_length: 3.0,
            duration: 1.0,
            n_sweep: 5,
        }
    }
}

impl PrimitiveParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_steer >= 0.0 && self.max_steer < std::f64::consts::FRAC_PI_2) {
            return Err(DcpfError::invalid("max steering must lie in [0, π/2)"));
        }
        if !(self.short_length > 0.0 && self.long_length > 0.0) {
            return Err(DcpfError::invalid("primitive lengths must be positive"));
        }
        if !(self.duration > 0.0) {
            return Err(DcpfError::invalid("primitive duration must be positive"));
        }
        Ok(())
    }

    /// Top speed implied by the long primitive.
    pub fn max_speed(&self) -> f64 {
        self.short_length.max(self.long_length) / self.duration
    }
}

/// Constant-steering arc of the bicycle model, expressed in the start frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionPrimitive {
    pub steering: f64,
    pub arc_length: f64,
    pub duration: f64,
    pub curvature: f64,
    /// Interior poses at equal arc-length spacing, endpoint excluded.
    pub sweep: Vec<Pose2<f64>>,
    pub end: Pose2<f64>,
}

impl MotionPrimitive {
    pub fn new(steering: f64, arc_length: f64, duration: f64, wheelbase: f64, n_sweep: usize) -> Self {
        let curvature = steering.tan() / wheelbase;
        let at = |s: f64| arc_pose(curvature, s);
        let sweep = (1..=n_sweep)
            .map(|i| at(arc_length * i as f64 / (n_sweep + 1) as f64))
            .collect();
        MotionPrimitive {
            steering,
            arc_length,
            duration,
            curvature,
            sweep,
            end: at(arc_length),
        }
    }

    /// Sweep poses and endpoint applied from `start`.
    pub fn world_poses(&self, start: &Pose2<f64>) -> impl Iterator<Item = Pose2<f64>> + '_ {
        let start = *start;
        self.sweep
            .iter()
            .chain(std::iter::once(&self.end))
            .map(move |p| start.compose(p))
    }
}

/// Pose after driving arc length `s` at curvature `k` from the origin.
pub fn arc_pose(k: f64, s: f64) -> Pose2<f64> {
    if k.abs() < 1e-12 {
        return Pose2::new(s, 0.0, 0.0);
    }
    let th = k * s;
    Pose2::new(th.sin() / k, (1.0 - th.cos()) / k, th)
}

/// Five evenly spaced steering angles times {short, long}: 10 primitives,
/// ordered by length then steering.
pub fn motion_primitives(robot: &RobotSpec<f64>, params: &PrimitiveParams) -> Result<Vec<MotionPrimitive>> {
    params.validate()?;
    robot.validate()?;
    let mut out = Vec::with_capacity(10);
    for len in [params.short_length, params.long_length] {
        for i in 0..5 {
            let steer = params.max_steer * (i as f64 - 2.0) / 2.0;
            out.push(MotionPrimitive::new(steer, len, params.duration, robot.wheelbase, params.n_sweep));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_primitives_in_mirror_pairs() {
        let prims = motion_primitives(&RobotSpec::default(), &PrimitiveParams::default()).unwrap();
        assert_eq!(prims.len(), 10);
        for p in &prims {
            let mirror = prims
                .iter()
                .find(|q| q.steering == -p.steering && q.arc_length == p.arc_length)
                .unwrap();
            assert!((p.end.x - mirror.end.x).abs() < 1e-12);
            assert!((p.end.y + mirror.end.y).abs() < 1e-12);
            assert!((p.end.phi + mirror.end.phi).abs() < 1e-12);
            assert_eq!(p.sweep.len(), 5);
        }
    }

    #[test]
    fn straight_primitive() {
        let p = MotionPrimitive::new(0.0, 2.0, 1.0, 2.7, 5);
        assert_eq!(p.end, Pose2::new(2.0, 0.0, 0.0));
        assert!((p.sweep[2].x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn arc_kinematics() {
        let wb = 2.7;
        let d: f64 = 0.4;
        let k = d.tan() / wb;
        let p = MotionPrimitive::new(d, 3.0, 1.0, wb, 5);
        assert!((p.end.phi - k * 3.0).abs() < 1e-12);
        // endpoint on the circle of radius 1/k centred at (0, 1/k)
        let r = ((p.end.x).powi(2) + (p.end.y - 1.0 / k).powi(2)).sqrt();
        assert!((r - 1.0 / k).abs() < 1e-12);
        for s in &p.sweep {
            let r = (s.x.powi(2) + (s.y - 1.0 / k).powi(2)).sqrt();
            assert!((r - 1.0 / k).abs() < 1e-12);
        }
    }

    #[test]
    fn world_poses_start_from_parent() {
        let p = MotionPrimitive::new(0.3, 2.0, 1.0, 2.7, 5);
        let start = Pose2::new(1.0, 2.0, 0.7);
        let poses: Vec<_> = p.world_poses(&start).collect();
        assert_eq!(poses.len(), 6);
        let end = start.compose(&p.end);
        assert!((poses[5].x - end.x).abs() < 1e-12 && (poses[5].y - end.y).abs() < 1e-12);
    }

    #[test]
    fn rejects_full_lock() {
        let p = PrimitiveParams {
            max_steer: 1.6,
            ..Default::default()
        };
        assert!(motion_primitives(&RobotSpec::default(), &p).is_err());
    }
}
