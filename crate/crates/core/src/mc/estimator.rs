use rand::Rng;
use serde::{Deserialize, Serialize};

use super::interval::{clt_half_width, Z95_TWO_SIDED};
use super::sampler::CollisionSource;
use crate::error::{DcpfError, Result};

/// Collision-probability estimate with its 95% CLT half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpEstimate {
    pub p_hat: f64,
    pub ci_half_width: f64,
    pub n: u64,
    pub hits: u64,
}

impl CpEstimate {
    pub fn from_counts(hits: u64, n: u64) -> Result<Self> {
        Ok(CpEstimate {
            p_hat: hits as f64 / n as f64,
            ci_half_width: clt_half_width(hits, n)?,
            n,
            hits,
        })
    }

    pub fn lower(&self) -> f64 {
        (self.p_hat - self.ci_half_width).max(0.0)
    }

    pub fn upper(&self) -> f64 {
        (self.p_hat + self.ci_half_width).min(1.0)
    }
}

/// Probability intervals with the CI accuracy each one requires.
///
/// `edges[i]` is the left end of interval `i`; the last interval runs to 1
/// inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyProfile {
    pub edges: Vec<f64>,
    pub accuracies: Vec<f64>,
    pub batch_size: u64,
    pub max_samples: u64,
}

impl AccuracyProfile {
    /// `[0, .01) → ±1e-4`, `[.01, .1) → ±1e-3`, `[.1, 1] → ±1e-2`; batches of
    /// 4·10⁴ and at most 4·10⁶ samples.
    pub fn strict() -> Self {
        AccuracyProfile {
            edges: vec![0.0, 0.01, 0.1],
            accuracies: vec![1e-4, 1e-3, 1e-2],
            batch_size: 40_000,
            max_samples: 4_000_000,
        }
    }

    /// Desk-scale labeling: ±1e-3 / ±1e-2 / ±1e-2 with batches of 10⁴.
    ///
    /// The cap of 4·10⁴ covers the worst case of 38 032 samples.
    pub fn relaxed() -> Self {
        AccuracyProfile {
            edges: vec![0.0, 0.01, 0.1],
            accuracies: vec![1e-3, 1e-2, 1e-2],
            batch_size: 10_000,
            max_samples: 40_000,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "strict" => Ok(Self::strict()),
            "relaxed" => Ok(Self::relaxed()),
            other => Err(DcpfError::invalid(format!("unknown accuracy profile {other:?}"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.edges.is_empty() || self.edges[0] != 0.0 {
            return Err(DcpfError::invalid("profile intervals must start at 0"));
        }
        if self.edges.windows(2).any(|w| w[0] >= w[1]) || self.edges.last().is_some_and(|&e| e >= 1.0) {
            return Err(DcpfError::invalid("profile boundaries must be strictly increasing below 1"));
        }
        if self.accuracies.len() != self.edges.len() {
            return Err(DcpfError::invalid("one accuracy per interval required"));
        }
        if self.accuracies.iter().any(|&a| !(a > 0.0)) {
            return Err(DcpfError::invalid("accuracies must be positive"));
        }
        if self.batch_size == 0 || self.max_samples == 0 {
            return Err(DcpfError::invalid("batch size and sample cap must be >= 1"));
        }
        Ok(())
    }

    pub fn n_intervals(&self) -> usize {
        self.edges.len()
    }

    /// Index of the interval containing `p`.
    pub fn interval_of(&self, p: f64) -> usize {
        self.edges.iter().rposition(|&e| p >= e).unwrap_or(0)
    }

    pub fn accuracy_for(&self, p: f64) -> f64 {
        self.accuracies[self.interval_of(p)]
    }

    /// `(lo, hi)` of interval `i`.
    pub fn interval_bounds(&self, i: usize) -> (f64, f64) {
        (self.edges[i], self.edges.get(i + 1).copied().unwrap_or(1.0))
    }
}

/// Worst-case sample count `sup_p ⌈1.96²·p(1−p)/ε(p)²⌉` over the profile.
///
/// The supremum over a half-open interval is taken at its open end.
pub fn max_samples(profile: &AccuracyProfile) -> u64 {
    (0..profile.n_intervals())
        .map(|i| {
            let (lo, hi) = profile.interval_bounds(i);
            let p = 0.5f64.clamp(lo, hi);
            let eps = profile.accuracies[i];
            let v = Z95_TWO_SIDED * Z95_TWO_SIDED * p * (1.0 - p) / (eps * eps);
            // values that are integers up to rounding noise must not round up
            let r = v.round();
            if (v - r).abs() <= 1e-6 * r.max(1.0) {
                r as u64
            } else {
                v.ceil() as u64
            }
        })
        .max()
        .unwrap_or(0)
}

/// Fixed-budget Simple Monte Carlo estimate.
pub fn estimate_cp<S: CollisionSource, R: Rng + ?Sized>(source: &S, n: u64, rng: &mut R) -> Result<CpEstimate> {
    let hits = source.count_hits(n, rng);
    CpEstimate::from_counts(hits, n)
}

/// Batched Simple Monte Carlo with the interval-adaptive stopping rule.
///
/// After every batch the estimate stops if its CI half-width is within the
/// accuracy of the interval containing `p̂`, or once `max_samples` is reached.
pub fn estimate_cp_adaptive<S: CollisionSource, R: Rng + ?Sized>(
    source: &S,
    profile: &AccuracyProfile,
    rng: &mut R,
) -> Result<CpEstimate> {
    profile.validate()?;
    let mut n = 0u64;
    let mut hits = 0u64;
    loop {
        let batch = profile.batch_size.min(profile.max_samples - n);
        hits += source.count_hits(batch, rng);
        n += batch;
        let est = CpEstimate::from_counts(hits, n)?;
        if est.ci_half_width <= profile.accuracy_for(est.p_hat) || n >= profile.max_samples {
            return Ok(est);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Pose2, RobotSpec};
    use crate::mc::{stream_rng, Bernoulli, CpQuery, ObstacleSpec};

    #[test]
    fn max_samples_default_profile() {
        let n = max_samples(&AccuracyProfile::strict());
        assert!(n == 3_803_183 || n == 3_803_184, "{n}");
        assert_eq!(n, 3_803_184);
        assert!(n <= AccuracyProfile::strict().max_samples);
    }

    #[test]
    fn max_samples_single_interval() {
        let p = AccuracyProfile {
            edges: vec![0.0],
            accuracies: vec![0.01],
            batch_size: 1,
            max_samples: 1,
        };
        assert_eq!(max_samples(&p), 9_604);
    }

    #[test]
    fn max_samples_scales_inverse_square() {
        let mut p = AccuracyProfile::strict();
        for a in &mut p.accuracies {
            *a *= 2.0;
        }
        assert_eq!(max_samples(&p) * 4, max_samples(&AccuracyProfile::strict()));
    }

    #[test]
    fn relaxed_cap_covers_worst_case() {
        let r = AccuracyProfile::relaxed();
        assert_eq!(max_samples(&r), 38_032);
        assert!(r.max_samples >= max_samples(&r));
    }

    #[test]
    fn interval_lookup() {
        let p = AccuracyProfile::strict();
        assert_eq!(p.interval_of(0.0), 0);
        assert_eq!(p.interval_of(0.00999), 0);
        assert_eq!(p.interval_of(0.01), 1);
        assert_eq!(p.interval_of(0.1), 2);
        assert_eq!(p.interval_of(1.0), 2);
        assert_eq!(p.accuracy_for(0.5), 1e-2);
    }

    #[test]
    fn invalid_profiles() {
        let mut p = AccuracyProfile::strict();
        p.edges = vec![0.0, 0.1, 0.01];
        assert!(p.validate().is_err());
        let mut p = AccuracyProfile::strict();
        p.batch_size = 0;
        assert!(p.validate().is_err());
        let mut p = AccuracyProfile::strict();
        p.accuracies.pop();
        assert!(p.validate().is_err());
    }

    #[test]
    fn half_probability_stops_after_one_batch() {
        let mut rng = stream_rng(7, 0);
        let est = estimate_cp_adaptive(&Bernoulli(0.5), &AccuracyProfile::strict(), &mut rng).unwrap();
        assert_eq!(est.n, 40_000);
        assert!(est.ci_half_width <= 0.01);
    }

    #[test]
    fn deterministic_free_query_stops_at_zero() {
        let q = CpQuery::new(
            Pose2::new(30.0, 0.0, 0.0),
            RobotSpec::default(),
            ObstacleSpec::centered(2.0, 1.0, [0.0; 5]).unwrap(),
        )
        .unwrap();
        let mut rng = stream_rng(7, 0);
        let est = estimate_cp_adaptive(&q, &AccuracyProfile::strict(), &mut rng).unwrap();
        assert_eq!(est.n, 40_000);
        assert_eq!(est.p_hat, 0.0);
        assert!(est.ci_half_width <= 1e-4);
    }

    #[test]
    fn capped_at_max_samples() {
        let mut rng = stream_rng(9, 0);
        let profile = AccuracyProfile::strict();
        let est = estimate_cp_adaptive(&Bernoulli(0.009), &profile, &mut rng).unwrap();
        assert!(est.n <= profile.max_samples);
        assert_eq!(est.n % profile.batch_size, 0);
    }

    #[test]
    fn same_seed_same_estimate() {
        let profile = AccuracyProfile::relaxed();
        let a = estimate_cp_adaptive(&Bernoulli(0.03), &profile, &mut stream_rng(5, 2)).unwrap();
        let b = estimate_cp_adaptive(&Bernoulli(0.03), &profile, &mut stream_rng(5, 2)).unwrap();
        assert_eq!(a, b);
        let c = estimate_cp_adaptive(&Bernoulli(0.03), &profile, &mut stream_rng(5, 3)).unwrap();
        assert_ne!(a.hits, c.hits);
    }
}
