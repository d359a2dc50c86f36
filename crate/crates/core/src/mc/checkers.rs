use rand::Rng;
use serde::{Deserialize, Serialize};

use super::interval::Z95_ONE_SIDED;
use super::sampler::CollisionSource;
use crate::error::{DcpfError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Safe,
    Unsafe,
}

/// Outcome of a sampling constraint check.
///
/// Running out of budget without a decision is reported as `Unsafe` with
/// `budget_exhausted` set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SafetyDecision {
    pub verdict: Verdict,
    pub samples_used: u64,
    pub hits: u64,
    pub budget_exhausted: bool,
}

impl SafetyDecision {
    pub fn is_safe(&self) -> bool {
        self.verdict == Verdict::Safe
    }

    /// Empirical collision frequency over the samples drawn.
    pub fn p_hat(&self) -> f64 {
        if self.samples_used == 0 {
            0.0
        } else {
            self.hits as f64 / self.samples_used as f64
        }
    }

    fn exhausted(n: u64, hits: u64) -> Self {
        SafetyDecision {
            verdict: Verdict::Unsafe,
            samples_used: n,
            hits,
            budget_exhausted: true,
        }
    }

    fn decided(verdict: Verdict, n: u64, hits: u64) -> Self {
        SafetyDecision {
            verdict,
            samples_used: n,
            hits,
            budget_exhausted: false,
        }
    }
}

/// Sample counts between successive z-test evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZTestSchedule {
    pub small_batch: u64,
    pub large_batch: u64,
    /// Sample count from which `large_batch` is used.
    pub switch_at: u64,
}

impl Default for ZTestSchedule {
    fn default() -> Self {
        ZTestSchedule {
            small_batch: 1_000,
            large_batch: 10_000,
            switch_at: 100_000,
        }
    }
}

/// One-sided 95% z-test of `p ≤ p_max` by Simple Monte Carlo.
pub fn ztest_check<S: CollisionSource, R: Rng + ?Sized>(
    source: &S,
    p_max: f64,
    n_max: u64,
    schedule: ZTestSchedule,
    rng: &mut R,
) -> Result<SafetyDecision> {
    if !(p_max > 0.0 && p_max < 1.0) {
        return Err(DcpfError::invalid(format!("p_max must lie in (0, 1), got {p_max}")));
    }
    if schedule.small_batch == 0 || schedule.large_batch == 0 {
        return Err(DcpfError::invalid("z-test batches must be non-empty"));
    }
    let mut n = 0u64;
    let mut hits = 0u64;
    while n < n_max {
        let step = if n < schedule.switch_at {
            schedule.small_batch
        } else {
            schedule.large_batch
        };
        let batch = step.min(n_max - n);
        hits += source.count_hits(batch, rng);
        n += batch;

        let nf = n as f64;
        let (lower, upper) = if hits == 0 {
            (0.0, 1.0 - 0.05f64.powf(1.0 / nf))
        } else if hits == n {
            (0.05f64.powf(1.0 / nf), 1.0)
        } else {
            let p = hits as f64 / nf;
            let se = (p * (1.0 - p) / nf).sqrt();
            (p - Z95_ONE_SIDED * se, p + Z95_ONE_SIDED * se)
        };
        if upper < p_max {
            return Ok(SafetyDecision::decided(Verdict::Safe, n, hits));
        }
        if lower > p_max {
            return Ok(SafetyDecision::decided(Verdict::Unsafe, n, hits));
        }
    }
    Ok(SafetyDecision::exhausted(n, hits))
}

/// Wald SPRT settings: indifference half-width `delta` (relative to `p_max`)
/// and the two error rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SprtParams {
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for SprtParams {
    fn default() -> Self {
        SprtParams {
            delta: 0.5,
            alpha: 0.05,
            beta: 0.05,
        }
    }
}

/// Sequential probability ratio test of `p = p_max(1−δ)` (safe) against
/// `p = p_max(1+δ)` (unsafe), one sample at a time.
pub fn sprt_check<S: CollisionSource, R: Rng + ?Sized>(
    source: &S,
    p_max: f64,
    n_max: u64,
    params: SprtParams,
    rng: &mut R,
) -> Result<SafetyDecision> {
    let SprtParams { delta, alpha, beta } = params;
    if !(p_max > 0.0 && p_max < 1.0) {
        return Err(DcpfError::invalid(format!("p_max must lie in (0, 1), got {p_max}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(DcpfError::invalid("SPRT delta must lie in (0, 1)"));
    }
    if !(alpha > 0.0 && alpha < 0.5 && beta > 0.0 && beta < 0.5) {
        return Err(DcpfError::invalid("SPRT error rates must lie in (0, 0.5)"));
    }
    let p_safe = p_max * (1.0 - delta);
    let p_unsafe = p_max * (1.0 + delta);
    if p_unsafe >= 1.0 {
        return Err(DcpfError::invalid(format!(
            "unsafe hypothesis p_max(1+delta) = {p_unsafe} must be below 1"
        )));
    }
    // log-likelihood ratio of the unsafe hypothesis over the safe one
    let llr_hit = (p_unsafe / p_safe).ln();
    let llr_miss = ((1.0 - p_unsafe) / (1.0 - p_safe)).ln();
    let accept_safe = (beta / (1.0 - alpha)).ln();
    let accept_unsafe = ((1.0 - beta) / alpha).ln();

    let mut llr = 0.0;
    let mut hits = 0;
    for n in 1..=n_max {
        if source.sample(rng) {
            hits += 1;
            llr += llr_hit;
        } else {
            llr += llr_miss;
        }
        if llr <= accept_safe {
            return Ok(SafetyDecision::decided(Verdict::Safe, n, hits));
        }
        if llr >= accept_unsafe {
            return Ok(SafetyDecision::decided(Verdict::Unsafe, n, hits));
        }
    }
    Ok(SafetyDecision::exhausted(n_max, hits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::{stream_rng, Bernoulli};

    fn ztest_rate(p: f64, p_max: f64, trials: u64) -> (usize, usize) {
        let mut safe = 0;
        let mut unsafe_ = 0;
        for t in 0..trials {
            let mut rng = stream_rng(11, t);
            let d = ztest_check(&Bernoulli(p), p_max, 1_000_000, ZTestSchedule::default(), &mut rng).unwrap();
            match d.verdict {
                Verdict::Safe => safe += 1,
                Verdict::Unsafe => unsafe_ += 1,
            }
        }
        (safe, unsafe_)
    }

    fn sprt_rate(p: f64, p_max: f64, trials: u64) -> (usize, f64) {
        let mut safe = 0;
        let mut samples = 0u64;
        for t in 0..trials {
            let mut rng = stream_rng(13, t);
            let d = sprt_check(&Bernoulli(p), p_max, 4_000_000, SprtParams::default(), &mut rng).unwrap();
            safe += d.is_safe() as usize;
            samples += d.samples_used;
        }
        (safe, samples as f64 / trials as f64)
    }

    #[test]
    fn ztest_calibration() {
        let (safe, _) = ztest_rate(0.05, 0.1, 500);
        assert!(safe as f64 >= 0.95 * 500.0, "safe {safe}");
        let (_, unsafe_) = ztest_rate(0.2, 0.1, 500);
        assert!(unsafe_ as f64 >= 0.95 * 500.0, "unsafe {unsafe_}");
    }

    #[test]
    fn ztest_undecidable_exhausts_budget() {
        let mut rng = stream_rng(1, 0);
        let d = ztest_check(&Bernoulli(0.1), 0.1, 2_000, ZTestSchedule::default(), &mut rng).unwrap();
        assert_eq!(d.verdict, Verdict::Unsafe);
        assert!(d.budget_exhausted);
        assert_eq!(d.samples_used, 2_000);
    }

    #[test]
    fn sprt_calibration() {
        let (safe, _) = sprt_rate(0.05, 0.1, 500);
        assert!(safe as f64 >= 0.93 * 500.0, "safe {safe}");
        let (safe, _) = sprt_rate(0.2, 0.1, 500);
        assert!((500 - safe) as f64 >= 0.93 * 500.0, "safe {safe}");
    }

    #[test]
    fn sprt_cost_grows_for_small_budgets() {
        let (_, coarse) = sprt_rate(0.05, 0.1, 200);
        let (_, fine) = sprt_rate(0.0005, 0.001, 200);
        assert!(coarse < fine, "{coarse} vs {fine}");
    }

    #[test]
    fn sprt_rejects_bad_parameters() {
        let mut rng = stream_rng(1, 0);
        let bad = sprt_check(&Bernoulli(0.1), 0.7, 10, SprtParams::default(), &mut rng);
        assert!(matches!(bad, Err(DcpfError::InvalidArgument(_))));
        let p = SprtParams { alpha: 0.6, ..Default::default() };
        assert!(sprt_check(&Bernoulli(0.1), 0.1, 10, p, &mut rng).is_err());
    }

    #[test]
    fn sprt_budget_flag() {
        let mut rng = stream_rng(1, 0);
        let d = sprt_check(&Bernoulli(0.1), 0.1, 5, SprtParams::default(), &mut rng).unwrap();
        assert!(d.budget_exhausted && d.verdict == Verdict::Unsafe);
    }
}
