use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::{draw_query, DatasetConfig};
use crate::error::{DcpfError, Result};
use crate::mc::{sprt_check, stream_rng, AccuracyProfile, Bernoulli, CpQuery, SprtParams};
use crate::model::EnsembleModel;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingConfig {
    /// Batch sizes compared for per-sample network latency.
    pub small_batch: usize,
    pub large_batch: usize,
    /// Timed repetitions per batch size.
    pub reps: usize,
    pub p_max: f64,
    /// Runs per probability level in the SPRT sample-count comparison.
    pub sprt_runs: usize,
    pub sprt_max_samples: u64,
    /// Queries in the latency-variability mix.
    pub mix_size: usize,
    pub seed: u64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig {
            small_batch: 1,
            large_batch: 1024,
            reps: 20,
            p_max: 0.01,
            sprt_runs: 200,
            sprt_max_samples: 4_000_000,
            mix_size: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
}

impl LatencyStats {
    pub fn from_samples(v: &[f64]) -> Self {
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n.max(1) as f64;
        let var = if n > 1 {
            v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        LatencyStats { n, mean, std: var.sqrt() }
    }

    /// Coefficient of variation, std / mean.
    pub fn cv(&self) -> f64 {
        self.std / self.mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    /// Seconds per query at the small and large batch size.
    pub dcpf_small_batch: LatencyStats,
    pub dcpf_large_batch: LatencyStats,
    /// Mean SPRT samples to a decision at `p = p_max` and `p = p_max / 10`.
    pub sprt_samples_at_pmax: f64,
    pub sprt_samples_at_tenth: f64,
    /// Per-query wall time over the same query mix.
    pub dcpf_mix: LatencyStats,
    pub sprt_mix: LatencyStats,
}

impl TimingReport {
    pub fn batch_speedup(&self) -> f64 {
        self.dcpf_small_batch.mean / self.dcpf_large_batch.mean
    }

    pub fn sprt_sample_ratio(&self) -> f64 {
        self.sprt_samples_at_pmax / self.sprt_samples_at_tenth
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let rows = [
            ("dcpf_per_query_small_batch_s", self.dcpf_small_batch.mean),
            ("dcpf_per_query_large_batch_s", self.dcpf_large_batch.mean),
            ("dcpf_batch_speedup", self.batch_speedup()),
            ("sprt_samples_at_pmax", self.sprt_samples_at_pmax),
            ("sprt_samples_at_tenth_pmax", self.sprt_samples_at_tenth),
            ("sprt_sample_ratio", self.sprt_sample_ratio()),
            ("dcpf_mix_mean_s", self.dcpf_mix.mean),
            ("dcpf_mix_cv", self.dcpf_mix.cv()),
            ("sprt_mix_mean_s", self.sprt_mix.mean),
            ("sprt_mix_cv", self.sprt_mix.cv()),
        ];
        let write = || -> std::io::Result<()> {
            let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
            writeln!(f, "metric,value")?;
            for (k, v) in rows {
                writeln!(f, "{k},{v}")?;
            }
            f.flush()
        };
        write().map_err(|e| DcpfError::io(path, e))
    }
}

/// Query mix drawn like dataset attempts, so it spans all probability levels.
pub fn query_mix(model_robot: crate::geometry::RobotSpec<f64>, n: usize, seed: u64) -> Result<Vec<CpQuery>> {
    let mut cfg = DatasetConfig::balanced(n.max(3), AccuracyProfile::relaxed(), seed);
    cfg.robot = model_robot;
    (0..n as u64).map(|i| draw_query(&cfg, i)).collect()
}

/// Mean per-query wall time of network inference at batch size `batch`.
pub fn dcpf_batch_latency<T: Scalar>(model: &EnsembleModel<T>, rows: &[[f64; 10]], batch: usize, reps: usize) -> Result<LatencyStats> {
    if batch == 0 || rows.is_empty() {
        return Err(DcpfError::invalid("need a positive batch size and some queries"));
    }
    let batch_rows: Vec<[f64; 10]> = rows.iter().cycle().take(batch).copied().collect();
    model.predict_rows(&batch_rows)?; // warm-up
    let mut per = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t = Instant::now();
        std::hint::black_box(model.predict_rows(&batch_rows)?);
        per.push(t.elapsed().as_secs_f64() / batch as f64);
    }
    Ok(LatencyStats::from_samples(&per))
}

/// Latency orderings: batched versus single network inference, SPRT sample
/// counts near and far below the threshold, and per-query variability.
pub fn timing_suite<T: Scalar>(model: &EnsembleModel<T>, cfg: &TimingConfig) -> Result<TimingReport> {
    let mix = query_mix(model.robot, cfg.mix_size, cfg.seed)?;
    let rows: Vec<[f64; 10]> = mix.iter().map(|q| q.features()).collect();
    let small = dcpf_batch_latency(model, &rows, cfg.small_batch, cfg.reps.max(cfg.large_batch / cfg.small_batch.max(1)).min(2000))?;
    let large = dcpf_batch_latency(model, &rows, cfg.large_batch, cfg.reps)?;

    let sprt = SprtParams::default();
    let mean_samples = |p: f64, stream: u64| -> Result<f64> {
        let mut rng = stream_rng(cfg.seed, stream);
        let mut total = 0u64;
        for _ in 0..cfg.sprt_runs {
            total += sprt_check(&Bernoulli(p), cfg.p_max, cfg.sprt_max_samples, sprt, &mut rng)?.samples_used;
        }
        Ok(total as f64 / cfg.sprt_runs as f64)
    };
    let at_pmax = mean_samples(cfg.p_max, 1)?;
    let at_tenth = mean_samples(cfg.p_max / 10.0, 2)?;

    let mut dcpf_times = Vec::with_capacity(mix.len());
    let mut sprt_times = Vec::with_capacity(mix.len());
    let mut rng = stream_rng(cfg.seed, 3);
    for (q, row) in mix.iter().zip(&rows) {
        let t = Instant::now();
        std::hint::black_box(model.predict_rows(std::slice::from_ref(row))?);
        dcpf_times.push(t.elapsed().as_secs_f64());
        let prepared = q.prepare();
        let t = Instant::now();
        std::hint::black_box(sprt_check(&prepared, cfg.p_max, cfg.sprt_max_samples, sprt, &mut rng)?);
        sprt_times.push(t.elapsed().as_secs_f64());
    }
    Ok(TimingReport {
        dcpf_small_batch: small,
        dcpf_large_batch: large,
        sprt_samples_at_pmax: at_pmax,
        sprt_samples_at_tenth: at_tenth,
        dcpf_mix: LatencyStats::from_samples(&dcpf_times),
        sprt_mix: LatencyStats::from_samples(&sprt_times),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn latency_stats() {
        let s = LatencyStats::from_samples(&[1.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert!((s.std - 2f64.sqrt()).abs() < 1e-12);
        assert!((s.cv() - 2f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn mix_is_deterministic() {
        let a = query_mix(Default::default(), 5, 2).unwrap();
        assert_eq!(a, query_mix(Default::default(), 5, 2).unwrap());
        assert_eq!(a.len(), 5);
    }
}
