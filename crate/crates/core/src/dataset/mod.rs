//! Balanced, Monte-Carlo-labeled collision-probability datasets.

mod heuristic;
mod io;

pub use heuristic::{
    heuristic_shape, sample_robot_config, scaled_boundary_point, HeuristicShape, PlacementMix, ELLIPSE_VERTICES,
};
pub use io::{read_csv, write_csv, CSV_HEADER};

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DcpfError, Result};
use crate::geometry::{Pose2, RobotSpec};
use crate::mc::{estimate_cp_adaptive, stream_rng, AccuracyProfile, CpEstimate, CpQuery, ObstacleSpec, StreamRng};

/// Number of probability buckets (`[0, .01)`, `[.01, .1)`, `[.1, 1]`).
pub const N_BUCKETS: usize = 3;

const BUCKET_EDGES: [f64; N_BUCKETS] = [0.0, 0.01, 0.1];

/// Probability bucket of a label.
pub fn bucket_of(p: f64) -> usize {
    BUCKET_EDGES.iter().rposition(|&e| p >= e).unwrap_or(0)
}

/// One labeled sample: robot pose in the obstacle frame, obstacle mean
/// lengths and standard deviations, and the Monte-Carlo label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub rx: f64,
    pub ry: f64,
    pub rphi: f64,
    pub l1: f64,
    pub l2: f64,
    pub s_x: f64,
    pub s_y: f64,
    pub s_phi: f64,
    pub s_l1: f64,
    pub s_l2: f64,
    pub p_bar: f64,
    pub ci_half_width: f64,
    pub n_samples: u64,
}

impl DatasetRecord {
    pub fn from_query(q: &CpQuery, est: &CpEstimate) -> Self {
        let f = q.features();
        DatasetRecord {
            rx: f[0],
            ry: f[1],
            rphi: f[2],
            l1: f[3],
            l2: f[4],
            s_x: f[5],
            s_y: f[6],
            s_phi: f[7],
            s_l1: f[8],
            s_l2: f[9],
            p_bar: est.p_hat,
            ci_half_width: est.ci_half_width,
            n_samples: est.n,
        }
    }

    pub fn features(&self) -> [f64; 10] {
        [
            self.rx, self.ry, self.rphi, self.l1, self.l2, self.s_x, self.s_y, self.s_phi, self.s_l1, self.s_l2,
        ]
    }

    pub fn query(&self, robot: RobotSpec<f64>) -> Result<CpQuery> {
        CpQuery::from_features(&self.features(), robot)
    }

    pub fn bucket(&self) -> usize {
        bucket_of(self.p_bar)
    }
}

/// Generation settings; stored next to the CSV as JSON metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub n_records: usize,
    pub quotas: [usize; N_BUCKETS],
    /// Every obstacle standard deviation is drawn from `U[0, sigma_max]`.
    pub sigma_max: f64,
    /// Obstacle mean side lengths are drawn from `U[min, max]`.
    pub length_bounds: (f64, f64),
    pub robot: RobotSpec<f64>,
    pub profile: AccuracyProfile,
    pub placement: PlacementMix,
    pub seed: u64,
    /// Attempts labeled per parallel round.
    pub chunk: usize,
    /// Pilot draws used to skip attempts headed for an already-full bucket
    /// (0 disables the pre-screen).
    #[serde(default)]
    pub prescreen_samples: u64,
}

impl DatasetConfig {
    /// Equal thirds (remainder to the lowest buckets) with the default bounds.
    pub fn balanced(n_records: usize, profile: AccuracyProfile, seed: u64) -> Self {
        let base = n_records / N_BUCKETS;
        let extra = n_records % N_BUCKETS;
        let mut quotas = [base; N_BUCKETS];
        for q in quotas.iter_mut().take(extra) {
            *q += 1;
        }
        DatasetConfig {
            n_records,
            quotas,
            sigma_max: std::f64::consts::SQRT_2,
            length_bounds: (0.5, 5.0),
            robot: RobotSpec::default(),
            profile,
            placement: PlacementMix::default(),
            seed,
            chunk: 512,
            prescreen_samples: 2_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.quotas.iter().sum::<usize>() != self.n_records {
            return Err(DcpfError::invalid("bucket quotas must sum to n_records"));
        }
        if !(self.sigma_max >= 0.0) {
            return Err(DcpfError::invalid("sigma_max must be >= 0"));
        }
        let (lo, hi) = self.length_bounds;
        if !(lo > 0.0 && hi >= lo) {
            return Err(DcpfError::invalid("length bounds must satisfy 0 < min <= max"));
        }
        if self.chunk == 0 {
            return Err(DcpfError::invalid("chunk must be >= 1"));
        }
        self.robot.validate()?;
        self.profile.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub records: Vec<DatasetRecord>,
    pub config: DatasetConfig,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn bucket_counts(&self) -> [usize; N_BUCKETS] {
        let mut c = [0; N_BUCKETS];
        for r in &self.records {
            c[r.bucket()] += 1;
        }
        c
    }

    /// Writes `path` (CSV) and `path.meta.json` (configuration).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        write_csv(path, &self.records)?;
        let meta = meta_path(path);
        let json = serde_json::to_string_pretty(&self.config)?;
        std::fs::write(&meta, json + "\n").map_err(|e| DcpfError::io(&meta, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let records = read_csv(path)?;
        let meta = meta_path(path);
        let text = std::fs::read_to_string(&meta).map_err(|e| DcpfError::io(&meta, e))?;
        Ok(Dataset {
            records,
            config: serde_json::from_str(&text)?,
        })
    }

    fn with_records(&self, records: Vec<DatasetRecord>) -> Dataset {
        Dataset {
            records,
            config: self.config.clone(),
        }
    }
}

pub fn meta_path(csv: &Path) -> std::path::PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".meta.json");
    s.into()
}

const LABEL_SALT: u64 = 0x6c61_6265_6c5f_7263;

/// Seed-stream of the labeling run for a record with these features.
///
/// Labels are keyed by the exact feature bits so that any record can be
/// re-estimated from its CSV row and the dataset seed alone.
pub fn label_rng(dataset_seed: u64, features: &[f64; 10]) -> StreamRng {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in features {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    stream_rng(dataset_seed ^ LABEL_SALT, h)
}

/// Re-runs the adaptive estimator for a stored record.
pub fn relabel(record: &DatasetRecord, config: &DatasetConfig) -> Result<CpEstimate> {
    let q = record.query(config.robot)?;
    estimate_cp_adaptive(&q.prepare(), &config.profile, &mut label_rng(config.seed, &record.features()))
}

/// Draws the obstacle and robot configuration of attempt `index`.
pub fn draw_query(cfg: &DatasetConfig, index: u64) -> Result<CpQuery> {
    let mut rng = stream_rng(cfg.seed, index);
    let (lo, hi) = cfg.length_bounds;
    let draw_len = |rng: &mut StreamRng| if hi > lo { rng.gen_range(lo..hi) } else { lo };
    let l1 = draw_len(&mut rng);
    let l2 = draw_len(&mut rng);
    let mut sigma = [0.0; 5];
    for s in &mut sigma {
        *s = rng.gen::<f64>() * cfg.sigma_max;
    }
    let obstacle = ObstacleSpec::centered(l1, l2, sigma)?;
    let shape = heuristic_shape(&cfg.robot, &obstacle, &mut rng)?;
    let pose: Pose2<f64> = sample_robot_config(&shape, &cfg.placement, &mut rng);
    CpQuery::new(pose, cfg.robot, obstacle)
}

const PILOT_SALT: u64 = 0x7069_6c6f_745f_7263;

/// Buckets that the pilot interval `[lo, hi]` lies in entirely.
fn pilot_bucket(lo: f64, hi: f64) -> Option<usize> {
    let b = bucket_of(lo);
    (bucket_of(hi) == b).then_some(b)
}

fn label_attempt(cfg: &DatasetConfig, index: u64, full: [bool; N_BUCKETS]) -> Result<Option<DatasetRecord>> {
    let q = draw_query(cfg, index)?;
    let prepared = q.prepare();
    if cfg.prescreen_samples > 0 && full.iter().any(|&f| f) {
        let pilot = crate::mc::estimate_cp(
            &prepared,
            cfg.prescreen_samples,
            &mut stream_rng(cfg.seed ^ PILOT_SALT, index),
        )?;
        if pilot_bucket(pilot.lower(), pilot.upper()).is_some_and(|b| full[b]) {
            return Ok(None);
        }
    }
    let est = estimate_cp_adaptive(&prepared, &cfg.profile, &mut label_rng(cfg.seed, &q.features()))?;
    Ok(Some(DatasetRecord::from_query(&q, &est)))
}

/// Generates a dataset with exactly `quotas[b]` records per bucket.
///
/// Attempts are labeled in parallel rounds and then admitted in attempt order,
/// so the output depends only on the configuration. Once a bucket is full,
/// attempts whose pilot interval falls entirely inside it are skipped
/// before labeling. Gives up with
/// [`DcpfError::PartialDataset`] after `100 × max(quota)` attempts.
pub fn generate_dataset(cfg: &DatasetConfig) -> Result<Dataset> {
    cfg.validate()?;
    let max_attempts = 100 * cfg.quotas.iter().copied().max().unwrap_or(0) as u64;
    let mut buckets: [Vec<DatasetRecord>; N_BUCKETS] = Default::default();
    let full = |b: &[Vec<DatasetRecord>; N_BUCKETS]| (0..N_BUCKETS).all(|i| b[i].len() >= cfg.quotas[i]);
    let mut next = 0u64;
    while !full(&buckets) {
        if next >= max_attempts {
            let counts = [buckets[0].len(), buckets[1].len(), buckets[2].len()];
            return Err(DcpfError::PartialDataset {
                attempts: next as usize,
                counts,
                quotas: cfg.quotas,
                records: buckets.concat(),
            });
        }
        let end = (next + cfg.chunk as u64).min(max_attempts);
        let is_full: [bool; N_BUCKETS] = std::array::from_fn(|i| buckets[i].len() >= cfg.quotas[i]);
        let labeled: Vec<Option<DatasetRecord>> = (next..end)
            .into_par_iter()
            .map(|i| label_attempt(cfg, i, is_full))
            .collect::<Result<_>>()?;
        for rec in labeled.into_iter().flatten() {
            let b = rec.bucket();
            if buckets[b].len() < cfg.quotas[b] {
                buckets[b].push(rec);
            }
        }
        log::debug!(
            "dataset: {} attempts, buckets {}/{}/{}",
            end,
            buckets[0].len(),
            buckets[1].len(),
            buckets[2].len()
        );
        next = end;
    }
    Ok(Dataset {
        records: buckets.concat(),
        config: cfg.clone(),
    })
}

/// Stratified `(train, validation, test)` split.
///
/// Split sizes follow the ratios overall (largest remainder), and each bucket
/// contributes to each split within one record of its proportional share.
pub fn split(ds: &Dataset, ratios: (f64, f64, f64), seed: u64) -> Result<(Dataset, Dataset, Dataset)> {
    let r = [ratios.0, ratios.1, ratios.2];
    if r.iter().any(|&v| !(v >= 0.0)) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(DcpfError::invalid("split ratios must be nonnegative and sum to 1"));
    }
    let mut by_bucket: [Vec<usize>; N_BUCKETS] = Default::default();
    for (i, rec) in ds.records.iter().enumerate() {
        by_bucket[rec.bucket()].push(i);
    }
    if by_bucket.iter().any(|b| b.is_empty()) {
        return Err(DcpfError::invalid("cannot stratify: a probability bucket is empty"));
    }
    let totals = largest_remainder(ds.len(), &r);
    let sizes: Vec<usize> = by_bucket.iter().map(|b| b.len()).collect();
    let alloc = controlled_rounding(&sizes, &r, &totals);

    let mut parts: [Vec<DatasetRecord>; 3] = Default::default();
    for (b, idx) in by_bucket.iter_mut().enumerate() {
        let mut rng = stream_rng(seed, b as u64);
        idx.shuffle(&mut rng);
        let mut it = idx.iter();
        for (s, part) in parts.iter_mut().enumerate() {
            part.extend(it.by_ref().take(alloc[b][s]).map(|&i| ds.records[i]));
        }
    }
    let [train, val, test] = parts;
    Ok((ds.with_records(train), ds.with_records(val), ds.with_records(test)))
}

fn largest_remainder(n: usize, ratios: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut out: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..ratios.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
    let mut left = n - out.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        out[i] += 1;
        left -= 1;
    }
    out
}

/// Integer table with row sums `rows`, column sums `cols`, each cell the
/// floor or ceiling of `rows[b]·ratios[s]` where possible.
fn controlled_rounding(rows: &[usize], ratios: &[f64], cols: &[usize]) -> Vec<Vec<usize>> {
    let mut cell: Vec<Vec<usize>> = rows
        .iter()
        .map(|&m| ratios.iter().map(|r| (m as f64 * r).floor() as usize).collect())
        .collect();
    let mut row_left: Vec<usize> = rows.iter().zip(&cell).map(|(m, c)| m - c.iter().sum::<usize>()).collect();
    let mut col_left: Vec<usize> = (0..cols.len())
        .map(|s| cols[s] - cell.iter().map(|c| c[s]).sum::<usize>())
        .collect();
    let mut frac: Vec<(f64, usize, usize)> = Vec::new();
    for (b, &m) in rows.iter().enumerate() {
        for (s, r) in ratios.iter().enumerate() {
            let e = m as f64 * r;
            frac.push((e - e.floor(), b, s));
        }
    }
    frac.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    for pass in 0..2 {
        for &(f, b, s) in &frac {
            if row_left[b] > 0 && col_left[s] > 0 && (pass == 1 || f > 0.0) {
                cell[b][s] += 1;
                row_left[b] -= 1;
                col_left[s] -= 1;
            }
        }
    }
    // any leftover goes wherever both margins still need it
    for b in 0..rows.len() {
        for s in 0..cols.len() {
            let k = row_left[b].min(col_left[s]);
            cell[b][s] += k;
            row_left[b] -= k;
            col_left[s] -= k;
        }
    }
    cell
}
