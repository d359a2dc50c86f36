use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::encoder::{FourierConfig, FourierEncoder};
use super::network::{Arch, Heads, NetworkParams};
use crate::error::{DcpfError, Result};
use crate::geometry::RobotSpec;
use crate::mc::{stream_rng, CpQuery, Z95_TWO_SIDED};
use crate::scalar::Scalar;

/// How member predictions are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleMode {
    /// First member only.
    Single,
    Mean,
    Max,
    /// `mean + 1.96·s/√K`.
    CiUpper,
    /// `mean − 1.96·s/√K`.
    CiLower,
}

impl EnsembleMode {
    pub fn needs_spread(self) -> bool {
        matches!(self, EnsembleMode::CiUpper | EnsembleMode::CiLower)
    }
}

impl fmt::Display for EnsembleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EnsembleMode::Single => "single",
            EnsembleMode::Mean => "mean",
            EnsembleMode::Max => "max",
            EnsembleMode::CiUpper => "ci_upper",
            EnsembleMode::CiLower => "ci_lower",
        };
        f.write_str(s)
    }
}

impl FromStr for EnsembleMode {
    type Err = DcpfError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(EnsembleMode::Single),
            "mean" => Ok(EnsembleMode::Mean),
            "max" => Ok(EnsembleMode::Max),
            "ci_upper" | "ci-upper" => Ok(EnsembleMode::CiUpper),
            "ci_lower" | "ci-lower" => Ok(EnsembleMode::CiLower),
            other => Err(DcpfError::invalid(format!("unknown ensemble mode {other:?}"))),
        }
    }
}

/// Combines member probabilities; the result is clipped to `[0, 1]`.
pub fn aggregate(values: &[f64], mode: EnsembleMode) -> Result<f64> {
    let k = values.len();
    if k == 0 {
        return Err(DcpfError::invalid("no member predictions to aggregate"));
    }
    if mode.needs_spread() && k < 2 {
        return Err(DcpfError::invalid(format!("mode {mode} needs at least two members")));
    }
    let mean = || values.iter().sum::<f64>() / k as f64;
    let v = match mode {
        EnsembleMode::Single => values[0],
        EnsembleMode::Mean => mean(),
        EnsembleMode::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        EnsembleMode::CiUpper | EnsembleMode::CiLower => {
            let m = mean();
            let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (k - 1) as f64;
            let half = Z95_TWO_SIDED * var.sqrt() / (k as f64).sqrt();
            if mode == EnsembleMode::CiUpper {
                m + half
            } else {
                m - half
            }
        }
    };
    Ok(v.clamp(0.0, 1.0))
}

/// One network together with its input encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct Member<T> {
    pub encoder: FourierEncoder,
    pub params: NetworkParams<T>,
}

impl<T: Scalar> Member<T> {
    pub fn init(arch: &Arch, fourier: FourierConfig, seed: u64) -> Result<Self> {
        let encoder = FourierEncoder::new(fourier, seed)?;
        let params = NetworkParams::init(arch, encoder.main_dim(), encoder.shaping_dim(), seed)?;
        Ok(Member { encoder, params })
    }

    /// All six head values for every feature row.
    pub fn forward_rows(&self, rows: &[[f64; 10]]) -> Result<Vec<Heads<T>>> {
        let x = self.encoder.encode_batch::<T>(rows)?;
        Ok(self.params.forward(&x))
    }

    pub fn forward(&self, q: &CpQuery) -> Result<Heads<T>> {
        Ok(self.forward_rows(&[q.features()])?[0])
    }

    pub fn predict_rows(&self, rows: &[[f64; 10]]) -> Result<Vec<f64>> {
        let x = self.encoder.encode_batch::<T>(rows)?;
        Ok(self.params.predict(&x).iter().map(|v| v.to_f64_lossless()).collect())
    }
}

/// Seed of member `i` derived from the ensemble seed.
pub fn member_seed(seed: u64, i: usize) -> u64 {
    stream_rng(seed, 1 << 32 | i as u64).gen()
}

/// An ensemble of collision-probability networks for a fixed robot footprint.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel<T> {
    pub members: Vec<Member<T>>,
    pub mode: EnsembleMode,
    pub robot: RobotSpec<f64>,
}

impl<T: Scalar> EnsembleModel<T> {
    pub fn new(members: Vec<Member<T>>, mode: EnsembleMode, robot: RobotSpec<f64>) -> Result<Self> {
        let m = EnsembleModel { members, mode, robot };
        m.validate()?;
        Ok(m)
    }

    /// Randomly initialized ensemble of `k` members.
    pub fn init(arch: &Arch, fourier: FourierConfig, k: usize, seed: u64, robot: RobotSpec<f64>) -> Result<Self> {
        let members = (0..k)
            .map(|i| Member::init(arch, fourier, member_seed(seed, i)))
            .collect::<Result<Vec<_>>>()?;
        let mode = if k >= 2 { EnsembleMode::CiUpper } else { EnsembleMode::Single };
        EnsembleModel::new(members, mode, robot)
    }

    pub fn validate(&self) -> Result<()> {
        if self.members.is_empty() {
            return Err(DcpfError::invalid("ensemble needs at least one member"));
        }
        if self.mode.needs_spread() && self.members.len() < 2 {
            return Err(DcpfError::invalid(format!("mode {} needs at least two members", self.mode)));
        }
        self.robot.validate()
    }

    pub fn k(&self) -> usize {
        self.members.len()
    }

    pub fn with_mode(mut self, mode: EnsembleMode) -> Result<Self> {
        self.mode = mode;
        self.validate()?;
        Ok(self)
    }

    fn check_robot(&self, q: &CpQuery) -> Result<()> {
        let r = &q.robot;
        let m = &self.robot;
        if (r.width - m.width).abs() > 1e-9 || (r.height - m.height).abs() > 1e-9 {
            return Err(DcpfError::invalid(format!(
                "query robot {}x{} differs from the model's {}x{}",
                r.width, r.height, m.width, m.height
            )));
        }
        Ok(())
    }

    /// `K × B` matrix of member predictions.
    pub fn member_predictions(&self, rows: &[[f64; 10]]) -> Result<Array2<f64>> {
        let per: Vec<Vec<f64>> = self
            .members
            .par_iter()
            .map(|m| {
                let _ftz = crate::scalar::FlushDenormals::new();
                m.predict_rows(rows)
            })
            .collect::<Result<_>>()?;
        let mut out = Array2::zeros((self.k(), rows.len()));
        for (i, p) in per.into_iter().enumerate() {
            out.row_mut(i).assign(&ndarray::Array1::from(p));
        }
        Ok(out)
    }

    /// Aggregated probability for every feature row (obstacle frame).
    pub fn predict_rows(&self, rows: &[[f64; 10]]) -> Result<Vec<f64>> {
        self.validate()?;
        if rows.is_empty() {
            return Ok(Vec::new());
        }
        let m = self.member_predictions(rows)?;
        m.columns()
            .into_iter()
            .map(|c| aggregate(&c.to_vec(), self.mode))
            .collect()
    }

    pub fn predict_batch(&self, queries: &[CpQuery]) -> Result<Vec<f64>> {
        for q in queries {
            self.check_robot(q)?;
        }
        let rows: Vec<[f64; 10]> = queries.iter().map(|q| q.features()).collect();
        self.predict_rows(&rows)
    }

    pub fn predict(&self, q: &CpQuery) -> Result<f64> {
        Ok(self.predict_batch(std::slice::from_ref(q))?[0])
    }

    pub fn cast<U: Scalar>(&self) -> EnsembleModel<U> {
        EnsembleModel {
            members: self
                .members
                .iter()
                .map(|m| Member {
                    encoder: m.encoder.clone(),
                    params: m.params.cast(),
                })
                .collect(),
            mode: self.mode,
            robot: self.robot,
        }
    }
}
