use ndarray::Array2;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{DcpfError, Result};
use crate::mc::stream_rng;
use crate::scalar::Scalar;

/// Input groups, each encoded with its own frequency matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    /// `(rx, ry)` divided by the position scale.
    Position,
    /// `(cos θ, sin θ)` of the polar angle `θ = atan2(ry, rx)`.
    Polar,
    /// `(cos rφ, sin rφ)`.
    Heading,
    /// `(l1, l2)` divided by the length scale.
    Lengths,
    /// The five standard deviations divided by the sigma scale.
    Sigma,
}

impl GroupKind {
    pub const ALL: [GroupKind; 5] = [
        GroupKind::Position,
        GroupKind::Polar,
        GroupKind::Heading,
        GroupKind::Lengths,
        GroupKind::Sigma,
    ];

    pub fn dim(self) -> usize {
        match self {
            GroupKind::Sigma => 5,
            _ => 2,
        }
    }
}

/// Groups fed to the main (probability) network.
pub const MAIN_GROUPS: [GroupKind; 4] = [GroupKind::Position, GroupKind::Heading, GroupKind::Lengths, GroupKind::Sigma];
/// Groups fed to the shaping network; position enters only through its angle.
pub const SHAPING_GROUPS: [GroupKind; 4] = [GroupKind::Polar, GroupKind::Heading, GroupKind::Lengths, GroupKind::Sigma];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierConfig {
    pub n_frequencies: usize,
    /// Standard deviation of the frequency entries.
    pub scale: f64,
    pub position_scale: f64,
    pub length_scale: f64,
    pub sigma_scale: f64,
}

impl Default for FourierConfig {
    fn default() -> Self {
        FourierConfig {
            n_frequencies: 16,
            scale: 0.25,
            position_scale: 10.0,
            length_scale: 5.0,
            sigma_scale: std::f64::consts::SQRT_2,
        }
    }
}

impl FourierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_frequencies == 0 {
            return Err(DcpfError::invalid("need at least one Fourier frequency"));
        }
        let pos = [self.scale, self.position_scale, self.length_scale, self.sigma_scale];
        if pos.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(DcpfError::invalid("Fourier scales must be positive and finite"));
        }
        Ok(())
    }
}

/// Random Fourier features for one input group.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierGroup {
    pub kind: GroupKind,
    /// `n_frequencies × dim`.
    pub freqs: Array2<f64>,
}

impl FourierGroup {
    pub fn dim(&self) -> usize {
        self.freqs.ncols()
    }

    pub fn n_frequencies(&self) -> usize {
        self.freqs.nrows()
    }

    /// `[sin(2πFv), cos(2πFv)]`, written into `out` (length `2·n_frequencies`).
    pub fn encode_into<T: Scalar>(&self, v: &[f64], out: &mut [T]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(DcpfError::invalid(format!(
                "{:?} group expects {} inputs, got {}",
                self.kind,
                self.dim(),
                v.len()
            )));
        }
        let n = self.n_frequencies();
        debug_assert_eq!(out.len(), 2 * n);
        let two_pi = std::f64::consts::TAU;
        for (k, row) in self.freqs.rows().into_iter().enumerate() {
            let a: f64 = row.iter().zip(v).map(|(f, x)| f * x).sum::<f64>() * two_pi;
            let (s, c) = a.sin_cos();
            out[k] = T::of(s);
            out[n + k] = T::of(c);
        }
        Ok(())
    }

    pub fn encode(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; 2 * self.n_frequencies()];
        self.encode_into(v, &mut out)?;
        Ok(out)
    }
}

/// Fourier encoders for all input groups of one ensemble member.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierEncoder {
    pub seed: u64,
    pub config: FourierConfig,
    pub groups: Vec<FourierGroup>,
}

impl FourierEncoder {
    /// Frequencies `~ N(0, scale²)`, one independent stream per group.
    pub fn new(config: FourierConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let normal = Normal::new(0.0, config.scale).map_err(|e| DcpfError::invalid(e.to_string()))?;
        let groups = GroupKind::ALL
            .iter()
            .enumerate()
            .map(|(i, &kind)| {
                let mut rng = stream_rng(seed, i as u64);
                let freqs = Array2::from_shape_fn((config.n_frequencies, kind.dim()), |_| normal.sample(&mut rng));
                FourierGroup { kind, freqs }
            })
            .collect();
        Ok(FourierEncoder { seed, config, groups })
    }

    pub fn group(&self, kind: GroupKind) -> &FourierGroup {
        // groups are stored in GroupKind::ALL order
        &self.groups[GroupKind::ALL.iter().position(|&k| k == kind).unwrap()]
    }

    pub fn group_width(&self) -> usize {
        2 * self.config.n_frequencies
    }

    pub fn main_dim(&self) -> usize {
        MAIN_GROUPS.len() * self.group_width()
    }

    pub fn shaping_dim(&self) -> usize {
        SHAPING_GROUPS.len() * self.group_width()
    }

    /// Raw input vector of a group for the feature row
    /// `[rx, ry, rφ, l1, l2, σx, σy, σφ, σl1, σl2]`.
    pub fn group_input(&self, kind: GroupKind, f: &[f64; 10]) -> Vec<f64> {
        let c = &self.config;
        match kind {
            GroupKind::Position => vec![f[0] / c.position_scale, f[1] / c.position_scale],
            GroupKind::Polar => {
                let th = f[1].atan2(f[0]);
                vec![th.cos(), th.sin()]
            }
            GroupKind::Heading => vec![f[2].cos(), f[2].sin()],
            GroupKind::Lengths => vec![f[3] / c.length_scale, f[4] / c.length_scale],
            GroupKind::Sigma => f[5..].iter().map(|s| s / c.sigma_scale).collect(),
        }
    }

    /// Encodes a batch of feature rows.
    ///
    /// Returns the main-network inputs, the shaping-network inputs and the
    /// distances `‖(rx, ry)‖`.
    pub fn encode_batch<T: Scalar>(&self, rows: &[[f64; 10]]) -> Result<EncodedBatch<T>> {
        let w = self.group_width();
        let mut main = Array2::<T>::zeros((rows.len(), self.main_dim()));
        let mut shaping = Array2::<T>::zeros((rows.len(), self.shaping_dim()));
        let mut dist = Vec::with_capacity(rows.len());
        for (i, f) in rows.iter().enumerate() {
            if !f.iter().all(|v| v.is_finite()) {
                return Err(DcpfError::invalid(format!("non-finite query features at row {i}")));
            }
            let mut cache: [Option<Vec<T>>; 5] = Default::default();
            for (target, groups) in [(&mut main, &MAIN_GROUPS), (&mut shaping, &SHAPING_GROUPS)] {
                let mut row = target.row_mut(i);
                let row = row.as_slice_mut().expect("standard layout");
                for (g, &kind) in groups.iter().enumerate() {
                    let slot = &mut cache[GroupKind::ALL.iter().position(|&k| k == kind).unwrap()];
                    if slot.is_none() {
                        let mut buf = vec![T::zero(); w];
                        self.group(kind).encode_into(&self.group_input(kind, f), &mut buf)?;
                        *slot = Some(buf);
                    }
                    row[g * w..(g + 1) * w].copy_from_slice(slot.as_ref().unwrap());
                }
            }
            dist.push(T::of(f[0].hypot(f[1])));
        }
        Ok(EncodedBatch {
            main,
            shaping,
            dist: ndarray::Array1::from(dist),
        })
    }
}

/// Network-ready inputs for a batch of queries.
#[derive(Debug, Clone)]
pub struct EncodedBatch<T> {
    pub main: Array2<T>,
    pub shaping: Array2<T>,
    pub dist: ndarray::Array1<T>,
}

impl<T: Scalar> EncodedBatch<T> {
    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    /// Rows `idx` of this batch.
    pub fn select(&self, idx: &[usize]) -> EncodedBatch<T> {
        use ndarray::Axis;
        EncodedBatch {
            main: self.main.select(Axis(0), idx),
            shaping: self.shaping.select(Axis(0), idx),
            dist: self.dist.select(Axis(0), idx),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn enc() -> FourierEncoder {
        FourierEncoder::new(FourierConfig::default(), 42).unwrap()
    }

    #[test]
    fn zero_input_gives_unit_cosines() {
        let e = enc();
        let out = e.group(GroupKind::Sigma).encode(&[0.0; 5]).unwrap();
        assert_eq!(out.len(), 32);
        assert!(out[..16].iter().all(|&s| s == 0.0));
        assert!(out[16..].iter().all(|&c| c == 1.0));
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(enc(), enc());
        let other = FourierEncoder::new(FourierConfig::default(), 43).unwrap();
        assert_ne!(enc().groups[0].freqs, other.groups[0].freqs);
        // groups use independent streams
        let e = enc();
        assert_ne!(e.groups[0].freqs, e.groups[1].freqs);
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(matches!(
            enc().group(GroupKind::Position).encode(&[1.0]),
            Err(DcpfError::InvalidArgument(_))
        ));
    }

    #[test]
    fn lipschitz_bound() {
        let e = enc();
        let g = e.group(GroupKind::Sigma);
        // spectral norm bounded by the Frobenius norm
        let fro = g.freqs.iter().map(|f| f * f).sum::<f64>().sqrt();
        let v = [0.3, -0.2, 0.1, 0.7, 0.05];
        let d = [1e-3, -2e-3, 5e-4, 0.0, 1e-3];
        let w: Vec<f64> = v.iter().zip(&d).map(|(a, b)| a + b).collect();
        let a = g.encode(&v).unwrap();
        let b = g.encode(&w).unwrap();
        let dist = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let dn = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(dist <= std::f64::consts::TAU * fro * dn, "{dist}");
    }

    #[test]
    fn batch_layout() {
        let e = enc();
        let row = [3.0, 4.0, 0.5, 2.0, 1.0, 0.1, 0.2, 0.3, 0.4, 0.5];
        let b = e.encode_batch::<f64>(&[row]).unwrap();
        assert_eq!(b.main.dim(), (1, 128));
        assert_eq!(b.shaping.dim(), (1, 128));
        assert_eq!(b.dist[0], 5.0);
        let heading = e.group(GroupKind::Heading).encode(&[0.5f64.cos(), 0.5f64.sin()]).unwrap();
        assert_eq!(b.main.row(0).as_slice().unwrap()[32..64], heading[..]);
        assert_eq!(b.shaping.row(0).as_slice().unwrap()[32..64], heading[..]);
        let bad = [f64::NAN; 10];
        assert!(e.encode_batch::<f64>(&[bad]).is_err());
    }

    #[test]
    fn shaping_inputs_see_only_the_angle() {
        let e = enc();
        let a = [3.0, 4.0, 0.5, 2.0, 1.0, 0.1, 0.2, 0.3, 0.4, 0.5];
        let mut b = a;
        b[0] *= 2.5;
        b[1] *= 2.5;
        let ea = e.encode_batch::<f64>(&[a]).unwrap();
        let eb = e.encode_batch::<f64>(&[b]).unwrap();
        for (x, y) in ea.shaping.iter().zip(eb.shaping.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_ne!(ea.main, eb.main);
    }
}
