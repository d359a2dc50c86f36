//! Training of ensemble members: loss, reverse-mode gradients, Adam and
//! evaluation metrics.

mod adam;
mod loss;
mod metrics;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use adam::{Adam, AdamConfig};
pub use loss::{bce, loss, loss_and_gradients, loss_and_gradients_into, regularizer, LossParts, P_CLAMP};
pub use metrics::{evaluate, predict_records, Metrics};

use crate::dataset::DatasetRecord;
use crate::error::{DcpfError, Result};
use crate::geometry::RobotSpec;
use crate::mc::stream_rng;
use crate::model::{member_seed, Arch, EncodedBatch, EnsembleModel, FourierConfig, Member};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Weight of the shaping regularizer.
    pub gamma: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub ensemble_size: usize,
    pub arch: Arch,
    pub fourier: FourierConfig,
    pub robot: RobotSpec<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 2.4e-4,
            gamma: 0.01,
            batch_size: 64,
            epochs: 20,
            seed: 0,
            ensemble_size: 3,
            arch: Arch::desk(),
            fourier: FourierConfig::default(),
            robot: RobotSpec::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(DcpfError::invalid("learning rate must be positive"));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(DcpfError::invalid("gamma must be >= 0"));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.ensemble_size == 0 {
            return Err(DcpfError::invalid("epochs, batch size and ensemble size must be >= 1"));
        }
        self.arch.validate()?;
        self.fourier.validate()?;
        self.robot.validate()
    }
}

/// Validation statistics after an epoch; epoch 0 is the untrained network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean minibatch loss over the epoch.
    pub train_loss: Option<f64>,
    pub val_loss: f64,
    pub val_bce: f64,
    /// Mean `|ρ² − ρ¹|` over the validation set.
    pub val_abs_drho: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Per member, one entry per epoch starting at epoch 0.
    pub history: Vec<Vec<EpochStats>>,
}

fn features(records: &[DatasetRecord]) -> Vec<[f64; 10]> {
    records.iter().map(|r| r.features()).collect()
}

fn validation_stats<T: Scalar>(
    member: &Member<T>,
    val: &EncodedBatch<T>,
    targets: &[f64],
    gamma: f64,
    epoch: usize,
    train_loss: Option<f64>,
) -> EpochStats {
    let parts = loss(&member.params, val, targets, gamma);
    let heads = member.params.forward(val);
    let drho = heads
        .iter()
        .map(|h| (h.rho2 - h.rho1).abs().to_f64_lossless())
        .sum::<f64>()
        / heads.len() as f64;
    EpochStats {
        epoch,
        train_loss,
        val_loss: parts.loss,
        val_bce: parts.bce,
        val_abs_drho: drho,
    }
}

/// Trains ensemble member `index`; weight init, Fourier frequencies and
/// shuffling all derive from the member seed.
pub fn train_member<T: Scalar>(
    train: &[DatasetRecord],
    val: &[DatasetRecord],
    cfg: &TrainConfig,
    index: usize,
) -> Result<(Member<T>, Vec<EpochStats>)> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(DcpfError::invalid("training and validation sets must be nonempty"));
    }
    let _ftz = crate::scalar::FlushDenormals::new();
    let seed = member_seed(cfg.seed, index);
    let mut member = Member::<T>::init(&cfg.arch, cfg.fourier, seed)?;
    let x_train = member.encoder.encode_batch::<T>(&features(train))?;
    let y_train: Vec<f64> = train.iter().map(|r| r.p_bar).collect();
    let x_val = member.encoder.encode_batch::<T>(&features(val))?;
    let y_val: Vec<f64> = val.iter().map(|r| r.p_bar).collect();

    let mut history = vec![validation_stats(&member, &x_val, &y_val, cfg.gamma, 0, None)];
    let mut adam = Adam::new(&member.params, AdamConfig::with_lr(cfg.learning_rate));
    let mut grad = member.params.zeros_like();
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut stream_rng(seed, 1000 + epoch as u64));
        let mut total = 0.0;
        let mut batches = 0usize;
        for idx in order.chunks(cfg.batch_size) {
            let xb = x_train.select(idx);
            let yb: Vec<f64> = idx.iter().map(|&i| y_train[i]).collect();
            let parts = loss_and_gradients_into(&member.params, &xb, &yb, cfg.gamma, &mut grad);
            if !parts.loss.is_finite() {
                return Err(DcpfError::Diverged(format!(
                    "member {index}, epoch {epoch}, batch {batches}: loss {}",
                    parts.loss
                )));
            }
            adam.update(&mut member.params, &grad);
            total += parts.loss;
            batches += 1;
        }
        if !member.params.is_finite() {
            return Err(DcpfError::Diverged(format!("member {index}, epoch {epoch}: non-finite weights")));
        }
        let stats = validation_stats(&member, &x_val, &y_val, cfg.gamma, epoch, Some(total / batches as f64));
        log::info!(
            "member {index} epoch {epoch}: train {:.5} val {:.5} (bce {:.5})",
            total / batches as f64,
            stats.val_loss,
            stats.val_bce
        );
        if !stats.val_loss.is_finite() {
            return Err(DcpfError::Diverged(format!("member {index}, epoch {epoch}: validation loss")));
        }
        history.push(stats);
    }
    Ok((member, history))
}

/// Trains `cfg.ensemble_size` members independently (in parallel).
///
/// The result is deterministic given the config. Multi-member ensembles
/// use the `ci_upper` mode, a single network uses `single`.
pub fn train<T: Scalar>(
    train: &[DatasetRecord],
    val: &[DatasetRecord],
    cfg: &TrainConfig,
) -> Result<(EnsembleModel<T>, TrainReport)> {
    cfg.validate()?;
    let trained: Vec<(Member<T>, Vec<EpochStats>)> = (0..cfg.ensemble_size)
        .into_par_iter()
        .map(|i| train_member(train, val, cfg, i))
        .collect::<Result<_>>()?;
    let (members, history): (Vec<_>, Vec<_>) = trained.into_iter().unzip();
    let mut model = EnsembleModel::new(members, crate::model::EnsembleMode::Single, cfg.robot)?;
    if model.k() >= 2 {
        model = model.with_mode(crate::model::EnsembleMode::CiUpper)?;
    }
    Ok((model, TrainReport { history }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg() -> TrainConfig {
        TrainConfig {
            arch: Arch {
                main_width: 16,
                main_depth: 2,
                shaping_width: 8,
                shaping_depth: 1,
            },
            fourier: FourierConfig {
                n_frequencies: 4,
                ..Default::default()
            },
            ensemble_size: 2,
            batch_size: 4,
            epochs: 3,
            learning_rate: 1e-2,
            ..Default::default()
        }
    }

    fn rec(rx: f64, p: f64) -> DatasetRecord {
        DatasetRecord {
            rx,
            ry: 0.5,
            rphi: 0.1,
            l1: 2.0,
            l2: 1.0,
            s_x: 0.1,
            s_y: 0.1,
            s_phi: 0.05,
            s_l1: 0.01,
            s_l2: 0.01,
            p_bar: p,
            ci_half_width: 0.01,
            n_samples: 10_000,
        }
    }

    #[test]
    fn memorizes_single_record() {
        let data = [rec(3.0, 0.3)];
        let cfg = TrainConfig {
            ensemble_size: 1,
            batch_size: 1,
            epochs: 1500,
            ..tiny_cfg()
        };
        let (model, report) = train::<f64>(&data, &data, &cfg).unwrap();
        let p = predict_records(&model, &data).unwrap()[0];
        assert!((p - 0.3).abs() < 0.01, "{p}");
        assert_eq!(report.history[0].len(), 1501);
    }

    #[test]
    fn deterministic_given_seed() {
        let data: Vec<_> = (0..12).map(|i| rec(i as f64, if i < 4 { 0.9 } else { 0.0 })).collect();
        let a = train::<f32>(&data, &data, &tiny_cfg()).unwrap();
        let b = train::<f32>(&data, &data, &tiny_cfg()).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        assert_ne!(a.0.members[0], a.0.members[1]);
    }

    #[test]
    fn rejects_bad_config() {
        let data = [rec(1.0, 0.5)];
        let cfg = TrainConfig {
            learning_rate: 0.0,
            ..tiny_cfg()
        };
        assert!(train::<f64>(&data, &data, &cfg).is_err());
        assert!(train::<f64>(&[], &data, &tiny_cfg()).is_err());
    }
}
