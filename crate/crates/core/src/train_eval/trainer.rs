use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{mape, median_abs_error};
use super::optim::{Optimizer, OptimizerKind};
use super::{Result, TrainError};
use crate::dam::DamModel;
use crate::datapipe::{reconstruct_close, MinMaxScaler, WindowSample, TARGET_COLUMN};
use crate::ndcore::{Graph, NdError, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Global gradient-norm ceiling; 0 disables clipping.
    pub grad_clip_norm: f64,
    pub early_stop_patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 32,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::Adam,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            grad_clip_norm: 1.0,
            early_stop_patience: 20,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be >= 1");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and >= 0");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.eps > 0.0) {
            return bad("adam betas must lie in [0, 1) and eps must be > 0");
        }
        if !(self.grad_clip_norm >= 0.0) {
            return bad("grad_clip_norm must be >= 0");
        }
        if self.early_stop_patience == 0 || self.early_stop_patience > self.epochs {
            return bad("early_stop_patience must lie in 1..=epochs");
        }
        Ok(())
    }

    fn optimizer(&self) -> Optimizer {
        match self.optimizer {
            OptimizerKind::Adam => Optimizer::adam(self.learning_rate, self.beta1, self.beta2, self.eps),
            OptimizerKind::Sgd => Optimizer::sgd(self.learning_rate),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub initial_train_loss: f64,
    pub initial_val_loss: f64,
    pub history: Vec<EpochRecord>,
    /// 1-based epoch whose weights were restored.
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub steps: usize,
}

/// Stacks samples into `B × L × 4`, `B × L × 2` and `B × 1` tensors.
pub fn batch_tensors(samples: &[&WindowSample]) -> Result<(Tensor, Tensor, Tensor)> {
    let first = samples
        .first()
        .ok_or_else(|| TrainError::Config("empty batch".into()))?;
    let l = first.fin_win.shape()[0];
    let b = samples.len();
    let mut fin = Vec::with_capacity(b * l * 4);
    let mut sent = Vec::with_capacity(b * l * 2);
    for s in samples {
        if s.fin_win.shape() != [l, 4] || s.sent_win.shape() != [l, 2] {
            return Err(TrainError::Config("samples have inconsistent window shapes".into()));
        }
        fin.extend_from_slice(s.fin_win.data());
        sent.extend_from_slice(s.sent_win.data());
    }
    let y = samples.iter().map(|s| s.target_next).collect();
    Ok((
        Tensor::new(vec![b, l, 4], fin)?,
        Tensor::new(vec![b, l, 2], sent)?,
        Tensor::new(vec![b, 1], y)?,
    ))
}

/// Scaled-space predictions for `samples`, batched in order.
pub fn predict_scaled(model: &DamModel, samples: &[WindowSample], batch: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(samples.len());
    for chunk in samples.chunks(batch.max(1)) {
        let refs: Vec<&WindowSample> = chunk.iter().collect();
        let (fin, sent, _) = batch_tensors(&refs)?;
        out.extend(model.predict_batch(&fin, Some(&sent))?);
    }
    Ok(out)
}

/// Mean squared error over `samples` in scaled target units.
pub fn dataset_loss(model: &DamModel, samples: &[WindowSample], batch: usize) -> Result<f64> {
    let preds = predict_scaled(model, samples, batch)?;
    let sse: f64 = preds
        .iter()
        .zip(samples)
        .map(|(p, s)| (p - s.target_next).powi(2))
        .sum();
    Ok(sse / samples.len() as f64)
}

fn diverged(epoch: usize, batch: usize, detail: impl Into<String>) -> TrainError {
    TrainError::Divergence {
        epoch,
        batch,
        detail: detail.into(),
    }
}

/// Mini-batch MSE training with early stopping on validation loss.
///
/// Shuffling is driven by `cfg.seed`, so identical inputs give identical
/// histories. The weights of the best validation epoch are restored before
/// returning.
pub fn train(
    model: &mut DamModel,
    train: &[WindowSample],
    val: &[WindowSample],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(TrainError::Config(
            "training and validation sets must be non-empty".into(),
        ));
    }
    let eval_batch = cfg.batch_size.max(64);
    let initial_train_loss = dataset_loss(model, train, eval_batch)?;
    let initial_val_loss = dataset_loss(model, val, eval_batch)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = cfg.optimizer();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut sq_err = vec![0.0; train.len()];
    let mut history = Vec::new();
    let mut best = (0, f64::INFINITY, model.params().snapshot());
    let mut waited = 0;
    let mut steps = 0;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let refs: Vec<&WindowSample> = idx.iter().map(|&i| &train[i]).collect();
            let (fin, sent, y) = batch_tensors(&refs)?;
            let mut g = Graph::new();
            let (fv, sv, yv) = (g.input(&fin), g.input(&sent), g.input(&y));
            let step = (|| -> std::result::Result<_, TrainError> {
                let pred = model.forward(&mut g, fv, Some(sv))?;
                let loss = g.mse(pred, yv)?;
                Ok((pred, loss))
            })();
            let (pred, loss) = match step {
                Ok(v) => v,
                Err(TrainError::Model(crate::dam::ModelError::Numeric(NdError::NonFinite { op })))
                | Err(TrainError::Numeric(NdError::NonFinite { op })) => {
                    return Err(diverged(epoch, b, format!("non-finite value in {op}")))
                }
                Err(e) => return Err(e),
            };
            let value = g.scalar(loss);
            if !value.is_finite() {
                return Err(diverged(epoch, b, format!("loss {value}")));
            }
            for (k, &i) in idx.iter().enumerate() {
                sq_err[i] = (g.value(pred)[k] - train[i].target_next).powi(2);
            }
            let grads = g.backward(loss).map_err(|e| diverged(epoch, b, e.to_string()))?;
            let params = model.params_mut();
            params.zero_grad();
            params.accumulate(&grads);
            let norm = params.grad_norm();
            if !norm.is_finite() {
                return Err(diverged(epoch, b, "non-finite gradient norm"));
            }
            if cfg.grad_clip_norm > 0.0 && norm > cfg.grad_clip_norm {
                params.scale_grads(cfg.grad_clip_norm / norm);
            }
            opt.step(params);
            steps += 1;
        }
        let train_loss = sq_err.iter().sum::<f64>() / train.len() as f64;
        let val_loss = dataset_loss(model, val, eval_batch)?;
        if !val_loss.is_finite() {
            return Err(diverged(epoch, 0, format!("validation loss {val_loss}")));
        }
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        log::debug!("epoch {epoch}: train {train_loss:.6e} val {val_loss:.6e}");
        if val_loss < best.1 {
            best = (epoch, val_loss, model.params().snapshot());
            waited = 0;
        } else {
            waited += 1;
            if waited >= cfg.early_stop_patience {
                log::info!("early stop at epoch {epoch}, best epoch {}", best.0);
                break;
            }
        }
    }
    model.params_mut().restore(&best.2);
    Ok(TrainOutcome {
        initial_train_loss,
        initial_val_loss,
        history,
        best_epoch: best.0,
        best_val_loss: best.1,
        steps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub predicted_usd: Vec<f64>,
    pub actual_usd: Vec<f64>,
    pub median_ae_usd: f64,
    pub mape: f64,
}

impl Evaluation {
    pub fn from_prices(predicted_usd: Vec<f64>, actual_usd: Vec<f64>) -> Result<Self> {
        Ok(Evaluation {
            median_ae_usd: median_abs_error(&predicted_usd, &actual_usd)?,
            mape: mape(&predicted_usd, &actual_usd)?,
            predicted_usd,
            actual_usd,
        })
    }
}

/// Converts scaled predictions to USD closes and scores them.
pub fn evaluate_predictions(
    samples: &[WindowSample],
    scaled: &[f64],
    scaler: &MinMaxScaler,
    stationary: bool,
) -> Result<Evaluation> {
    if scaler.width() != TARGET_COLUMN + 1 {
        return Err(TrainError::Config(format!(
            "scaler has {} columns, expected {}",
            scaler.width(),
            TARGET_COLUMN + 1
        )));
    }
    if scaled.len() != samples.len() {
        return Err(TrainError::Config("one prediction per sample required".into()));
    }
    let predicted = samples
        .iter()
        .zip(scaled)
        .map(|(s, &p)| reconstruct_close(scaler, stationary, s.anchor_close, p))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let actual = samples.iter().map(|s| s.target_close).collect();
    Evaluation::from_prices(predicted, actual)
}

pub fn evaluate(
    model: &DamModel,
    samples: &[WindowSample],
    scaler: &MinMaxScaler,
    stationary: bool,
) -> Result<Evaluation> {
    let scaled = predict_scaled(model, samples, 64)?;
    evaluate_predictions(samples, &scaled, scaler, stationary)
}

/// Predicts each target as the window's last close.
pub fn persistence_baseline(samples: &[WindowSample]) -> Result<Evaluation> {
    Evaluation::from_prices(
        samples.iter().map(|s| s.anchor_close).collect(),
        samples.iter().map(|s| s.target_close).collect(),
    )
}
