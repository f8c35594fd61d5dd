use serde::{Deserialize, Serialize};

use super::{salt_pepper_inplace, DaeModel};
use crate::datasets::BinaryImage;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub noise_p: f64,
    pub batch_size: usize,
    /// Stop after this many consecutive epochs without a new validation minimum.
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            noise_p: 0.1,
            batch_size: 100,
            patience: 10,
            max_epochs: 200,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be non-negative and finite");
        }
        if !(0.0..=1.0).contains(&self.noise_p) {
            return bad("noise probability must lie in [0, 1]");
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs_run: usize,
    /// Mean per-example training loss of each epoch.
    pub train_losses: Vec<f64>,
    /// Mean per-example loss on the corrupted validation set after each epoch.
    pub val_losses: Vec<f64>,
    pub best_val_loss: f64,
    pub best_epoch: usize,
    /// Snapshot taken at `best_epoch`.
    pub model: DaeModel,
}

const EVAL_CHUNK: usize = 500;

fn stack(images: &[BinaryImage], n: usize) -> Result<Matrix> {
    let mut data = Vec::with_capacity(images.len() * n);
    for img in images {
        if img.len() != n {
            return Err(Error::ShapeMismatch {
                op: "train",
                left: (n, 1),
                right: (img.len(), 1),
            });
        }
        data.extend_from_slice(img.pixels());
    }
    Matrix::from_vec(images.len(), n, data)
}

/// Mean per-example BCE of reconstructing `targets` from `inputs`.
pub(crate) fn mean_loss(model: &DaeModel, inputs: &Matrix, targets: &Matrix) -> Result<f64> {
    let n = inputs.cols();
    let mut total = 0.0;
    for start in (0..inputs.rows()).step_by(EVAL_CHUNK) {
        let end = (start + EVAL_CHUNK).min(inputs.rows());
        let x = Matrix::from_vec(end - start, n, inputs.as_slice()[start * n..end * n].to_vec())?;
        let mu = model.reconstruct_batch(&x)?;
        total += super::bce_loss(mu.as_slice(), &targets.as_slice()[start * n..end * n]);
    }
    Ok(total / inputs.rows() as f64)
}

/// Minibatch SGD on the denoising objective with early stopping.
///
/// Each epoch shuffles the training set, corrupts every minibatch with fresh
/// salt-and-pepper noise and regresses onto the clean images. The validation
/// inputs are corrupted once, from a fixed seed, so every epoch is scored on the
/// same noisy set.
pub fn train(
    mut model: DaeModel,
    train_set: &[BinaryImage],
    val_set: &[BinaryImage],
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::InvalidArgument("training and validation sets must be non-empty".into()));
    }
    let n = model.input_size();
    let clean = stack(train_set, n)?;
    let val_clean = stack(val_set, n)?;
    let mut val_noisy = val_clean.clone();
    let mut val_rng = Rng::for_stream(cfg.seed, Stream::ValidationNoise);
    for r in 0..val_noisy.rows() {
        salt_pepper_inplace(val_noisy.row_mut(r), cfg.noise_p, &mut val_rng);
    }

    let mut shuffle_rng = Rng::for_stream(cfg.seed, Stream::Shuffle);
    let mut noise_rng = Rng::for_stream(cfg.seed, Stream::Noise);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    let mut train_losses = vec![];
    let mut val_losses = vec![];
    let mut best: Option<(f64, usize, DaeModel)> = None;

    for epoch in 0..cfg.max_epochs {
        shuffle_rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut target = Vec::with_capacity(batch.len() * n);
            for &i in batch {
                target.extend_from_slice(clean.row(i));
            }
            let mut input = target.clone();
            for row in input.chunks_exact_mut(n) {
                salt_pepper_inplace(row, cfg.noise_p, &mut noise_rng);
            }
            let input = Matrix::from_vec(batch.len(), n, input)?;
            let target = Matrix::from_vec(batch.len(), n, target)?;
            let (loss, grads) = model.loss_and_gradients(&input, &target)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            epoch_loss += loss;
            model.apply_gradients(&grads, cfg.learning_rate);
        }
        if !model.is_finite() {
            return Err(Error::Diverged {
                epoch,
                loss: f64::NAN,
            });
        }
        train_losses.push(epoch_loss / train_set.len() as f64);

        let val = mean_loss(&model, &val_noisy, &val_clean)?;
        if !val.is_finite() {
            return Err(Error::Diverged { epoch, loss: val });
        }
        val_losses.push(val);

        match &best {
            Some((best_val, best_epoch, _)) if val >= *best_val => {
                if epoch - best_epoch >= cfg.patience {
                    break;
                }
            }
            _ => best = Some((val, epoch, model.clone())),
        }
    }

    let (best_val_loss, best_epoch, model) = best.expect("at least one epoch ran");
    Ok(TrainReport {
        epochs_run: val_losses.len(),
        train_losses,
        val_losses,
        best_val_loss,
        best_epoch,
        model,
    })
}
