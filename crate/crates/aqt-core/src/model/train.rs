//! Adam training loop with held-out early stopping.

use super::{Parameters, TransformerModel};
use crate::error::AqtError;
use crate::povm::OutcomeDataset;
use crate::rng::stream_rng;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

/// Optimizer and schedule settings.
///
/// Stream usage under `seed`: stream 0 picks the held-out split, stream
/// `1 + epoch` shuffles that epoch's batches. Training is serial and
/// bit-reproducible for a fixed seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Hard cap on epochs; early stopping usually ends sooner.
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub shuffle: bool,
    /// Fraction of the dataset held out for early stopping.
    pub heldout_fraction: f64,
    /// Epochs without held-out improvement before stopping.
    pub patience: usize,
    /// Per-epoch multiplicative learning-rate decay; 1 = constant rate.
    #[serde(default = "default_lr_decay")]
    pub lr_decay: f64,
}

fn default_lr_decay() -> f64 {
    1.0
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 128,
            epochs: 200,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            shuffle: true,
            heldout_fraction: 0.1,
            patience: 10,
            lr_decay: 1.0,
        }
    }
}

impl TrainOptions {
    pub fn validate(&self) -> Result<(), AqtError> {
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(AqtError::Validation(
                "batch_size and epochs must be >= 1".into(),
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(AqtError::Validation("learning_rate must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(AqtError::Validation("betas must lie in [0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.heldout_fraction) {
            return Err(AqtError::Validation(
                "heldout_fraction must lie in [0, 1)".into(),
            ));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(AqtError::Validation("lr_decay must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// One row of the training trace.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_nll: f64,
    pub heldout_nll: Option<f64>,
}

/// A finished run: the best model by held-out NLL plus diagnostics.
#[derive(Debug)]
pub struct TrainOutput {
    pub model: TransformerModel,
    pub trace: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Training failure modes.
#[derive(Debug)]
pub enum TrainError {
    /// Bad inputs; nothing was trained.
    Invalid(AqtError),
    /// Loss became non-finite; carries the last good model.
    Numeric {
        message: String,
        last_good: Box<TrainOutput>,
    },
}

impl std::fmt::Display for TrainError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrainError::Invalid(e) => write!(f, "{e}"),
            TrainError::Numeric { message, .. } => write!(f, "numeric failure: {message}"),
        }
    }
}

impl std::error::Error for TrainError {}

struct Adam {
    m: Parameters,
    v: Parameters,
    step: usize,
}

impl Adam {
    fn new(config: &super::TransformerConfig) -> Self {
        Self {
            m: Parameters::zeros(config),
            v: Parameters::zeros(config),
            step: 0,
        }
    }

    fn update(
        &mut self,
        params: &mut Parameters,
        grads: &Parameters,
        opts: &TrainOptions,
        lr: f64,
    ) {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - opts.beta1.powi(t);
        let bc2 = 1.0 - opts.beta2.powi(t);
        let mut ps = params.flat_slices_mut();
        let gs = grads.flat_slices();
        let mut ms = self.m.flat_slices_mut();
        let mut vs = self.v.flat_slices_mut();
        for i in 0..ps.len() {
            let p = &mut ps[i];
            let g = gs[i];
            let m = &mut ms[i];
            let v = &mut vs[i];
            for k in 0..g.len() {
                m[k] = opts.beta1 * m[k] + (1.0 - opts.beta1) * g[k];
                v[k] = opts.beta2 * v[k] + (1.0 - opts.beta2) * g[k] * g[k];
                let mhat = m[k] / bc1;
                let vhat = v[k] / bc2;
                p[k] -= lr * mhat / (vhat.sqrt() + opts.epsilon);
            }
        }
    }
}

/// Trains `model` on `dataset`. Returns the parameters that scored the best
/// held-out NLL (train NLL when the dataset is too small to split).
pub fn train(
    model: TransformerModel,
    dataset: &OutcomeDataset,
    opts: &TrainOptions,
) -> Result<TrainOutput, Box<TrainError>> {
    opts.validate().map_err(|e| Box::new(TrainError::Invalid(e)))?;
    if dataset.is_empty() {
        return Err(Box::new(TrainError::Invalid(AqtError::Validation(
            "dataset is empty".into(),
        ))));
    }
    if dataset.n_qubits != model.config().max_len {
        return Err(Box::new(TrainError::Invalid(AqtError::Validation(format!(
            "dataset has {} qubits but the model expects {}",
            dataset.n_qubits,
            model.config().max_len
        )))));
    }

    let mut model = model;
    model.provenance = format!(
        "povm={} n={} source={}",
        dataset.povm_name,
        dataset.len(),
        dataset.source
    );
    model.povm_name = dataset.povm_name.clone();

    // held-out split (stream 0)
    let n = dataset.len();
    let n_heldout = ((n as f64) * opts.heldout_fraction).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    if n_heldout > 0 {
        order.shuffle(&mut stream_rng(opts.seed, 0));
    }
    let heldout_idx: Vec<usize> = order[..n_heldout].to_vec();
    let mut train_idx: Vec<usize> = order[n_heldout..].to_vec();
    let heldout: Vec<Vec<u8>> = heldout_idx
        .iter()
        .map(|&i| dataset.outcomes[i].clone())
        .collect();

    let mut adam = Adam::new(model.config());
    let mut trace: Vec<EpochRecord> = Vec::new();
    let mut best_metric = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut best_params = model.params.clone();
    let mut since_best = 0usize;
    let mut stopped_early = false;

    for epoch in 0..opts.epochs {
        let lr = opts.learning_rate * opts.lr_decay.powi(epoch as i32);
        if opts.shuffle {
            train_idx.shuffle(&mut stream_rng(opts.seed, 1 + epoch as u64));
        }
        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        for chunk in train_idx.chunks(opts.batch_size) {
            let batch: Vec<Vec<u8>> = chunk.iter().map(|&i| dataset.outcomes[i].clone()).collect();
            let (loss, grads) = model
                .nll_and_gradients(&batch)
                .map_err(|e| Box::new(TrainError::Invalid(e)))?;
            if !loss.is_finite() {
                let mut best_model = model.clone();
                best_model.params = best_params;
                return Err(Box::new(TrainError::Numeric {
                    message: format!("loss became {loss} in epoch {epoch}"),
                    last_good: Box::new(TrainOutput {
                        model: best_model,
                        trace,
                        best_epoch,
                        stopped_early: false,
                    }),
                }));
            }
            adam.update(&mut model.params, &grads, opts, lr);
            epoch_loss += loss * batch.len() as f64;
            seen += batch.len();
        }
        let train_nll = epoch_loss / seen.max(1) as f64;
        let heldout_nll = if heldout.is_empty() {
            None
        } else {
            Some(model.nll(&heldout).map_err(|e| Box::new(TrainError::Invalid(e)))?)
        };
        trace.push(EpochRecord {
            epoch,
            train_nll,
            heldout_nll,
        });

        let metric = heldout_nll.unwrap_or(train_nll);
        if !metric.is_finite() || !model.params.all_finite() {
            let mut best_model = model.clone();
            best_model.params = best_params;
            return Err(Box::new(TrainError::Numeric {
                message: format!("non-finite parameters or metric in epoch {epoch}"),
                last_good: Box::new(TrainOutput {
                    model: best_model,
                    trace,
                    best_epoch,
                    stopped_early: false,
                }),
            }));
        }
        if metric < best_metric {
            best_metric = metric;
            best_epoch = epoch;
            best_params = model.params.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= opts.patience {
                stopped_early = true;
                break;
            }
        }
    }

    model.params = best_params;
    Ok(TrainOutput {
        model,
        trace,
        best_epoch,
        stopped_early,
    })
}
