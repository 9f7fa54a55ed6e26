//! Loss, optimizer, run splits, the training loop and test metrics.

mod metrics;
mod optim;
mod split;

use log::debug;
use ndiff::{Tape, Tensor};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{window_run, GraphError, NormStats, WindowSample};
use crate::models::{Model, ModelError, ModelSpec};
use crate::sim::{derive_seed, TimeSeriesRun};

pub use metrics::*;
pub use optim::*;
pub use split::*;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{0}")]
    Contract(String),
    #[error("training diverged at epoch {epoch}: {detail}")]
    Divergence { epoch: usize, detail: String },
}

impl From<ndiff::NdError> for TrainError {
    fn from(e: ndiff::NdError) -> Self {
        TrainError::Model(e.into())
    }
}

/// Losses recorded after one training epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub smooth_l1_beta: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub early_stop_patience: usize,
    pub early_stop_min_delta: f64,
    pub window: usize,
    pub stride: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            weight_decay: 1e-4,
            smooth_l1_beta: 1e-2,
            batch_size: 32,
            max_epochs: 200,
            early_stop_patience: 10,
            early_stop_min_delta: 1e-4,
            window: 10,
            stride: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub const KEYS: [&'static str; 10] = [
        "lr",
        "weight_decay",
        "smooth_l1_beta",
        "batch_size",
        "max_epochs",
        "early_stop_patience",
        "early_stop_min_delta",
        "window",
        "stride",
        "seed",
    ];

    pub fn validate(&self) -> Result<(), TrainError> {
        let positive = [self.lr, self.smooth_l1_beta, self.early_stop_min_delta]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite());
        let counts = self.batch_size > 0 && self.max_epochs > 0 && self.early_stop_patience > 0 && self.stride > 0;
        if !positive || !counts || self.weight_decay < 0.0 || self.window < 2 {
            return Err(TrainError::Contract(format!("invalid training configuration {self:?}")));
        }
        Ok(())
    }

    /// Sets one field from its textual value. Unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn p<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
            v.trim().parse().map_err(|_| format!("invalid value '{v}' for '{key}'"))
        }
        match key {
            "lr" => self.lr = p(key, value)?,
            "weight_decay" => self.weight_decay = p(key, value)?,
            "smooth_l1_beta" => self.smooth_l1_beta = p(key, value)?,
            "batch_size" => self.batch_size = p(key, value)?,
            "max_epochs" => self.max_epochs = p(key, value)?,
            "early_stop_patience" => self.early_stop_patience = p(key, value)?,
            "early_stop_min_delta" => self.early_stop_min_delta = p(key, value)?,
            "window" => self.window = p(key, value)?,
            "stride" => self.stride = p(key, value)?,
            "seed" => self.seed = p(key, value)?,
            _ => return Err(format!("unknown training key '{key}'")),
        }
        Ok(())
    }
}

/// Outcome of observing one epoch's validation loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Stop,
}

/// Patience counter plus best-so-far tracking.
///
/// Patience resets only on an improvement larger than `min_delta`; the best
/// checkpoint follows the plain minimum so no earlier epoch is ever better.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    pub min_delta: f64,
    reference: f64,
    best: f64,
    best_epoch: Option<usize>,
    wait: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize, min_delta: f64) -> Self {
        Self {
            patience,
            min_delta,
            reference: f64::INFINITY,
            best: f64::INFINITY,
            best_epoch: None,
            wait: 0,
        }
    }

    /// Returns whether `epoch` is the new best, and whether to stop.
    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> (bool, StopDecision) {
        let is_best = val_loss < self.best;
        if is_best {
            self.best = val_loss;
            self.best_epoch = Some(epoch);
        }
        if val_loss < self.reference - self.min_delta {
            self.reference = val_loss;
            self.wait = 0;
        } else {
            self.wait += 1;
        }
        let decision = if self.wait >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        };
        (is_best, decision)
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best_epoch
    }

    pub fn best_loss(&self) -> f64 {
        self.best
    }
}

/// Normalized train / val / test windows and the statistics fitted on train.
#[derive(Debug, Clone)]
pub struct Datasets {
    pub train: Vec<WindowSample>,
    pub val: Vec<WindowSample>,
    pub test: Vec<WindowSample>,
    pub stats: NormStats,
}

fn windows_of(runs: &[&TimeSeriesRun], window: usize, stride: usize) -> Result<Vec<WindowSample>, TrainError> {
    let mut out = Vec::new();
    for r in runs {
        out.extend(window_run(r, window, stride)?);
    }
    Ok(out)
}

impl Datasets {
    /// Windows each split separately (no window crosses runs) and normalizes
    /// all three with statistics fitted on the training windows.
    pub fn build(
        runs: &[TimeSeriesRun],
        split: &RunSplit,
        window: usize,
        stride: usize,
    ) -> Result<Datasets, TrainError> {
        let pick = |idx: &[usize]| idx.iter().map(|&i| &runs[i]).collect::<Vec<_>>();
        let train_raw = windows_of(&pick(&split.train), window, stride)?;
        let stats = NormStats::fit(&train_raw)?;
        let norm = |w: Vec<WindowSample>| w.iter().map(|s| stats.apply(s)).collect::<Vec<_>>();
        let train = norm(train_raw);
        let val = norm(windows_of(&pick(&split.val), window, stride)?);
        let test = norm(windows_of(&pick(&split.test), window, stride)?);
        Ok(Datasets { train, val, test, stats })
    }

    /// Training targets in centimeters.
    pub fn train_targets_cm(&self) -> Vec<[f64; 2]> {
        self.train.iter().map(|s| self.stats.denorm_target(s.target)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest validation loss.
    pub model: Model,
    pub history: Vec<EpochRecord>,
    /// 1-based epoch of `model`.
    pub best_epoch: usize,
}

fn targets_tensor(samples: &[&WindowSample]) -> Tensor {
    let data = samples.iter().flat_map(|s| s.target).collect();
    Tensor::new(&[samples.len(), 2], data).expect("sized")
}

/// Mean loss of `model` over `samples` in evaluation mode.
pub fn eval_loss(model: &Model, samples: &[WindowSample], cfg: &TrainConfig) -> Result<f64, TrainError> {
    if samples.is_empty() {
        return Err(TrainError::Contract("cannot evaluate loss on an empty set".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut bn = model.bn.clone();
    let mut total = 0.0;
    for chunk in samples.chunks(cfg.batch_size) {
        let refs: Vec<&WindowSample> = chunk.iter().collect();
        let input = model.spec.prepare(&refs)?;
        let tape = Tape::new();
        let p = model.params.bind_frozen(&tape);
        let pred = model.spec.forward(&p, &input, &mut bn, false, &mut rng)?;
        let loss = smooth_l1(pred, tape.constant(targets_tensor(&refs)), cfg.smooth_l1_beta)?;
        total += loss.item().expect("scalar") * chunk.len() as f64;
    }
    Ok(total / samples.len() as f64)
}

/// Mini-batch Adam with early stopping on the validation loss.
pub fn train(spec: ModelSpec, train: &[WindowSample], val: &[WindowSample], cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(TrainError::Contract(format!(
            "training needs non-empty train and validation sets (got {} and {})",
            train.len(),
            val.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0x74_72_61_69_6e));
    let mut model = Model::new(spec, &mut rng)?;
    let mut adam = AdamState::new(&model.params);
    let mut stopper = EarlyStopping::new(cfg.early_stop_patience, cfg.early_stop_min_delta);
    let mut best = model.clone();
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let refs: Vec<&WindowSample> = batch.iter().map(|&i| &train[i]).collect();
            let input = spec.prepare(&refs)?;
            let tape = Tape::new();
            let p = model.params.bind(&tape);
            let pred = spec.forward(&p, &input, &mut model.bn, true, &mut rng)?;
            let loss = smooth_l1(pred, tape.constant(targets_tensor(&refs)), cfg.smooth_l1_beta)?;
            let value = loss.item().expect("scalar");
            if !value.is_finite() {
                return Err(TrainError::Divergence {
                    epoch,
                    detail: format!("non-finite training loss {value}"),
                });
            }
            total += value * batch.len() as f64;
            let mut grads = tape.backward(loss)?;
            let grads = p.gradients(&mut grads);
            adam.step(&mut model.params, &grads, cfg.lr, cfg.weight_decay)?;
        }
        let train_loss = total / train.len() as f64;
        let val_loss = eval_loss(&model, val, cfg)?;
        if !val_loss.is_finite() || !model.params.is_finite() {
            return Err(TrainError::Divergence {
                epoch,
                detail: format!("validation loss {val_loss}"),
            });
        }
        debug!("{} epoch {epoch}: train {train_loss:.6} val {val_loss:.6}", spec.kind);
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        let (is_best, decision) = stopper.observe(epoch, val_loss);
        if is_best {
            best = model.clone();
        }
        if decision == StopDecision::Stop {
            break;
        }
    }
    Ok(TrainOutcome {
        model: best,
        best_epoch: stopper.best_epoch().expect("at least one epoch"),
        history,
    })
}

/// Test metrics in centimeters.
pub fn evaluate(model: &Model, test: &[WindowSample], stats: &NormStats) -> Result<Metrics, TrainError> {
    if test.is_empty() {
        return Err(TrainError::Contract("cannot evaluate on an empty test set".into()));
    }
    let preds = model.predict(test, 64)?;
    let preds_cm: Vec<[f64; 2]> = preds.iter().map(|&p| stats.denorm_target(p)).collect();
    let targets_cm: Vec<[f64; 2]> = test.iter().map(|s| stats.denorm_target(s.target)).collect();
    Ok(Metrics::from_pairs(&preds_cm, &targets_cm).expect("non-empty, aligned"))
}

/// Metrics of always predicting the mean training deviation.
pub fn mean_baseline(train_targets_cm: &[[f64; 2]], test: &[WindowSample], stats: &NormStats) -> Option<Metrics> {
    if train_targets_cm.is_empty() {
        return None;
    }
    let n = train_targets_cm.len() as f64;
    let mean = [
        train_targets_cm.iter().map(|t| t[0]).sum::<f64>() / n,
        train_targets_cm.iter().map(|t| t[1]).sum::<f64>() / n,
    ];
    let targets: Vec<[f64; 2]> = test.iter().map(|s| stats.denorm_target(s.target)).collect();
    Metrics::from_pairs(&vec![mean; targets.len()], &targets)
}
