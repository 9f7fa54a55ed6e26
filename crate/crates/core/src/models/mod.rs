//! The graph recurrent regressor and its three time-series baselines.
//!
//! All models map a window to a normalized `(Δlat, Δlon)` prediction.

mod baselines;
mod checkpoint;
mod params;
mod rgnn;

use std::fmt;
use std::str::FromStr;

use ndiff::{BatchNormStats, NdError, Tape, Var};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::WindowSample;

pub use baselines::{
    cnn_out_len, cnn_param_count, conv_input, conv_len, flat_dim, flatten_window, mlp_input, mlp_param_count,
    seq2point_out_len, seq2point_param_count, FlatWindow, CNN_BLOCKS, CNN_KERNEL, CONV_MIN_LEN, SEQ2POINT_CONVS,
    SLOT_WIDTH,
};
pub use checkpoint::CHECKPOINT_VERSION;
pub use params::{Bound, ParamStore};
pub use rgnn::{gclstm_cell_step, param_count as rgnn_param_count, GraphBatch, HiddenState, NodeState, StepSats};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] NdError),
    #[error("missing parameter '{0}'")]
    MissingParam(String),
    #[error("{0}")]
    Contract(String),
    #[error("checkpoint line {line}: {msg}")]
    Checkpoint { line: usize, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Rgnn,
    Mlp,
    Cnn,
    Seq2Point,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Rgnn, ModelKind::Mlp, ModelKind::Cnn, ModelKind::Seq2Point];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Rgnn => "rgnn",
            ModelKind::Mlp => "mlp",
            ModelKind::Cnn => "cnn",
            ModelKind::Seq2Point => "seq2point",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown model '{s}' (expected rgnn, mlp, cnn or seq2point)"))
    }
}

/// Architecture of one model instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Snapshots per window.
    pub window: usize,
    /// Satellite slots of the flat view; the receiver's tracking capacity.
    pub k_max: usize,
    /// rGNN hidden dimension.
    pub hidden_dim: usize,
    /// MLP hidden units, CNN channels and seq2point dense units.
    pub width: usize,
    /// rGNN readout dropout.
    pub dropout: f64,
    /// Zero the state of satellites absent from a snapshot instead of carrying it.
    pub reset_absent: bool,
}

/// Prepared network input for one batch.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelInput {
    Graph(GraphBatch),
    Dense(ndiff::Tensor),
}

impl ModelSpec {
    pub fn new(kind: ModelKind, window: usize, k_max: usize) -> Self {
        Self {
            kind,
            window,
            k_max,
            hidden_dim: 256,
            width: 256,
            dropout: 0.2,
            reset_absent: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ModelError::Contract(msg));
        if self.window < 2 {
            return bad(format!("window {} must be at least 2", self.window));
        }
        if self.k_max == 0 || self.hidden_dim == 0 || self.width == 0 {
            return bad("k_max, hidden_dim and width must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        Ok(())
    }

    pub fn flat_dim(&self) -> usize {
        flat_dim(self.k_max)
    }

    /// Time length seen by the conv stacks.
    pub fn padded_len(&self) -> usize {
        conv_len(self.window)
    }

    /// Closed-form parameter count of the architecture.
    pub fn param_count(&self) -> usize {
        let d = self.flat_dim();
        match self.kind {
            ModelKind::Rgnn => rgnn_param_count(self.hidden_dim),
            ModelKind::Mlp => mlp_param_count(self.window * d, self.width),
            ModelKind::Cnn => cnn_param_count(d, self.width, self.padded_len()),
            ModelKind::Seq2Point => seq2point_param_count(d, self.width, self.padded_len()),
        }
    }

    /// Lays out a batch of normalized windows for this architecture.
    pub fn prepare(&self, samples: &[&WindowSample]) -> Result<ModelInput> {
        if samples.is_empty() {
            return Err(ModelError::Contract("empty batch".into()));
        }
        if let Some(s) = samples.iter().find(|s| s.len() != self.window) {
            return Err(ModelError::Contract(format!(
                "sample window {} differs from model window {}",
                s.len(),
                self.window
            )));
        }
        if self.kind == ModelKind::Rgnn {
            return Ok(ModelInput::Graph(GraphBatch::new(samples)?));
        }
        let flats = samples
            .iter()
            .map(|s| flatten_window(s, self.k_max))
            .collect::<Result<Vec<_>>>()?;
        Ok(ModelInput::Dense(match self.kind {
            ModelKind::Mlp => mlp_input(&flats),
            _ => conv_input(&flats, self.padded_len()),
        }))
    }

    /// `(batch, 2)` normalized predictions.
    pub fn forward<'t>(
        &self,
        p: &Bound<'t>,
        input: &ModelInput,
        bn: &mut [BatchNormStats],
        train: bool,
        rng: &mut dyn RngCore,
    ) -> Result<Var<'t>> {
        match (self.kind, input) {
            (ModelKind::Rgnn, ModelInput::Graph(gb)) => {
                rgnn::forward(p, self.hidden_dim, self.dropout, self.reset_absent, gb, train, rng)
            }
            (ModelKind::Mlp, ModelInput::Dense(x)) => baselines::mlp_forward(p, p.tape().constant(x.clone())),
            (ModelKind::Cnn, ModelInput::Dense(x)) => {
                baselines::cnn_forward(p, p.tape().constant(x.clone()), bn, train)
            }
            (ModelKind::Seq2Point, ModelInput::Dense(x)) => {
                baselines::seq2point_forward(p, p.tape().constant(x.clone()))
            }
            (kind, _) => Err(ModelError::Contract(format!("input layout does not match model {kind}"))),
        }
    }
}

/// Parameters plus batch-norm running statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub spec: ModelSpec,
    pub params: ParamStore,
    /// One entry per batch-norm layer (CNN only).
    pub bn: Vec<BatchNormStats>,
}

impl Model {
    /// Fresh model: weights uniform in `±1/sqrt(fan_in)`, biases zero,
    /// forget-gate biases one.
    pub fn new<R: Rng + ?Sized>(spec: ModelSpec, rng: &mut R) -> Result<Model> {
        spec.validate()?;
        let mut params = ParamStore::new();
        let d = spec.flat_dim();
        let mut bn = Vec::new();
        match spec.kind {
            ModelKind::Rgnn => rgnn::init(&mut params, spec.hidden_dim, rng),
            ModelKind::Mlp => baselines::init_mlp(&mut params, spec.window * d, spec.width, rng),
            ModelKind::Cnn => bn = baselines::init_cnn(&mut params, d, spec.width, spec.padded_len(), rng),
            ModelKind::Seq2Point => baselines::init_seq2point(&mut params, d, spec.width, spec.padded_len(), rng),
        }
        debug_assert_eq!(params.num_scalars(), spec.param_count());
        Ok(Model { spec, params, bn })
    }

    pub fn num_params(&self) -> usize {
        self.params.num_scalars()
    }

    /// Evaluation-mode predictions in normalized units, in input order.
    pub fn predict(&self, samples: &[WindowSample], batch_size: usize) -> Result<Vec<[f64; 2]>> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut bn = self.bn.clone();
        let mut out = Vec::with_capacity(samples.len());
        for chunk in samples.chunks(batch_size.max(1)) {
            let refs: Vec<&WindowSample> = chunk.iter().collect();
            let input = self.spec.prepare(&refs)?;
            let tape = Tape::new();
            let p = self.params.bind_frozen(&tape);
            let y = self.spec.forward(&p, &input, &mut bn, false, &mut rng)?.value();
            out.extend(y.data().chunks_exact(2).map(|r| [r[0], r[1]]));
        }
        Ok(out)
    }
}
