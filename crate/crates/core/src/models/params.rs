use ndiff::{Gradients, Tape, Tensor, Var};
use rand::Rng;

use super::{ModelError, Result};

/// Named parameter tensors in creation order. Names follow `<model>/<block>/<tensor>`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, tensor: Tensor) {
        let name = name.into();
        debug_assert!(!self.names.contains(&name), "duplicate parameter {name}");
        self.names.push(name);
        self.tensors.push(tensor);
    }

    /// Weight drawn uniformly from `±1/sqrt(fan_in)`.
    pub(crate) fn push_uniform<R: Rng + ?Sized>(&mut self, name: String, shape: &[usize], fan_in: usize, rng: &mut R) {
        let bound = 1.0 / (fan_in as f64).sqrt();
        self.push(name, Tensor::uniform(shape, bound, rng));
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.position(name).map(|i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.position(name).map(|i| &mut self.tensors[i])
    }

    fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::is_finite)
    }

    /// All parameters concatenated into one vector, in creation order.
    pub fn flatten(&self) -> Tensor {
        let data: Vec<f64> = self.tensors.iter().flat_map(|t| t.data().iter().copied()).collect();
        Tensor::vector(data)
    }

    /// Overwrites every parameter from a vector laid out as by [`ParamStore::flatten`].
    pub fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_scalars() {
            return Err(ModelError::Contract(format!(
                "flat parameter vector has {} entries, expected {}",
                flat.len(),
                self.num_scalars()
            )));
        }
        let mut off = 0;
        for t in &mut self.tensors {
            let n = t.len();
            t.data_mut().copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        Ok(())
    }

    /// Records every tensor as a trainable leaf.
    pub fn bind<'t>(&self, tape: &'t Tape) -> Bound<'t> {
        Bound {
            tape,
            names: self.names.clone(),
            shapes: self.tensors.iter().map(|t| t.shape().to_vec()).collect(),
            vars: self.tensors.iter().map(|t| tape.param(t)).collect(),
        }
    }

    /// Records every tensor as a constant; for inference only.
    pub fn bind_frozen<'t>(&self, tape: &'t Tape) -> Bound<'t> {
        Bound {
            tape,
            names: self.names.clone(),
            shapes: self.tensors.iter().map(|t| t.shape().to_vec()).collect(),
            vars: self.tensors.iter().map(|t| tape.constant(t.clone())).collect(),
        }
    }

    /// Views a flat vector variable (see [`ParamStore::flatten`]) as the named tensors.
    pub fn bind_flat<'t>(&self, tape: &'t Tape, flat: Var<'t>) -> Result<Bound<'t>> {
        if flat.shape() != [self.num_scalars()] {
            return Err(ModelError::Contract(format!(
                "flat parameter variable has shape {:?}, expected [{}]",
                flat.shape(),
                self.num_scalars()
            )));
        }
        let mut off = 0;
        let mut vars = Vec::with_capacity(self.len());
        for t in &self.tensors {
            vars.push(flat.slice(0, off, t.len())?.reshape(t.shape())?);
            off += t.len();
        }
        Ok(Bound {
            tape,
            names: self.names.clone(),
            shapes: self.tensors.iter().map(|t| t.shape().to_vec()).collect(),
            vars,
        })
    }
}

/// Parameters recorded on a tape for one forward pass.
pub struct Bound<'t> {
    tape: &'t Tape,
    names: Vec<String>,
    shapes: Vec<Vec<usize>>,
    vars: Vec<Var<'t>>,
}

impl<'t> Bound<'t> {
    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn get(&self, name: &str) -> Result<Var<'t>> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.vars[i])
            .ok_or_else(|| ModelError::MissingParam(name.to_string()))
    }

    /// Gradient per parameter, in store order; zeros where the loss did not reach.
    pub fn gradients(&self, grads: &mut Gradients) -> Vec<Tensor> {
        self.vars
            .iter()
            .zip(&self.shapes)
            .map(|(&v, shape)| grads.take(v).unwrap_or_else(|| Tensor::zeros(shape)))
            .collect()
    }
}
