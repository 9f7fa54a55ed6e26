use ndiff::{Tensor, Var};

use crate::models::{ModelError, ParamStore};

/// Per-element smooth L1: `0.5 d²/beta` below `beta`, `|d| - 0.5 beta` above.
pub fn smooth_l1_elem(d: f64, beta: f64) -> f64 {
    if d.abs() < beta {
        0.5 * d * d / beta
    } else {
        d.abs() - 0.5 * beta
    }
}

/// Mean smooth L1 loss between equally shaped `pred` and `target`.
pub fn smooth_l1<'t>(pred: Var<'t>, target: Var<'t>, beta: f64) -> Result<Var<'t>, ModelError> {
    if beta.is_nan() || beta <= 0.0 {
        return Err(ModelError::Contract(format!("smooth L1 beta must be positive, got {beta}")));
    }
    let d = pred.sub(target)?;
    let per = d.map(|d| {
        if d.abs() < beta {
            (0.5 * d * d / beta, d / beta)
        } else {
            (d.abs() - 0.5 * beta, d.signum())
        }
    });
    Ok(per.mean()?)
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Adam moments for every parameter of a store.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(params: &ParamStore) -> Self {
        let zeros: Vec<Tensor> = params.tensors().iter().map(|t| Tensor::zeros(t.shape())).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            step: 0,
            beta1: ADAM_BETA1,
            beta2: ADAM_BETA2,
            eps: ADAM_EPS,
        }
    }

    /// One bias-corrected Adam update. Weight decay is added to the gradient
    /// (`g + wd·θ`) before the moments.
    pub fn step(&mut self, params: &mut ParamStore, grads: &[Tensor], lr: f64, weight_decay: f64) -> Result<(), ModelError> {
        if grads.len() != params.len() || self.m.len() != params.len() {
            return Err(ModelError::Contract(format!(
                "{} gradients and {} moment buffers for {} parameters",
                grads.len(),
                self.m.len(),
                params.len()
            )));
        }
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step as i32);
        let c2 = 1.0 - self.beta2.powi(self.step as i32);
        for (k, (p, g)) in params.tensors_mut().iter_mut().zip(grads).enumerate() {
            if p.shape() != g.shape() {
                return Err(ModelError::Contract(format!(
                    "gradient {k} has shape {:?}, parameter {:?}",
                    g.shape(),
                    p.shape()
                )));
            }
            let m = self.m[k].data_mut();
            let v = self.v[k].data_mut();
            for (i, (theta, &g)) in p.data_mut().iter_mut().zip(g.data()).enumerate() {
                let g = g + weight_decay * *theta;
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                *theta -= lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndiff::Tape;

    #[test]
    fn smooth_l1_values() {
        assert_eq!(smooth_l1_elem(0.0, 0.01), 0.0);
        assert!((smooth_l1_elem(0.01, 0.01) - 0.005).abs() < 1e-15);
        assert!((smooth_l1_elem(1.0, 0.01) - 0.995).abs() < 1e-15);

        let tape = Tape::new();
        let p = tape.constant(Tensor::vector(vec![1.0, 0.5]));
        let t = tape.constant(Tensor::vector(vec![0.0, 0.5]));
        let l = smooth_l1(p, t, 0.01).unwrap().item().unwrap();
        assert!((l - 0.995 / 2.0).abs() < 1e-15);
        assert!(smooth_l1(p, t, 0.0).is_err());
    }

    #[test]
    fn adam_first_step() {
        let mut params = ParamStore::new();
        params.push("w", Tensor::vector(vec![0.5, -0.25]));
        let mut state = AdamState::new(&params);
        let g = [Tensor::vector(vec![0.1, 0.0])];
        state.step(&mut params, &g, 0.001, 0.0).unwrap();
        let expected = 0.5 - 0.001 * 0.1 / (0.1 + 1e-8);
        assert!((params.tensors()[0].data()[0] - expected).abs() < 1e-12);
        assert_eq!(params.tensors()[0].data()[1], -0.25);
    }
}
