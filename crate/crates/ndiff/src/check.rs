//! Finite-difference verification of tape gradients.

use crate::error::{invalid, Result};
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

/// Maximum over coordinates of `|analytic - central difference| / max(1, |analytic|)`.
///
/// `f` must build a scalar from its input on the given tape.
pub fn grad_check<F>(f: F, x: &Tensor, eps: f64) -> Result<f64>
where
    F: for<'t> Fn(&'t Tape, Var<'t>) -> Result<Var<'t>>,
{
    let all: Vec<usize> = (0..x.len()).collect();
    grad_check_coords(f, x, eps, &all)
}

/// [`grad_check`] restricted to the listed coordinates of `x`.
pub fn grad_check_coords<F>(f: F, x: &Tensor, eps: f64, coords: &[usize]) -> Result<f64>
where
    F: for<'t> Fn(&'t Tape, Var<'t>) -> Result<Var<'t>>,
{
    let report = grad_check_report(f, x, eps, coords, f64::INFINITY)?;
    Ok(report.max_rel_err)
}

/// Outcome of [`grad_check_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradReport {
    /// Worst relative error over the smooth coordinates.
    pub max_rel_err: f64,
    pub checked: usize,
    /// Coordinates where the function bends sharply inside `±eps`
    /// (a ReLU kink, say); central differences are meaningless there.
    pub nonsmooth: Vec<usize>,
}

/// Like [`grad_check_coords`], but sets aside coordinates whose second
/// difference `|f(x+e) - 2f(x) + f(x-e)| / e` exceeds `kink_tol`.
pub fn grad_check_report<F>(f: F, x: &Tensor, eps: f64, coords: &[usize], kink_tol: f64) -> Result<GradReport>
where
    F: for<'t> Fn(&'t Tape, Var<'t>) -> Result<Var<'t>>,
{
    if let Some(&bad) = coords.iter().find(|&&i| i >= x.len()) {
        return Err(invalid("grad_check", format!("coordinate {bad} out of {}", x.len())));
    }
    let analytic = {
        let tape = Tape::new();
        let xv = tape.param(x);
        let y = f(&tape, xv)?;
        let grads = tape.backward(y)?;
        grads
            .get(xv)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(x.shape()))
    };
    let eval = |point: &Tensor| -> Result<f64> {
        let tape = Tape::new();
        let y = f(&tape, tape.constant(point.clone()))?;
        y.item()
            .ok_or_else(|| invalid("grad_check", "function is not scalar-valued"))
    };
    let center = if kink_tol.is_finite() { eval(x)? } else { 0.0 };
    let mut report = GradReport {
        max_rel_err: 0.0,
        checked: 0,
        nonsmooth: Vec::new(),
    };
    let mut probe = x.clone();
    for &i in coords {
        let orig = x.data()[i];
        probe.data_mut()[i] = orig + eps;
        let up = eval(&probe)?;
        probe.data_mut()[i] = orig - eps;
        let down = eval(&probe)?;
        probe.data_mut()[i] = orig;
        if kink_tol.is_finite() && (up - 2.0 * center + down).abs() / eps > kink_tol {
            report.nonsmooth.push(i);
            continue;
        }
        let numeric = (up - down) / (2.0 * eps);
        let a = analytic.data()[i];
        report.max_rel_err = report.max_rel_err.max((a - numeric).abs() / a.abs().max(1.0));
        report.checked += 1;
    }
    Ok(report)
}
