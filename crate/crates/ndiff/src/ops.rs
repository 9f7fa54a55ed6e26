//! Forward definitions of the differentiable primitives.

use rand::Rng;

use crate::error::{invalid, mismatch, Result};
use crate::kernels::{gelu, gemm, im2col, sigmoid, Mat};
use crate::tape::{Op, Var};
use crate::tensor::Tensor;

/// Running statistics and constants of a batch-normalization layer.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormStats {
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub eps: f64,
}

impl BatchNormStats {
    pub const DEFAULT_MOMENTUM: f64 = 0.1;
    pub const DEFAULT_EPS: f64 = 1e-10;

    pub fn new(channels: usize) -> Self {
        Self {
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            momentum: Self::DEFAULT_MOMENTUM,
            eps: Self::DEFAULT_EPS,
        }
    }
}

impl<'t> Var<'t> {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn shape(&self) -> Vec<usize> {
        self.tape.nodes.borrow()[self.id].value.shape().to_vec()
    }

    /// Copy of the current value.
    pub fn value(&self) -> Tensor {
        self.tape.nodes.borrow()[self.id].value.clone()
    }

    /// Value of a single-element variable.
    pub fn item(&self) -> Option<f64> {
        self.tape.nodes.borrow()[self.id].value.item()
    }

    fn with<R>(&self, f: impl FnOnce(&Tensor) -> R) -> R {
        f(&self.tape.nodes.borrow()[self.id].value)
    }

    fn with2<R>(&self, other: Var<'t>, f: impl FnOnce(&Tensor, &Tensor) -> R) -> R {
        let nodes = self.tape.nodes.borrow();
        f(&nodes[self.id].value, &nodes[other.id].value)
    }

    fn zip_same(
        self,
        other: Var<'t>,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Tensor> {
        self.with2(other, |a, b| {
            if a.shape() != b.shape() {
                return Err(mismatch(op, a.shape(), b.shape()));
            }
            let data = a.data().iter().zip(b.data()).map(|(x, y)| f(*x, *y)).collect();
            Tensor::new(a.shape(), data)
        })
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(self, other: Var<'t>) -> Result<Var<'t>> {
        let out = self.zip_same(other, "add", |a, b| a + b)?;
        Ok(self.tape.push(out, &[self.id, other.id], || Op::Add(self.id, other.id)))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, other: Var<'t>) -> Result<Var<'t>> {
        let out = self.zip_same(other, "sub", |a, b| a - b)?;
        Ok(self.tape.push(out, &[self.id, other.id], || Op::Sub(self.id, other.id)))
    }

    /// Elementwise (Hadamard) product.
    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, other: Var<'t>) -> Result<Var<'t>> {
        let out = self.zip_same(other, "mul", |a, b| a * b)?;
        Ok(self.tape.push(out, &[self.id, other.id], || Op::Mul(self.id, other.id)))
    }

    /// Adds `row` (length = last extent of `self`) to every row.
    pub fn add_row(self, row: Var<'t>) -> Result<Var<'t>> {
        let out = self.with2(row, |x, r| {
            let n = r.len();
            let last = x.shape().last().copied().unwrap_or(1);
            let row_like = r.ndim() == 1 || (r.ndim() == 2 && r.shape()[0] == 1);
            if !row_like || last != n {
                return Err(mismatch("add_row", x.shape(), r.shape()));
            }
            let mut data = x.data().to_vec();
            if n > 0 {
                for chunk in data.chunks_exact_mut(n) {
                    chunk.iter_mut().zip(r.data()).for_each(|(d, b)| *d += b);
                }
            }
            Tensor::new(x.shape(), data)
        })?;
        Ok(self
            .tape
            .push(out, &[self.id, row.id], || Op::AddRow { x: self.id, row: row.id }))
    }

    pub fn scale(self, c: f64) -> Var<'t> {
        let out = self.with(|x| x.map(|v| v * c));
        self.tape.push(out, &[self.id], || Op::Scale(self.id, c))
    }

    /// Elementwise map given a function returning `(value, derivative)`.
    pub fn map(self, f: impl Fn(f64) -> (f64, f64)) -> Var<'t> {
        let (out, deriv) = self.with(|x| {
            let (vals, deriv): (Vec<f64>, Vec<f64>) = x.data().iter().map(|&v| f(v)).unzip();
            (Tensor::new(x.shape(), vals).expect("same length"), deriv)
        });
        self.tape
            .push(out, &[self.id], || Op::Unary { x: self.id, deriv })
    }

    pub fn sigmoid(self) -> Var<'t> {
        self.map(|x| {
            let s = sigmoid(x);
            (s, s * (1.0 - s))
        })
    }

    pub fn tanh(self) -> Var<'t> {
        self.map(|x| {
            let t = x.tanh();
            (t, 1.0 - t * t)
        })
    }

    pub fn relu(self) -> Var<'t> {
        self.map(|x| if x > 0.0 { (x, 1.0) } else { (0.0, 0.0) })
    }

    pub fn gelu(self) -> Var<'t> {
        self.map(gelu)
    }

    /// 2-D matrix product `(m x k) . (k x n)`.
    pub fn matmul(self, other: Var<'t>) -> Result<Var<'t>> {
        let (out, m, k, n) = self.with2(other, |a, b| {
            if a.ndim() != 2 || b.ndim() != 2 || a.shape()[1] != b.shape()[0] {
                return Err(mismatch("matmul", a.shape(), b.shape()));
            }
            let (m, k, n) = (a.shape()[0], a.shape()[1], b.shape()[1]);
            let mut out = vec![0.0; m * n];
            gemm(Mat::new(a.data(), m, k), Mat::new(b.data(), k, n), &mut out, 0.0);
            Ok((Tensor::new(&[m, n], out)?, m, k, n))
        })?;
        Ok(self.tape.push(out, &[self.id, other.id], || Op::MatMul {
            a: self.id,
            b: other.id,
            m,
            k,
            n,
        }))
    }

    /// `self . weight + bias`, with `bias` broadcast over rows.
    pub fn affine(self, weight: Var<'t>, bias: Var<'t>) -> Result<Var<'t>> {
        self.matmul(weight)?.add_row(bias)
    }

    /// Valid-padding, stride-1 cross-correlation.
    ///
    /// `self`: `(batch, c_in, len)`, `weight`: `(c_out, c_in, kernel)`, `bias`: `(c_out)`.
    pub fn conv1d(self, weight: Var<'t>, bias: Option<Var<'t>>) -> Result<Var<'t>> {
        let (out, dims) = {
            let nodes = self.tape.nodes.borrow();
            let x = &nodes[self.id].value;
            let w = &nodes[weight.id].value;
            if x.ndim() != 3 || w.ndim() != 3 || x.shape()[1] != w.shape()[1] {
                return Err(mismatch("conv1d", x.shape(), w.shape()));
            }
            let (batch, c_in, len) = (x.shape()[0], x.shape()[1], x.shape()[2]);
            let (c_out, kernel) = (w.shape()[0], w.shape()[2]);
            if kernel == 0 || len < kernel {
                return Err(invalid(
                    "conv1d",
                    format!("input length {len} shorter than kernel {kernel}"),
                ));
            }
            if let Some(b) = bias {
                let b = &nodes[b.id].value;
                if b.len() != c_out {
                    return Err(mismatch("conv1d bias", w.shape(), b.shape()));
                }
            }
            let out_len = len + 1 - kernel;
            let patch = c_in * kernel;
            let mut cols = vec![0.0; patch * out_len];
            let mut out = vec![0.0; batch * c_out * out_len];
            for s in 0..batch {
                im2col(&x.data()[s * c_in * len..(s + 1) * c_in * len], c_in, len, kernel, &mut cols);
                let dst = &mut out[s * c_out * out_len..(s + 1) * c_out * out_len];
                gemm(
                    Mat::new(w.data(), c_out, patch),
                    Mat::new(&cols, patch, out_len),
                    dst,
                    0.0,
                );
                if let Some(b) = bias {
                    let b = nodes[b.id].value.data();
                    for (o, row) in dst.chunks_exact_mut(out_len).enumerate() {
                        row.iter_mut().for_each(|v| *v += b[o]);
                    }
                }
            }
            (
                Tensor::new(&[batch, c_out, out_len], out)?,
                (batch, c_in, len, c_out, kernel),
            )
        };
        let mut parents = vec![self.id, weight.id];
        parents.extend(bias.map(|b| b.id));
        let (batch, c_in, len, c_out, kernel) = dims;
        Ok(self.tape.push(out, &parents, || Op::Conv1d {
            x: self.id,
            w: weight.id,
            b: bias.map(|b| b.id),
            batch,
            c_in,
            len,
            c_out,
            kernel,
        }))
    }

    /// Batch normalization over `(batch, channels)` or `(batch, channels, len)` input.
    ///
    /// Training mode normalizes with batch statistics (biased variance) and
    /// folds them into `stats` with unbiased variance; evaluation mode uses the
    /// running statistics only.
    pub fn batch_norm(
        self,
        gamma: Var<'t>,
        beta: Var<'t>,
        stats: &mut BatchNormStats,
        train: bool,
    ) -> Result<Var<'t>> {
        let (out, xhat, inv_std, dims) = {
            let nodes = self.tape.nodes.borrow();
            let x = &nodes[self.id].value;
            let (batch, channels, len) = match *x.shape() {
                [b, c] => (b, c, 1),
                [b, c, l] => (b, c, l),
                _ => return Err(invalid("batch_norm", format!("unsupported shape {:?}", x.shape()))),
            };
            let (g, b) = (&nodes[gamma.id].value, &nodes[beta.id].value);
            if g.len() != channels || b.len() != channels || stats.running_mean.len() != channels {
                return Err(mismatch("batch_norm", x.shape(), g.shape()));
            }
            let count = batch * len;
            if train && count < 2 {
                return Err(invalid("batch_norm", "training mode needs at least two values per channel"));
            }
            let data = x.data();
            let (mean, var) = if train {
                let mut mean = vec![0.0; channels];
                let mut var = vec![0.0; channels];
                for s in 0..batch {
                    for (c, m) in mean.iter_mut().enumerate() {
                        let base = (s * channels + c) * len;
                        *m += data[base..base + len].iter().sum::<f64>();
                    }
                }
                mean.iter_mut().for_each(|m| *m /= count as f64);
                for s in 0..batch {
                    for c in 0..channels {
                        let base = (s * channels + c) * len;
                        var[c] += data[base..base + len]
                            .iter()
                            .map(|v| (v - mean[c]).powi(2))
                            .sum::<f64>();
                    }
                }
                var.iter_mut().for_each(|v| *v /= count as f64);
                let unbias = count as f64 / (count - 1) as f64;
                for c in 0..channels {
                    stats.running_mean[c] =
                        (1.0 - stats.momentum) * stats.running_mean[c] + stats.momentum * mean[c];
                    stats.running_var[c] = (1.0 - stats.momentum) * stats.running_var[c]
                        + stats.momentum * var[c] * unbias;
                }
                (mean, var)
            } else {
                (stats.running_mean.clone(), stats.running_var.clone())
            };
            let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + stats.eps).sqrt()).collect();
            let mut xhat = vec![0.0; data.len()];
            let mut out = vec![0.0; data.len()];
            for s in 0..batch {
                for c in 0..channels {
                    let base = (s * channels + c) * len;
                    for i in base..base + len {
                        xhat[i] = (data[i] - mean[c]) * inv_std[c];
                        out[i] = g.data()[c] * xhat[i] + b.data()[c];
                    }
                }
            }
            (Tensor::new(x.shape(), out)?, xhat, inv_std, (batch, channels, len))
        };
        let (batch, channels, len) = dims;
        Ok(self
            .tape
            .push(out, &[self.id, gamma.id, beta.id], || Op::BatchNorm {
                x: self.id,
                gamma: gamma.id,
                beta: beta.id,
                xhat,
                inv_std,
                batch,
                channels,
                len,
                train,
            }))
    }

    /// Inverted dropout; identity when `train` is false or `rate` is zero.
    pub fn dropout<R: Rng + ?Sized>(self, rate: f64, train: bool, rng: &mut R) -> Result<Var<'t>> {
        if !(0.0..1.0).contains(&rate) {
            return Err(invalid("dropout", format!("rate {rate} outside [0, 1)")));
        }
        if !train || rate == 0.0 {
            return Ok(self);
        }
        let keep = 1.0 / (1.0 - rate);
        let (out, mask) = self.with(|x| {
            let mask: Vec<f64> = (0..x.len())
                .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
                .collect();
            let data = x.data().iter().zip(&mask).map(|(v, m)| v * m).collect();
            (Tensor::new(x.shape(), data).expect("same length"), mask)
        });
        Ok(self
            .tape
            .push(out, &[self.id], || Op::Mask { x: self.id, mask }))
    }

    /// Sum of all elements as a scalar.
    pub fn sum(self) -> Var<'t> {
        let out = self.with(|x| Tensor::scalar(x.data().iter().sum()));
        self.tape.push(out, &[self.id], || Op::Sum(self.id))
    }

    /// Mean of all elements as a scalar. Empty input is an error.
    pub fn mean(self) -> Result<Var<'t>> {
        let out = self.with(|x| {
            if x.is_empty() {
                return Err(invalid("mean", "empty input"));
            }
            Ok(Tensor::scalar(x.data().iter().sum::<f64>() / x.len() as f64))
        })?;
        Ok(self.tape.push(out, &[self.id], || Op::Mean(self.id)))
    }

    pub fn reshape(self, shape: &[usize]) -> Result<Var<'t>> {
        let out = self.with(|x| x.clone().reshape(shape))?;
        Ok(self.tape.push(out, &[self.id], || Op::Reshape(self.id)))
    }

    /// Collapses everything after the first axis: `(b, ...)` to `(b, rest)`.
    pub fn flatten(self) -> Result<Var<'t>> {
        let shape = self.shape();
        let lead = shape.first().copied().unwrap_or(1);
        let rest = shape.iter().skip(1).product();
        self.reshape(&[lead, rest])
    }

    /// Concatenation along `axis`. All other extents must agree.
    pub fn concat(parts: &[Var<'t>], axis: usize) -> Result<Var<'t>> {
        let first = parts.first().ok_or_else(|| invalid("concat", "no inputs"))?;
        let tape = first.tape;
        let (out, outer, inner, sizes) = {
            let nodes = tape.nodes.borrow();
            let base = nodes[first.id].value.shape().to_vec();
            if axis >= base.len() {
                return Err(invalid("concat", format!("axis {axis} out of range for {base:?}")));
            }
            let mut sizes = Vec::with_capacity(parts.len());
            for p in parts {
                let s = nodes[p.id].value.shape();
                let compatible = s.len() == base.len()
                    && s.iter()
                        .zip(&base)
                        .enumerate()
                        .all(|(i, (a, b))| i == axis || a == b);
                if !compatible {
                    return Err(mismatch("concat", &base, s));
                }
                sizes.push(s[axis]);
            }
            let outer: usize = base[..axis].iter().product();
            let inner: usize = base[axis + 1..].iter().product();
            let total: usize = sizes.iter().sum();
            let mut data = Vec::with_capacity(outer * total * inner);
            for o in 0..outer {
                for (p, &size) in parts.iter().zip(&sizes) {
                    let src = nodes[p.id].value.data();
                    data.extend_from_slice(&src[o * size * inner..(o + 1) * size * inner]);
                }
            }
            let mut shape = base.clone();
            shape[axis] = total;
            (Tensor::new(&shape, data)?, outer, inner, sizes)
        };
        let ids: Vec<usize> = parts.iter().map(|p| p.id).collect();
        Ok(tape.push(out, &ids, || Op::Concat {
            parts: ids.clone(),
            outer,
            inner,
            sizes,
        }))
    }

    /// `size` consecutive entries along `axis` starting at `start`.
    pub fn slice(self, axis: usize, start: usize, size: usize) -> Result<Var<'t>> {
        let (out, outer, inner, full) = self.with(|x| {
            let shape = x.shape();
            if axis >= shape.len() || start + size > shape[axis] {
                return Err(invalid(
                    "slice",
                    format!("[{start}, {}) on axis {axis} of {shape:?}", start + size),
                ));
            }
            let outer: usize = shape[..axis].iter().product();
            let inner: usize = shape[axis + 1..].iter().product();
            let full = shape[axis];
            let mut data = Vec::with_capacity(outer * size * inner);
            for o in 0..outer {
                data.extend_from_slice(
                    &x.data()[(o * full + start) * inner..(o * full + start + size) * inner],
                );
            }
            let mut out_shape = shape.to_vec();
            out_shape[axis] = size;
            Ok((Tensor::new(&out_shape, data)?, outer, inner, full))
        })?;
        Ok(self.tape.push(out, &[self.id], || Op::Slice {
            x: self.id,
            outer,
            inner,
            full,
            start,
            size,
        }))
    }

    /// Rows `idx` of a 2-D variable, in order (repeats allowed).
    pub fn gather_rows(self, idx: &[usize]) -> Result<Var<'t>> {
        let (out, width) = self.with(|x| {
            let [rows, width] = *x.shape() else {
                return Err(invalid("gather_rows", format!("expected 2-D input, got {:?}", x.shape())));
            };
            if let Some(&bad) = idx.iter().find(|&&i| i >= rows) {
                return Err(invalid("gather_rows", format!("row {bad} out of {rows}")));
            }
            let mut data = Vec::with_capacity(idx.len() * width);
            for &i in idx {
                data.extend_from_slice(&x.data()[i * width..(i + 1) * width]);
            }
            Ok((Tensor::new(&[idx.len(), width], data)?, width))
        })?;
        Ok(self.tape.push(out, &[self.id], || Op::GatherRows {
            x: self.id,
            idx: idx.to_vec(),
            width,
        }))
    }

    /// Copy of `self` with rows `idx` replaced by the rows of `rows`. Indices must be unique.
    pub fn scatter_rows(self, idx: &[usize], rows: Var<'t>) -> Result<Var<'t>> {
        let (out, width) = self.with2(rows, |base, r| {
            let [n, width] = *base.shape() else {
                return Err(invalid("scatter_rows", format!("expected 2-D base, got {:?}", base.shape())));
            };
            if r.shape() != [idx.len(), width] {
                return Err(mismatch("scatter_rows", base.shape(), r.shape()));
            }
            let mut seen = vec![false; n];
            let mut data = base.data().to_vec();
            for (k, &i) in idx.iter().enumerate() {
                if i >= n || std::mem::replace(&mut seen[i], true) {
                    return Err(invalid("scatter_rows", format!("row index {i} invalid or repeated")));
                }
                data[i * width..(i + 1) * width].copy_from_slice(&r.data()[k * width..(k + 1) * width]);
            }
            Ok((Tensor::new(base.shape(), data)?, width))
        })?;
        Ok(self.tape.push(out, &[self.id, rows.id], || Op::ScatterRows {
            base: self.id,
            rows: rows.id,
            idx: idx.to_vec(),
            width,
        }))
    }

    /// Mean of the rows assigned to each of `segments` groups; empty groups give zeros.
    pub fn segment_mean(self, seg: &[usize], segments: usize) -> Result<Var<'t>> {
        let (out, counts, width) = self.with(|x| {
            let [rows, width] = *x.shape() else {
                return Err(invalid("segment_mean", format!("expected 2-D input, got {:?}", x.shape())));
            };
            if seg.len() != rows {
                return Err(invalid("segment_mean", format!("{} labels for {rows} rows", seg.len())));
            }
            let mut counts = vec![0usize; segments];
            let mut data = vec![0.0; segments * width];
            for (r, &s) in seg.iter().enumerate() {
                if s >= segments {
                    return Err(invalid("segment_mean", format!("segment {s} out of {segments}")));
                }
                counts[s] += 1;
                for (d, v) in data[s * width..(s + 1) * width]
                    .iter_mut()
                    .zip(&x.data()[r * width..(r + 1) * width])
                {
                    *d += v;
                }
            }
            for (s, &c) in counts.iter().enumerate() {
                if c > 0 {
                    data[s * width..(s + 1) * width]
                        .iter_mut()
                        .for_each(|d| *d /= c as f64);
                }
            }
            Ok((Tensor::new(&[segments, width], data)?, counts, width))
        })?;
        Ok(self.tape.push(out, &[self.id], || Op::SegmentMean {
            x: self.id,
            seg: seg.to_vec(),
            counts,
            width,
        }))
    }
}
