//! Operation tape and the reverse sweep over it.

use std::cell::RefCell;
use std::collections::HashMap;

use crate::error::{NdError, Result};
use crate::kernels::{col2im, gemm, im2col, Mat};
use crate::tensor::Tensor;

/// Pullback data recorded for each primitive.
pub(crate) enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    AddRow {
        x: usize,
        row: usize,
    },
    Scale(usize, f64),
    /// Elementwise map with the local derivative cached at forward time.
    Unary {
        x: usize,
        deriv: Vec<f64>,
    },
    MatMul {
        a: usize,
        b: usize,
        m: usize,
        k: usize,
        n: usize,
    },
    Conv1d {
        x: usize,
        w: usize,
        b: Option<usize>,
        batch: usize,
        c_in: usize,
        len: usize,
        c_out: usize,
        kernel: usize,
    },
    BatchNorm {
        x: usize,
        gamma: usize,
        beta: usize,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
        batch: usize,
        channels: usize,
        len: usize,
        train: bool,
    },
    /// Elementwise product with a fixed mask (dropout).
    Mask {
        x: usize,
        mask: Vec<f64>,
    },
    Sum(usize),
    Mean(usize),
    Reshape(usize),
    Concat {
        parts: Vec<usize>,
        outer: usize,
        inner: usize,
        sizes: Vec<usize>,
    },
    Slice {
        x: usize,
        outer: usize,
        inner: usize,
        full: usize,
        start: usize,
        size: usize,
    },
    GatherRows {
        x: usize,
        idx: Vec<usize>,
        width: usize,
    },
    ScatterRows {
        base: usize,
        rows: usize,
        idx: Vec<usize>,
        width: usize,
    },
    SegmentMean {
        x: usize,
        seg: Vec<usize>,
        counts: Vec<usize>,
        width: usize,
    },
}

pub(crate) struct Node {
    pub value: Tensor,
    pub op: Op,
    pub needs_grad: bool,
}

/// Records primitives in execution order; [`Tape::backward`] replays them in reverse.
///
/// A tape is single-threaded. Create one per forward/backward pass.
#[derive(Default)]
pub struct Tape {
    pub(crate) nodes: RefCell<Vec<Node>>,
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    pub(crate) tape: &'t Tape,
    pub(crate) id: usize,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var#{}{:?}", self.id, self.shape())
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Leaf that receives a gradient.
    pub fn param(&self, value: &Tensor) -> Var<'_> {
        self.leaf(value.clone(), true)
    }

    /// Leaf without gradient (data, targets, masks).
    pub fn constant(&self, value: Tensor) -> Var<'_> {
        self.leaf(value, false)
    }

    fn leaf(&self, value: Tensor, needs_grad: bool) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            op: Op::Leaf,
            needs_grad,
        });
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    pub(crate) fn push(&self, value: Tensor, parents: &[usize], op: impl FnOnce() -> Op) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        let needs_grad = parents.iter().any(|&p| nodes[p].needs_grad);
        // Pullback state is only kept when something upstream wants a gradient.
        let op = if needs_grad { op() } else { Op::Leaf };
        nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.borrow().is_empty()
    }

    /// Reverse sweep from a scalar `loss`.
    ///
    /// Gradients accumulate over fan-out. The tape is emptied afterwards, so
    /// any `Var` still held from this pass is dead.
    pub fn backward(&self, loss: Var<'_>) -> Result<Gradients> {
        assert!(std::ptr::eq(self, loss.tape), "loss belongs to another tape");
        let nodes = std::mem::take(&mut *self.nodes.borrow_mut());
        let loss_node = &nodes[loss.id];
        if loss_node.value.len() != 1 {
            return Err(NdError::NonScalarLoss(loss_node.value.shape().to_vec()));
        }
        let mut grads: Vec<Option<Vec<f64>>> = (0..nodes.len()).map(|_| None).collect();
        grads[loss.id] = Some(vec![1.0]);
        let mut leaves = HashMap::new();

        for id in (0..=loss.id).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &nodes[id];
            if !node.needs_grad {
                continue;
            }
            if let Op::Leaf = node.op {
                leaves.insert(id, Tensor::new(node.value.shape(), g)?);
                continue;
            }
            pullback(&nodes, id, &g, &mut grads);
        }
        Ok(Gradients { by_id: leaves })
    }
}

/// Gradients of the loss with respect to every parameter leaf it depends on.
#[derive(Debug, Default)]
pub struct Gradients {
    by_id: HashMap<usize, Tensor>,
}

impl Gradients {
    pub fn get(&self, var: Var<'_>) -> Option<&Tensor> {
        self.by_id.get(&var.id)
    }

    /// Removes and returns the gradient of `var`.
    pub fn take(&mut self, var: Var<'_>) -> Option<Tensor> {
        self.by_id.remove(&var.id)
    }
}

/// Adds a contribution into the gradient slot of `id`, allocating it on first use.
fn accumulate(nodes: &[Node], grads: &mut [Option<Vec<f64>>], id: usize, f: impl FnOnce(&mut [f64])) {
    if !nodes[id].needs_grad {
        return;
    }
    let slot = grads[id].get_or_insert_with(|| vec![0.0; nodes[id].value.len()]);
    f(slot);
}

fn pullback(nodes: &[Node], id: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
    let val = |i: usize| nodes[i].value.data();
    match &nodes[id].op {
        Op::Leaf => {}
        Op::Add(a, b) => {
            accumulate(nodes, grads, *a, |d| add_into(d, g));
            accumulate(nodes, grads, *b, |d| add_into(d, g));
        }
        Op::Sub(a, b) => {
            accumulate(nodes, grads, *a, |d| add_into(d, g));
            accumulate(nodes, grads, *b, |d| d.iter_mut().zip(g).for_each(|(d, g)| *d -= g));
        }
        Op::Mul(a, b) => {
            let (va, vb) = (val(*a), val(*b));
            accumulate(nodes, grads, *a, |d| {
                for ((d, g), y) in d.iter_mut().zip(g).zip(vb) {
                    *d += g * y;
                }
            });
            accumulate(nodes, grads, *b, |d| {
                for ((d, g), x) in d.iter_mut().zip(g).zip(va) {
                    *d += g * x;
                }
            });
        }
        Op::AddRow { x, row } => {
            accumulate(nodes, grads, *x, |d| add_into(d, g));
            let n = nodes[*row].value.len();
            accumulate(nodes, grads, *row, |d| {
                if n == 0 {
                    return;
                }
                for chunk in g.chunks_exact(n) {
                    add_into(d, chunk);
                }
            });
        }
        Op::Scale(x, c) => {
            accumulate(nodes, grads, *x, |d| {
                d.iter_mut().zip(g).for_each(|(d, g)| *d += c * g)
            });
        }
        Op::Unary { x, deriv } => {
            accumulate(nodes, grads, *x, |d| {
                for ((d, g), k) in d.iter_mut().zip(g).zip(deriv) {
                    *d += g * k;
                }
            });
        }
        Op::MatMul { a, b, m, k, n } => {
            let (m, k, n) = (*m, *k, *n);
            let (va, vb) = (val(*a), val(*b));
            accumulate(nodes, grads, *a, |d| {
                gemm(Mat::new(g, m, n), Mat::new(vb, k, n).t(), d, 1.0)
            });
            accumulate(nodes, grads, *b, |d| {
                gemm(Mat::new(va, m, k).t(), Mat::new(g, m, n), d, 1.0)
            });
        }
        Op::Conv1d {
            x,
            w,
            b,
            batch,
            c_in,
            len,
            c_out,
            kernel,
        } => {
            let (batch, c_in, len, c_out, kernel) = (*batch, *c_in, *len, *c_out, *kernel);
            let out_len = len + 1 - kernel;
            let patch = c_in * kernel;
            let (vx, vw) = (val(*x), val(*w));
            let mut cols = vec![0.0; patch * out_len];
            let mut dcols = vec![0.0; patch * out_len];
            let want_x = nodes[*x].needs_grad;
            let want_w = nodes[*w].needs_grad;
            let mut dw = want_w.then(|| vec![0.0; vw.len()]);
            let mut dx = want_x.then(|| vec![0.0; vx.len()]);
            for s in 0..batch {
                let gs = &g[s * c_out * out_len..(s + 1) * c_out * out_len];
                if let Some(dw) = dw.as_mut() {
                    im2col(&vx[s * c_in * len..(s + 1) * c_in * len], c_in, len, kernel, &mut cols);
                    gemm(
                        Mat::new(gs, c_out, out_len),
                        Mat::new(&cols, patch, out_len).t(),
                        dw,
                        1.0,
                    );
                }
                if let Some(dx) = dx.as_mut() {
                    gemm(
                        Mat::new(vw, c_out, patch).t(),
                        Mat::new(gs, c_out, out_len),
                        &mut dcols,
                        0.0,
                    );
                    col2im(&dcols, c_in, len, kernel, &mut dx[s * c_in * len..(s + 1) * c_in * len]);
                }
            }
            if let Some(dx) = dx {
                accumulate(nodes, grads, *x, |d| add_into(d, &dx));
            }
            if let Some(dw) = dw {
                accumulate(nodes, grads, *w, |d| add_into(d, &dw));
            }
            if let Some(b) = b {
                accumulate(nodes, grads, *b, |d| {
                    for s in 0..batch {
                        for (o, d) in d.iter_mut().enumerate() {
                            let base = (s * c_out + o) * out_len;
                            *d += g[base..base + out_len].iter().sum::<f64>();
                        }
                    }
                });
            }
        }
        Op::BatchNorm {
            x,
            gamma,
            beta,
            xhat,
            inv_std,
            batch,
            channels,
            len,
            train,
        } => {
            let (batch, channels, len) = (*batch, *channels, *len);
            let vgamma = val(*gamma);
            let count = (batch * len) as f64;
            let mut sum_g = vec![0.0; channels];
            let mut sum_gx = vec![0.0; channels];
            for s in 0..batch {
                for c in 0..channels {
                    let base = (s * channels + c) * len;
                    for i in base..base + len {
                        sum_g[c] += g[i];
                        sum_gx[c] += g[i] * xhat[i];
                    }
                }
            }
            accumulate(nodes, grads, *gamma, |d| add_into(d, &sum_gx));
            accumulate(nodes, grads, *beta, |d| add_into(d, &sum_g));
            accumulate(nodes, grads, *x, |d| {
                for s in 0..batch {
                    for c in 0..channels {
                        let base = (s * channels + c) * len;
                        let scale = vgamma[c] * inv_std[c];
                        for i in base..base + len {
                            d[i] += if *train {
                                scale * (g[i] - sum_g[c] / count - xhat[i] * sum_gx[c] / count)
                            } else {
                                scale * g[i]
                            };
                        }
                    }
                }
            });
        }
        Op::Mask { x, mask } => {
            accumulate(nodes, grads, *x, |d| {
                for ((d, g), m) in d.iter_mut().zip(g).zip(mask) {
                    *d += g * m;
                }
            });
        }
        Op::Sum(x) => {
            accumulate(nodes, grads, *x, |d| d.iter_mut().for_each(|d| *d += g[0]));
        }
        Op::Mean(x) => {
            let n = nodes[*x].value.len() as f64;
            accumulate(nodes, grads, *x, |d| d.iter_mut().for_each(|d| *d += g[0] / n));
        }
        Op::Reshape(x) => {
            accumulate(nodes, grads, *x, |d| add_into(d, g));
        }
        Op::Concat {
            parts,
            outer,
            inner,
            sizes,
        } => {
            let total: usize = sizes.iter().sum();
            let mut offset = 0;
            for (&p, &size) in parts.iter().zip(sizes) {
                accumulate(nodes, grads, p, |d| {
                    for o in 0..*outer {
                        let src = &g[(o * total + offset) * inner..(o * total + offset + size) * inner];
                        add_into(&mut d[o * size * inner..(o + 1) * size * inner], src);
                    }
                });
                offset += size;
            }
        }
        Op::Slice {
            x,
            outer,
            inner,
            full,
            start,
            size,
        } => {
            accumulate(nodes, grads, *x, |d| {
                for o in 0..*outer {
                    let dst = &mut d[(o * full + start) * inner..(o * full + start + size) * inner];
                    add_into(dst, &g[o * size * inner..(o + 1) * size * inner]);
                }
            });
        }
        Op::GatherRows { x, idx, width } => {
            let w = *width;
            accumulate(nodes, grads, *x, |d| {
                for (r, &src) in idx.iter().enumerate() {
                    add_into(&mut d[src * w..(src + 1) * w], &g[r * w..(r + 1) * w]);
                }
            });
        }
        Op::ScatterRows {
            base,
            rows,
            idx,
            width,
        } => {
            let w = *width;
            accumulate(nodes, grads, *base, |d| {
                add_into(d, g);
                for &dst in idx {
                    for (d, g) in d[dst * w..(dst + 1) * w].iter_mut().zip(&g[dst * w..(dst + 1) * w]) {
                        *d -= g;
                    }
                }
            });
            accumulate(nodes, grads, *rows, |d| {
                for (r, &dst) in idx.iter().enumerate() {
                    add_into(&mut d[r * w..(r + 1) * w], &g[dst * w..(dst + 1) * w]);
                }
            });
        }
        Op::SegmentMean {
            x,
            seg,
            counts,
            width,
        } => {
            let w = *width;
            accumulate(nodes, grads, *x, |d| {
                for (r, &s) in seg.iter().enumerate() {
                    let inv = 1.0 / counts[s] as f64;
                    for (d, g) in d[r * w..(r + 1) * w].iter_mut().zip(&g[s * w..(s + 1) * w]) {
                        *d += g * inv;
                    }
                }
            });
        }
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
}
