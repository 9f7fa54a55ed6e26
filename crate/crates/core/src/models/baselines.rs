//! Time-series baselines: a one-hidden-layer MLP, a four-block CNN and seq2point.

use ndiff::{BatchNormStats, Tensor, Var};
use rand::Rng;

use super::params::{Bound, ParamStore};
use super::{ModelError, Result};
use crate::graph::WindowSample;

/// Per-epoch columns per satellite slot: snr, azimuth, elevation, visible flag.
pub const SLOT_WIDTH: usize = 4;
/// Minimum time length fed to the conv stacks.
pub const CONV_MIN_LEN: usize = 40;
pub const CNN_BLOCKS: usize = 4;
pub const CNN_KERNEL: usize = 10;
/// `(channels, kernel)` of the seq2point conv stack.
pub const SEQ2POINT_CONVS: [(usize, usize); 5] = [(30, 10), (30, 8), (40, 6), (50, 5), (50, 5)];

/// Columns of the flat view for `k_max` satellite slots.
pub fn flat_dim(k_max: usize) -> usize {
    2 + SLOT_WIDTH * k_max
}

/// `L × D` multivariate view of a window.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatWindow {
    pub rows: usize,
    pub cols: usize,
    /// Row-major, one row per epoch.
    pub data: Vec<f64>,
}

/// Lays a window out as `[lat, lon, (snr, az, el, visible) × k_max]` per epoch.
///
/// A satellite's slot is its rank in the run's sorted satellite set, so it
/// stays put for the whole run.
pub fn flatten_window(sample: &WindowSample, k_max: usize) -> Result<FlatWindow> {
    let cols = flat_dim(k_max);
    let rows = sample.len();
    let universe = &sample.meta.satellites;
    let mut data = vec![0.0; rows * cols];
    for (t, snap) in sample.snapshots.iter().enumerate() {
        let row = &mut data[t * cols..(t + 1) * cols];
        row[..2].copy_from_slice(&snap.recv_feat);
        for (id, feat) in snap.sat_ids.iter().zip(&snap.sat_feats) {
            let slot = universe
                .binary_search(id)
                .map_err(|_| ModelError::Contract(format!("satellite {id} missing from the run's satellite set")))?;
            if slot >= k_max {
                return Err(ModelError::Contract(format!(
                    "satellite {id} needs slot {slot}, only {k_max} available"
                )));
            }
            let base = 2 + SLOT_WIDTH * slot;
            row[base..base + 3].copy_from_slice(feat);
            row[base + 3] = 1.0;
        }
    }
    Ok(FlatWindow { rows, cols, data })
}

/// Time length after right zero-padding for the conv stacks.
pub fn conv_len(window: usize) -> usize {
    window.max(CONV_MIN_LEN)
}

/// `(batch, L·D)` input for the MLP.
pub fn mlp_input(flats: &[FlatWindow]) -> Tensor {
    let width = flats[0].rows * flats[0].cols;
    let data = flats.iter().flat_map(|f| f.data.iter().copied()).collect();
    Tensor::new(&[flats.len(), width], data).expect("uniform windows")
}

/// `(batch, D, P)` channels-first input, time axis zero-padded on the right to `P`.
pub fn conv_input(flats: &[FlatWindow], padded: usize) -> Tensor {
    let (rows, cols) = (flats[0].rows, flats[0].cols);
    let mut data = vec![0.0; flats.len() * cols * padded];
    for (b, f) in flats.iter().enumerate() {
        let dst = &mut data[b * cols * padded..(b + 1) * cols * padded];
        for t in 0..rows {
            for c in 0..cols {
                dst[c * padded + t] = f.data[t * cols + c];
            }
        }
    }
    Tensor::new(&[flats.len(), cols, padded], data).expect("sized")
}

pub(crate) fn init_mlp<R: Rng + ?Sized>(store: &mut ParamStore, input: usize, width: usize, rng: &mut R) {
    store.push_uniform("mlp/hidden/weight".into(), &[input, width], input, rng);
    store.push("mlp/hidden/bias", Tensor::zeros(&[width]));
    store.push_uniform("mlp/out/weight".into(), &[width, 2], width, rng);
    store.push("mlp/out/bias", Tensor::zeros(&[2]));
}

pub fn mlp_param_count(input: usize, width: usize) -> usize {
    input * width + width + width * 2 + 2
}

pub(crate) fn mlp_forward<'t>(p: &Bound<'t>, x: Var<'t>) -> Result<Var<'t>> {
    let h = x
        .affine(p.get("mlp/hidden/weight")?, p.get("mlp/hidden/bias")?)?
        .relu();
    Ok(h.affine(p.get("mlp/out/weight")?, p.get("mlp/out/bias")?)?)
}

pub(crate) fn init_cnn<R: Rng + ?Sized>(
    store: &mut ParamStore,
    channels_in: usize,
    width: usize,
    padded: usize,
    rng: &mut R,
) -> Vec<BatchNormStats> {
    let mut c_in = channels_in;
    for k in 0..CNN_BLOCKS {
        store.push_uniform(format!("cnn/block{k}/weight"), &[width, c_in, CNN_KERNEL], c_in * CNN_KERNEL, rng);
        store.push(format!("cnn/block{k}/bias"), Tensor::zeros(&[width]));
        store.push(format!("cnn/block{k}/gamma"), Tensor::full(&[width], 1.0));
        store.push(format!("cnn/block{k}/beta"), Tensor::zeros(&[width]));
        c_in = width;
    }
    let flat = width * cnn_out_len(padded);
    store.push_uniform("cnn/out/weight".into(), &[flat, 2], flat, rng);
    store.push("cnn/out/bias", Tensor::zeros(&[2]));
    (0..CNN_BLOCKS).map(|_| BatchNormStats::new(width)).collect()
}

pub fn cnn_out_len(padded: usize) -> usize {
    padded - CNN_BLOCKS * (CNN_KERNEL - 1)
}

pub fn cnn_param_count(channels_in: usize, width: usize, padded: usize) -> usize {
    let block = |c_in: usize| width * c_in * CNN_KERNEL + 3 * width;
    block(channels_in) + (CNN_BLOCKS - 1) * block(width) + width * cnn_out_len(padded) * 2 + 2
}

pub(crate) fn cnn_forward<'t>(
    p: &Bound<'t>,
    x: Var<'t>,
    bn: &mut [BatchNormStats],
    train: bool,
) -> Result<Var<'t>> {
    if bn.len() != CNN_BLOCKS {
        return Err(ModelError::Contract(format!("expected {CNN_BLOCKS} batch-norm states, got {}", bn.len())));
    }
    let mut h = x;
    for (k, stats) in bn.iter_mut().enumerate() {
        let name = |t: &str| format!("cnn/block{k}/{t}");
        h = h
            .conv1d(p.get(&name("weight"))?, Some(p.get(&name("bias"))?))?
            .batch_norm(p.get(&name("gamma"))?, p.get(&name("beta"))?, stats, train)?
            .gelu();
    }
    Ok(h.flatten()?.affine(p.get("cnn/out/weight")?, p.get("cnn/out/bias")?)?)
}

pub(crate) fn init_seq2point<R: Rng + ?Sized>(
    store: &mut ParamStore,
    channels_in: usize,
    width: usize,
    padded: usize,
    rng: &mut R,
) {
    let mut c_in = channels_in;
    for (k, (c_out, kernel)) in SEQ2POINT_CONVS.into_iter().enumerate() {
        store.push_uniform(format!("seq2point/conv{k}/weight"), &[c_out, c_in, kernel], c_in * kernel, rng);
        store.push(format!("seq2point/conv{k}/bias"), Tensor::zeros(&[c_out]));
        c_in = c_out;
    }
    let flat = c_in * seq2point_out_len(padded);
    store.push_uniform("seq2point/dense/weight".into(), &[flat, width], flat, rng);
    store.push("seq2point/dense/bias", Tensor::zeros(&[width]));
    store.push_uniform("seq2point/out/weight".into(), &[width, 2], width, rng);
    store.push("seq2point/out/bias", Tensor::zeros(&[2]));
}

pub fn seq2point_out_len(padded: usize) -> usize {
    SEQ2POINT_CONVS.iter().fold(padded, |len, &(_, k)| len + 1 - k)
}

pub fn seq2point_param_count(channels_in: usize, width: usize, padded: usize) -> usize {
    let mut c_in = channels_in;
    let mut total = 0;
    for (c_out, k) in SEQ2POINT_CONVS {
        total += c_out * c_in * k + c_out;
        c_in = c_out;
    }
    let flat = c_in * seq2point_out_len(padded);
    total + flat * width + width + width * 2 + 2
}

pub(crate) fn seq2point_forward<'t>(p: &Bound<'t>, x: Var<'t>) -> Result<Var<'t>> {
    let mut h = x;
    for k in 0..SEQ2POINT_CONVS.len() {
        h = h
            .conv1d(
                p.get(&format!("seq2point/conv{k}/weight"))?,
                Some(p.get(&format!("seq2point/conv{k}/bias"))?),
            )?
            .relu();
    }
    let h = h
        .flatten()?
        .affine(p.get("seq2point/dense/weight")?, p.get("seq2point/dense/bias")?)?
        .relu();
    Ok(h.affine(p.get("seq2point/out/weight")?, p.get("seq2point/out/bias")?)?)
}
