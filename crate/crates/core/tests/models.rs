use std::collections::BTreeMap;
use std::sync::Arc;

use jamgraph::graph::{GraphSnapshot, RunMeta, WindowSample};
use jamgraph::models::*;
use jamgraph::sim::{Constellation, JamMode, Receiver, SatId};
use jamgraph::trainer::smooth_l1;
use ndiff::{grad_check_report, GradReport, NdError, Tape, Tensor};
use proptest::prelude::*;
use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sat(prn: u8) -> SatId {
    SatId {
        constellation: Constellation::Gps,
        prn,
    }
}

fn snapshot(t: usize, recv: [f64; 2], sats: &[(u8, [f64; 3])]) -> GraphSnapshot {
    GraphSnapshot {
        t,
        recv_feat: recv,
        sat_ids: sats.iter().map(|s| sat(s.0)).collect(),
        sat_feats: sats.iter().map(|s| s.1).collect(),
        deviation: [0.0, 0.0],
    }
}

fn meta(universe: Vec<SatId>) -> Arc<RunMeta> {
    Arc::new(RunMeta {
        receiver: Receiver::Gp01,
        mode: JamMode::Cw,
        power_dbm: -45.0,
        repetition: 0,
        satellites: universe,
    })
}

/// Random window over satellites GPS-1..=k, each present with probability 0.7.
fn random_sample(rng: &mut ChaCha8Rng, len: usize, k: u8) -> WindowSample {
    let snapshots = (0..len)
        .map(|t| {
            let mut sats: Vec<(u8, [f64; 3])> = Vec::new();
            for p in 1..=k {
                if rng.random::<f64>() < 0.7 {
                    sats.push((p, [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)]));
                }
            }
            snapshot(t, [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)], &sats)
        })
        .collect();
    WindowSample {
        snapshots,
        target: [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)],
        meta: meta((1..=k).map(sat).collect()),
    }
}

fn randomize(store: &mut ParamStore, rng: &mut ChaCha8Rng, scale: f64) {
    for t in store.tensors_mut() {
        for v in t.data_mut() {
            *v = rng.random_range(-scale..scale);
        }
    }
}

fn zero_all(store: &mut ParamStore) {
    for t in store.tensors_mut() {
        t.data_mut().fill(0.0);
    }
}

fn rgnn_model(hidden: usize, seed: u64) -> Model {
    let mut spec = ModelSpec::new(ModelKind::Rgnn, 2, 3);
    spec.hidden_dim = hidden;
    Model::new(spec, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

// ----------------------------------------------------------------- scalar oracle

/// Parameter value used by the hand oracle: a fixed, irregular pattern.
fn oracle_value(gate: usize, tensor: usize, idx: usize) -> f64 {
    let k = (gate * 97 + tensor * 31 + idx * 7) as f64;
    0.6 * (0.37 * k + 0.11).sin()
}

const TENSORS: [&str; 8] = [
    "w_recv",
    "w_sat",
    "m_sat_to_recv",
    "m_recv_to_sat",
    "u_recv",
    "u_sat",
    "b_recv",
    "b_sat",
];

fn oracle_params(hidden: usize) -> ParamStore {
    let mut model = rgnn_model(hidden, 0);
    for (g, gate) in ["i", "f", "o", "c"].iter().enumerate() {
        for (ti, tensor) in TENSORS.iter().enumerate() {
            let t = model.params.get_mut(&format!("rgnn/gate_{gate}/{tensor}")).unwrap();
            for (i, v) in t.data_mut().iter_mut().enumerate() {
                *v = oracle_value(g, ti, i);
            }
        }
    }
    model.params
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Plain-arithmetic LSTM update for a receiver linked to one satellite.
/// Returns `(h_r, c_r, h_s, c_s)`.
#[allow(clippy::type_complexity)]
fn scalar_step(
    hd: usize,
    x_r: [f64; 2],
    x_s: [f64; 3],
    (h_r, c_r, h_s, c_s): (&[f64], &[f64], &[f64], &[f64]),
) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    // Row-major (rows, hd) entry of tensor `ti` of gate `g`.
    let w = |g: usize, ti: usize, row: usize, col: usize| oracle_value(g, ti, row * hd + col);
    let mut pre_r = vec![[0.0; 4]; hd];
    let mut pre_s = vec![[0.0; 4]; hd];
    for g in 0..4 {
        for j in 0..hd {
            let mut a = oracle_value(g, 6, j);
            for (k, x) in x_r.iter().enumerate() {
                a += x * w(g, 0, k, j);
            }
            for k in 0..hd {
                a += h_s[k] * w(g, 2, k, j) + h_r[k] * w(g, 4, k, j);
            }
            pre_r[j][g] = a;

            let mut a = oracle_value(g, 7, j);
            for (k, x) in x_s.iter().enumerate() {
                a += x * w(g, 1, k, j);
            }
            for k in 0..hd {
                a += h_r[k] * w(g, 3, k, j) + h_s[k] * w(g, 5, k, j);
            }
            pre_s[j][g] = a;
        }
    }
    let update = |pre: &[[f64; 4]], c: &[f64]| {
        let mut h_new = vec![0.0; hd];
        let mut c_new = vec![0.0; hd];
        for j in 0..hd {
            let (i, f, o, g) = (sigmoid(pre[j][0]), sigmoid(pre[j][1]), sigmoid(pre[j][2]), pre[j][3].tanh());
            c_new[j] = f * c[j] + i * g;
            h_new[j] = o * c_new[j].tanh();
        }
        (h_new, c_new)
    };
    let (hr, cr) = update(&pre_r, c_r);
    let (hs, cs) = update(&pre_s, c_s);
    (hr, cr, hs, cs)
}

#[test]
fn cell_matches_scalar_oracle() {
    let hd = 2;
    let params = oracle_params(hd);
    let x_r = [0.3, -0.7];
    let x_s = [1.1, -0.4, 0.25];
    let snap = snapshot(0, x_r, &[(5, x_s)]);

    let prev = HiddenState {
        receiver: Some(NodeState {
            h: vec![0.2, -0.1],
            c: vec![0.5, 0.3],
        }),
        satellites: BTreeMap::from([(
            sat(5),
            NodeState {
                h: vec![-0.3, 0.4],
                c: vec![0.1, -0.6],
            },
        )]),
    };
    let got = gclstm_cell_step(&snap, &prev, &params, hd).unwrap();
    let (hr, cr, hs, cs) = scalar_step(hd, x_r, x_s, (&[0.2, -0.1], &[0.5, 0.3], &[-0.3, 0.4], &[0.1, -0.6]));
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12);
    let recv = got.receiver.as_ref().unwrap();
    assert!(close(&recv.h, &hr) && close(&recv.c, &cr), "{recv:?} vs {hr:?} {cr:?}");
    let s = &got.satellites[&sat(5)];
    assert!(close(&s.h, &hs) && close(&s.c, &cs));

    // Two chained steps from an empty state.
    let snap2 = snapshot(1, [-0.2, 0.9], &[(5, [0.0, 0.8, -1.2])]);
    let first = gclstm_cell_step(&snap, &HiddenState::default(), &params, hd).unwrap();
    let second = gclstm_cell_step(&snap2, &first, &params, hd).unwrap();
    let z = [0.0; 2];
    let (hr1, cr1, hs1, cs1) = scalar_step(hd, x_r, x_s, (&z, &z, &z, &z));
    let (hr2, cr2, _, _) = scalar_step(hd, [-0.2, 0.9], [0.0, 0.8, -1.2], (&hr1, &cr1, &hs1, &cs1));
    let recv = second.receiver.unwrap();
    assert!(close(&recv.h, &hr2) && close(&recv.c, &cr2));
}

#[test]
fn zero_parameter_cell() {
    let mut params = oracle_params(3);
    zero_all(&mut params);
    let snap = snapshot(0, [1.0, 2.0], &[(1, [0.5, 0.5, 0.5])]);
    let out = gclstm_cell_step(&snap, &HiddenState::default(), &params, 3).unwrap();
    assert_eq!(out.receiver.as_ref().unwrap().h, vec![0.0; 3]);
    assert_eq!(out.receiver.unwrap().c, vec![0.0; 3]);

    let state = HiddenState {
        receiver: Some(NodeState {
            h: vec![0.0; 3],
            c: vec![1.0; 3],
        }),
        satellites: BTreeMap::new(),
    };
    let out = gclstm_cell_step(&snap, &state, &params, 3).unwrap();
    let r = out.receiver.unwrap();
    assert!(r.c.iter().all(|&c| (c - 0.5).abs() < 1e-15));
    assert!(r.h.iter().all(|&h| (h - 0.5 * 0.5f64.tanh()).abs() < 1e-15));
    assert!((0.5 * 0.5f64.tanh() - 0.231).abs() < 1e-3);
}

#[test]
fn absent_satellites_keep_their_state() {
    let params = oracle_params(2);
    let kept = NodeState {
        h: vec![0.7, -0.2],
        c: vec![0.3, 0.9],
    };
    let state = HiddenState {
        receiver: None,
        satellites: BTreeMap::from([(sat(9), kept.clone())]),
    };
    let out = gclstm_cell_step(&snapshot(0, [0.0, 0.0], &[(2, [0.1, 0.2, 0.3])]), &state, &params, 2).unwrap();
    assert_eq!(out.satellites[&sat(9)], kept);
    assert!(out.satellites.contains_key(&sat(2)));
    let bad = gclstm_cell_step(&snapshot(0, [0.0, 0.0], &[]), &state, &params, 3);
    assert!(bad.is_err());
}

// ----------------------------------------------------------------- forward passes

#[test]
fn zero_parameters_predict_the_output_bias() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sample = random_sample(&mut rng, 10, 3);
    for kind in ModelKind::ALL {
        let mut spec = ModelSpec::new(kind, 10, 3);
        spec.hidden_dim = 4;
        spec.width = 8;
        let mut model = Model::new(spec, &mut rng).unwrap();
        zero_all(&mut model.params);
        let bias_name = match kind {
            ModelKind::Rgnn => "rgnn/readout/bias".to_string(),
            other => format!("{other}/out/bias"),
        };
        model.params.get_mut(&bias_name).unwrap().data_mut().copy_from_slice(&[0.25, -1.5]);
        if kind == ModelKind::Cnn {
            // Batch norm of a constant map is zero, so the readout sees zeros.
            for g in 0..CNN_BLOCKS {
                model.params.get_mut(&format!("cnn/block{g}/gamma")).unwrap().data_mut().fill(0.0);
            }
        }
        let pred = model.predict(std::slice::from_ref(&sample), 8).unwrap();
        assert_eq!(pred, vec![[0.25, -1.5]], "{kind}");
    }
}

#[test]
fn eval_mode_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let samples: Vec<WindowSample> = (0..4).map(|_| random_sample(&mut rng, 10, 3)).collect();
    for kind in ModelKind::ALL {
        let mut spec = ModelSpec::new(kind, 10, 3);
        spec.hidden_dim = 8;
        spec.width = 8;
        let model = Model::new(spec, &mut rng).unwrap();
        let a = model.predict(&samples, 3).unwrap();
        let b = model.predict(&samples, 3).unwrap();
        assert_eq!(a, b, "{kind}");
        // Batching does not change eval-mode predictions beyond rounding.
        let c = model.predict(&samples, 1).unwrap();
        for (x, y) in a.iter().zip(&c) {
            assert!((x[0] - y[0]).abs() < 1e-12 && (x[1] - y[1]).abs() < 1e-12, "{kind}");
        }
    }
}

#[test]
fn batched_rgnn_agrees_with_the_cell() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let model = rgnn_model(4, 8);
    let mut spec = model.spec;
    spec.window = 6;
    let model = Model { spec, ..model };
    let samples: Vec<WindowSample> = (0..3).map(|_| random_sample(&mut rng, 6, 4)).collect();
    let batched = model.predict(&samples, 3).unwrap();
    let w = model.params.get("rgnn/readout/weight").unwrap().data().to_vec();
    let b = model.params.get("rgnn/readout/bias").unwrap().data().to_vec();
    for (s, got) in samples.iter().zip(&batched) {
        let mut state = HiddenState::default();
        for snap in &s.snapshots {
            state = gclstm_cell_step(snap, &state, &model.params, 4).unwrap();
        }
        let h = state.receiver.unwrap().h;
        for o in 0..2 {
            let y: f64 = b[o] + (0..4).map(|k| h[k] * w[k * 2 + o]).sum::<f64>();
            assert!((y - got[o]).abs() < 1e-12);
        }
    }
}

#[test]
fn reset_flag_changes_flickering_windows_only() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let carry = rgnn_model(4, 2);
    let mut spec = carry.spec;
    spec.window = 3;
    let carry = Model { spec, ..carry };
    let mut reset = carry.clone();
    reset.spec.reset_absent = true;

    let steady = WindowSample {
        snapshots: (0..3).map(|t| snapshot(t, [0.1, 0.2], &[(1, [0.5, -0.5, 1.0])])).collect(),
        target: [0.0, 0.0],
        meta: meta(vec![sat(1)]),
    };
    assert_eq!(carry.predict(std::slice::from_ref(&steady), 1).unwrap(), reset.predict(&[steady], 1).unwrap());

    let flicker = WindowSample {
        snapshots: vec![
            snapshot(0, [0.1, 0.2], &[(1, [0.5, -0.5, 1.0])]),
            snapshot(1, [0.1, 0.2], &[]),
            snapshot(2, [0.1, 0.2], &[(1, [0.5, -0.5, 1.0])]),
        ],
        target: [0.0, 0.0],
        meta: meta(vec![sat(1)]),
    };
    let _ = &mut rng;
    assert_ne!(carry.predict(std::slice::from_ref(&flicker), 1).unwrap(), reset.predict(&[flicker], 1).unwrap());
}

// ----------------------------------------------------------------- flat view

#[test]
fn flatten_window_layout() {
    let s = WindowSample {
        snapshots: vec![
            snapshot(0, [0.5, -0.5], &[]),
            snapshot(1, [0.1, 0.2], &[(7, [1.0, 2.0, 3.0]), (2, [4.0, 5.0, 6.0])]),
        ],
        target: [0.0, 0.0],
        meta: meta(vec![sat(2), sat(4), sat(7)]),
    };
    let f = flatten_window(&s, 3).unwrap();
    assert_eq!((f.rows, f.cols), (2, 14));
    assert_eq!(&f.data[..14], &[0.5, -0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    assert_eq!(
        &f.data[14..],
        &[0.1, 0.2, 4.0, 5.0, 6.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 2.0, 3.0, 1.0]
    );
    let flags: f64 = (0..3).map(|k| f.data[14 + 2 + 4 * k + 3]).sum();
    assert_eq!(flags, 2.0);
    assert_eq!(flatten_window(&s, 3).unwrap(), f);
    assert!(flatten_window(&s, 2).is_err());
}

// ----------------------------------------------------------------- sizes

#[test]
fn parameter_counts_match_closed_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for (kind, window, k_max, hidden, width) in [
        (ModelKind::Rgnn, 10, 20, 16, 256),
        (ModelKind::Rgnn, 10, 20, 64, 256),
        (ModelKind::Mlp, 10, 20, 256, 256),
        (ModelKind::Mlp, 5, 3, 256, 8),
        (ModelKind::Cnn, 10, 20, 256, 256),
        (ModelKind::Cnn, 56, 3, 256, 8),
        (ModelKind::Seq2Point, 10, 32, 256, 256),
        (ModelKind::Seq2Point, 70, 3, 256, 8),
    ] {
        let mut spec = ModelSpec::new(kind, window, k_max);
        spec.hidden_dim = hidden;
        spec.width = width;
        let model = Model::new(spec, &mut rng).unwrap();
        assert_eq!(model.num_params(), spec.param_count(), "{kind}");
    }
    assert_eq!(rgnn_param_count(2), 16 * 4 + 60 + 2);
    // Default sizes with 20 slots (D = 82).
    assert_eq!(flat_dim(20), 82);
    assert_eq!(mlp_param_count(820, 256), 820 * 256 + 256 + 512 + 2);
    assert_eq!(cnn_out_len(40), 4);
    assert_eq!(cnn_param_count(82, 256, 40), (256 * 82 * 10 + 768) + 3 * (256 * 256 * 10 + 768) + 1024 * 2 + 2);
}

#[test]
fn seq2point_length_arithmetic() {
    let mut len = 40;
    let mut seen = vec![len];
    for (_, k) in SEQ2POINT_CONVS {
        len = len + 1 - k;
        seen.push(len);
    }
    assert_eq!(seen, vec![40, 31, 24, 19, 15, 11]);
    assert_eq!(seq2point_out_len(40), 11);
    assert_eq!(conv_len(10), 40);
    assert_eq!(conv_len(140), 140);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let model = Model::new(ModelSpec::new(ModelKind::Seq2Point, 10, 3), &mut rng).unwrap();
    assert_eq!(model.params.get("seq2point/dense/weight").unwrap().shape(), &[550, 256]);
}

// ----------------------------------------------------------------- gradients

fn as_nd(e: ModelError) -> NdError {
    match e {
        ModelError::Tensor(t) => t,
        other => panic!("{other}"),
    }
}

/// Relative error of a full forward + smooth L1 pass over a subset of parameters.
///
/// ReLU networks are piecewise smooth; coordinates whose `±eps` probe straddles
/// a kink are reported separately rather than compared.
fn model_grad_error(kind: ModelKind, seed: u64, max_coords: usize) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = ModelSpec::new(kind, 5, 3);
    spec.hidden_dim = 4;
    spec.width = 8;
    let mut model = Model::new(spec, &mut rng).unwrap();
    randomize(&mut model.params, &mut rng, 0.5);
    let samples: Vec<WindowSample> = (0..3).map(|_| random_sample(&mut rng, 5, 3)).collect();
    let refs: Vec<&WindowSample> = samples.iter().collect();
    let input = spec.prepare(&refs).unwrap();
    let targets = Tensor::new(&[3, 2], samples.iter().flat_map(|s| s.target).collect()).unwrap();
    let x = model.params.flatten();
    let n = x.len();
    let coords: Vec<usize> = if n <= max_coords {
        (0..n).collect()
    } else {
        sample_indices(&mut rng, n, max_coords).into_vec()
    };
    let store = model.params.clone();
    let bn = model.bn.clone();
    grad_check_report(
        |tape: &Tape, flat| {
            let p = store.bind_flat(tape, flat).map_err(as_nd)?;
            let mut bn = bn.clone();
            let mut drop_rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd0);
            let pred = spec.forward(&p, &input, &mut bn, true, &mut drop_rng).map_err(as_nd)?;
            smooth_l1(pred, tape.constant(targets.clone()), 1.0).map_err(as_nd)
        },
        &x,
        1e-5,
        &coords,
        1e-3,
    )
    .unwrap()
}

#[test]
fn rgnn_gradients() {
    for seed in 0..20 {
        let r = model_grad_error(ModelKind::Rgnn, seed, usize::MAX);
        assert!(r.nonsmooth.is_empty(), "seed {seed}: {r:?}");
        assert!(r.max_rel_err < 1e-4, "seed {seed}: {r:?}");
    }
}

#[test]
fn baseline_gradients() {
    for kind in [ModelKind::Mlp, ModelKind::Cnn, ModelKind::Seq2Point] {
        let mut skipped = 0;
        for seed in 0..20 {
            let r = model_grad_error(kind, 100 + seed, 120);
            assert!(r.max_rel_err < 1e-4, "{kind} seed {seed}: {r:?}");
            skipped += r.nonsmooth.len();
        }
        assert!(skipped <= 5, "{kind}: {skipped} of 2400 probes straddled a kink");
    }
}

// ----------------------------------------------------------------- checkpoints

#[test]
fn checkpoint_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let dir = tempfile::tempdir().unwrap();
    for kind in ModelKind::ALL {
        let mut spec = ModelSpec::new(kind, 10, 3);
        spec.hidden_dim = 4;
        spec.width = 8;
        let mut model = Model::new(spec, &mut rng).unwrap();
        randomize(&mut model.params, &mut rng, 3.0);
        for bn in &mut model.bn {
            bn.running_mean.iter_mut().for_each(|v| *v = rng.random());
        }
        let path = dir.path().join(format!("{kind}.ckpt"));
        model.save(&path).unwrap();
        let back = Model::load(&path).unwrap();
        assert_eq!(back, model, "{kind}");
        assert_eq!(back.to_checkpoint(), model.to_checkpoint());
    }
    let text = Model::new(ModelSpec::new(ModelKind::Mlp, 10, 3), &mut rng).unwrap().to_checkpoint();
    let broken = text.replacen("0x", "zz", 1);
    assert!(matches!(Model::from_checkpoint(&broken), Err(ModelError::Checkpoint { .. })));
    let wrong_spec = text.replace("#width=256", "#width=16");
    assert!(Model::from_checkpoint(&wrong_spec).is_err());
}

// ----------------------------------------------------------------- properties

fn random_snapshot(rng: &mut ChaCha8Rng, max_sats: usize) -> GraphSnapshot {
    let n = rng.random_range(0..=max_sats);
    let prns = sample_indices(rng, 32, n).into_vec();
    let sats: Vec<(u8, [f64; 3])> = prns
        .into_iter()
        .map(|p| (p as u8 + 1, [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]))
        .collect();
    snapshot(0, [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)], &sats)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gates_stay_in_range(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = rgnn_model(4, seed).params;
        randomize(&mut params, &mut rng, 3.0);
        let snap = random_snapshot(&mut rng, 12);
        let out = gclstm_cell_step(&snap, &HiddenState::default(), &params, 4).unwrap();
        // From a zero state c' = i ⊙ c̃, so |c'| < 1 and |h'| < 1.
        let r = out.receiver.unwrap();
        prop_assert!(r.c.iter().all(|c| c.abs() < 1.0));
        prop_assert!(r.h.iter().all(|h| h.abs() < 1.0));
        for s in out.satellites.values() {
            prop_assert!(s.c.iter().chain(&s.h).all(|v| v.abs() < 1.0));
        }
    }

    #[test]
    fn receiver_update_is_permutation_equivariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = rgnn_model(4, seed).params;
        randomize(&mut params, &mut rng, 1.0);
        let snap = random_snapshot(&mut rng, 20);
        let mut perm: Vec<usize> = (0..snap.num_sats()).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
        let shuffled = GraphSnapshot {
            sat_ids: perm.iter().map(|&i| snap.sat_ids[i]).collect(),
            sat_feats: perm.iter().map(|&i| snap.sat_feats[i]).collect(),
            ..snap.clone()
        };
        let a = gclstm_cell_step(&snap, &HiddenState::default(), &params, 4).unwrap();
        let b = gclstm_cell_step(&shuffled, &HiddenState::default(), &params, 4).unwrap();
        let (ra, rb) = (a.receiver.unwrap(), b.receiver.unwrap());
        for (x, y) in ra.h.iter().zip(&rb.h) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn satellite_free_windows_give_finite_predictions(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = Model::new(
            ModelSpec { hidden_dim: 8, width: 8, ..ModelSpec::new(ModelKind::Rgnn, 10, 3) },
            &mut rng,
        ).unwrap();
        let window = WindowSample {
            snapshots: (0..10).map(|t| snapshot(t, [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)], &[])).collect(),
            target: [0.0, 0.0],
            meta: meta(vec![]),
        };
        let pred = model.predict(&[window], 1).unwrap();
        prop_assert!(pred[0].iter().all(|v| v.is_finite()));
    }
}
