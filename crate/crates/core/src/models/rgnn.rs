//! Heterogeneous graph-convolutional LSTM over star-graph snapshots.
//!
//! For node `v` of type `τ` and gate `g`:
//! `a_g(v) = x_v W_g^τ + h_v U_g^τ + mean_{u→v} h_u M_g^{edge} + b_g^τ`,
//! followed by the usual LSTM update. The four gates share one fused
//! `(·, 4H)` product per term; columns are ordered `[i, f, o, c̃]`.

use std::collections::BTreeMap;

use ndiff::{Tape, Tensor, Var};
use rand::{Rng, RngCore};

use super::params::{Bound, ParamStore};
use super::{ModelError, Result};
use crate::graph::{GraphSnapshot, WindowSample, RECV_FEATURES, SAT_FEATURES};
use crate::sim::SatId;

pub const GATES: [&str; 4] = ["i", "f", "o", "c"];

pub fn param_name(gate: &str, tensor: &str) -> String {
    format!("rgnn/gate_{gate}/{tensor}")
}

/// `16H² + 30H + 2`.
pub fn param_count(hidden: usize) -> usize {
    16 * hidden * hidden + 30 * hidden + 2
}

pub(crate) fn init<R: Rng + ?Sized>(store: &mut ParamStore, hidden: usize, rng: &mut R) {
    let h = hidden;
    for gate in GATES {
        store.push_uniform(param_name(gate, "w_recv"), &[RECV_FEATURES, h], RECV_FEATURES, rng);
        store.push_uniform(param_name(gate, "w_sat"), &[SAT_FEATURES, h], SAT_FEATURES, rng);
        store.push_uniform(param_name(gate, "m_sat_to_recv"), &[h, h], h, rng);
        store.push_uniform(param_name(gate, "m_recv_to_sat"), &[h, h], h, rng);
        store.push_uniform(param_name(gate, "u_recv"), &[h, h], h, rng);
        store.push_uniform(param_name(gate, "u_sat"), &[h, h], h, rng);
        let bias = if gate == "f" { 1.0 } else { 0.0 };
        store.push(param_name(gate, "b_recv"), Tensor::full(&[h], bias));
        store.push(param_name(gate, "b_sat"), Tensor::full(&[h], bias));
    }
    store.push_uniform("rgnn/readout/weight".into(), &[h, 2], h, rng);
    store.push("rgnn/readout/bias", Tensor::zeros(&[2]));
}

/// Per-gate tensors fused column-wise into `(·, 4H)`.
struct Fused<'t> {
    hidden: usize,
    w_recv: Var<'t>,
    w_sat: Var<'t>,
    m_sr: Var<'t>,
    m_rs: Var<'t>,
    u_recv: Var<'t>,
    u_sat: Var<'t>,
    b_recv: Var<'t>,
    b_sat: Var<'t>,
}

impl<'t> Fused<'t> {
    fn new(p: &Bound<'t>, hidden: usize) -> Result<Self> {
        let cat = |tensor: &str, axis: usize| -> Result<Var<'t>> {
            let parts = GATES
                .iter()
                .map(|g| p.get(&param_name(g, tensor)))
                .collect::<Result<Vec<_>>>()?;
            let shape = parts[0].shape();
            let expected = shape.last().copied();
            if expected != Some(hidden) {
                return Err(ModelError::Contract(format!(
                    "{} has shape {shape:?}, hidden dimension is {hidden}",
                    param_name("i", tensor)
                )));
            }
            Ok(Var::concat(&parts, axis)?)
        };
        Ok(Self {
            hidden,
            w_recv: cat("w_recv", 1)?,
            w_sat: cat("w_sat", 1)?,
            m_sr: cat("m_sat_to_recv", 1)?,
            m_rs: cat("m_recv_to_sat", 1)?,
            u_recv: cat("u_recv", 1)?,
            u_sat: cat("u_sat", 1)?,
            b_recv: cat("b_recv", 0)?,
            b_sat: cat("b_sat", 0)?,
        })
    }
}

/// Satellites present at one step of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSats {
    /// Row of each present satellite in the batch's satellite state.
    pub rows: Vec<usize>,
    /// Sample each present satellite belongs to.
    pub owner: Vec<usize>,
    /// `(n, 3)` satellite features.
    pub x: Tensor,
    /// State rows of satellites known to the batch but absent at this step.
    pub absent: Vec<usize>,
}

/// A batch of windows laid out for the batched cell.
///
/// Each sample gets its own block of satellite state rows, one per satellite
/// seen anywhere in its window.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphBatch {
    pub batch: usize,
    pub sat_rows: usize,
    /// `(batch, 2)` receiver features per step.
    pub recv_x: Vec<Tensor>,
    pub sats: Vec<StepSats>,
    /// Satellite identity of every state row.
    pub row_ids: Vec<(usize, SatId)>,
}

impl GraphBatch {
    pub fn steps(&self) -> usize {
        self.recv_x.len()
    }

    pub fn new(samples: &[&WindowSample]) -> Result<Self> {
        let steps = samples.first().map_or(0, |s| s.len());
        if samples.is_empty() || steps == 0 {
            return Err(ModelError::Contract("empty batch".into()));
        }
        if let Some(s) = samples.iter().find(|s| s.len() != steps) {
            return Err(ModelError::Contract(format!(
                "window lengths differ within a batch ({} vs {steps})",
                s.len()
            )));
        }
        let windows: Vec<&[GraphSnapshot]> = samples.iter().map(|s| s.snapshots.as_slice()).collect();
        Ok(Self::from_windows(&windows))
    }

    pub(crate) fn from_windows(windows: &[&[GraphSnapshot]]) -> Self {
        let batch = windows.len();
        let steps = windows[0].len();
        let mut row_ids = Vec::new();
        let mut universes = Vec::with_capacity(batch);
        for (b, w) in windows.iter().enumerate() {
            let mut ids: Vec<SatId> = w.iter().flat_map(|s| s.sat_ids.iter().copied()).collect();
            ids.sort();
            ids.dedup();
            let offset = row_ids.len();
            row_ids.extend(ids.iter().map(|&id| (b, id)));
            universes.push((offset, ids));
        }
        let mut recv_x = Vec::with_capacity(steps);
        let mut sats = Vec::with_capacity(steps);
        for t in 0..steps {
            let mut rx = Vec::with_capacity(batch * RECV_FEATURES);
            let (mut rows, mut owner, mut x, mut absent) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for (b, w) in windows.iter().enumerate() {
                let snap = &w[t];
                rx.extend_from_slice(&snap.recv_feat);
                let (offset, ids) = &universes[b];
                let mut present = vec![false; ids.len()];
                for (id, feat) in snap.sat_ids.iter().zip(&snap.sat_feats) {
                    let pos = ids.binary_search(id).expect("universe covers window");
                    present[pos] = true;
                    rows.push(offset + pos);
                    owner.push(b);
                    x.extend_from_slice(feat);
                }
                absent.extend((0..ids.len()).filter(|&k| !present[k]).map(|k| offset + k));
            }
            recv_x.push(Tensor::new(&[batch, RECV_FEATURES], rx).expect("sized"));
            let n = rows.len();
            sats.push(StepSats {
                rows,
                owner,
                x: Tensor::new(&[n, SAT_FEATURES], x).expect("sized"),
                absent,
            });
        }
        Self {
            batch,
            sat_rows: row_ids.len(),
            recv_x,
            sats,
            row_ids,
        }
    }
}

#[derive(Clone, Copy)]
struct State<'t> {
    h_r: Var<'t>,
    c_r: Var<'t>,
    /// `None` while the batch has no satellite rows at all.
    sat: Option<(Var<'t>, Var<'t>)>,
}

fn lstm<'t>(a: Var<'t>, c: Var<'t>, h: usize) -> Result<(Var<'t>, Var<'t>)> {
    let i = a.slice(1, 0, h)?.sigmoid();
    let f = a.slice(1, h, h)?.sigmoid();
    let o = a.slice(1, 2 * h, h)?.sigmoid();
    let g = a.slice(1, 3 * h, h)?.tanh();
    let c_new = f.mul(c)?.add(i.mul(g)?)?;
    let h_new = o.mul(c_new.tanh())?;
    Ok((h_new, c_new))
}

fn step<'t>(
    tape: &'t Tape,
    f: &Fused<'t>,
    recv_x: &Tensor,
    sats: &StepSats,
    batch: usize,
    state: State<'t>,
    reset_absent: bool,
) -> Result<State<'t>> {
    let h = f.hidden;
    let x_r = tape.constant(recv_x.clone());
    let mut a_r = x_r.matmul(f.w_recv)?.add(state.h_r.matmul(f.u_recv)?)?;
    let mut sat = state.sat;
    if let Some((h_s, c_s)) = sat {
        if !sats.rows.is_empty() {
            let hs_t = h_s.gather_rows(&sats.rows)?;
            let cs_t = c_s.gather_rows(&sats.rows)?;
            let agg = hs_t.segment_mean(&sats.owner, batch)?;
            a_r = a_r.add(agg.matmul(f.m_sr)?)?;

            let x_s = tape.constant(sats.x.clone());
            let from_recv = state.h_r.gather_rows(&sats.owner)?;
            let a_s = x_s
                .matmul(f.w_sat)?
                .add(hs_t.matmul(f.u_sat)?)?
                .add(from_recv.matmul(f.m_rs)?)?
                .add_row(f.b_sat)?;
            let (hs_new, cs_new) = lstm(a_s, cs_t, h)?;
            sat = Some((h_s.scatter_rows(&sats.rows, hs_new)?, c_s.scatter_rows(&sats.rows, cs_new)?));
        }
        if reset_absent && !sats.absent.is_empty() {
            let (h_s, c_s) = sat.expect("satellite state present");
            let zero = tape.constant(Tensor::zeros(&[sats.absent.len(), h]));
            sat = Some((h_s.scatter_rows(&sats.absent, zero)?, c_s.scatter_rows(&sats.absent, zero)?));
        }
    }
    let (h_r, c_r) = lstm(a_r.add_row(f.b_recv)?, state.c_r, h)?;
    Ok(State { h_r, c_r, sat })
}

/// Unrolls the cell over the window and reads out `(batch, 2)` normalized predictions.
pub(crate) fn forward<'t>(
    p: &Bound<'t>,
    hidden: usize,
    dropout: f64,
    reset_absent: bool,
    gb: &GraphBatch,
    train: bool,
    rng: &mut dyn RngCore,
) -> Result<Var<'t>> {
    let tape = p.tape();
    let f = Fused::new(p, hidden)?;
    let zeros = |rows: usize| tape.constant(Tensor::zeros(&[rows, hidden]));
    let mut state = State {
        h_r: zeros(gb.batch),
        c_r: zeros(gb.batch),
        sat: (gb.sat_rows > 0).then(|| (zeros(gb.sat_rows), zeros(gb.sat_rows))),
    };
    for (x, sats) in gb.recv_x.iter().zip(&gb.sats) {
        state = step(tape, &f, x, sats, gb.batch, state, reset_absent)?;
    }
    let out = state
        .h_r
        .dropout(dropout, train, rng)?
        .affine(p.get("rgnn/readout/weight")?, p.get("rgnn/readout/bias")?)?;
    Ok(out)
}

/// Hidden and cell vectors of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl NodeState {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

/// Per-node recurrent state, keyed by node identity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HiddenState {
    /// `None` before the first step.
    pub receiver: Option<NodeState>,
    pub satellites: BTreeMap<SatId, NodeState>,
}

/// One recurrent step on a single snapshot.
///
/// Nodes missing from `state` start at zero. Satellites held in `state` but
/// absent from the snapshot are carried over unchanged.
pub fn gclstm_cell_step(
    snapshot: &GraphSnapshot,
    state: &HiddenState,
    params: &ParamStore,
    hidden: usize,
) -> Result<HiddenState> {
    if snapshot.sat_feats.len() != snapshot.sat_ids.len() {
        return Err(ModelError::Contract(format!(
            "snapshot has {} satellite ids but {} feature rows",
            snapshot.sat_ids.len(),
            snapshot.sat_feats.len()
        )));
    }
    let check_len = |who: &str, s: &NodeState| {
        if s.h.len() != hidden || s.c.len() != hidden {
            Err(ModelError::Contract(format!(
                "{who} state has lengths ({}, {}), hidden dimension is {hidden}",
                s.h.len(),
                s.c.len()
            )))
        } else {
            Ok(())
        }
    };
    let mut ids: Vec<SatId> = state.satellites.keys().copied().collect();
    ids.extend(snapshot.sat_ids.iter().copied());
    ids.sort();
    ids.dedup();

    let tape = Tape::new();
    let p = params.bind(&tape);
    let f = Fused::new(&p, hidden)?;

    let recv = state.receiver.clone().unwrap_or_else(|| NodeState::zeros(hidden));
    check_len("receiver", &recv)?;
    let mut hs = Vec::with_capacity(ids.len() * hidden);
    let mut cs = Vec::with_capacity(ids.len() * hidden);
    for id in &ids {
        let s = state.satellites.get(id).cloned().unwrap_or_else(|| NodeState::zeros(hidden));
        check_len(&id.to_string(), &s)?;
        hs.extend(s.h);
        cs.extend(s.c);
    }
    let row = |v: Vec<f64>, rows: usize| Tensor::new(&[rows, hidden], v).expect("sized");
    let st = State {
        h_r: tape.constant(row(recv.h, 1)),
        c_r: tape.constant(row(recv.c, 1)),
        sat: (!ids.is_empty()).then(|| {
            (
                tape.constant(row(hs, ids.len())),
                tape.constant(row(cs, ids.len())),
            )
        }),
    };
    let rows: Vec<usize> = snapshot
        .sat_ids
        .iter()
        .map(|id| ids.binary_search(id).expect("listed"))
        .collect();
    let sats = StepSats {
        owner: vec![0; rows.len()],
        x: Tensor::new(
            &[rows.len(), SAT_FEATURES],
            snapshot.sat_feats.iter().flatten().copied().collect(),
        )
        .expect("sized"),
        rows,
        absent: Vec::new(),
    };
    let recv_x = Tensor::new(&[1, RECV_FEATURES], snapshot.recv_feat.to_vec()).expect("sized");
    let next = step(&tape, &f, &recv_x, &sats, 1, st, false)?;

    let mut out = HiddenState {
        receiver: Some(NodeState {
            h: next.h_r.value().into_data(),
            c: next.c_r.value().into_data(),
        }),
        satellites: BTreeMap::new(),
    };
    if let Some((h_s, c_s)) = next.sat {
        let (h_s, c_s) = (h_s.value(), c_s.value());
        for (k, id) in ids.iter().enumerate() {
            out.satellites.insert(
                *id,
                NodeState {
                    h: h_s.data()[k * hidden..(k + 1) * hidden].to_vec(),
                    c: c_s.data()[k * hidden..(k + 1) * hidden].to_vec(),
                },
            );
        }
    }
    Ok(out)
}
