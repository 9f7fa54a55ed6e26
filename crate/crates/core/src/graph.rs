//! Star-graph snapshots, fixed-length windows and z-score normalization.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use log::{info, warn};
use thiserror::Error;

use crate::sim::{JamMode, ObservationEpoch, Receiver, SatId, TimeSeriesRun};

pub const RECV_FEATURES: usize = 2;
pub const SAT_FEATURES: usize = 3;
/// Lower bound on every fitted standard deviation.
pub const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("window length {len} and stride {stride} must satisfy len >= 2, stride >= 1")]
    InvalidWindow { len: usize, stride: usize },
    #[error("cannot fit normalization statistics on an empty training set")]
    EmptyTrainingSet,
}

/// One epoch as a heterogeneous star graph: a receiver hub plus one node per
/// tracked satellite, linked both ways.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSnapshot {
    pub t: usize,
    /// `[lat, lon]` of the receiver's estimate.
    pub recv_feat: [f64; RECV_FEATURES],
    pub sat_ids: Vec<SatId>,
    /// `[snr, azimuth, elevation]` per satellite, aligned with `sat_ids`.
    pub sat_feats: Vec<[f64; SAT_FEATURES]>,
    /// `[dev_lat, dev_lon]` at this epoch. A label, never a model input.
    pub deviation: [f64; 2],
}

impl GraphSnapshot {
    pub const RECEIVER_NODE: usize = 0;

    pub fn num_sats(&self) -> usize {
        self.sat_ids.len()
    }

    /// Receiver node plus satellite nodes.
    pub fn num_nodes(&self) -> usize {
        1 + self.sat_ids.len()
    }

    /// `(satellite index, receiver)` edges of type "tracked_by".
    pub fn tracked_by(&self) -> Vec<(usize, usize)> {
        (0..self.num_sats()).map(|s| (s, Self::RECEIVER_NODE)).collect()
    }

    /// `(receiver, satellite index)` edges of type "tracks".
    pub fn tracks(&self) -> Vec<(usize, usize)> {
        (0..self.num_sats()).map(|s| (Self::RECEIVER_NODE, s)).collect()
    }
}

pub fn build_snapshot(epoch: &ObservationEpoch) -> GraphSnapshot {
    GraphSnapshot {
        t: epoch.t,
        recv_feat: [epoch.est_lat_deg, epoch.est_lon_deg],
        sat_ids: epoch.sats.iter().map(|s| s.id).collect(),
        sat_feats: epoch
            .sats
            .iter()
            .map(|s| [s.snr_db, s.azimuth_deg, s.elevation_deg])
            .collect(),
        deviation: [epoch.dev_lat_cm, epoch.dev_lon_cm],
    }
}

pub fn build_sequence(run: &TimeSeriesRun) -> Vec<GraphSnapshot> {
    run.epochs.iter().map(build_snapshot).collect()
}

/// Where a sample came from. Shared by every window of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub receiver: Receiver,
    pub mode: JamMode,
    pub power_dbm: f64,
    pub repetition: usize,
    /// Sorted satellites seen anywhere in the run.
    pub satellites: Vec<SatId>,
}

impl RunMeta {
    pub fn of(run: &TimeSeriesRun) -> Self {
        Self {
            receiver: run.config.receiver,
            mode: run.config.mode,
            power_dbm: run.config.power_dbm,
            repetition: run.repetition_idx,
            satellites: run.satellites(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub snapshots: Vec<GraphSnapshot>,
    /// Deviation at the last snapshot's epoch.
    pub target: [f64; 2],
    pub meta: Arc<RunMeta>,
}

impl WindowSample {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Half-open epoch range covered by the window.
    pub fn epoch_range(&self) -> std::ops::Range<usize> {
        let first = self.snapshots.first().map_or(0, |s| s.t);
        first..first + self.snapshots.len()
    }
}

/// Number of windows `window_sequence` yields for `n` snapshots.
pub fn window_count(n: usize, len: usize, stride: usize) -> usize {
    if n < len || stride == 0 {
        0
    } else {
        (n - len) / stride + 1
    }
}

/// Windows of `len` consecutive snapshots at offsets `0, stride, 2*stride, ...`.
pub fn window_sequence(
    snapshots: &[GraphSnapshot],
    len: usize,
    stride: usize,
    meta: Arc<RunMeta>,
) -> Result<Vec<WindowSample>, GraphError> {
    if len < 2 || stride == 0 {
        return Err(GraphError::InvalidWindow { len, stride });
    }
    if snapshots.len() < len {
        info!("sequence of {} snapshots is shorter than window {len}; no samples", snapshots.len());
        return Ok(Vec::new());
    }
    let count = window_count(snapshots.len(), len, stride);
    Ok((0..count)
        .map(|k| {
            let window = snapshots[k * stride..k * stride + len].to_vec();
            let target = window[len - 1].deviation;
            WindowSample {
                snapshots: window,
                target,
                meta: Arc::clone(&meta),
            }
        })
        .collect())
}

/// Snapshots and windows of a whole run in one go.
pub fn window_run(run: &TimeSeriesRun, len: usize, stride: usize) -> Result<Vec<WindowSample>, GraphError> {
    window_sequence(&build_sequence(run), len, stride, Arc::new(RunMeta::of(run)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feature {
    Snr,
    Azimuth,
    Elevation,
    Lat,
    Lon,
    DevLat,
    DevLon,
}

impl Feature {
    pub const COUNT: usize = 7;
    pub const ALL: [Feature; Feature::COUNT] = [
        Feature::Snr,
        Feature::Azimuth,
        Feature::Elevation,
        Feature::Lat,
        Feature::Lon,
        Feature::DevLat,
        Feature::DevLon,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Feature::Snr => "snr",
            Feature::Azimuth => "azimuth",
            Feature::Elevation => "elevation",
            Feature::Lat => "lat",
            Feature::Lon => "lon",
            Feature::DevLat => "dev_lat",
            Feature::DevLon => "dev_lon",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Feature {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Feature::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown feature '{s}'"))
    }
}

/// Per-feature mean and population standard deviation. Immutable once fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    mean: [f64; Feature::COUNT],
    std: [f64; Feature::COUNT],
}

/// Mean and population std of a column, with the std floored.
fn column_stats(values: impl Iterator<Item = f64> + Clone, name: &str) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        warn!("feature '{name}' has no observations in the training split; using mean 0, std 1");
        return (0.0, 1.0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    if std < STD_FLOOR {
        warn!("feature '{name}' is constant on the training split; std floored to {STD_FLOOR}");
        (mean, STD_FLOOR)
    } else {
        (mean, std)
    }
}

impl NormStats {
    /// Fits on training windows. Inputs use every snapshot of every window;
    /// deviation statistics use the window targets.
    pub fn fit(train: &[WindowSample]) -> Result<NormStats, GraphError> {
        if train.is_empty() {
            return Err(GraphError::EmptyTrainingSet);
        }
        let snaps = || train.iter().flat_map(|w| w.snapshots.iter());
        let sat = |k: usize| snaps().flat_map(move |s| s.sat_feats.iter().map(move |f| f[k]));
        let recv = |k: usize| snaps().map(move |s| s.recv_feat[k]);
        let dev = |k: usize| train.iter().map(move |w| w.target[k]);
        let cols = [
            column_stats(sat(0), "snr"),
            column_stats(sat(1), "azimuth"),
            column_stats(sat(2), "elevation"),
            column_stats(recv(0), "lat"),
            column_stats(recv(1), "lon"),
            column_stats(dev(0), "dev_lat"),
            column_stats(dev(1), "dev_lon"),
        ];
        Ok(NormStats {
            mean: cols.map(|c| c.0),
            std: cols.map(|c| c.1),
        })
    }

    /// Rebuilds stats read from disk; every std must be finite and at least the floor.
    pub fn from_parts(mean: [f64; Feature::COUNT], std: [f64; Feature::COUNT]) -> Result<NormStats, String> {
        for f in Feature::ALL {
            let (m, s) = (mean[f as usize], std[f as usize]);
            if !m.is_finite() || !s.is_finite() || s < STD_FLOOR {
                return Err(format!("feature '{f}' has invalid statistics (mean {m}, std {s})"));
            }
        }
        Ok(NormStats { mean, std })
    }

    pub fn get(&self, f: Feature) -> (f64, f64) {
        (self.mean[f as usize], self.std[f as usize])
    }

    fn z(&self, f: Feature, v: f64) -> f64 {
        (v - self.mean[f as usize]) / self.std[f as usize]
    }

    fn unz(&self, f: Feature, v: f64) -> f64 {
        v * self.std[f as usize] + self.mean[f as usize]
    }

    pub fn apply_snapshot(&self, s: &GraphSnapshot) -> GraphSnapshot {
        GraphSnapshot {
            t: s.t,
            recv_feat: [self.z(Feature::Lat, s.recv_feat[0]), self.z(Feature::Lon, s.recv_feat[1])],
            sat_ids: s.sat_ids.clone(),
            sat_feats: s
                .sat_feats
                .iter()
                .map(|f| {
                    [
                        self.z(Feature::Snr, f[0]),
                        self.z(Feature::Azimuth, f[1]),
                        self.z(Feature::Elevation, f[2]),
                    ]
                })
                .collect(),
            deviation: self.norm_target(s.deviation),
        }
    }

    /// Z-scores inputs and target of a sample.
    pub fn apply(&self, sample: &WindowSample) -> WindowSample {
        WindowSample {
            snapshots: sample.snapshots.iter().map(|s| self.apply_snapshot(s)).collect(),
            target: self.norm_target(sample.target),
            meta: Arc::clone(&sample.meta),
        }
    }

    pub fn norm_target(&self, y: [f64; 2]) -> [f64; 2] {
        [self.z(Feature::DevLat, y[0]), self.z(Feature::DevLon, y[1])]
    }

    /// Normalized deviation back to centimeters.
    pub fn denorm_target(&self, y: [f64; 2]) -> [f64; 2] {
        [self.unz(Feature::DevLat, y[0]), self.unz(Feature::DevLon, y[1])]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{Constellation, SatObservation};

    fn epoch(n: usize) -> ObservationEpoch {
        ObservationEpoch {
            t: 3,
            est_lat_deg: 46.0,
            est_lon_deg: 14.0,
            dev_lat_cm: 1.0,
            dev_lon_cm: -2.0,
            sats: (0..n)
                .map(|i| SatObservation {
                    id: SatId {
                        constellation: Constellation::Galileo,
                        prn: (n - i) as u8,
                    },
                    snr_db: 30.0 + i as f64,
                    azimuth_deg: 10.0 * i as f64,
                    elevation_deg: 45.0,
                })
                .collect(),
        }
    }

    #[test]
    fn snapshot_construction() {
        let s = build_snapshot(&epoch(6));
        assert_eq!(s.num_nodes(), 7);
        assert_eq!(s.tracked_by().len(), 6);
        assert_eq!(s.tracks().len(), 6);
        let prns: Vec<u8> = s.sat_ids.iter().map(|i| i.prn).collect();
        assert_eq!(prns, vec![6, 5, 4, 3, 2, 1]);
        assert_eq!(s.recv_feat, [46.0, 14.0]);

        let empty = build_snapshot(&epoch(0));
        assert_eq!(empty.num_nodes(), 1);
        assert!(empty.tracked_by().is_empty() && empty.tracks().is_empty());
    }

    #[test]
    fn window_counts() {
        assert_eq!(window_count(280, 10, 10), 28);
        assert_eq!(window_count(280, 140, 140), 2);
        assert_eq!(window_count(280, 5, 5), 56);
        assert_eq!(window_count(9, 10, 10), 0);
    }

    #[test]
    fn invalid_window_parameters() {
        let meta = Arc::new(RunMeta {
            receiver: Receiver::Gp01,
            mode: JamMode::Cw,
            power_dbm: -45.0,
            repetition: 0,
            satellites: vec![],
        });
        assert!(window_sequence(&[], 1, 1, meta.clone()).is_err());
        assert!(window_sequence(&[], 2, 0, meta.clone()).is_err());
        assert_eq!(window_sequence(&[], 2, 1, meta).unwrap(), vec![]);
    }

    #[test]
    fn population_std() {
        let (m, s) = column_stats([1.0, 2.0, 3.0].into_iter(), "x");
        assert_eq!(m, 2.0);
        assert!((s - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let (m, s) = column_stats([5.0, 5.0].into_iter(), "x");
        assert_eq!((m, s), (5.0, STD_FLOOR));
    }
}
