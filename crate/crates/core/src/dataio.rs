//! Text file formats shared by the simulator, the learner and the experiment driver.
//!
//! Everything is comma-separated with `\n` line ends and `.` decimals. Floats
//! are written in shortest round-trip form, so every reader returns exactly
//! what the matching writer was given.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::graph::{Feature, NormStats};
use crate::sim::{
    Constellation, JamMode, ObservationEpoch, Receiver, SatId, SatObservation, ScenarioConfig,
    SimError, TimeSeriesRun, DEFAULT_REPETITIONS,
};
use crate::trainer::{aggregate_seeds, EpochRecord, Metrics, SeedAggregate};

pub const RUN_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: field '{field}': {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        field: String,
        msg: String,
    },
    #[error("{path}: {source}")]
    Validation {
        path: PathBuf,
        #[source]
        source: SimError,
    },
    #[error("{path}: {msg}")]
    Contract { path: PathBuf, msg: String },
}

impl DataError {
    fn contract(path: &Path, msg: impl Into<String>) -> Self {
        DataError::Contract {
            path: path.to_path_buf(),
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, DataError>;

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let io = |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, text).map_err(io)
}

/// One CSV record with its position, for error reporting.
struct Record<'a> {
    path: &'a Path,
    line: usize,
    fields: Vec<&'a str>,
    names: &'a [&'a str],
}

impl<'a> Record<'a> {
    fn err(&self, field: &str, msg: impl Into<String>) -> DataError {
        DataError::Parse {
            path: self.path.to_path_buf(),
            line: self.line,
            field: field.to_string(),
            msg: msg.into(),
        }
    }

    fn raw(&self, idx: usize) -> Result<&'a str> {
        let name = self.names.get(idx).copied().unwrap_or("?");
        self.fields
            .get(idx)
            .copied()
            .ok_or_else(|| self.err(name, "missing value"))
    }

    fn parse<T: FromStr>(&self, idx: usize) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        let name = self.names.get(idx).copied().unwrap_or("?");
        let raw = self.raw(idx)?;
        raw.parse::<T>()
            .map_err(|e| self.err(name, format!("cannot parse '{raw}': {e}")))
    }

    fn parse_opt<T: FromStr>(&self, idx: usize) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        if self.raw(idx)?.is_empty() {
            Ok(None)
        } else {
            self.parse(idx).map(Some)
        }
    }

    fn expect_len(&self, n: usize) -> Result<()> {
        if self.fields.len() != n {
            return Err(self.err(
                self.names.first().copied().unwrap_or("?"),
                format!("expected {n} fields, found {}", self.fields.len()),
            ));
        }
        Ok(())
    }
}

/// Reads a headed CSV file; checks the header and yields records.
fn headed_records<'a>(path: &'a Path, text: &'a str, header: &'a [&'a str]) -> Result<Vec<Record<'a>>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.is_empty());
    let expected = header.join(",");
    match lines.next() {
        Some((_, first)) if first == expected => {}
        Some((i, first)) => {
            return Err(DataError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                field: "header".into(),
                msg: format!("expected '{expected}', found '{first}'"),
            })
        }
        None => return Err(DataError::contract(path, "empty file (missing header row)")),
    }
    let records: Vec<Record> = lines
        .map(|(i, l)| Record {
            path,
            line: i + 1,
            fields: l.split(',').collect(),
            names: header,
        })
        .collect();
    for r in &records {
        r.expect_len(header.len())?;
    }
    Ok(records)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

// ---------------------------------------------------------------- run files

/// Serializes a run. Header lines are `#key=value`; each epoch contributes one
/// `R` row followed by one `S` row per tracked satellite.
pub fn format_run(run: &TimeSeriesRun) -> String {
    let c = &run.config;
    let mut out = String::with_capacity(64 * run.epochs.len() * 8);
    let _ = writeln!(out, "#version={RUN_FORMAT_VERSION}");
    let _ = writeln!(out, "#receiver={}", c.receiver);
    let _ = writeln!(out, "#mode={}", c.mode);
    let _ = writeln!(out, "#power_dbm={}", c.power_dbm);
    let _ = writeln!(out, "#repetition={}", run.repetition_idx);
    let _ = writeln!(out, "#seed={}", c.seed);
    let _ = writeln!(out, "#repetitions={}", c.repetitions);
    for e in &run.epochs {
        let _ = writeln!(
            out,
            "R,{},{},{},{},{}",
            e.t, e.est_lat_deg, e.est_lon_deg, e.dev_lat_cm, e.dev_lon_cm
        );
        for s in &e.sats {
            let _ = writeln!(
                out,
                "S,{},{},{},{},{},{}",
                e.t, s.id.constellation, s.id.prn, s.snr_db, s.azimuth_deg, s.elevation_deg
            );
        }
    }
    out
}

pub fn write_run(run: &TimeSeriesRun, path: &Path) -> Result<()> {
    write_text(path, &format_run(run))
}

const RUN_R_FIELDS: [&str; 6] = ["row_type", "t", "est_lat_deg", "est_lon_deg", "dev_lat_cm", "dev_lon_cm"];
const RUN_S_FIELDS: [&str; 7] = [
    "row_type",
    "t",
    "constellation",
    "prn",
    "snr_db",
    "azimuth_deg",
    "elevation_deg",
];

/// Parses and fully validates a run file.
pub fn parse_run(path: &Path, text: &str) -> Result<TimeSeriesRun> {
    let mut header: Vec<(usize, &str, &str)> = Vec::new();
    let mut epochs: Vec<ObservationEpoch> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(kv) = line.strip_prefix('#') {
            if !epochs.is_empty() {
                return Err(DataError::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    field: "header".into(),
                    msg: "header line after data rows".into(),
                });
            }
            let (k, v) = kv.split_once('=').ok_or_else(|| DataError::Parse {
                path: path.to_path_buf(),
                line: line_no,
                field: "header".into(),
                msg: format!("expected #key=value, found '{line}'"),
            })?;
            header.push((line_no, k, v));
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        match fields[0] {
            "R" => {
                let rec = Record {
                    path,
                    line: line_no,
                    fields,
                    names: &RUN_R_FIELDS,
                };
                rec.expect_len(RUN_R_FIELDS.len())?;
                epochs.push(ObservationEpoch {
                    t: rec.parse(1)?,
                    est_lat_deg: rec.parse(2)?,
                    est_lon_deg: rec.parse(3)?,
                    dev_lat_cm: rec.parse(4)?,
                    dev_lon_cm: rec.parse(5)?,
                    sats: Vec::new(),
                });
            }
            "S" => {
                let rec = Record {
                    path,
                    line: line_no,
                    fields,
                    names: &RUN_S_FIELDS,
                };
                rec.expect_len(RUN_S_FIELDS.len())?;
                let t: usize = rec.parse(1)?;
                let epoch = epochs
                    .last_mut()
                    .filter(|e| e.t == t)
                    .ok_or_else(|| rec.err("t", format!("satellite row for epoch {t} outside its receiver block")))?;
                let constellation: Constellation = rec.parse(2)?;
                epoch.sats.push(SatObservation {
                    id: SatId {
                        constellation,
                        prn: rec.parse(3)?,
                    },
                    snr_db: rec.parse(4)?,
                    azimuth_deg: rec.parse(5)?,
                    elevation_deg: rec.parse(6)?,
                });
            }
            other => {
                return Err(DataError::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    field: "row_type".into(),
                    msg: format!("unknown row type '{other}'"),
                })
            }
        }
    }

    let lookup = |key: &str| -> Result<(usize, &str)> {
        header
            .iter()
            .find(|(_, k, _)| *k == key)
            .map(|(l, _, v)| (*l, *v))
            .ok_or_else(|| DataError::contract(path, format!("missing header key '{key}'")))
    };
    fn typed<T: FromStr>(path: &Path, key: &str, (line, raw): (usize, &str)) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        raw.parse().map_err(|e: T::Err| DataError::Parse {
            path: path.to_path_buf(),
            line,
            field: key.to_string(),
            msg: format!("cannot parse '{raw}': {e}"),
        })
    }
    let version: u32 = typed(path, "version", lookup("version")?)?;
    if version != RUN_FORMAT_VERSION {
        return Err(DataError::contract(path, format!("unsupported run format version {version}")));
    }
    let repetitions = match lookup("repetitions") {
        Ok(v) => typed(path, "repetitions", v)?,
        Err(_) => DEFAULT_REPETITIONS,
    };
    let config = ScenarioConfig {
        receiver: typed(path, "receiver", lookup("receiver")?)?,
        mode: typed(path, "mode", lookup("mode")?)?,
        power_dbm: typed(path, "power_dbm", lookup("power_dbm")?)?,
        repetitions,
        seed: typed(path, "seed", lookup("seed")?)?,
    };
    let run = TimeSeriesRun {
        config,
        repetition_idx: typed(path, "repetition", lookup("repetition")?)?,
        epochs,
    };
    run.validate().map_err(|source| DataError::Validation {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(run)
}

pub fn read_run(path: &Path) -> Result<TimeSeriesRun> {
    parse_run(path, &read_text(path)?)
}

// ---------------------------------------------------------------- manifests

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    SingleScenario,
    Mixed,
    WorstCase,
}

impl DatasetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::SingleScenario => "single_scenario",
            DatasetKind::Mixed => "mixed",
            DatasetKind::WorstCase => "worst_case",
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "single_scenario" => Ok(DatasetKind::SingleScenario),
            "mixed" => Ok(DatasetKind::Mixed),
            "worst_case" => Ok(DatasetKind::WorstCase),
            other => Err(format!("unknown dataset kind '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    /// Relative to the manifest's directory.
    pub path: PathBuf,
    pub receiver: Receiver,
    pub mode: JamMode,
    pub power_dbm: f64,
    pub repetition: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignManifest {
    pub kind: DatasetKind,
    pub entries: Vec<ManifestEntry>,
}

const MANIFEST_HEADER: [&str; 6] = ["kind", "path", "receiver", "mode", "power_dbm", "repetition"];

impl CampaignManifest {
    fn check_unique(&self, path: &Path) -> Result<()> {
        for (i, e) in self.entries.iter().enumerate() {
            let dup = self.entries[..i].iter().any(|o| {
                o.receiver == e.receiver && o.mode == e.mode && o.power_dbm == e.power_dbm && o.repetition == e.repetition
            });
            if dup {
                return Err(DataError::contract(
                    path,
                    format!(
                        "duplicate scenario/repetition {}/{}/{} #{}",
                        e.receiver, e.mode, e.power_dbm, e.repetition
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Absolute locations of the run files listed in a manifest at `manifest_path`.
    pub fn run_paths(&self, manifest_path: &Path) -> Vec<PathBuf> {
        let base = manifest_path.parent().unwrap_or(Path::new(""));
        self.entries.iter().map(|e| base.join(&e.path)).collect()
    }
}

pub fn write_manifest(manifest: &CampaignManifest, path: &Path) -> Result<()> {
    manifest.check_unique(path)?;
    let mut out = MANIFEST_HEADER.join(",");
    out.push('\n');
    for e in &manifest.entries {
        let p = e.path.to_string_lossy();
        if p.contains(',') {
            return Err(DataError::contract(path, format!("run path '{p}' contains a comma")));
        }
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            manifest.kind, p, e.receiver, e.mode, e.power_dbm, e.repetition
        );
    }
    write_text(path, &out)
}

pub fn read_manifest(path: &Path) -> Result<CampaignManifest> {
    let text = read_text(path)?;
    let records = headed_records(path, &text, &MANIFEST_HEADER)?;
    let mut kind = None;
    let mut entries = Vec::with_capacity(records.len());
    for r in &records {
        let k: DatasetKind = r.parse(0)?;
        if *kind.get_or_insert(k) != k {
            return Err(r.err("kind", "dataset kind differs between rows"));
        }
        entries.push(ManifestEntry {
            path: PathBuf::from(r.raw(1)?),
            receiver: r.parse(2)?,
            mode: r.parse(3)?,
            power_dbm: r.parse(4)?,
            repetition: r.parse(5)?,
        });
    }
    let manifest = CampaignManifest {
        kind: kind.ok_or_else(|| DataError::contract(path, "manifest lists no runs"))?,
        entries,
    };
    manifest.check_unique(path)?;
    Ok(manifest)
}

// ---------------------------------------------------------------- results

/// What a results row was trained and tested on. `None` mode means pooled
/// interference types; `None` power means pooled power levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetLabel {
    pub receiver: Receiver,
    pub mode: Option<JamMode>,
    pub power_dbm: Option<f64>,
}

impl DatasetLabel {
    pub fn scenario(receiver: Receiver, mode: JamMode, power_dbm: f64) -> Self {
        Self {
            receiver,
            mode: Some(mode),
            power_dbm: Some(power_dbm),
        }
    }

    fn mode_str(&self) -> String {
        self.mode.map_or_else(|| "mixed".to_string(), |m| m.to_string())
    }

    fn power_str(&self) -> String {
        self.power_dbm.map_or_else(|| "all".to_string(), |p| p.to_string())
    }
}

impl fmt::Display for DatasetLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.receiver, self.mode_str(), self.power_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedResult {
    pub label: DatasetLabel,
    pub model: String,
    pub seed: u64,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub label: DatasetLabel,
    pub model: String,
    pub stats: SeedAggregate,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultsTable {
    pub rows: Vec<SeedResult>,
    pub aggregates: Vec<AggregateRow>,
}

impl ResultsTable {
    /// Builds the table and its (label, model) aggregates in first-seen order.
    pub fn from_rows(rows: Vec<SeedResult>) -> Self {
        let mut groups: Vec<(DatasetLabel, String, Vec<Metrics>)> = Vec::new();
        for r in &rows {
            match groups.iter_mut().find(|(l, m, _)| *l == r.label && *m == r.model) {
                Some(g) => g.2.push(r.metrics),
                None => groups.push((r.label, r.model.clone(), vec![r.metrics])),
            }
        }
        let aggregates = groups
            .into_iter()
            .map(|(label, model, ms)| AggregateRow {
                label,
                model,
                stats: aggregate_seeds(&ms).expect("group is non-empty"),
            })
            .collect();
        Self { rows, aggregates }
    }

    pub fn aggregate(&self, label: &DatasetLabel, model: &str) -> Option<&AggregateRow> {
        self.aggregates.iter().find(|a| a.label == *label && a.model == model)
    }
}

const RESULTS_HEADER: [&str; 10] = [
    "row",
    "receiver",
    "mode",
    "power_dbm",
    "model",
    "seed",
    "count",
    "mae_lat_cm",
    "mae_lon_cm",
    "euclid_mae_cm",
];

pub fn format_results(table: &ResultsTable) -> String {
    let mut out = RESULTS_HEADER.join(",");
    out.push('\n');
    let prefix = |kind: &str, label: &DatasetLabel, model: &str| {
        format!("{kind},{},{},{},{model}", label.receiver, label.mode_str(), label.power_str())
    };
    for r in &table.rows {
        let [a, b, c] = r.metrics.values();
        let _ = writeln!(
            out,
            "{},{},{},{a},{b},{c}",
            prefix("seed", &r.label, &r.model),
            r.seed,
            r.metrics.n_samples
        );
    }
    for agg in &table.aggregates {
        let [a, b, c] = agg.stats.mean;
        let _ = writeln!(out, "{},,{},{a},{b},{c}", prefix("mean", &agg.label, &agg.model), agg.stats.n);
        if let Some([a, b, c]) = agg.stats.sd {
            let _ = writeln!(out, "{},,{},{a},{b},{c}", prefix("sd", &agg.label, &agg.model), agg.stats.n);
        }
    }
    out
}

pub fn write_results(table: &ResultsTable, path: &Path) -> Result<()> {
    for agg in &table.aggregates {
        if agg.stats.sd.is_some() != (agg.stats.n >= 2) {
            return Err(DataError::contract(path, format!("sd must be present exactly when n >= 2 ({})", agg.label)));
        }
    }
    write_text(path, &format_results(table))
}

/// Label in columns `at..at + 3` (receiver, mode, power).
fn parse_label(r: &Record<'_>, at: usize) -> Result<DatasetLabel> {
    let mode = match r.raw(at + 1)? {
        "mixed" => None,
        _ => Some(r.parse::<JamMode>(at + 1)?),
    };
    let power_dbm = match r.raw(at + 2)? {
        "all" => None,
        _ => Some(r.parse::<f64>(at + 2)?),
    };
    Ok(DatasetLabel {
        receiver: r.parse(at)?,
        mode,
        power_dbm,
    })
}

pub fn parse_results(path: &Path, text: &str) -> Result<ResultsTable> {
    let records = headed_records(path, text, &RESULTS_HEADER)?;
    let mut table = ResultsTable::default();
    for r in &records {
        let label = parse_label(r, 1)?;
        let model = r.raw(4)?.to_string();
        let vals = [r.parse::<f64>(7)?, r.parse::<f64>(8)?, r.parse::<f64>(9)?];
        match r.raw(0)? {
            "seed" => table.rows.push(SeedResult {
                label,
                model,
                seed: r.parse(5)?,
                metrics: Metrics {
                    mae_lat_cm: vals[0],
                    mae_lon_cm: vals[1],
                    euclid_mae_cm: vals[2],
                    n_samples: r.parse(6)?,
                },
            }),
            "mean" => table.aggregates.push(AggregateRow {
                label,
                model,
                stats: SeedAggregate {
                    n: r.parse(6)?,
                    mean: vals,
                    sd: None,
                },
            }),
            "sd" => {
                let agg = table
                    .aggregates
                    .iter_mut()
                    .find(|a| a.label == label && a.model == model)
                    .ok_or_else(|| r.err("row", "sd row without a preceding mean row"))?;
                agg.stats.sd = Some(vals);
            }
            other => return Err(r.err("row", format!("unknown row kind '{other}'"))),
        }
    }
    for agg in &table.aggregates {
        if agg.stats.sd.is_some() != (agg.stats.n >= 2) {
            return Err(DataError::contract(path, format!("sd must be present exactly when n >= 2 ({})", agg.label)));
        }
    }
    Ok(table)
}

pub fn read_results(path: &Path) -> Result<ResultsTable> {
    parse_results(path, &read_text(path)?)
}

// ---------------------------------------------------------------- ablation surfaces

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceCell {
    pub window: usize,
    pub hidden_dim: usize,
    pub seeds: usize,
    pub mae_cm: f64,
    pub sd_cm: Option<f64>,
}

/// Euclidean MAE over a (window, hidden dimension) grid for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub label: DatasetLabel,
    pub cells: Vec<SurfaceCell>,
}

impl Surface {
    pub fn cell(&self, window: usize, hidden_dim: usize) -> Option<&SurfaceCell> {
        self.cells.iter().find(|c| c.window == window && c.hidden_dim == hidden_dim)
    }
}

const SURFACE_HEADER: [&str; 8] = [
    "receiver",
    "mode",
    "power_dbm",
    "window",
    "hidden_dim",
    "seeds",
    "mae_cm",
    "sd_cm",
];

pub fn write_surface(surface: &Surface, path: &Path) -> Result<()> {
    let mut out = SURFACE_HEADER.join(",");
    out.push('\n');
    let l = &surface.label;
    for c in &surface.cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            l.receiver,
            l.mode_str(),
            l.power_str(),
            c.window,
            c.hidden_dim,
            c.seeds,
            c.mae_cm,
            fmt_opt(c.sd_cm)
        );
    }
    write_text(path, &out)
}

pub fn read_surface(path: &Path) -> Result<Surface> {
    let text = read_text(path)?;
    let records = headed_records(path, &text, &SURFACE_HEADER)?;
    let first = records
        .first()
        .ok_or_else(|| DataError::contract(path, "surface has no cells"))?;
    let label = parse_label(first, 0)?;
    let mut cells = Vec::with_capacity(records.len());
    for r in &records {
        if parse_label(r, 0)? != label {
            return Err(r.err("receiver", "rows belong to different scenarios"));
        }
        cells.push(SurfaceCell {
            window: r.parse(3)?,
            hidden_dim: r.parse(4)?,
            seeds: r.parse(5)?,
            mae_cm: r.parse(6)?,
            sd_cm: r.parse_opt(7)?,
        });
    }
    Ok(Surface { label, cells })
}

// ---------------------------------------------------------------- split curves

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub receiver: Receiver,
    pub model: String,
    pub train_fraction: f64,
    pub repeats: usize,
    pub mae_cm: f64,
}

const CURVE_HEADER: [&str; 5] = ["receiver", "model", "train_fraction", "repeats", "mae_cm"];

pub fn write_curves(points: &[CurvePoint], path: &Path) -> Result<()> {
    let mut out = CURVE_HEADER.join(",");
    out.push('\n');
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            p.receiver, p.model, p.train_fraction, p.repeats, p.mae_cm
        );
    }
    write_text(path, &out)
}

pub fn read_curves(path: &Path) -> Result<Vec<CurvePoint>> {
    let text = read_text(path)?;
    headed_records(path, &text, &CURVE_HEADER)?
        .iter()
        .map(|r| {
            Ok(CurvePoint {
                receiver: r.parse(0)?,
                model: r.raw(1)?.to_string(),
                train_fraction: r.parse(2)?,
                repeats: r.parse(3)?,
                mae_cm: r.parse(4)?,
            })
        })
        .collect()
}

// ---------------------------------------------------------------- normalization stats

const STATS_HEADER: [&str; 3] = ["feature", "mean", "std"];

pub fn write_norm_stats(stats: &NormStats, path: &Path) -> Result<()> {
    let mut out = STATS_HEADER.join(",");
    out.push('\n');
    for f in Feature::ALL {
        let (m, s) = stats.get(f);
        let _ = writeln!(out, "{},{m},{s}", f.as_str());
    }
    write_text(path, &out)
}

pub fn read_norm_stats(path: &Path) -> Result<NormStats> {
    let text = read_text(path)?;
    let records = headed_records(path, &text, &STATS_HEADER)?;
    let mut mean = [f64::NAN; Feature::COUNT];
    let mut std = [f64::NAN; Feature::COUNT];
    for r in &records {
        let f: Feature = r.parse(0)?;
        mean[f as usize] = r.parse(1)?;
        std[f as usize] = r.parse(2)?;
    }
    NormStats::from_parts(mean, std).map_err(|msg| DataError::contract(path, msg))
}

// ---------------------------------------------------------------- training history

const HISTORY_HEADER: [&str; 3] = ["epoch", "train_loss", "val_loss"];

pub fn write_history(history: &[EpochRecord], path: &Path) -> Result<()> {
    let mut out = HISTORY_HEADER.join(",");
    out.push('\n');
    for h in history {
        let _ = writeln!(out, "{},{},{}", h.epoch, h.train_loss, h.val_loss);
    }
    write_text(path, &out)
}

pub fn read_history(path: &Path) -> Result<Vec<EpochRecord>> {
    let text = read_text(path)?;
    headed_records(path, &text, &HISTORY_HEADER)?
        .iter()
        .map(|r| {
            Ok(EpochRecord {
                epoch: r.parse(0)?,
                train_loss: r.parse(1)?,
                val_loss: r.parse(2)?,
            })
        })
        .collect()
}
