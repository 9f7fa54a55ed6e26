//! Campaign files under a work directory: generation, loading and hashing.

use std::fs;
use std::path::{Path, PathBuf};

use jamgraph::dataio::{read_manifest, read_run, write_manifest, write_run, CampaignManifest, DatasetKind, ManifestEntry};
use jamgraph::sim::{generate_campaign, generate_mixed, JamMode, Receiver, ScenarioConfig, TimeSeriesRun, POWER_LEVELS_DBM};
use log::info;
use sha2::{Digest, Sha256};

use crate::error::{BenchError, Result};

pub const MANIFEST_FILE: &str = "manifest.csv";

/// Runs loaded from a manifest, in manifest order.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub manifest_path: PathBuf,
    pub manifest: CampaignManifest,
    pub runs: Vec<TimeSeriesRun>,
}

impl Campaign {
    /// Largest satellite count any run's receiver can track.
    pub fn k_max(&self) -> usize {
        self.runs
            .iter()
            .map(|r| r.config.receiver.max_satellites())
            .max()
            .unwrap_or(0)
    }

    /// The manifest followed by every run file.
    pub fn files(&self) -> Vec<PathBuf> {
        let mut out = vec![self.manifest_path.clone()];
        out.extend(self.manifest.run_paths(&self.manifest_path));
        out
    }
}

fn power_tag(power_dbm: f64) -> String {
    if power_dbm < 0.0 {
        format!("m{}", -power_dbm)
    } else {
        format!("{power_dbm}")
    }
}

/// Directory of one single-scenario campaign.
pub fn scenario_dir(root: &Path, cfg: &ScenarioConfig) -> PathBuf {
    root.join(format!(
        "{}_{}_{}_r{}_s{}",
        cfg.receiver,
        cfg.mode,
        power_tag(cfg.power_dbm),
        cfg.repetitions,
        cfg.seed
    ))
}

/// Directory of a pooled campaign.
pub fn mixed_dir(root: &Path, receiver: Receiver, powers: &[f64], runs: usize, seed: u64) -> PathBuf {
    let tag = if is_worst_case(powers) {
        "worst".to_string()
    } else if powers.len() == POWER_LEVELS_DBM.len() {
        "all".to_string()
    } else {
        powers.iter().map(|&p| power_tag(p)).collect::<Vec<_>>().join("-")
    };
    root.join(format!("{receiver}_mixed_{tag}_r{runs}_s{seed}"))
}

fn is_worst_case(powers: &[f64]) -> bool {
    powers.len() == 1 && powers[0] == POWER_LEVELS_DBM[0]
}

fn write_campaign(kind: DatasetKind, runs: &[TimeSeriesRun], dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let mut entries = Vec::with_capacity(runs.len());
    for (i, run) in runs.iter().enumerate() {
        let name = format!("run_{i:03}.csv");
        write_run(run, &dir.join(&name))?;
        entries.push(ManifestEntry {
            path: PathBuf::from(name),
            receiver: run.config.receiver,
            mode: run.config.mode,
            power_dbm: run.config.power_dbm,
            repetition: run.repetition_idx,
        });
    }
    let path = dir.join(MANIFEST_FILE);
    write_manifest(&CampaignManifest { kind, entries }, &path)?;
    Ok(path)
}

/// Simulates every repetition of `cfg` into `dir`; returns the manifest path.
pub fn simulate_to(cfg: &ScenarioConfig, dir: &Path) -> Result<PathBuf> {
    let runs = generate_campaign(cfg)?;
    info!("simulated {} runs of {} into {}", runs.len(), cfg.label(), dir.display());
    write_campaign(DatasetKind::SingleScenario, &runs, dir)
}

/// Pooled campaign over the receiver's modes and `powers`; a pool over the
/// strongest power alone is recorded as the worst-case dataset.
pub fn mix_to(receiver: Receiver, powers: &[f64], runs: usize, seed: u64, dir: &Path) -> Result<PathBuf> {
    let generated = generate_mixed(receiver, powers, seed, runs)?;
    let kind = if is_worst_case(powers) {
        DatasetKind::WorstCase
    } else {
        DatasetKind::Mixed
    };
    info!("mixed {} {kind} runs for {receiver} into {}", generated.len(), dir.display());
    write_campaign(kind, &generated, dir)
}

/// Reads a manifest and every run it lists, checking that each run's
/// labels agree with its manifest entry.
pub fn load_campaign(manifest_path: &Path) -> Result<Campaign> {
    if !manifest_path.exists() {
        return Err(BenchError::MissingData(format!(
            "no campaign manifest at {}; create one with `jamgraph simulate` or `jamgraph mix`",
            manifest_path.display()
        )));
    }
    let manifest = read_manifest(manifest_path)?;
    let mut runs = Vec::with_capacity(manifest.entries.len());
    for (entry, path) in manifest.entries.iter().zip(manifest.run_paths(manifest_path)) {
        if !path.exists() {
            return Err(BenchError::MissingData(format!(
                "run file {} listed in {} is missing; regenerate it with `jamgraph simulate --receiver {} --mode {} --power {}`",
                path.display(),
                manifest_path.display(),
                entry.receiver,
                entry.mode,
                entry.power_dbm
            )));
        }
        let run = read_run(&path)?;
        let c = &run.config;
        if c.receiver != entry.receiver
            || c.mode != entry.mode
            || c.power_dbm != entry.power_dbm
            || run.repetition_idx != entry.repetition
        {
            return Err(BenchError::MissingData(format!(
                "{} holds {} #{} but the manifest lists {}/{}/{} #{}",
                path.display(),
                c.label(),
                run.repetition_idx,
                entry.receiver,
                entry.mode,
                entry.power_dbm,
                entry.repetition
            )));
        }
        runs.push(run);
    }
    Ok(Campaign {
        manifest_path: manifest_path.to_path_buf(),
        manifest,
        runs,
    })
}

/// Accepts either a manifest file or a directory holding one.
pub fn resolve_manifest(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

/// Loads a single-scenario campaign under `root`, simulating it first if absent.
pub fn ensure_scenario(root: &Path, receiver: Receiver, mode: JamMode, power_dbm: f64, reps: usize, seed: u64) -> Result<Campaign> {
    let cfg = ScenarioConfig::new(receiver, mode, power_dbm, reps, seed)?;
    let dir = scenario_dir(root, &cfg);
    let manifest = dir.join(MANIFEST_FILE);
    if !manifest.exists() {
        simulate_to(&cfg, &dir)?;
    }
    load_campaign(&manifest)
}

/// Loads a pooled campaign under `root`, generating it first if absent.
pub fn ensure_mixed(root: &Path, receiver: Receiver, powers: &[f64], runs: usize, seed: u64) -> Result<Campaign> {
    let dir = mixed_dir(root, receiver, powers, runs, seed);
    let manifest = dir.join(MANIFEST_FILE);
    if !manifest.exists() {
        mix_to(receiver, powers, runs, seed, &dir)?;
    }
    load_campaign(&manifest)
}

/// Lowercase hex SHA-256 of a file's bytes.
pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| BenchError::io(path, e))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

pub fn text_sha256(text: &str) -> String {
    hex(&Sha256::digest(text.as_bytes()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
