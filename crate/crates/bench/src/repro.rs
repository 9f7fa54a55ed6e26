//! Reproduction manifest written next to every experiment's outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::data::{file_sha256, text_sha256};
use crate::error::{BenchError, Result};

pub const REPRO_FILE: &str = "repro.csv";

/// Everything needed to rerun an experiment: its configuration, seeds and
/// content hashes of the data read and the files written.
#[derive(Debug, Clone, PartialEq)]
pub struct ReproManifest {
    pub experiment: String,
    pub profile: String,
    pub config: String,
    pub seeds: Vec<u64>,
    pub settings: Vec<(String, String)>,
    pub data: Vec<(PathBuf, String)>,
    pub outputs: Vec<(PathBuf, String)>,
}

impl ReproManifest {
    pub fn new(experiment: &str, profile: &str, config: &RunConfig, seeds: &[u64]) -> Self {
        Self {
            experiment: experiment.to_string(),
            profile: profile.to_string(),
            config: config.canonical(),
            seeds: seeds.to_vec(),
            settings: Vec::new(),
            data: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn setting(&mut self, key: &str, value: impl ToString) {
        self.settings.push((key.to_string(), value.to_string()));
    }

    /// Records the hash of each file, named relative to `base`.
    pub fn add_data(&mut self, base: &Path, files: &[PathBuf]) -> Result<()> {
        for f in files {
            let rel = f.strip_prefix(base).unwrap_or(f).to_path_buf();
            if !self.data.iter().any(|(p, _)| *p == rel) {
                self.data.push((rel, file_sha256(f)?));
            }
        }
        Ok(())
    }

    pub fn add_output(&mut self, base: &Path, file: &Path) -> Result<()> {
        let rel = file.strip_prefix(base).unwrap_or(file).to_path_buf();
        self.outputs.push((rel, file_sha256(file)?));
        Ok(())
    }

    pub fn config_hash(&self) -> String {
        text_sha256(&self.config)
    }

    /// `section,key,value` rows.
    pub fn format(&self) -> String {
        let mut out = String::from("section,key,value\n");
        let _ = writeln!(out, "experiment,name,{}", self.experiment);
        let _ = writeln!(out, "experiment,profile,{}", self.profile);
        let _ = writeln!(out, "experiment,config_sha256,{}", self.config_hash());
        for line in self.config.lines() {
            if let Some((k, v)) = line.split_once('=') {
                let _ = writeln!(out, "config,{k},{v}");
            }
        }
        for (k, v) in &self.settings {
            let _ = writeln!(out, "setting,{k},{v}");
        }
        for s in &self.seeds {
            let _ = writeln!(out, "seed,{s},");
        }
        for (p, h) in &self.data {
            let _ = writeln!(out, "data,{},{h}", p.display());
        }
        for (p, h) in &self.outputs {
            let _ = writeln!(out, "output,{},{h}", p.display());
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(REPRO_FILE);
        fs::write(&path, self.format()).map_err(|e| BenchError::io(&path, e))?;
        Ok(path)
    }
}
