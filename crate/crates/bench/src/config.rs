//! `key=value` configuration files for training runs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use jamgraph::models::{ModelKind, ModelSpec};
use jamgraph::trainer::TrainConfig;

use crate::error::{BenchError, Result};

/// Training hyperparameters plus the model-size knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub hidden_dim: usize,
    pub width: usize,
    pub dropout: f64,
    pub reset_absent: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let spec = ModelSpec::new(ModelKind::Rgnn, 10, 1);
        Self {
            train: TrainConfig::default(),
            hidden_dim: spec.hidden_dim,
            width: spec.width,
            dropout: spec.dropout,
            reset_absent: spec.reset_absent,
        }
    }
}

pub const MODEL_KEYS: [&str; 4] = ["hidden_dim", "width", "dropout", "reset_absent"];

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn p<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| BenchError::Usage(format!("invalid value '{v}' for '{key}'")))
        }
        match key {
            "hidden_dim" => self.hidden_dim = p(key, value)?,
            "width" => self.width = p(key, value)?,
            "dropout" => self.dropout = p(key, value)?,
            "reset_absent" => self.reset_absent = p(key, value)?,
            _ => self.train.set(key, value).map_err(BenchError::Usage)?,
        }
        Ok(())
    }

    /// Applies `key=value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| BenchError::Usage(format!("config line {}: expected key=value, got '{line}'", n + 1)))?;
            self.set(k.trim(), v)
                .map_err(|e| BenchError::Usage(format!("config line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        self.apply_text(&text)
            .map_err(|e| BenchError::Usage(format!("{}: {e}", path.display())))
    }

    /// Every key in a fixed order, one `key=value` per line. Parsing this text
    /// into a default config reproduces `self`.
    pub fn canonical(&self) -> String {
        let t = &self.train;
        let mut out = String::new();
        let _ = writeln!(out, "lr={}", t.lr);
        let _ = writeln!(out, "weight_decay={}", t.weight_decay);
        let _ = writeln!(out, "smooth_l1_beta={}", t.smooth_l1_beta);
        let _ = writeln!(out, "batch_size={}", t.batch_size);
        let _ = writeln!(out, "max_epochs={}", t.max_epochs);
        let _ = writeln!(out, "early_stop_patience={}", t.early_stop_patience);
        let _ = writeln!(out, "early_stop_min_delta={}", t.early_stop_min_delta);
        let _ = writeln!(out, "window={}", t.window);
        let _ = writeln!(out, "stride={}", t.stride);
        let _ = writeln!(out, "seed={}", t.seed);
        let _ = writeln!(out, "hidden_dim={}", self.hidden_dim);
        let _ = writeln!(out, "width={}", self.width);
        let _ = writeln!(out, "dropout={}", self.dropout);
        let _ = writeln!(out, "reset_absent={}", self.reset_absent);
        out
    }

    pub fn model_spec(&self, kind: ModelKind, k_max: usize) -> Result<ModelSpec> {
        let spec = ModelSpec {
            hidden_dim: self.hidden_dim,
            width: self.width,
            dropout: self.dropout,
            reset_absent: self.reset_absent,
            ..ModelSpec::new(kind, self.train.window, k_max)
        };
        spec.validate().map_err(|e| BenchError::Usage(e.to_string()))?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_and_canonical_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("# desk\nhidden_dim = 64\nmax_epochs=15\n\nlr=0.002\nreset_absent=true\n")
            .unwrap();
        assert_eq!((cfg.hidden_dim, cfg.train.max_epochs, cfg.reset_absent), (64, 15, true));
        assert_eq!(cfg.train.lr, 0.002);
        let mut back = RunConfig::default();
        back.apply_text(&cfg.canonical()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn bad_lines_are_usage_errors() {
        let mut cfg = RunConfig::default();
        for bad in ["nonsense", "colour=red", "batch_size=-3"] {
            let e = cfg.apply_text(bad).unwrap_err();
            assert_eq!(e.exit_code(), 1, "{bad}: {e}");
        }
    }
}
