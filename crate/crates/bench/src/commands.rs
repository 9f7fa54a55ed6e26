//! Single-model training and evaluation on campaign files.

use std::fs;
use std::path::{Path, PathBuf};

use jamgraph::dataio::{read_norm_stats, write_history, write_norm_stats, SeedResult};
use jamgraph::graph::window_run;
use jamgraph::models::{Model, ModelKind};
use jamgraph::trainer::{evaluate, split_runs, train, Datasets, Metrics, SplitSpec};
use log::info;

use crate::config::RunConfig;
use crate::data::{load_campaign, resolve_manifest};
use crate::error::{BenchError, Result};
use crate::experiments::{campaign_label, write_results_checked};

pub const CHECKPOINT_FILE: &str = "checkpoint.txt";
pub const STATS_FILE: &str = "norm_stats.csv";
pub const HISTORY_FILE: &str = "history.csv";
pub const RESULTS_FILE: &str = "results.csv";

/// Files written by [`train_on_campaign`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainArtifacts {
    pub checkpoint: PathBuf,
    pub stats: PathBuf,
    pub history: PathBuf,
    pub results: PathBuf,
    pub metrics: Metrics,
}

/// Splits the campaign by `split_seed`, trains with `cfg.train.seed`, and
/// writes checkpoint, statistics, history and test results into `out`.
pub fn train_on_campaign(data: &Path, kind: ModelKind, cfg: &RunConfig, split_seed: u64, out: &Path) -> Result<TrainArtifacts> {
    let campaign = load_campaign(&resolve_manifest(data))?;
    let label = campaign_label(&campaign)?;
    let split = split_runs(campaign.runs.len(), &SplitSpec::default(), split_seed)?;
    let ds = Datasets::build(&campaign.runs, &split, cfg.train.window, cfg.train.stride)?;
    let spec = cfg.model_spec(kind, campaign.k_max())?;
    info!(
        "training {kind} on {label}: {} train / {} val / {} test windows",
        ds.train.len(),
        ds.val.len(),
        ds.test.len()
    );
    let outcome = train(spec, &ds.train, &ds.val, &cfg.train)?;
    let metrics = evaluate(&outcome.model, &ds.test, &ds.stats)?;

    fs::create_dir_all(out).map_err(|e| BenchError::io(out, e))?;
    let artifacts = TrainArtifacts {
        checkpoint: out.join(CHECKPOINT_FILE),
        stats: out.join(STATS_FILE),
        history: out.join(HISTORY_FILE),
        results: out.join(RESULTS_FILE),
        metrics,
    };
    outcome.model.save(&artifacts.checkpoint)?;
    write_norm_stats(&ds.stats, &artifacts.stats)?;
    write_history(&outcome.history, &artifacts.history)?;
    let table = jamgraph::dataio::ResultsTable::from_rows(vec![SeedResult {
        label,
        model: kind.as_str().to_string(),
        seed: cfg.train.seed,
        metrics,
    }]);
    write_results_checked(&table, &artifacts.results)?;
    Ok(artifacts)
}

/// Evaluates a checkpoint on every window of a campaign. Normalization
/// statistics come from `stats`, or from the file saved next to the checkpoint.
pub fn evaluate_checkpoint(checkpoint: &Path, data: &Path, stats: Option<&Path>) -> Result<Metrics> {
    let model = Model::load(checkpoint)?;
    let stats_path = match stats {
        Some(p) => p.to_path_buf(),
        None => checkpoint.parent().unwrap_or(Path::new("")).join(STATS_FILE),
    };
    let stats = read_norm_stats(&stats_path)?;
    let campaign = load_campaign(&resolve_manifest(data))?;
    if campaign.k_max() > model.spec.k_max && model.spec.kind != ModelKind::Rgnn {
        return Err(BenchError::Usage(format!(
            "checkpoint was built for at most {} satellites but the campaign's receiver tracks {}",
            model.spec.k_max,
            campaign.k_max()
        )));
    }
    let window = model.spec.window;
    let mut samples = Vec::new();
    for run in &campaign.runs {
        samples.extend(window_run(run, window, window).map_err(jamgraph::trainer::TrainError::from)?);
    }
    let samples: Vec<_> = samples.iter().map(|s| stats.apply(s)).collect();
    Ok(evaluate(&model, &samples, &stats)?)
}
