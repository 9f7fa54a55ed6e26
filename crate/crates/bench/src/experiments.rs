//! The experiment suites: overall tables, ablation surfaces, split sweeps and
//! pooled datasets.

use std::fs;
use std::path::{Path, PathBuf};

use jamgraph::dataio::{
    read_curves, read_results, read_surface, write_curves, write_results, write_surface, CurvePoint, DatasetLabel, ResultsTable,
    SeedResult, Surface, SurfaceCell,
};
use jamgraph::models::ModelKind;
use jamgraph::sim::{JamMode, Receiver, TimeSeriesRun, POWER_LEVELS_DBM};
use jamgraph::trainer::{evaluate, mean_baseline, mean_sd, split_runs, train, Datasets, Metrics, RunSplit, SplitSpec};
use log::info;

use crate::config::RunConfig;
use crate::data::{ensure_mixed, ensure_scenario, Campaign};
use crate::error::{BenchError, Result};
use crate::jobs::run_jobs;
use crate::repro::ReproManifest;
use crate::svg::{emit_lines_svg, emit_surface_svg};

pub const ABLATION_WINDOWS: [usize; 10] = [5, 10, 14, 20, 28, 35, 40, 56, 70, 140];
pub const ABLATION_HIDDEN: [usize; 5] = [16, 32, 64, 128, 256];
pub const SWEEP_TRAIN_FRACTIONS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
pub const SWEEP_REPEATS: usize = 3;

/// Scale settings shared by every suite.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub name: String,
    /// Runs per generated campaign.
    pub repetitions: usize,
    pub seeds: Vec<u64>,
    pub data_seed: u64,
    /// Seed of the fixed run split used outside the split sweep.
    pub split_seed: u64,
    pub hidden_dim: usize,
    pub width: usize,
    pub max_epochs: usize,
    pub ablation_windows: Vec<usize>,
    pub ablation_hidden: Vec<usize>,
    pub sweep_fractions: Vec<f64>,
    pub sweep_repeats: usize,
}

impl Profile {
    /// Laptop scale: fewer runs and seeds, smaller models, capped epochs.
    pub fn desk() -> Self {
        Self {
            name: "desk".into(),
            repetitions: 20,
            seeds: vec![0, 1, 2],
            data_seed: 1,
            split_seed: 0,
            hidden_dim: 64,
            width: 64,
            max_epochs: 30,
            ablation_windows: ABLATION_WINDOWS.to_vec(),
            ablation_hidden: vec![16, 64],
            sweep_fractions: SWEEP_TRAIN_FRACTIONS.to_vec(),
            sweep_repeats: SWEEP_REPEATS,
        }
    }

    /// Full scale: 50 runs, five seeds, full-size models and grid.
    pub fn full() -> Self {
        Self {
            name: "full".into(),
            repetitions: 50,
            seeds: vec![0, 1, 2, 3, 4],
            hidden_dim: 256,
            width: 256,
            max_epochs: 200,
            ablation_hidden: ABLATION_HIDDEN.to_vec(),
            ..Self::desk()
        }
    }

    /// Default run configuration at this profile's scale.
    pub fn run_config(&self) -> RunConfig {
        let mut cfg = RunConfig {
            hidden_dim: self.hidden_dim,
            width: self.width,
            ..RunConfig::default()
        };
        cfg.train.max_epochs = self.max_epochs;
        cfg
    }
}

/// Where and how experiments run.
#[derive(Debug, Clone)]
pub struct Bench {
    pub workdir: PathBuf,
    pub workers: usize,
    pub profile: Profile,
    pub config: RunConfig,
}

impl Bench {
    pub fn new(workdir: impl Into<PathBuf>, profile: Profile) -> Self {
        let config = profile.run_config();
        Self {
            workdir: workdir.into(),
            workers: 1,
            profile,
            config,
        }
    }

    pub fn data_root(&self) -> PathBuf {
        self.workdir.join("data")
    }

    pub fn scenario(&self, receiver: Receiver, mode: JamMode, power_dbm: f64) -> Result<Campaign> {
        ensure_scenario(
            &self.data_root(),
            receiver,
            mode,
            power_dbm,
            self.profile.repetitions,
            self.profile.data_seed,
        )
    }

    pub fn pooled(&self, receiver: Receiver, powers: &[f64]) -> Result<Campaign> {
        ensure_mixed(
            &self.data_root(),
            receiver,
            powers,
            self.profile.repetitions,
            self.profile.data_seed,
        )
    }

    fn out_dir(&self, out: &Path) -> Result<PathBuf> {
        let dir = self.workdir.join(out);
        fs::create_dir_all(&dir).map_err(|e| BenchError::io(&dir, e))?;
        Ok(dir)
    }

    fn repro(&self, experiment: &str, campaigns: &[&Campaign]) -> Result<ReproManifest> {
        let mut r = ReproManifest::new(experiment, &self.profile.name, &self.config, &self.profile.seeds);
        r.setting("repetitions", self.profile.repetitions);
        r.setting("data_seed", self.profile.data_seed);
        r.setting("split_seed", self.profile.split_seed);
        for c in campaigns {
            r.add_data(&self.workdir, &c.files())?;
        }
        Ok(r)
    }
}

/// Test metrics of one trained model and of the train-mean predictor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub metrics: Metrics,
    pub baseline: Metrics,
    pub epochs: usize,
    pub best_epoch: usize,
}

/// Windows, normalizes, trains and evaluates one model on one split.
pub fn fit_and_evaluate(
    runs: &[TimeSeriesRun],
    split: &RunSplit,
    kind: ModelKind,
    k_max: usize,
    cfg: &RunConfig,
    seed: u64,
) -> Result<FitResult> {
    let mut train_cfg = cfg.train.clone();
    train_cfg.seed = seed;
    let ds = Datasets::build(runs, split, train_cfg.window, train_cfg.stride)?;
    if ds.val.is_empty() || ds.test.is_empty() {
        return Err(BenchError::MissingData(format!(
            "window {} leaves no validation or test samples",
            train_cfg.window
        )));
    }
    let spec = cfg.model_spec(kind, k_max)?;
    let outcome = train(spec, &ds.train, &ds.val, &train_cfg)?;
    let metrics = evaluate(&outcome.model, &ds.test, &ds.stats)?;
    let baseline = mean_baseline(&ds.train_targets_cm(), &ds.test, &ds.stats)
        .ok_or_else(|| BenchError::Invariant("empty training targets after a successful fit".into()))?;
    Ok(FitResult {
        metrics,
        baseline,
        epochs: outcome.history.len(),
        best_epoch: outcome.best_epoch,
    })
}

/// Label shared by every run of a campaign; a component that varies is pooled.
pub fn campaign_label(campaign: &Campaign) -> Result<DatasetLabel> {
    let first = campaign
        .runs
        .first()
        .ok_or_else(|| BenchError::MissingData(format!("{} lists no runs", campaign.manifest_path.display())))?;
    let c = first.config;
    if campaign.runs.iter().any(|r| r.config.receiver != c.receiver) {
        return Err(BenchError::MissingData(format!(
            "{} mixes receivers",
            campaign.manifest_path.display()
        )));
    }
    Ok(DatasetLabel {
        receiver: c.receiver,
        mode: campaign.runs.iter().all(|r| r.config.mode == c.mode).then_some(c.mode),
        power_dbm: campaign
            .runs
            .iter()
            .all(|r| r.config.power_dbm == c.power_dbm)
            .then_some(c.power_dbm),
    })
}

/// Writes `table` and confirms the file parses back to the same table.
pub fn write_results_checked(table: &ResultsTable, path: &Path) -> Result<()> {
    write_results(table, path)?;
    if read_results(path)? != *table {
        return Err(BenchError::Invariant(format!("{} does not re-read losslessly", path.display())));
    }
    Ok(())
}

fn label_tag(label: &DatasetLabel) -> String {
    let power = label.power_dbm.map_or("all".to_string(), |p| {
        if p < 0.0 {
            format!("m{}", -p)
        } else {
            p.to_string()
        }
    });
    let mode = label.mode.map_or("mixed".to_string(), |m| m.to_string());
    format!("{}_{mode}_{power}", label.receiver)
}

struct FitJob<'a> {
    campaign: usize,
    label: DatasetLabel,
    kind: ModelKind,
    seed: u64,
    cfg: &'a RunConfig,
}

fn table_jobs(bench: &Bench, campaigns: &[Campaign], jobs: &[FitJob<'_>]) -> Result<ResultsTable> {
    let splits = campaigns
        .iter()
        .map(|c| split_runs(c.runs.len(), &SplitSpec::default(), bench.profile.split_seed))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let results = run_jobs(jobs, bench.workers, |j| {
        let c = &campaigns[j.campaign];
        let r = fit_and_evaluate(&c.runs, &splits[j.campaign], j.kind, c.k_max(), j.cfg, j.seed)?;
        info!(
            "{} {} seed {}: {:.3} cm (train mean {:.3} cm, {} epochs)",
            j.label, j.kind, j.seed, r.metrics.euclid_mae_cm, r.baseline.euclid_mae_cm, r.epochs
        );
        Ok(r)
    })?;
    let rows = jobs
        .iter()
        .zip(results)
        .map(|(j, r)| SeedResult {
            label: j.label,
            model: j.kind.as_str().to_string(),
            seed: j.seed,
            metrics: r.metrics,
        })
        .collect();
    Ok(ResultsTable::from_rows(rows))
}

/// Every (receiver, mode, power) combination matching the filters; an empty
/// filter selects everything the receiver supports.
pub fn select_scenarios(receivers: &[Receiver], modes: &[JamMode], powers: &[f64]) -> Vec<(Receiver, JamMode, f64)> {
    let receivers = if receivers.is_empty() { &Receiver::ALL[..] } else { receivers };
    let mut out = Vec::new();
    for &r in receivers {
        for &m in r.supported_modes() {
            if !modes.is_empty() && !modes.contains(&m) {
                continue;
            }
            for p in POWER_LEVELS_DBM {
                if powers.is_empty() || powers.contains(&p) {
                    out.push((r, m, p));
                }
            }
        }
    }
    out
}

/// Trains every model on every scenario for each profile seed and writes
/// `results.csv` plus a reproduction manifest into `out`.
pub fn run_overall(bench: &Bench, models: &[ModelKind], scenarios: &[(Receiver, JamMode, f64)], out: &Path) -> Result<ResultsTable> {
    if models.is_empty() || scenarios.is_empty() {
        return Err(BenchError::Usage("overall needs at least one model and one scenario".into()));
    }
    let campaigns = scenarios
        .iter()
        .map(|&(r, m, p)| bench.scenario(r, m, p))
        .collect::<Result<Vec<_>>>()?;
    let mut jobs = Vec::new();
    for (ci, &(r, m, p)) in scenarios.iter().enumerate() {
        for &kind in models {
            for &seed in &bench.profile.seeds {
                jobs.push(FitJob {
                    campaign: ci,
                    label: DatasetLabel::scenario(r, m, p),
                    kind,
                    seed,
                    cfg: &bench.config,
                });
            }
        }
    }
    let table = table_jobs(bench, &campaigns, &jobs)?;
    let dir = bench.out_dir(out)?;
    let path = dir.join("results.csv");
    write_results_checked(&table, &path)?;
    let mut repro = bench.repro("overall", &campaigns.iter().collect::<Vec<_>>())?;
    repro.add_output(&bench.workdir, &path)?;
    repro.write(&dir)?;
    Ok(table)
}

/// Every model on each receiver's pool of all modes and power levels.
pub fn run_mixed(bench: &Bench, models: &[ModelKind], receivers: &[Receiver], out: &Path) -> Result<ResultsTable> {
    if models.is_empty() || receivers.is_empty() {
        return Err(BenchError::Usage("mixed needs at least one model and one receiver".into()));
    }
    let campaigns = receivers
        .iter()
        .map(|&r| bench.pooled(r, &POWER_LEVELS_DBM))
        .collect::<Result<Vec<_>>>()?;
    let mut jobs = Vec::new();
    for (ci, c) in campaigns.iter().enumerate() {
        let label = campaign_label(c)?;
        for &kind in models {
            for &seed in &bench.profile.seeds {
                jobs.push(FitJob {
                    campaign: ci,
                    label,
                    kind,
                    seed,
                    cfg: &bench.config,
                });
            }
        }
    }
    let table = table_jobs(bench, &campaigns, &jobs)?;
    let dir = bench.out_dir(out)?;
    let path = dir.join("results.csv");
    write_results_checked(&table, &path)?;
    let mut repro = bench.repro("mixed", &campaigns.iter().collect::<Vec<_>>())?;
    repro.add_output(&bench.workdir, &path)?;
    repro.write(&dir)?;
    Ok(table)
}

/// rGNN MAE over the profile's (window, hidden dim) grid for each scenario.
/// Windows tile runs without overlap. Writes one CSV and one SVG per scenario.
pub fn run_ablation(bench: &Bench, scenarios: &[(Receiver, JamMode, f64)], out: &Path) -> Result<Vec<Surface>> {
    let p = &bench.profile;
    if scenarios.is_empty() || p.ablation_windows.is_empty() || p.ablation_hidden.is_empty() {
        return Err(BenchError::Usage("ablation needs scenarios, windows and hidden dims".into()));
    }
    let campaigns = scenarios
        .iter()
        .map(|&(r, m, pw)| bench.scenario(r, m, pw))
        .collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::new();
    for ci in 0..scenarios.len() {
        for &w in &p.ablation_windows {
            for &h in &p.ablation_hidden {
                let mut cfg = bench.config.clone();
                cfg.train.window = w;
                cfg.train.stride = w;
                cfg.hidden_dim = h;
                cells.push((ci, cfg));
            }
        }
    }
    let mut cell_of = Vec::new();
    let mut fit_jobs = Vec::new();
    for (k, (ci, cfg)) in cells.iter().enumerate() {
        let (r, m, pw) = scenarios[*ci];
        for &seed in &p.seeds {
            cell_of.push(k);
            fit_jobs.push(FitJob {
                campaign: *ci,
                label: DatasetLabel::scenario(r, m, pw),
                kind: ModelKind::Rgnn,
                seed,
                cfg,
            });
        }
    }
    let table = table_jobs(bench, &campaigns, &fit_jobs)?;

    let dir = bench.out_dir(out)?;
    let mut repro = bench.repro("ablation", &campaigns.iter().collect::<Vec<_>>())?;
    let mut surfaces = Vec::new();
    for (ci, &(r, m, pw)) in scenarios.iter().enumerate() {
        let label = DatasetLabel::scenario(r, m, pw);
        let mut surface_cells = Vec::new();
        for (k, (cell_ci, cfg)) in cells.iter().enumerate() {
            if *cell_ci != ci {
                continue;
            }
            let maes: Vec<f64> = cell_of
                .iter()
                .zip(&table.rows)
                .filter(|(&jk, _)| jk == k)
                .map(|(_, row)| row.metrics.euclid_mae_cm)
                .collect();
            let (mae_cm, sd_cm) = mean_sd(&maes);
            surface_cells.push(SurfaceCell {
                window: cfg.train.window,
                hidden_dim: cfg.hidden_dim,
                seeds: maes.len(),
                mae_cm,
                sd_cm,
            });
        }
        let surface = Surface {
            label,
            cells: surface_cells,
        };
        let stem = format!("surface_{}", label_tag(&label));
        let csv = dir.join(format!("{stem}.csv"));
        write_surface(&surface, &csv)?;
        if read_surface(&csv)? != surface {
            return Err(BenchError::Invariant(format!("{} does not re-read losslessly", csv.display())));
        }
        let svg = dir.join(format!("{stem}.svg"));
        emit_surface_svg(&surface, &svg)?;
        repro.add_output(&bench.workdir, &csv)?;
        repro.add_output(&bench.workdir, &svg)?;
        surfaces.push(surface);
    }
    repro.write(&dir)?;
    Ok(surfaces)
}

/// Mean MAE per (model, train fraction) over repeated split seeds on each
/// receiver's worst-case pool. Writes one CSV and one SVG per receiver.
pub fn run_split_sweep(bench: &Bench, models: &[ModelKind], receivers: &[Receiver], out: &Path) -> Result<Vec<CurvePoint>> {
    let p = &bench.profile;
    if models.is_empty() || receivers.is_empty() || p.sweep_fractions.is_empty() || p.sweep_repeats == 0 {
        return Err(BenchError::Usage("split sweep needs models, receivers, fractions and repeats".into()));
    }
    let campaigns = receivers
        .iter()
        .map(|&r| bench.pooled(r, &POWER_LEVELS_DBM[..1]))
        .collect::<Result<Vec<_>>>()?;

    struct SweepJob {
        campaign: usize,
        fraction: f64,
        kind: ModelKind,
        repeat: u64,
    }
    let mut jobs = Vec::new();
    for ci in 0..campaigns.len() {
        for &kind in models {
            for &fraction in &p.sweep_fractions {
                for repeat in 0..p.sweep_repeats as u64 {
                    jobs.push(SweepJob {
                        campaign: ci,
                        fraction,
                        kind,
                        repeat,
                    });
                }
            }
        }
    }
    let maes = run_jobs(&jobs, bench.workers, |j| {
        let c = &campaigns[j.campaign];
        let spec = SplitSpec {
            test_fraction: 1.0 - j.fraction,
            ..SplitSpec::default()
        };
        let split = split_runs(c.runs.len(), &spec, j.repeat)?;
        let r = fit_and_evaluate(&c.runs, &split, j.kind, c.k_max(), &bench.config, j.repeat)?;
        info!(
            "{} {} train {:.1} repeat {}: {:.3} cm",
            receivers[j.campaign], j.kind, j.fraction, j.repeat, r.metrics.euclid_mae_cm
        );
        Ok(r.metrics.euclid_mae_cm)
    })?;

    let dir = bench.out_dir(out)?;
    let mut repro = bench.repro("sweep-splits", &campaigns.iter().collect::<Vec<_>>())?;
    repro.setting("sweep_repeats", p.sweep_repeats);
    let mut all = Vec::new();
    for (ci, &receiver) in receivers.iter().enumerate() {
        let mut points = Vec::new();
        for &kind in models {
            for &fraction in &p.sweep_fractions {
                let vals: Vec<f64> = jobs
                    .iter()
                    .zip(&maes)
                    .filter(|(j, _)| j.campaign == ci && j.kind == kind && j.fraction == fraction)
                    .map(|(_, &m)| m)
                    .collect();
                points.push(CurvePoint {
                    receiver,
                    model: kind.as_str().to_string(),
                    train_fraction: fraction,
                    repeats: vals.len(),
                    mae_cm: mean_sd(&vals).0,
                });
            }
        }
        let csv = dir.join(format!("curves_{receiver}.csv"));
        write_curves(&points, &csv)?;
        if read_curves(&csv)? != points {
            return Err(BenchError::Invariant(format!("{} does not re-read losslessly", csv.display())));
        }
        let svg = dir.join(format!("curves_{receiver}.svg"));
        emit_lines_svg(&points, &svg)?;
        repro.add_output(&bench.workdir, &csv)?;
        repro.add_output(&bench.workdir, &svg)?;
        all.extend(points);
    }
    repro.write(&dir)?;
    Ok(all)
}

/// Steps along a curve that rise, i.e. break a monotone decrease.
pub fn rising_steps(values: &[f64]) -> usize {
    values.windows(2).filter(|w| w[1] > w[0]).count()
}
