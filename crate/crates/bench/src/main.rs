use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jamgraph::models::ModelKind;
use jamgraph::sim::{JamMode, Receiver, ScenarioConfig, DEFAULT_REPETITIONS, POWER_LEVELS_DBM};
use jamgraph_bench::checks;
use jamgraph_bench::commands::{evaluate_checkpoint, train_on_campaign};
use jamgraph_bench::config::RunConfig;
use jamgraph_bench::data::{mix_to, simulate_to};
use jamgraph_bench::experiments::{run_ablation, run_mixed, run_overall, run_split_sweep, select_scenarios, Bench, Profile};
use jamgraph_bench::{BenchError, Result};

#[derive(Parser)]
#[command(name = "jamgraph", version, about = "Jamming-deviation regression workbench")]
struct Cli {
    /// Base directory for every relative path.
    #[arg(long, global = true, default_value = ".")]
    workdir: PathBuf,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate every repetition of one scenario.
    Simulate {
        #[arg(long)]
        receiver: Receiver,
        #[arg(long)]
        mode: JamMode,
        #[arg(long, allow_hyphen_values = true)]
        power: f64,
        #[arg(long, default_value_t = DEFAULT_REPETITIONS)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pool runs over a receiver's modes and the given power levels.
    Mix {
        #[arg(long)]
        receiver: Receiver,
        /// Comma-separated dBm values, `all`, or `worst` (strongest power only).
        #[arg(long, default_value = "all", allow_hyphen_values = true)]
        powers: String,
        #[arg(long, default_value_t = DEFAULT_REPETITIONS)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model on a campaign and score it on the held-out runs.
    Train {
        #[arg(long)]
        model: ModelKind,
        /// Campaign manifest or its directory.
        #[arg(long)]
        data: PathBuf,
        /// `key=value` overrides.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        split_seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a saved checkpoint on every window of a campaign.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Normalization statistics; defaults to the file beside the checkpoint.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Per-scenario tables for every model.
    Overall {
        #[command(flatten)]
        common: ExperimentArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        powers: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        modes: Vec<JamMode>,
        #[arg(long, value_delimiter = ',')]
        models: Vec<ModelKind>,
    },
    /// rGNN MAE over the window and hidden-dimension grid.
    Ablate {
        #[command(flatten)]
        common: ExperimentArgs,
        #[arg(long, value_delimiter = ',', default_value = "cw,cw3")]
        modes: Vec<JamMode>,
    },
    /// MAE against train/test split ratio on worst-case pools.
    SweepSplits {
        #[command(flatten)]
        common: ExperimentArgs,
        #[arg(long, value_delimiter = ',')]
        models: Vec<ModelKind>,
    },
    /// Every model on each receiver's pool of all modes and powers.
    Mixed {
        #[command(flatten)]
        common: ExperimentArgs,
        #[arg(long, value_delimiter = ',')]
        models: Vec<ModelKind>,
    },
    /// Finite-difference and oracle self-checks of the numeric kernel.
    Check {
        #[arg(long, default_value_t = 20)]
        instances: u64,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    out_dir: PathBuf,
    /// Full-scale profile instead of the desk profile.
    #[arg(long)]
    full: bool,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    receivers: Vec<Receiver>,
    /// Runs per generated campaign (overrides the profile).
    #[arg(long)]
    reps: Option<usize>,
    /// Number of training seeds, counted from 0 (overrides the profile).
    #[arg(long)]
    seeds: Option<u64>,
    /// Ablation hidden dimensions (overrides the profile).
    #[arg(long, value_delimiter = ',')]
    hidden_dims: Vec<usize>,
}

impl ExperimentArgs {
    fn bench(&self, workdir: &Path) -> Result<Bench> {
        let mut profile = if self.full { Profile::full() } else { Profile::desk() };
        if let Some(r) = self.reps {
            profile.repetitions = r;
        }
        if let Some(n) = self.seeds {
            profile.seeds = (0..n).collect();
        }
        if !self.hidden_dims.is_empty() {
            profile.ablation_hidden = self.hidden_dims.clone();
        }
        let mut bench = Bench::new(workdir, profile);
        bench.workers = self.workers;
        if let Some(c) = &self.config {
            bench.config.apply_file(&workdir.join(c))?;
        }
        Ok(bench)
    }

    fn receivers(&self) -> Vec<Receiver> {
        if self.receivers.is_empty() {
            Receiver::ALL.to_vec()
        } else {
            self.receivers.clone()
        }
    }
}

fn all_models(models: &[ModelKind]) -> Vec<ModelKind> {
    if models.is_empty() {
        ModelKind::ALL.to_vec()
    } else {
        models.to_vec()
    }
}

fn parse_powers(text: &str) -> Result<Vec<f64>> {
    match text {
        "all" => Ok(POWER_LEVELS_DBM.to_vec()),
        "worst" => Ok(vec![POWER_LEVELS_DBM[0]]),
        _ => text
            .split(',')
            .map(|p| {
                p.trim()
                    .parse()
                    .map_err(|_| BenchError::Usage(format!("invalid power '{p}'")))
            })
            .collect(),
    }
}

fn run(cli: Cli) -> Result<()> {
    let wd = &cli.workdir;
    match cli.command {
        Command::Simulate {
            receiver,
            mode,
            power,
            reps,
            seed,
            out,
        } => {
            let cfg = ScenarioConfig::new(receiver, mode, power, reps, seed)?;
            let manifest = simulate_to(&cfg, &wd.join(out))?;
            println!("{}", manifest.display());
        }
        Command::Mix {
            receiver,
            powers,
            runs,
            seed,
            out,
        } => {
            let manifest = mix_to(receiver, &parse_powers(&powers)?, runs, seed, &wd.join(out))?;
            println!("{}", manifest.display());
        }
        Command::Train {
            model,
            data,
            config,
            seed,
            split_seed,
            out,
        } => {
            let mut cfg = RunConfig::default();
            if let Some(c) = config {
                cfg.apply_file(&wd.join(c))?;
            }
            cfg.train.seed = seed;
            let a = train_on_campaign(&wd.join(data), model, &cfg, split_seed, &wd.join(out))?;
            println!(
                "mae_lat_cm={} mae_lon_cm={} euclid_mae_cm={} n_samples={}",
                a.metrics.mae_lat_cm, a.metrics.mae_lon_cm, a.metrics.euclid_mae_cm, a.metrics.n_samples
            );
        }
        Command::Evaluate { checkpoint, data, stats } => {
            let stats = stats.map(|s| wd.join(s));
            let m = evaluate_checkpoint(&wd.join(checkpoint), &wd.join(data), stats.as_deref())?;
            println!(
                "mae_lat_cm={} mae_lon_cm={} euclid_mae_cm={} n_samples={}",
                m.mae_lat_cm, m.mae_lon_cm, m.euclid_mae_cm, m.n_samples
            );
        }
        Command::Overall {
            common,
            powers,
            modes,
            models,
        } => {
            let bench = common.bench(wd)?;
            let scenarios = select_scenarios(&common.receivers(), &modes, &powers);
            if scenarios.is_empty() {
                return Err(BenchError::Usage("no scenario matches the receiver/mode/power filters".into()));
            }
            let table = run_overall(&bench, &all_models(&models), &scenarios, &common.out_dir)?;
            println!("{} result rows written to {}", table.rows.len(), common.out_dir.display());
        }
        Command::Ablate { common, modes } => {
            let bench = common.bench(wd)?;
            let scenarios = select_scenarios(&common.receivers(), &modes, &POWER_LEVELS_DBM[..1]);
            if scenarios.is_empty() {
                return Err(BenchError::Usage("no scenario matches the receiver/mode filters".into()));
            }
            let surfaces = run_ablation(&bench, &scenarios, &common.out_dir)?;
            println!("{} surfaces written to {}", surfaces.len(), common.out_dir.display());
        }
        Command::SweepSplits { common, models } => {
            let bench = common.bench(wd)?;
            let points = run_split_sweep(&bench, &all_models(&models), &common.receivers(), &common.out_dir)?;
            println!("{} curve points written to {}", points.len(), common.out_dir.display());
        }
        Command::Mixed { common, models } => {
            let bench = common.bench(wd)?;
            let table = run_mixed(&bench, &all_models(&models), &common.receivers(), &common.out_dir)?;
            println!("{} result rows written to {}", table.rows.len(), common.out_dir.display());
        }
        Command::Check { instances } => {
            let results = checks::run_all(instances);
            let mut failed = 0;
            for r in &results {
                let status = if r.passed() { "PASS" } else { "FAIL" };
                println!("{status} {}: worst {:.3e} (tol {:.0e}) {}", r.name, r.worst, r.tolerance, r.note);
                failed += usize::from(!r.passed());
            }
            if failed > 0 {
                return Err(BenchError::Invariant(format!("{failed} self-checks failed")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => ExitCode::from(3),
    }
}
