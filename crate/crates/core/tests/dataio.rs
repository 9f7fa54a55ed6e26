use std::path::{Path, PathBuf};

use jamgraph::dataio::*;
use jamgraph::graph::{Feature, NormStats};
use jamgraph::sim::*;
use jamgraph::trainer::{EpochRecord, Metrics};
use proptest::prelude::*;
use proptest::test_runner::Config;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn receiver() -> impl Strategy<Value = Receiver> {
    prop::sample::select(Receiver::ALL.to_vec())
}

fn scenario() -> impl Strategy<Value = (Receiver, JamMode, f64)> {
    prop::sample::select(all_scenarios())
}

fn label() -> impl Strategy<Value = DatasetLabel> {
    (scenario(), any::<bool>(), any::<bool>()).prop_map(|((r, m, p), pool_mode, pool_power)| DatasetLabel {
        receiver: r,
        mode: (!pool_mode).then_some(m),
        power_dbm: (!pool_power).then_some(p),
    })
}

/// Finite floats over many magnitudes, including subnormals and signed zero.
fn float() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        -1e3..1e3f64,
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE / 4.0),
    ]
}

fn metrics() -> impl Strategy<Value = Metrics> {
    (float(), float(), float(), 0..10_000usize).prop_map(|(a, b, c, n)| Metrics {
        mae_lat_cm: a,
        mae_lon_cm: b,
        euclid_mae_cm: c,
        n_samples: n,
    })
}

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

/// A simulated run whose numeric fields are then overwritten with arbitrary
/// in-range values, so every float path of the format is exercised.
fn scrambled_run(receiver: Receiver, mode: JamMode, power: f64, seed: u64, rep: usize) -> TimeSeriesRun {
    let cfg = ScenarioConfig::new(receiver, mode, power, rep + 1, seed).unwrap();
    let mut run = simulate_run(&cfg, rep).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for e in run.epochs.iter_mut().step_by(7) {
        e.est_lat_deg = rng.random_range(-90.0..90.0);
        e.est_lon_deg = rng.random_range(-180.0..180.0);
        e.dev_lat_cm = rng.random::<f64>() * 10f64.powi(rng.random_range(-12..6));
        e.dev_lon_cm = -rng.random::<f64>();
        for s in e.sats.iter_mut() {
            s.snr_db = rng.random_range(0.0..60.0);
            s.azimuth_deg = rng.random_range(0.0..360.0);
            s.elevation_deg = rng.random_range(0.0..=90.0);
        }
    }
    run.validate().unwrap();
    run
}

proptest! {
    #![proptest_config(Config::with_cases(48))]

    #[test]
    fn runs_round_trip((r, m, p) in scenario(), seed in any::<u64>(), rep in 0..60usize) {
        let run = scrambled_run(r, m, p, seed, rep);
        let text = format_run(&run);
        let back = parse_run(Path::new("mem.csv"), &text).unwrap();
        prop_assert_eq!(&back, &run);
        prop_assert_eq!(format_run(&back), text);
    }
}

proptest! {
    #[test]
    fn manifests_round_trip(
        kind in prop::sample::select(vec![DatasetKind::SingleScenario, DatasetKind::Mixed, DatasetKind::WorstCase]),
        entries in prop::collection::vec((scenario(), "[a-z0-9_/]{1,12}"), 1..30),
    ) {
        let manifest = CampaignManifest {
            kind,
            entries: entries
                .into_iter()
                .enumerate()
                .map(|(i, ((receiver, mode, power_dbm), name))| ManifestEntry {
                    path: PathBuf::from(format!("{name}.csv")),
                    receiver,
                    mode,
                    power_dbm,
                    repetition: i,
                })
                .collect(),
        };
        let dir = tmp();
        let path = dir.path().join("manifest.csv");
        write_manifest(&manifest, &path).unwrap();
        prop_assert_eq!(read_manifest(&path).unwrap(), manifest);
    }

    #[test]
    fn results_round_trip(rows in prop::collection::vec((label(), "[a-z0-9_]{1,10}", any::<u64>(), metrics()), 0..25)) {
        let rows: Vec<SeedResult> = rows
            .into_iter()
            .map(|(label, model, seed, metrics)| SeedResult { label, model, seed, metrics })
            .collect();
        let table = ResultsTable::from_rows(rows);
        let text = format_results(&table);
        prop_assert_eq!(parse_results(Path::new("mem.csv"), &text).unwrap(), table.clone());
        let dir = tmp();
        let path = dir.path().join("results.csv");
        write_results(&table, &path).unwrap();
        prop_assert_eq!(read_results(&path).unwrap(), table);
    }

    #[test]
    fn surfaces_round_trip(
        label in label(),
        cells in prop::collection::vec((1..300usize, 1..512usize, 1..6usize, float(), float()), 1..40),
    ) {
        let surface = Surface {
            label,
            cells: cells
                .into_iter()
                .map(|(window, hidden_dim, seeds, mae_cm, sd)| SurfaceCell {
                    window,
                    hidden_dim,
                    seeds,
                    mae_cm,
                    sd_cm: (seeds >= 2).then_some(sd),
                })
                .collect(),
        };
        let dir = tmp();
        let path = dir.path().join("surface.csv");
        write_surface(&surface, &path).unwrap();
        prop_assert_eq!(read_surface(&path).unwrap(), surface);
    }

    #[test]
    fn curves_round_trip(points in prop::collection::vec((receiver(), "[a-z0-9]{1,9}", 0.0..1.0f64, 1..5usize, float()), 0..30)) {
        let points: Vec<CurvePoint> = points
            .into_iter()
            .map(|(receiver, model, train_fraction, repeats, mae_cm)| CurvePoint { receiver, model, train_fraction, repeats, mae_cm })
            .collect();
        let dir = tmp();
        let path = dir.path().join("curves.csv");
        write_curves(&points, &path).unwrap();
        prop_assert_eq!(read_curves(&path).unwrap(), points);
    }

    #[test]
    fn norm_stats_round_trip(
        mean in prop::array::uniform7(float()),
        std in prop::array::uniform7(1e-8..1e6f64),
    ) {
        let stats = NormStats::from_parts(mean, std).unwrap();
        let dir = tmp();
        let path = dir.path().join("stats.csv");
        write_norm_stats(&stats, &path).unwrap();
        let back = read_norm_stats(&path).unwrap();
        for f in Feature::ALL {
            prop_assert_eq!(back.get(f), stats.get(f));
        }
    }

    #[test]
    fn history_round_trip(losses in prop::collection::vec((float(), float()), 0..50)) {
        let history: Vec<EpochRecord> = losses
            .into_iter()
            .enumerate()
            .map(|(i, (train_loss, val_loss))| EpochRecord { epoch: i + 1, train_loss, val_loss })
            .collect();
        let dir = tmp();
        let path = dir.path().join("history.csv");
        write_history(&history, &path).unwrap();
        prop_assert_eq!(read_history(&path).unwrap(), history);
    }
}

#[test]
fn single_seed_tables_have_no_sd_row() {
    let row = SeedResult {
        label: DatasetLabel::scenario(Receiver::Gp01, JamMode::Cw, -45.0),
        model: "rgnn".into(),
        seed: 0,
        metrics: Metrics {
            mae_lat_cm: 1.0,
            mae_lon_cm: 2.0,
            euclid_mae_cm: 2.5,
            n_samples: 280,
        },
    };
    let text = format_results(&ResultsTable::from_rows(vec![row]));
    assert_eq!(text.lines().count(), 3);
    assert!(!text.lines().any(|l| l.starts_with("sd,")));
}

#[test]
fn io_errors_name_the_file() {
    let dir = tmp();
    let missing = dir.path().join("nope.csv");
    let e = read_run(&missing).unwrap_err();
    assert!(e.to_string().contains("nope.csv"), "{e}");
    assert!(matches!(e, DataError::Io { .. }));
}

#[test]
fn manifest_rejects_duplicate_repetitions() {
    let entry = ManifestEntry {
        path: PathBuf::from("a.csv"),
        receiver: Receiver::Gp01,
        mode: JamMode::Cw,
        power_dbm: -45.0,
        repetition: 3,
    };
    let manifest = CampaignManifest {
        kind: DatasetKind::SingleScenario,
        entries: vec![entry.clone(), ManifestEntry { path: PathBuf::from("b.csv"), ..entry }],
    };
    let dir = tmp();
    assert!(write_manifest(&manifest, &dir.path().join("m.csv")).is_err());
}
