use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use jamgraph::dataio::{read_results, CurvePoint, DatasetLabel, Surface, SurfaceCell};
use jamgraph::sim::{JamMode, Receiver};
use jamgraph_bench::data::file_sha256;
use jamgraph_bench::svg::{render_lines, render_surface};

const TINY_CONFIG: &str = "hidden_dim=8\nwidth=8\nmax_epochs=2\n";

fn jamgraph(workdir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jamgraph"))
        .arg("--workdir")
        .arg(workdir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(workdir: &Path, args: &[&str]) -> String {
    let out = jamgraph(workdir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(workdir: &Path, args: &[&str]) -> i32 {
    jamgraph(workdir, args).status.code().expect("exit code")
}

fn simulate(workdir: &Path, out: &str) {
    ok(
        workdir,
        &["simulate", "--receiver", "GP01", "--mode", "cw", "--power", "-45", "--reps", "6", "--seed", "3", "--out", out],
    );
}

fn dir_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn simulation_is_bit_identical() {
    let wd = tempfile::tempdir().unwrap();
    simulate(wd.path(), "a");
    simulate(wd.path(), "b");
    let a = dir_files(&wd.path().join("a"));
    assert_eq!(a.len(), 7);
    assert_eq!(a, dir_files(&wd.path().join("b")));
}

#[test]
fn train_and_evaluate_round_trip() {
    let wd = tempfile::tempdir().unwrap();
    let p = wd.path();
    simulate(p, "data");
    fs::write(p.join("tiny.cfg"), TINY_CONFIG).unwrap();
    let train = |out: &str| {
        ok(
            p,
            &["train", "--model", "rgnn", "--data", "data", "--config", "tiny.cfg", "--seed", "2", "--out", out],
        )
    };
    let first = train("m1");
    let second = train("m2");
    assert_eq!(first, second);
    assert!(first.starts_with("mae_lat_cm="), "{first}");
    assert_eq!(dir_files(&p.join("m1")), dir_files(&p.join("m2")));

    let table = read_results(&p.join("m1/results.csv")).unwrap();
    assert_eq!(table.rows.len(), 1);
    assert_eq!(table.rows[0].seed, 2);
    assert_eq!(table.rows[0].label, DatasetLabel::scenario(Receiver::Gp01, JamMode::Cw, -45.0));

    let eval = ok(p, &["evaluate", "--checkpoint", "m1/checkpoint.txt", "--data", "data/manifest.csv"]);
    assert!(eval.contains("n_samples=168"), "{eval}");
    let explicit = ok(
        p,
        &["evaluate", "--checkpoint", "m1/checkpoint.txt", "--data", "data", "--stats", "m2/norm_stats.csv"],
    );
    assert_eq!(eval, explicit);
}

#[test]
fn exit_codes() {
    let wd = tempfile::tempdir().unwrap();
    let p = wd.path();
    assert_eq!(code(p, &["--help"]), 0);
    assert_eq!(code(p, &["train", "--model", "transformer", "--data", "x", "--out", "y"]), 1);
    assert_eq!(code(p, &["simulate", "--receiver", "GP01", "--mode", "cw", "--power", "-45", "--reps", "0", "--out", "d"]), 1);
    assert_eq!(code(p, &["train", "--model", "mlp", "--data", "missing", "--out", "y"]), 2);
    fs::write(p.join("bad.cfg"), "hidden_dim=many\n").unwrap();
    simulate(p, "data");
    assert_eq!(code(p, &["train", "--model", "mlp", "--data", "data", "--config", "bad.cfg", "--out", "y"]), 1);
    fs::write(p.join("data/run_002.csv"), "not,a,run\n").unwrap();
    assert_eq!(code(p, &["train", "--model", "mlp", "--data", "data", "--out", "y"]), 2);
}

#[test]
fn missing_data_names_the_generator() {
    let wd = tempfile::tempdir().unwrap();
    let out = jamgraph(wd.path(), &["evaluate", "--checkpoint", "c.txt", "--data", "nowhere"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("c.txt") || err.contains("nowhere"), "{err}");
    let wd2 = tempfile::tempdir().unwrap();
    simulate(wd2.path(), "d");
    fs::remove_file(wd2.path().join("d/run_004.csv")).unwrap();
    let out = jamgraph(wd2.path(), &["train", "--model", "mlp", "--data", "d", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("jamgraph simulate"));
}

#[test]
fn overall_writes_results_and_repro() {
    let wd = tempfile::tempdir().unwrap();
    let p = wd.path();
    fs::write(p.join("tiny.cfg"), TINY_CONFIG).unwrap();
    let args = |out: &'static str| {
        [
            "overall", "--out-dir", out, "--config", "tiny.cfg", "--receivers", "GP01", "--modes", "cw", "--powers", "-45",
            "--models", "mlp,rgnn", "--reps", "6", "--seeds", "1",
        ]
    };
    ok(p, &args("r1"));
    ok(p, &args("r2"));
    let results = fs::read_to_string(p.join("r1/results.csv")).unwrap();
    assert_eq!(results, fs::read_to_string(p.join("r2/results.csv")).unwrap());
    assert!(!results.lines().any(|l| l.starts_with("sd,")), "{results}");
    assert_eq!(read_results(&p.join("r1/results.csv")).unwrap().rows.len(), 2);

    let repro = fs::read_to_string(p.join("r1/repro.csv")).unwrap();
    assert!(repro.starts_with("section,key,value\n"));
    assert!(repro.contains("config,hidden_dim,8"), "{repro}");
    assert!(repro.contains("seed,0,"));
    let mut hashed = 0;
    for line in repro.lines().filter(|l| l.starts_with("data,") || l.starts_with("output,")) {
        let mut parts = line.splitn(3, ',').skip(1);
        let (file, sha) = (parts.next().unwrap(), parts.next().unwrap());
        assert_eq!(file_sha256(&p.join(file)).unwrap(), sha, "{file}");
        hashed += 1;
    }
    // Manifest, six runs and the results table.
    assert_eq!(hashed, 8);
}

fn surface() -> Surface {
    let mut cells = Vec::new();
    for (i, window) in [5, 10, 140].into_iter().enumerate() {
        for (j, hidden_dim) in [16, 64].into_iter().enumerate() {
            cells.push(SurfaceCell {
                window,
                hidden_dim,
                seeds: 3,
                mae_cm: 10.0 + i as f64 * 3.0 + j as f64,
                sd_cm: Some(0.5),
            });
        }
    }
    Surface {
        label: DatasetLabel::scenario(Receiver::Ublox10, JamMode::Cw3, -45.0),
        cells,
    }
}

fn texts(doc: &roxmltree::Document) -> Vec<String> {
    doc.descendants()
        .filter(|n| n.has_tag_name("text"))
        .filter_map(|n| n.text().map(str::to_string))
        .collect()
}

#[test]
fn surface_svg_is_labelled_xml() {
    let svg = render_surface(&surface()).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    let labels = texts(&doc);
    for needed in ["window (s)", "hidden dim", "MAE (cm)"] {
        assert!(labels.iter().any(|t| t == needed), "missing {needed}: {labels:?}");
    }
    let cells = doc.descendants().filter(|n| n.has_tag_name("rect")).count();
    assert!(cells >= 6);
}

#[test]
fn curves_svg_has_one_line_per_model() {
    let mut points = Vec::new();
    for model in ["rgnn", "mlp", "cnn"] {
        for k in 1..=9 {
            points.push(CurvePoint {
                receiver: Receiver::Gp01,
                model: model.into(),
                train_fraction: k as f64 / 10.0,
                repeats: 3,
                mae_cm: 40.0 - k as f64,
            });
        }
    }
    let svg = render_lines(&points).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(doc.descendants().filter(|n| n.has_tag_name("polyline")).count(), 3);
    let labels = texts(&doc);
    for needed in ["train fraction (split ratio)", "MAE (cm)", "rgnn", "mlp", "cnn"] {
        assert!(labels.iter().any(|t| t == needed), "missing {needed}: {labels:?}");
    }
    assert!(render_lines(&[]).is_err());
}
