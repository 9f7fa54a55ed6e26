use jamgraph::sim::*;
use proptest::prelude::*;

fn cfg(receiver: Receiver, mode: JamMode, power: f64, reps: usize, seed: u64) -> ScenarioConfig {
    ScenarioConfig::new(receiver, mode, power, reps, seed).unwrap()
}

fn mean_snr(run: &TimeSeriesRun, range: std::ops::Range<usize>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for e in &run.epochs[range] {
        for s in &e.sats {
            sum += s.snr_db;
            n += 1;
        }
    }
    sum / n.max(1) as f64
}

fn mean_jam_deviation(runs: &[TimeSeriesRun]) -> f64 {
    let mut sum = 0.0;
    let mut n = 0;
    for r in runs {
        for e in &r.epochs[100..200] {
            sum += e.dev_lat_cm.hypot(e.dev_lon_cm);
            n += 1;
        }
    }
    sum / n as f64
}

#[test]
fn zero_severity_keeps_every_satellite() {
    let run = simulate_run(&cfg(Receiver::Gp01, JamMode::Cw, -70.0, 1, 4), 0).unwrap();
    let count = run.epochs[0].sats.len();
    assert!((8..=20).contains(&count));
    assert!(run.epochs.iter().all(|e| e.sats.len() == count));
}

#[test]
fn jamming_lowers_snr() {
    let run = simulate_run(&cfg(Receiver::Ublox10, JamMode::Cw, -45.0, 1, 4), 0).unwrap();
    assert!(mean_snr(&run, 100..200) < mean_snr(&run, 0..100));
    let jam_count: usize = run.epochs[100..200].iter().map(|e| e.sats.len()).sum();
    let clean_count: usize = run.epochs[0..100].iter().map(|e| e.sats.len()).sum();
    assert!(jam_count < clean_count);
}

#[test]
fn runs_are_reproducible() {
    let c = cfg(Receiver::Ublox10, JamMode::Fm, -50.0, 3, 99);
    let a = simulate_run(&c, 2).unwrap();
    let b = simulate_run(&c, 2).unwrap();
    assert_eq!(a, b);
    let other = simulate_run(&c, 1).unwrap();
    assert_ne!(a, other);
}

#[test]
fn campaign_indices() {
    let c = cfg(Receiver::Gp01, JamMode::Cw3, -55.0, 50, 1);
    let runs = generate_campaign(&c).unwrap();
    assert_eq!(runs.len(), 50);
    for (i, r) in runs.iter().enumerate() {
        assert_eq!(r.repetition_idx, i);
        assert_eq!(r.epochs.len(), EPOCHS_PER_RUN);
    }
    let single = generate_campaign(&cfg(Receiver::Gp01, JamMode::Cw3, -55.0, 1, 1)).unwrap();
    assert_eq!(single.len(), 1);
    assert_eq!(single[0].epochs, runs[0].epochs);
}

#[test]
fn clean_phase_carries_no_attenuation() {
    // The noise stream depends only on (seed, repetition), so the clean phase
    // must be identical whatever the jammer does later.
    let quiet = simulate_run(&cfg(Receiver::Ublox10, JamMode::Cw, -70.0, 1, 12), 0).unwrap();
    for mode in JamMode::ALL {
        let loud = simulate_run(&cfg(Receiver::Ublox10, mode, -45.0, 1, 12), 0).unwrap();
        assert_eq!(&loud.epochs[..100], &quiet.epochs[..100]);
        assert_ne!(&loud.epochs[100..200], &quiet.epochs[100..200]);
    }
}

#[test]
fn recovery_decays_toward_clean() {
    let runs = generate_campaign(&cfg(Receiver::Ublox10, JamMode::Cw, -45.0, 10, 3)).unwrap();
    let late: f64 = runs.iter().map(|r| mean_snr(r, 250..280)).sum::<f64>() / 10.0;
    let early: f64 = runs.iter().map(|r| mean_snr(r, 200..215)).sum::<f64>() / 10.0;
    let jam: f64 = runs.iter().map(|r| mean_snr(r, 100..200)).sum::<f64>() / 10.0;
    let clean: f64 = runs.iter().map(|r| mean_snr(r, 0..100)).sum::<f64>() / 10.0;
    assert!(jam < early && early < late, "{jam} {early} {late}");
    assert!((late - clean).abs() < 1.5, "{late} vs {clean}");
}

#[test]
fn deviation_grows_with_power() {
    let mut prev = 0.0;
    for power in [-70.0, -65.0, -60.0, -55.0, -50.0, -45.0] {
        let runs = generate_campaign(&cfg(Receiver::Gp01, JamMode::Cw, power, 10, 8)).unwrap();
        let m = mean_jam_deviation(&runs);
        assert!(m >= prev, "power {power}: {m} < {prev}");
        prev = m;
    }
}

#[test]
fn cw3_is_harder_than_cw() {
    for receiver in Receiver::ALL {
        let cw = generate_campaign(&cfg(receiver, JamMode::Cw, -45.0, 30, 5)).unwrap();
        let cw3 = generate_campaign(&cfg(receiver, JamMode::Cw3, -45.0, 30, 5)).unwrap();
        assert!(mean_jam_deviation(&cw3) > mean_jam_deviation(&cw));
    }
}

#[test]
fn mixed_labels() {
    let runs = generate_mixed(Receiver::Gp01, &[-45.0], 3, 50).unwrap();
    assert_eq!(runs.len(), 50);
    assert!(runs.iter().all(|r| r.config.power_dbm == -45.0));
    assert!(runs.iter().all(|r| matches!(r.config.mode, JamMode::Cw | JamMode::Cw3)));
    assert!(runs.iter().any(|r| r.config.mode == JamMode::Cw));
    assert!(runs.iter().any(|r| r.config.mode == JamMode::Cw3));

    let all = generate_mixed(Receiver::Ublox10, &POWER_LEVELS_DBM, 3, 50).unwrap();
    assert!(all.iter().any(|r| r.config.mode == JamMode::Fm));
    let labels = |rs: &[TimeSeriesRun]| rs.iter().map(|r| (r.config.mode, r.config.power_dbm)).collect::<Vec<_>>();
    let again = generate_mixed(Receiver::Ublox10, &POWER_LEVELS_DBM, 3, 50).unwrap();
    assert_eq!(labels(&all), labels(&again));

    assert_eq!(generate_mixed(Receiver::Gp01, &[], 3, 50), Err(SimError::EmptyPowerSet));
    assert!(generate_mixed(Receiver::Gp01, &[-44.0], 3, 50).is_err());
}

#[test]
fn validation_catches_breaches() {
    let mut run = simulate_run(&cfg(Receiver::Gp01, JamMode::Cw, -45.0, 1, 2), 0).unwrap();
    run.validate().unwrap();
    let mut gap = run.clone();
    gap.epochs[10].t = 11;
    assert!(matches!(gap.validate(), Err(SimError::Invariant { name: "epochs contiguous", .. })));
    if let Some(s) = run.epochs[5].sats.first_mut() {
        s.elevation_deg = 95.0;
    }
    assert!(matches!(run.validate(), Err(SimError::Invariant { name: "elevation range", .. })));
}

fn any_config() -> impl Strategy<Value = ScenarioConfig> {
    (0usize..30, any::<u64>()).prop_map(|(i, seed)| {
        let (r, m, p) = all_scenarios()[i];
        ScenarioConfig::new(r, m, p, 1, seed).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn generated_runs_satisfy_invariants(config in any_config(), rep in 0usize..60) {
        let run = simulate_run(&config, rep).unwrap();
        prop_assert!(run.validate().is_ok());
        let universe = run.satellites();
        prop_assert!(universe.len() <= config.receiver.max_satellites());
        for e in &run.epochs {
            let dlat = (e.est_lat_deg - 46.05) / 9.0e-8;
            prop_assert!((dlat - e.dev_lat_cm).abs() < 1e-5);
        }
    }
}
