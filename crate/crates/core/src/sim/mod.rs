//! Synthetic GNSS jamming campaigns.
//!
//! Each run is 280 one-second epochs: 100 s clean, 100 s with the jammer on,
//! 80 s of recovery. Jamming attenuates satellite SNR, makes weak satellites
//! drop out of tracking, and inflates the position deviation. All noise comes
//! from a generator seeded by `(seed, repetition)` alone.

mod types;

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

pub use types::*;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("jammer power {0} dBm outside [-70, -45]")]
    PowerOutOfRange(f64),
    #[error("jammer power {0} dBm is not one of the campaign levels")]
    InvalidPower(f64),
    #[error("{receiver} does not support jamming mode {mode}")]
    UnsupportedMode { receiver: Receiver, mode: JamMode },
    #[error("repetitions must be at least 1")]
    ZeroRepetitions,
    #[error("power set must be non-empty")]
    EmptyPowerSet,
    #[error("unknown {0}")]
    UnknownLabel(String),
    #[error("invariant '{name}' violated: {detail}")]
    Invariant { name: &'static str, detail: String },
}

/// Every tunable constant of the generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConstants {
    /// Peak attenuation at full severity (dB).
    pub attenuation_db: f64,
    /// Extra attenuation of the three-tone jammer (dB).
    pub cw3_extra_db: f64,
    /// Per-constellation gains drawn once per run for cw3.
    pub cw3_gains: [f64; 3],
    /// Sweep period of the FM jammer (s).
    pub fm_period_s: f64,
    pub dropout_snr_db: f64,
    pub dropout_prob: f64,
    pub clean_dev_std_cm: f64,
    pub mean_reversion: f64,
    pub jam_dev_gain_cm: f64,
    pub difficulty_cw: f64,
    pub difficulty_cw3: f64,
    pub difficulty_fm: f64,
    pub snr_base_db: f64,
    pub snr_elevation_gain_db: f64,
    pub snr_noise_db: f64,
    pub recovery_tau_s: f64,
    pub azimuth_drift_deg_s: f64,
    pub elevation_drift_deg_s: f64,
    pub min_satellites: usize,
    pub cm_to_deg: f64,
    pub site_lat_deg: f64,
    pub site_lon_deg: f64,
}

impl Default for SimConstants {
    fn default() -> Self {
        Self {
            attenuation_db: 25.0,
            cw3_extra_db: 5.0,
            cw3_gains: [0.8, 1.0, 1.2],
            fm_period_s: 20.0,
            dropout_snr_db: 12.0,
            dropout_prob: 0.8,
            clean_dev_std_cm: 1.0,
            mean_reversion: 0.2,
            jam_dev_gain_cm: 30.0,
            difficulty_cw: 1.0,
            difficulty_cw3: 1.5,
            difficulty_fm: 1.2,
            snr_base_db: 30.0,
            snr_elevation_gain_db: 15.0,
            snr_noise_db: 1.0,
            recovery_tau_s: 15.0,
            azimuth_drift_deg_s: 0.1,
            elevation_drift_deg_s: 0.02,
            min_satellites: 8,
            cm_to_deg: 9.0e-8,
            site_lat_deg: 46.05,
            site_lon_deg: 14.51,
        }
    }
}

impl SimConstants {
    pub fn difficulty(&self, mode: JamMode) -> f64 {
        match mode {
            JamMode::Cw => self.difficulty_cw,
            JamMode::Cw3 => self.difficulty_cw3,
            JamMode::Fm => self.difficulty_fm,
        }
    }
}

/// Random quantities fixed for a whole run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JamDraws {
    /// Phase offset of the FM sweep (rad).
    pub fm_phase: f64,
    /// cw3 gain per constellation, indexed by [`Constellation::index`].
    pub cw3_gain: [f64; 5],
}

impl JamDraws {
    pub fn neutral() -> Self {
        Self {
            fm_phase: 0.0,
            cw3_gain: [1.0; 5],
        }
    }

    fn draw<R: Rng>(rng: &mut R, consts: &SimConstants) -> Self {
        let fm_phase = rng.random_range(0.0..2.0 * PI);
        let mut cw3_gain = [1.0; 5];
        for g in &mut cw3_gain {
            *g = consts.cw3_gains[rng.random_range(0..consts.cw3_gains.len())];
        }
        Self { fm_phase, cw3_gain }
    }
}

/// Linear map of the jammer power onto `[0, 1]`: -70 dBm is 0, -45 dBm is 1.
pub fn severity_from_power(power_dbm: f64) -> Result<f64, SimError> {
    if !(-70.0..=-45.0).contains(&power_dbm) {
        return Err(SimError::PowerOutOfRange(power_dbm));
    }
    Ok((power_dbm + 70.0) / 25.0)
}

/// SNR attenuation (dB) applied to `sat` at `t_in_jam` seconds into the jam phase.
pub fn jam_envelope(
    mode: JamMode,
    t_in_jam: f64,
    severity: f64,
    sat: &SatObservation,
    draws: &JamDraws,
    consts: &SimConstants,
) -> f64 {
    let a = consts.attenuation_db;
    let att = match mode {
        JamMode::Cw => a * severity,
        JamMode::Cw3 => (a + consts.cw3_extra_db) * severity * draws.cw3_gain[sat.id.constellation.index()],
        JamMode::Fm => {
            let sweep = (2.0 * PI * t_in_jam / consts.fm_period_s + draws.fm_phase).sin();
            a * severity * (0.5 + 0.5 * sweep)
        }
    };
    att.max(0.0)
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic mix of two integers into a generator seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix(seed ^ splitmix(stream.wrapping_add(GOLDEN)))
}

struct SatTrack {
    id: SatId,
    azimuth0: f64,
    elevation0: f64,
    elevation_dir: f64,
}

impl SatTrack {
    fn geometry(&self, t: usize, consts: &SimConstants) -> (f64, f64) {
        let t = t as f64;
        let az = (self.azimuth0 + consts.azimuth_drift_deg_s * t).rem_euclid(360.0);
        let el = (self.elevation0 + self.elevation_dir * consts.elevation_drift_deg_s * t).clamp(0.0, 90.0);
        // rem_euclid can round up to exactly 360 for tiny negative inputs
        (if az >= 360.0 { 0.0 } else { az }, el)
    }
}

/// One repetition of a scenario with the default constants.
pub fn simulate_run(config: &ScenarioConfig, repetition_idx: usize) -> Result<TimeSeriesRun, SimError> {
    simulate_run_with(config, repetition_idx, &SimConstants::default())
}

pub fn simulate_run_with(
    config: &ScenarioConfig,
    repetition_idx: usize,
    consts: &SimConstants,
) -> Result<TimeSeriesRun, SimError> {
    config.validate()?;
    let severity = severity_from_power(config.power_dbm)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, repetition_idx as u64));
    let receiver = config.receiver;

    let draws = JamDraws::draw(&mut rng, consts);
    let max_sats = receiver.max_satellites();
    let n_sats = rng.random_range(consts.min_satellites.min(max_sats)..=max_sats);
    let mut pool: Vec<SatId> = receiver
        .constellations()
        .iter()
        .flat_map(|&c| (1..=c.prn_count()).map(move |prn| SatId { constellation: c, prn }))
        .collect();
    let (picked, _) = pool.partial_shuffle(&mut rng, n_sats);
    let tracks: Vec<SatTrack> = picked
        .iter()
        .map(|&id| SatTrack {
            id,
            azimuth0: rng.random_range(0.0..360.0),
            elevation0: rng.random_range(10.0..80.0),
            elevation_dir: if rng.random::<bool>() { 1.0 } else { -1.0 },
        })
        .collect();

    let jam_start = CLEAN_SECONDS;
    let jam_end = CLEAN_SECONDS + JAM_SECONDS;
    let jam_std = consts.clean_dev_std_cm + consts.jam_dev_gain_cm * severity * consts.difficulty(config.mode);
    let last_jam_t = (JAM_SECONDS - 1) as f64;

    let mut dev = [0.0_f64; 2];
    let mut epochs = Vec::with_capacity(EPOCHS_PER_RUN);
    for t in 0..EPOCHS_PER_RUN {
        let phase = Phase::of_epoch(t);
        let decay = match phase {
            Phase::Recovery => (-((t - (jam_end - 1)) as f64) / consts.recovery_tau_s).exp(),
            _ => 0.0,
        };
        let dev_std = match phase {
            Phase::Clean => consts.clean_dev_std_cm,
            Phase::Jammed => jam_std,
            Phase::Recovery => consts.clean_dev_std_cm + (jam_std - consts.clean_dev_std_cm) * decay,
        };
        for d in &mut dev {
            let eps: f64 = rng.sample(StandardNormal);
            *d = *d * (1.0 - consts.mean_reversion) + dev_std * eps;
        }

        let mut sats = Vec::with_capacity(tracks.len());
        for track in &tracks {
            let (azimuth_deg, elevation_deg) = track.geometry(t, consts);
            let noise: f64 = rng.sample(StandardNormal);
            let coin: f64 = rng.random();
            let mut obs = SatObservation {
                id: track.id,
                snr_db: 0.0,
                azimuth_deg,
                elevation_deg,
            };
            let attenuation = match phase {
                Phase::Clean => 0.0,
                Phase::Jammed => jam_envelope(config.mode, (t - jam_start) as f64, severity, &obs, &draws, consts),
                Phase::Recovery => jam_envelope(config.mode, last_jam_t, severity, &obs, &draws, consts) * decay,
            };
            let baseline = consts.snr_base_db + consts.snr_elevation_gain_db * elevation_deg.to_radians().sin();
            obs.snr_db = (baseline + consts.snr_noise_db * noise - attenuation).max(0.0);
            let dropped = obs.snr_db < consts.dropout_snr_db && coin < consts.dropout_prob;
            if !dropped {
                sats.push(obs);
            }
        }

        epochs.push(ObservationEpoch {
            t,
            est_lat_deg: consts.site_lat_deg + dev[0] * consts.cm_to_deg,
            est_lon_deg: consts.site_lon_deg + dev[1] * consts.cm_to_deg,
            dev_lat_cm: dev[0],
            dev_lon_cm: dev[1],
            sats,
        });
    }

    Ok(TimeSeriesRun {
        config: *config,
        repetition_idx,
        epochs,
    })
}

/// All repetitions `0..config.repetitions` of one scenario.
pub fn generate_campaign(config: &ScenarioConfig) -> Result<Vec<TimeSeriesRun>, SimError> {
    generate_campaign_with(config, &SimConstants::default())
}

pub fn generate_campaign_with(config: &ScenarioConfig, consts: &SimConstants) -> Result<Vec<TimeSeriesRun>, SimError> {
    config.validate()?;
    (0..config.repetitions)
        .map(|rep| simulate_run_with(config, rep, consts))
        .collect()
}

const MIX_LABEL_STREAM: u64 = 0x6D69_7865_645F_6C62;
const MIX_RUN_STREAM: u64 = 0x6D69_7865_645F_7275;

/// Runs whose (mode, power) labels are drawn uniformly from the receiver's
/// modes crossed with `powers`. Each run records its drawn labels in its config.
pub fn generate_mixed(receiver: Receiver, powers: &[f64], seed: u64, runs: usize) -> Result<Vec<TimeSeriesRun>, SimError> {
    generate_mixed_with(receiver, powers, seed, runs, &SimConstants::default())
}

pub fn generate_mixed_with(
    receiver: Receiver,
    powers: &[f64],
    seed: u64,
    runs: usize,
    consts: &SimConstants,
) -> Result<Vec<TimeSeriesRun>, SimError> {
    if powers.is_empty() {
        return Err(SimError::EmptyPowerSet);
    }
    if runs == 0 {
        return Err(SimError::ZeroRepetitions);
    }
    if let Some(&bad) = powers.iter().find(|&&p| !is_power_level(p)) {
        return Err(SimError::InvalidPower(bad));
    }
    let labels: Vec<(JamMode, f64)> = receiver
        .supported_modes()
        .iter()
        .flat_map(|&m| powers.iter().map(move |&p| (m, p)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, MIX_LABEL_STREAM));
    let run_seed = derive_seed(seed, MIX_RUN_STREAM);
    (0..runs)
        .map(|rep| {
            let (mode, power_dbm) = labels[rng.random_range(0..labels.len())];
            let cfg = ScenarioConfig::new(receiver, mode, power_dbm, runs, run_seed)?;
            simulate_run_with(&cfg, rep, consts)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sat(c: Constellation) -> SatObservation {
        SatObservation {
            id: SatId { constellation: c, prn: 3 },
            snr_db: 40.0,
            azimuth_deg: 10.0,
            elevation_deg: 45.0,
        }
    }

    #[test]
    fn severity_mapping() {
        assert_eq!(severity_from_power(-70.0).unwrap(), 0.0);
        assert_eq!(severity_from_power(-45.0).unwrap(), 1.0);
        assert_eq!(severity_from_power(-57.5).unwrap(), 0.5);
        assert_eq!(severity_from_power(-40.0), Err(SimError::PowerOutOfRange(-40.0)));
        assert!(severity_from_power(-71.0).is_err());
        let mut prev = -1.0;
        for p in [-70.0, -65.0, -60.0, -55.0, -50.0, -45.0] {
            let s = severity_from_power(p).unwrap();
            assert!(s > prev);
            prev = s;
        }
    }

    #[test]
    fn envelope_examples() {
        let c = SimConstants::default();
        let d = JamDraws::neutral();
        let s = sat(Constellation::Gps);
        for t in [0.0, 37.0, 99.0] {
            assert_eq!(jam_envelope(JamMode::Cw, t, 0.0, &s, &d, &c), 0.0);
            assert_eq!(jam_envelope(JamMode::Fm, t, 0.0, &s, &d, &c), 0.0);
            assert_eq!(jam_envelope(JamMode::Cw3, t, 0.0, &s, &d, &c), 0.0);
        }
        assert_eq!(jam_envelope(JamMode::Cw, 50.0, 1.0, &s, &d, &c), 25.0);
        let fm = jam_envelope(JamMode::Fm, 5.0, 1.0, &s, &d, &c);
        assert!((fm - 25.0).abs() < 1e-12, "{fm}");
        let mut d3 = d;
        d3.cw3_gain[Constellation::BeiDou.index()] = 1.2;
        let cw3 = jam_envelope(JamMode::Cw3, 10.0, 1.0, &sat(Constellation::BeiDou), &d3, &c);
        assert!((cw3 - 36.0).abs() < 1e-12);
    }

    #[test]
    fn thirty_scenarios() {
        let all = all_scenarios();
        assert_eq!(all.len(), 30);
        assert_eq!(all.iter().filter(|s| s.0 == Receiver::Ublox10).count(), 18);
        assert_eq!(all.iter().filter(|s| s.0 == Receiver::Gp01).count(), 12);
    }

    #[test]
    fn config_validation() {
        assert!(ScenarioConfig::new(Receiver::Gp01, JamMode::Fm, -45.0, 1, 0).is_err());
        assert!(ScenarioConfig::new(Receiver::Gp01, JamMode::Cw, -47.0, 1, 0).is_err());
        assert!(ScenarioConfig::new(Receiver::Gp01, JamMode::Cw, -45.0, 0, 0).is_err());
        assert!(ScenarioConfig::new(Receiver::Ublox10, JamMode::Fm, -45.0, 1, 0).is_ok());
    }

    #[test]
    fn labels_parse_back() {
        for r in Receiver::ALL {
            assert_eq!(r.as_str().parse::<Receiver>().unwrap(), r);
        }
        for m in JamMode::ALL {
            assert_eq!(m.to_string().parse::<JamMode>().unwrap(), m);
        }
        for c in Constellation::ALL {
            assert_eq!(c.to_string().parse::<Constellation>().unwrap(), c);
        }
        assert!("xx".parse::<JamMode>().is_err());
    }

    #[test]
    fn phase_partition() {
        assert_eq!(Phase::of_epoch(0), Phase::Clean);
        assert_eq!(Phase::of_epoch(99), Phase::Clean);
        assert_eq!(Phase::of_epoch(100), Phase::Jammed);
        assert_eq!(Phase::of_epoch(199), Phase::Jammed);
        assert_eq!(Phase::of_epoch(200), Phase::Recovery);
        assert_eq!(Phase::of_epoch(279), Phase::Recovery);
        assert_eq!(EPOCHS_PER_RUN, 280);
    }

    #[test]
    fn seeds_differ_per_stream() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }
}
