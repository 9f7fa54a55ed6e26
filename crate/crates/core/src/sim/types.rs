use std::fmt;
use std::str::FromStr;

use super::SimError;

/// Jammer power levels used by every campaign, strongest first.
pub const POWER_LEVELS_DBM: [f64; 6] = [-45.0, -50.0, -55.0, -60.0, -65.0, -70.0];

pub const CLEAN_SECONDS: usize = 100;
pub const JAM_SECONDS: usize = 100;
pub const RECOVERY_SECONDS: usize = 80;
/// Epochs per run at the fixed 1 Hz rate.
pub const EPOCHS_PER_RUN: usize = CLEAN_SECONDS + JAM_SECONDS + RECOVERY_SECONDS;
pub const DEFAULT_REPETITIONS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Constellation {
    Gps,
    Glonass,
    Galileo,
    BeiDou,
    Qzss,
}

impl Constellation {
    pub const ALL: [Constellation; 5] = [
        Constellation::Gps,
        Constellation::Glonass,
        Constellation::Galileo,
        Constellation::BeiDou,
        Constellation::Qzss,
    ];

    /// Highest PRN / slot number handed out for this system.
    pub fn prn_count(self) -> u8 {
        match self {
            Constellation::Gps => 32,
            Constellation::Glonass => 24,
            Constellation::Galileo => 36,
            Constellation::BeiDou => 63,
            Constellation::Qzss => 7,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Constellation::Gps => "GPS",
            Constellation::Glonass => "GLONASS",
            Constellation::Galileo => "Galileo",
            Constellation::BeiDou => "BeiDou",
            Constellation::Qzss => "QZSS",
        }
    }
}

impl fmt::Display for Constellation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Constellation {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Constellation::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| SimError::UnknownLabel(format!("constellation '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum JamMode {
    /// Single continuous-wave tone.
    Cw,
    /// Three continuous-wave tones.
    Cw3,
    /// Frequency-modulated sweep.
    Fm,
}

impl JamMode {
    pub const ALL: [JamMode; 3] = [JamMode::Cw, JamMode::Cw3, JamMode::Fm];

    pub fn as_str(self) -> &'static str {
        match self {
            JamMode::Cw => "cw",
            JamMode::Cw3 => "cw3",
            JamMode::Fm => "fm",
        }
    }
}

impl fmt::Display for JamMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for JamMode {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        JamMode::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| SimError::UnknownLabel(format!("jamming mode '{s}'")))
    }
}

/// The two emulated receiver profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Receiver {
    Gp01,
    Ublox10,
}

impl Receiver {
    pub const ALL: [Receiver; 2] = [Receiver::Gp01, Receiver::Ublox10];

    pub fn as_str(self) -> &'static str {
        match self {
            Receiver::Gp01 => "GP01",
            Receiver::Ublox10 => "Ublox10",
        }
    }

    pub fn max_satellites(self) -> usize {
        match self {
            Receiver::Gp01 => 20,
            Receiver::Ublox10 => 32,
        }
    }

    pub fn constellations(self) -> &'static [Constellation] {
        match self {
            Receiver::Gp01 => &[Constellation::Gps, Constellation::Galileo, Constellation::BeiDou],
            Receiver::Ublox10 => &Constellation::ALL,
        }
    }

    pub fn supported_modes(self) -> &'static [JamMode] {
        match self {
            Receiver::Gp01 => &[JamMode::Cw, JamMode::Cw3],
            Receiver::Ublox10 => &JamMode::ALL,
        }
    }

    pub fn supports(self, mode: JamMode) -> bool {
        self.supported_modes().contains(&mode)
    }
}

impl fmt::Display for Receiver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Receiver {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Receiver::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| SimError::UnknownLabel(format!("receiver '{s}'")))
    }
}

/// True if `power_dbm` is exactly one of the six campaign levels.
pub fn is_power_level(power_dbm: f64) -> bool {
    POWER_LEVELS_DBM.contains(&power_dbm)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConfig {
    pub receiver: Receiver,
    pub mode: JamMode,
    pub power_dbm: f64,
    pub repetitions: usize,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn new(receiver: Receiver, mode: JamMode, power_dbm: f64, repetitions: usize, seed: u64) -> Result<Self, SimError> {
        let cfg = Self {
            receiver,
            mode,
            power_dbm,
            repetitions,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !is_power_level(self.power_dbm) {
            return Err(SimError::InvalidPower(self.power_dbm));
        }
        if !self.receiver.supports(self.mode) {
            return Err(SimError::UnsupportedMode {
                receiver: self.receiver,
                mode: self.mode,
            });
        }
        if self.repetitions == 0 {
            return Err(SimError::ZeroRepetitions);
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        format!("{}/{}/{}", self.receiver, self.mode, self.power_dbm)
    }
}

/// Every (receiver, mode, power) combination of the primary dataset.
pub fn all_scenarios() -> Vec<(Receiver, JamMode, f64)> {
    let mut out = Vec::new();
    for receiver in Receiver::ALL {
        for &mode in receiver.supported_modes() {
            for power in POWER_LEVELS_DBM {
                out.push((receiver, mode, power));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Clean,
    Jammed,
    Recovery,
}

impl Phase {
    pub fn of_epoch(t: usize) -> Phase {
        if t < CLEAN_SECONDS {
            Phase::Clean
        } else if t < CLEAN_SECONDS + JAM_SECONDS {
            Phase::Jammed
        } else {
            Phase::Recovery
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SatId {
    pub constellation: Constellation,
    pub prn: u8,
}

impl fmt::Display for SatId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{:02}", self.constellation, self.prn)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatObservation {
    pub id: SatId,
    pub snr_db: f64,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationEpoch {
    pub t: usize,
    pub est_lat_deg: f64,
    pub est_lon_deg: f64,
    pub dev_lat_cm: f64,
    pub dev_lon_cm: f64,
    pub sats: Vec<SatObservation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesRun {
    pub config: ScenarioConfig,
    pub repetition_idx: usize,
    pub epochs: Vec<ObservationEpoch>,
}

impl TimeSeriesRun {
    /// Checks every structural and range invariant of a run.
    pub fn validate(&self) -> Result<(), SimError> {
        self.config.validate()?;
        let breach = |name: &'static str, detail: String| SimError::Invariant { name, detail };
        let max_sats = self.config.receiver.max_satellites();
        for (i, e) in self.epochs.iter().enumerate() {
            if e.t != i {
                return Err(breach("epochs contiguous", format!("position {i} holds epoch {}", e.t)));
            }
            let finite = [e.est_lat_deg, e.est_lon_deg, e.dev_lat_cm, e.dev_lon_cm]
                .iter()
                .all(|v| v.is_finite());
            if !finite {
                return Err(breach("finite receiver fields", format!("epoch {i}")));
            }
            if e.sats.len() > max_sats {
                return Err(breach(
                    "satellite capacity",
                    format!("epoch {i} has {} satellites, receiver allows {max_sats}", e.sats.len()),
                ));
            }
            for (k, s) in e.sats.iter().enumerate() {
                if e.sats[..k].iter().any(|o| o.id == s.id) {
                    return Err(breach("unique satellite ids", format!("epoch {i}: {} repeated", s.id)));
                }
                if !self.config.receiver.constellations().contains(&s.id.constellation) {
                    return Err(breach(
                        "receiver constellations",
                        format!("epoch {i}: {} not tracked by {}", s.id, self.config.receiver),
                    ));
                }
                if s.id.prn == 0 || s.id.prn > s.id.constellation.prn_count() {
                    return Err(breach("prn range", format!("epoch {i}: {}", s.id)));
                }
                if !(s.snr_db >= 0.0 && s.snr_db.is_finite()) {
                    return Err(breach("snr range", format!("epoch {i}: {} snr {}", s.id, s.snr_db)));
                }
                if !(0.0..360.0).contains(&s.azimuth_deg) {
                    return Err(breach("azimuth range", format!("epoch {i}: {} azimuth {}", s.id, s.azimuth_deg)));
                }
                if !(0.0..=90.0).contains(&s.elevation_deg) {
                    return Err(breach(
                        "elevation range",
                        format!("epoch {i}: {} elevation {}", s.id, s.elevation_deg),
                    ));
                }
            }
        }
        if self.epochs.len() != EPOCHS_PER_RUN {
            return Err(breach(
                "run length",
                format!("expected {EPOCHS_PER_RUN} epochs, found {}", self.epochs.len()),
            ));
        }
        Ok(())
    }

    /// Sorted set of every satellite seen during the run.
    pub fn satellites(&self) -> Vec<SatId> {
        let mut ids: Vec<SatId> = self.epochs.iter().flat_map(|e| e.sats.iter().map(|s| s.id)).collect();
        ids.sort();
        ids.dedup();
        ids
    }
}
