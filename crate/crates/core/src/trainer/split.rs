use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::TrainError;

pub const MIN_SPLIT_RUNS: usize = 5;

/// How whole runs are divided into train, validation and test sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub test_fraction: f64,
    /// Share of the non-test runs held out for validation.
    pub val_fraction_of_train: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            val_fraction_of_train: 0.1,
        }
    }
}

impl SplitSpec {
    /// Run counts `(train, val, test)` for `n` runs.
    ///
    /// `test = round(n·test_fraction)`, `val = ceil((n - test)·val_fraction)`,
    /// each clamped so every part keeps at least one run.
    pub fn counts(&self, n: usize) -> Result<(usize, usize, usize), TrainError> {
        let in_unit = |f: f64| f > 0.0 && f < 1.0;
        if !in_unit(self.test_fraction) || !in_unit(self.val_fraction_of_train) {
            return Err(TrainError::Contract(format!(
                "split fractions must lie in (0, 1): test {}, val {}",
                self.test_fraction, self.val_fraction_of_train
            )));
        }
        if n < MIN_SPLIT_RUNS {
            return Err(TrainError::Contract(format!(
                "need at least {MIN_SPLIT_RUNS} runs to split, got {n}"
            )));
        }
        let test = ((n as f64 * self.test_fraction).round() as usize).clamp(1, n - 2);
        let pool = n - test;
        let val = ((pool as f64 * self.val_fraction_of_train).ceil() as usize).clamp(1, pool - 1);
        Ok((pool - val, val, test))
    }
}

/// Indices into the run list, disjoint and covering every run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded shuffle of `n` run indices cut into train / val / test.
pub fn split_runs(n: usize, spec: &SplitSpec, seed: u64) -> Result<RunSplit, TrainError> {
    let (train, val, _) = spec.counts(n)?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = idx.split_off(train + val);
    let val_idx = idx.split_off(train);
    Ok(RunSplit {
        train: idx,
        val: val_idx,
        test,
    })
}
