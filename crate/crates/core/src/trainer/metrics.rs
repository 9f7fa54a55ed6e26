/// Test-set errors in centimeters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub mae_lat_cm: f64,
    pub mae_lon_cm: f64,
    /// Mean over samples of the 2-D error norm.
    pub euclid_mae_cm: f64,
    pub n_samples: usize,
}

impl Metrics {
    /// Per-axis and Euclidean MAE of `predictions` against `targets`, both in cm.
    ///
    /// Returns `None` for an empty or mismatched set.
    pub fn from_pairs(predictions: &[[f64; 2]], targets: &[[f64; 2]]) -> Option<Metrics> {
        if predictions.is_empty() || predictions.len() != targets.len() {
            return None;
        }
        let n = predictions.len() as f64;
        let (mut lat, mut lon, mut euc) = (0.0, 0.0, 0.0);
        for (p, t) in predictions.iter().zip(targets) {
            let dlat = t[0] - p[0];
            let dlon = t[1] - p[1];
            lat += dlat.abs();
            lon += dlon.abs();
            euc += dlat.hypot(dlon);
        }
        Some(Metrics {
            mae_lat_cm: lat / n,
            mae_lon_cm: lon / n,
            euclid_mae_cm: euc / n,
            n_samples: predictions.len(),
        })
    }

    pub fn values(&self) -> [f64; 3] {
        [self.mae_lat_cm, self.mae_lon_cm, self.euclid_mae_cm]
    }
}

/// Mean and sample standard deviation of metrics over seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedAggregate {
    pub n: usize,
    /// `[mae_lat, mae_lon, euclid]`
    pub mean: [f64; 3],
    /// Present only for two or more seeds.
    pub sd: Option<[f64; 3]>,
}

/// Arithmetic mean and (n-1) standard deviation of one scalar series.
pub fn mean_sd(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (n >= 2).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    });
    (mean, sd)
}

/// Aggregates per-seed metrics. `None` for an empty slice.
pub fn aggregate_seeds(metrics: &[Metrics]) -> Option<SeedAggregate> {
    if metrics.is_empty() {
        return None;
    }
    let mut mean = [0.0; 3];
    let mut sd = [0.0; 3];
    let mut has_sd = false;
    for k in 0..3 {
        let series: Vec<f64> = metrics.iter().map(|m| m.values()[k]).collect();
        let (m, s) = mean_sd(&series);
        mean[k] = m;
        if let Some(s) = s {
            sd[k] = s;
            has_sd = true;
        }
    }
    Some(SeedAggregate {
        n: metrics.len(),
        mean,
        sd: has_sd.then_some(sd),
    })
}
