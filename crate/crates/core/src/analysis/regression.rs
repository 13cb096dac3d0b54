//! Ordinary least squares fits for the two interval laws: spike interval
//! against the log-magnitude of the spike opening it, and that law's slope
//! against `1/(1-beta2)` across runs.

use serde::{Deserialize, Serialize};

use super::spikes::SpikeTrain;
use crate::error::{Error, Result};

/// Straight-line OLS fit summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n: usize,
}

/// Closed-form OLS of `y` against `x`.
pub fn ols(x: &[f64], y: &[f64]) -> Result<RegressionFit> {
    if x.len() != y.len() {
        return Err(Error::invalid("x and y must have equal length"));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("OLS needs >= 2 points, have {n}")));
    }
    let mean_x = x.iter().sum::<f64>() / n as f64;
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|xi| (xi - mean_x) * (xi - mean_x)).sum();
    let sxy: f64 =
        x.iter().zip(y).map(|(xi, yi)| (xi - mean_x) * (yi - mean_y)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateRegression("zero variance in the predictor".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = y.iter().map(|yi| (yi - mean_y) * (yi - mean_y)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let e = yi - (slope * xi + intercept);
            e * e
        })
        .sum();
    // A constant response perfectly explained by a zero slope is r^2 = 1.
    let r_squared = if ss_tot == 0.0 { 1.0 } else { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) };
    Ok(RegressionFit { slope, intercept, r_squared, n })
}

/// Fits spike interval `i -> i+1` against the magnitude of spike `i`.
/// Needs at least 3 events (2 pairs); `n` in the result is the pair count.
pub fn fit_interval_vs_logmag(train: &SpikeTrain) -> Result<RegressionFit> {
    if train.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "interval fit needs >= 3 spike events, have {}",
            train.len()
        )));
    }
    let x: Vec<f64> =
        train.events[..train.len() - 1].iter().map(|e| e.magnitude).collect();
    let y: Vec<f64> = train.intervals.iter().map(|&i| i as f64).collect();
    ols(&x, &y)
}

/// Fits per-run interval-law slopes against `1/(1-beta2)`.
/// Needs at least 3 distinct beta2 values.
pub fn fit_coefficient_vs_beta2(fits: &[(f64, RegressionFit)]) -> Result<RegressionFit> {
    let mut seen: Vec<u64> = Vec::new();
    for &(beta2, _) in fits {
        if !(0.0..1.0).contains(&beta2) {
            return Err(Error::invalid(format!("beta2 must be in [0, 1), got {beta2}")));
        }
        if !seen.contains(&beta2.to_bits()) {
            seen.push(beta2.to_bits());
        }
    }
    if seen.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "cross-beta2 fit needs >= 3 distinct beta2 values, have {}",
            seen.len()
        )));
    }
    let x: Vec<f64> = fits.iter().map(|(b, _)| 1.0 / (1.0 - b)).collect();
    let y: Vec<f64> = fits.iter().map(|(_, f)| f.slope).collect();
    ols(&x, &y)
}

/// Test fixture: a spike train whose intervals follow
/// `interval = slope * magnitude + intercept` exactly.
#[cfg(test)]
pub(crate) fn linear_law_train(magnitudes: &[f64], slope: f64, intercept: f64) -> SpikeTrain {
    use crate::analysis::spikes::SpikeEvent;
    let mut epoch = 1000usize;
    let mut events = Vec::new();
    for (i, &m) in magnitudes.iter().enumerate() {
        events.push(SpikeEvent {
            peak_epoch: epoch,
            peak_loss: libm::pow(10.0, m),
            baseline_loss: 1.0,
            magnitude: m,
            onset_epoch: epoch - 1,
            settle_epoch: epoch + 1,
        });
        if i + 1 < magnitudes.len() {
            epoch += (slope * m + intercept) as usize;
        }
    }
    SpikeTrain::from_events(events).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn exact_linear_law_recovered() {
        let train = linear_law_train(&[1.0, 2.0, 1.5, 3.0, 2.5], 200.0, 300.0);
        let fit = fit_interval_vs_logmag(&train).unwrap();
        assert!((fit.slope - 200.0).abs() < 1e-10, "slope {}", fit.slope);
        assert!((fit.intercept - 300.0).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-10);
        assert_eq!(fit.n, 4);
    }

    #[test]
    fn zero_variance_predictor_is_degenerate() {
        let train = linear_law_train(&[2.0, 2.0, 2.0, 2.0], 100.0, 50.0);
        assert!(matches!(
            fit_interval_vs_logmag(&train),
            Err(Error::DegenerateRegression(_))
        ));
    }

    #[test]
    fn too_few_events() {
        let train = linear_law_train(&[1.0, 2.0], 100.0, 50.0);
        assert!(matches!(fit_interval_vs_logmag(&train), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn ols_matches_normal_equations_on_random_data() {
        let mut rng = SplitMix64::new(42);
        for _ in 0..20 {
            let n = 5 + (rng.next_u64() % 50) as usize;
            let x: Vec<f64> = (0..n).map(|_| rng.uniform(-10.0, 10.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.uniform(-10.0, 10.0)).collect();
            let fit = ols(&x, &y).unwrap();
            // Independent normal-equation solve.
            let sx: f64 = x.iter().sum();
            let sy: f64 = y.iter().sum();
            let sxx: f64 = x.iter().map(|v| v * v).sum();
            let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
            let nf = n as f64;
            let slope = (nf * sxy - sx * sy) / (nf * sxx - sx * sx);
            let intercept = (sy - slope * sx) / nf;
            assert!((fit.slope - slope).abs() / slope.abs().max(1.0) < 1e-10);
            assert!((fit.intercept - intercept).abs() / intercept.abs().max(1.0) < 1e-10);
            assert!((0.0..=1.0).contains(&fit.r_squared));
        }
    }

    #[test]
    fn cross_beta2_fit_recovers_proportional_slopes() {
        let betas = [0.99, 0.995, 0.999, 0.9995];
        let fits: Vec<(f64, RegressionFit)> = betas
            .iter()
            .map(|&b| {
                let slope = 0.37 * (1.0 / (1.0 - b)) + 12.0;
                (b, RegressionFit { slope, intercept: 0.0, r_squared: 1.0, n: 10 })
            })
            .collect();
        let fit = fit_coefficient_vs_beta2(&fits).unwrap();
        assert!((fit.slope - 0.37).abs() < 1e-10);
        assert!((fit.intercept - 12.0).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cross_beta2_needs_three_distinct() {
        let f = RegressionFit { slope: 1.0, intercept: 0.0, r_squared: 1.0, n: 5 };
        assert!(matches!(
            fit_coefficient_vs_beta2(&[(0.99, f), (0.999, f)]),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            fit_coefficient_vs_beta2(&[(0.99, f), (0.99, f), (0.99, f)]),
            Err(Error::InsufficientData(_))
        ));
    }
}
