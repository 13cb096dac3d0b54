//! Slow and fast oscillation period estimation.
//!
//! Slow periods come from spike-to-spike distances and are compared with
//! `1/(1-beta2)`; fast periods come from the autocorrelation of a detrended
//! stride-1 window and are compared with `1/(1-beta1)`. Both comparisons are
//! reported as ratios, never asserted as exact: the cadence is
//! pseudo-periodic.

use serde::{Deserialize, Serialize};

use super::spikes::SpikeTrain;
use super::stats::{autocorrelation, median, rolling_mean};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeriodMethod {
    SpikeIntervals,
    Autocorrelation,
}

/// A measured period next to the value the decay rate predicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodEstimate {
    pub period_epochs: f64,
    pub method: PeriodMethod,
    /// `1/(1-beta)` for the relevant decay rate.
    pub expected_from_beta: f64,
    /// `period_epochs / expected_from_beta`.
    pub ratio: f64,
    /// Number of intervals (spike method) or window length (autocorrelation).
    pub support: usize,
}

/// Outcome of the autocorrelation estimator: a series can be legitimately
/// aperiodic, which is a result rather than an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FastPeriod {
    Periodic(PeriodEstimate),
    NoPeriodicity,
}

fn expected_period(beta: f64, name: &str) -> Result<f64> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::invalid(format!("{name} must be in [0, 1), got {beta}")));
    }
    Ok(1.0 / (1.0 - beta))
}

/// Slow-fluctuation period: the median spike-to-spike distance.
pub fn estimate_slow_period(train: &SpikeTrain, beta2: f64) -> Result<PeriodEstimate> {
    let expected = expected_period(beta2, "beta2")?;
    if train.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "slow period needs >= 2 spike events, have {}",
            train.len()
        )));
    }
    let intervals: Vec<f64> = train.intervals.iter().map(|&i| i as f64).collect();
    let period = median(&intervals);
    Ok(PeriodEstimate {
        period_epochs: period,
        method: PeriodMethod::SpikeIntervals,
        expected_from_beta: expected,
        ratio: period / expected,
        support: train.intervals.len(),
    })
}

/// Threshold on the normalized autocorrelation below which a candidate peak
/// does not count as periodicity.
const ACF_PEAK_MIN: f64 = 0.1;

/// Fast-oscillation period of a stride-1 series (a parameter coordinate or
/// the loss): detrend by a centered rolling mean of width `round(3/(1-beta1))`
/// forced odd, then take the lag of the first autocorrelation maximum at
/// lag >= 2.
pub fn estimate_fast_period(series: &[f64], beta1: f64) -> Result<FastPeriod> {
    let expected = expected_period(beta1, "beta1")?;
    if (series.len() as f64) < 4.0 * expected {
        return Err(Error::InsufficientData(format!(
            "series of {} values is shorter than 4 expected periods ({:.0})",
            series.len(),
            4.0 * expected
        )));
    }
    if series.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("fast-period series must be finite"));
    }

    let mut window = libm::round(3.0 * expected) as usize;
    if window % 2 == 0 {
        window += 1;
    }
    window = window.clamp(3, super::spikes::odd_le(series.len()));
    let trend = rolling_mean(series, window);
    let detrended: Vec<f64> =
        series.iter().zip(&trend).map(|(x, t)| x - t).collect();

    let max_lag = series.len() / 2;
    let Some(acf) = autocorrelation(&detrended, max_lag) else {
        return Ok(FastPeriod::NoPeriodicity);
    };
    for lag in 2..acf.len().saturating_sub(1) {
        if acf[lag] > acf[lag - 1] && acf[lag] >= acf[lag + 1] && acf[lag] > ACF_PEAK_MIN {
            return Ok(FastPeriod::Periodic(PeriodEstimate {
                period_epochs: lag as f64,
                method: PeriodMethod::Autocorrelation,
                expected_from_beta: expected,
                ratio: lag as f64 / expected,
                support: series.len(),
            }));
        }
    }
    Ok(FastPeriod::NoPeriodicity)
}
