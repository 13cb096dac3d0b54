//! Next-spike prediction from a recorded prefix.

use serde::{Deserialize, Serialize};

use super::regression::fit_interval_vs_logmag;
use super::spikes::SpikeTrain;
use super::stats::median;
use crate::error::{Error, Result};

/// Confidence assigned to the `1/(1-beta2)` formula fallback.
const FALLBACK_CONFIDENCE: f64 = 0.25;

/// Minimum r-squared for trusting the interval-law extrapolation.
const FIT_R2_MIN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikePrediction {
    pub predicted_epoch: f64,
    /// In [0, 1]; 0.25 flags the formula fallback.
    pub confidence: f64,
}

/// Predicts the epoch of the next spike.
///
/// With three or more recorded events the interval-versus-log-magnitude law
/// is extrapolated from the last spike's magnitude (falling back to the
/// median interval when the law fits poorly, r-squared below 0.5). With
/// fewer events the expected period `1/(1-beta2)` is added to the last peak,
/// or to `current_epoch` when nothing has spiked yet.
pub fn predict_next_spike(
    train: &SpikeTrain,
    beta2: f64,
    current_epoch: usize,
) -> Result<SpikePrediction> {
    if !(0.0..1.0).contains(&beta2) {
        return Err(Error::invalid(format!("beta2 must be in [0, 1), got {beta2}")));
    }
    let expected = 1.0 / (1.0 - beta2);

    let Some(last) = train.events.last() else {
        return Ok(SpikePrediction {
            predicted_epoch: current_epoch as f64 + expected,
            confidence: FALLBACK_CONFIDENCE,
        });
    };
    if current_epoch < last.peak_epoch {
        return Err(Error::invalid(format!(
            "current_epoch {current_epoch} precedes the last peak {}",
            last.peak_epoch
        )));
    }
    let last_peak = last.peak_epoch as f64;

    if train.len() < 3 {
        return Ok(SpikePrediction {
            predicted_epoch: last_peak + expected,
            confidence: FALLBACK_CONFIDENCE,
        });
    }

    let intervals: Vec<f64> = train.intervals.iter().map(|&i| i as f64).collect();
    match fit_interval_vs_logmag(train) {
        Ok(fit) if fit.r_squared >= FIT_R2_MIN => Ok(SpikePrediction {
            predicted_epoch: last_peak + fit.slope * last.magnitude + fit.intercept,
            confidence: fit.r_squared.clamp(0.0, 1.0),
        }),
        Ok(fit) => Ok(SpikePrediction {
            predicted_epoch: last_peak + median(&intervals),
            confidence: fit.r_squared.clamp(0.0, 1.0),
        }),
        // Zero magnitude variance: no law to fit, use the median cadence.
        Err(_) => Ok(SpikePrediction {
            predicted_epoch: last_peak + median(&intervals),
            confidence: FALLBACK_CONFIDENCE,
        }),
    }
}
