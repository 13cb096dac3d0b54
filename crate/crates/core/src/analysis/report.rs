//! Per-run analysis report: the JSON-serializable summary of everything the
//! analysis passes extract from one trajectory. Field names are the stable
//! schema consumed by the sweep harness and external tooling.

use serde::{Deserialize, Serialize};

use super::period::{estimate_fast_period, estimate_slow_period, FastPeriod, PeriodEstimate};
use super::predict::{predict_next_spike, SpikePrediction};
use super::regression::{fit_interval_vs_logmag, RegressionFit};
use super::segments::{classify_segments, SegmentLabel};
use super::spikes::{detect_spikes, SpikeParams, SpikeTrain};
use super::spiral::SpiralPairFit;
use super::stats::median;
use crate::error::Result;
use crate::optim::{check_convergence_condition, ConvergenceCheck};
use crate::trainer::Trajectory;

/// Spiral section attached to a report when a parameter triple was analyzed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiralSection {
    pub triple: [usize; 3],
    pub window: (usize, usize),
    pub fit: SpiralPairFit,
}

/// Full analysis of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub config: crate::trainer::RunConfig,
    pub convergence: ConvergenceCheck,
    pub epochs_recorded: usize,
    pub diverged_at: Option<usize>,
    pub final_loss: f64,
    pub spike_params: SpikeParams,
    pub spike_count: usize,
    pub spikes: SpikeTrain,
    pub slow_period: Option<PeriodEstimate>,
    /// Fast-oscillation estimates from the settle tail of each spike that
    /// had a long enough tail and a detectable period.
    pub fast_periods: Vec<PeriodEstimate>,
    pub fast_ratio_median: Option<f64>,
    pub interval_logmag_fit: Option<RegressionFit>,
    pub segments: Vec<SegmentLabel>,
    pub prediction: SpikePrediction,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub spiral: Option<SpiralSection>,
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| crate::Error::Format(format!("bad analysis report: {e}")))
    }
}

/// Runs the full analysis pipeline on one trajectory.
pub fn analyze(traj: &Trajectory, spike_params: &SpikeParams) -> Result<AnalysisReport> {
    let spikes = detect_spikes(&traj.loss, spike_params)?;
    let beta1 = traj.config.adam.beta1;
    let beta2 = traj.config.adam.beta2;

    let slow_period =
        if spikes.len() >= 2 { Some(estimate_slow_period(&spikes, beta2)?) } else { None };

    // Fast oscillations are measured on each spike's relaxation tail
    // [peak, settle] at stride 1 (the loss is recorded every epoch).
    let mut fast_periods = Vec::new();
    for event in &spikes.events {
        let tail = &traj.loss[event.peak_epoch..=event.settle_epoch];
        if let Ok(FastPeriod::Periodic(est)) = estimate_fast_period(tail, beta1) {
            fast_periods.push(est);
        }
    }
    let fast_ratio_median = if fast_periods.is_empty() {
        None
    } else {
        Some(median(&fast_periods.iter().map(|e| e.ratio).collect::<Vec<_>>()))
    };

    let interval_logmag_fit =
        if spikes.len() >= 3 { fit_interval_vs_logmag(&spikes).ok() } else { None };

    let segments = classify_segments(&traj.loss, &spikes);
    let prediction = predict_next_spike(&spikes, beta2, traj.loss.len().saturating_sub(1))?;

    Ok(AnalysisReport {
        config: traj.config.clone(),
        convergence: check_convergence_condition(&traj.config.adam),
        epochs_recorded: traj.loss.len(),
        diverged_at: traj.diverged_at,
        final_loss: traj.final_loss(),
        spike_params: *spike_params,
        spike_count: spikes.len(),
        spikes,
        slow_period,
        fast_periods,
        fast_ratio_median,
        interval_logmag_fit,
        segments,
        prediction,
        spiral: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{Activation, NetworkShape};
    use crate::precision::PrecisionMode;
    use crate::trainer::{train, RunConfig};

    fn quick_run() -> Trajectory {
        let cfg = RunConfig {
            shape: NetworkShape::scalar(4, Activation::Tanh),
            dataset_index: 1,
            n_points: 16,
            init_seed: 2,
            precision: PrecisionMode::Native64,
            epochs: 1500,
            snapshot_stride: 10,
            ..RunConfig::default()
        };
        train(&cfg).unwrap()
    }

    #[test]
    fn analyze_produces_consistent_report() {
        let traj = quick_run();
        let report = analyze(&traj, &SpikeParams::default()).unwrap();
        assert_eq!(report.epochs_recorded, 1500);
        assert_eq!(report.spike_count, report.spikes.len());
        assert_eq!(report.final_loss, traj.final_loss());
        assert!(report.convergence.satisfied);
        assert_eq!(report.slow_period.is_some(), report.spike_count >= 2);
        assert!(!report.segments.is_empty());
        assert_eq!(report.segments[0].range.0, 0);
        assert_eq!(report.segments.last().unwrap().range.1, 1499);
    }

    #[test]
    fn report_json_round_trips() {
        let traj = quick_run();
        let report = analyze(&traj, &SpikeParams::default()).unwrap();
        let json = report.to_json();
        let back = AnalysisReport::from_json(&json).unwrap();
        assert_eq!(report, back);
        // Stable top-level keys.
        for key in
            ["config", "convergence", "spike_count", "slow_period", "segments", "prediction"]
        {
            assert!(json.contains(&format!("\"{key}\"")), "missing key {key}");
        }
    }

    #[test]
    fn synthetic_spike_fixture_reported() {
        // Inject the canonical three-spike series into a real trajectory.
        let mut traj = quick_run();
        traj.config.epochs = 6000;
        traj.loss = vec![1.0; 6000];
        for &at in &[2000usize, 3000, 4200] {
            traj.loss[at] = 100.0;
        }
        traj.snapshots.clear();
        let report = analyze(&traj, &SpikeParams::default()).unwrap();
        assert_eq!(report.spike_count, 3);
        assert_eq!(report.spikes.intervals, vec![1000, 1200]);
        let slow = report.slow_period.unwrap();
        assert_eq!(slow.period_epochs, 1100.0);
        assert!(report.interval_logmag_fit.is_none(), "equal magnitudes cannot be fit");
    }
}
