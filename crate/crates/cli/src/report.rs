//! Per-run scorecards and the sweep-level aggregate report.

use serde::{Deserialize, Serialize};

use adamlab_core::analysis::stats::median;
use adamlab_core::analysis::{fit_coefficient_vs_beta2, AnalysisReport, RegressionFit};

use crate::config::SweepConfig;

/// Stability scorecard of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub width: usize,
    pub dataset_index: u64,
    pub beta2: f64,
    pub final_loss: f64,
    pub diverged: bool,
    pub spike_count: usize,
    pub median_interval: Option<f64>,
    /// Measured slow period over `1/(1-beta2)`; present with >= 2 spikes.
    pub slow_ratio: Option<f64>,
    /// Median fast-oscillation period over `1/(1-beta1)` across spike tails.
    pub fast_ratio: Option<f64>,
    pub interval_logmag_fit: Option<RegressionFit>,
}

impl RunSummary {
    pub fn from_report(report: &AnalysisReport) -> Self {
        RunSummary {
            width: report.config.shape.hidden_width,
            dataset_index: report.config.dataset_index,
            beta2: report.config.adam.beta2,
            final_loss: report.final_loss,
            diverged: report.diverged_at.is_some(),
            spike_count: report.spike_count,
            median_interval: report.slow_period.as_ref().map(|p| p.period_epochs),
            slow_ratio: report.slow_period.as_ref().map(|p| p.ratio),
            fast_ratio: report.fast_ratio_median,
            interval_logmag_fit: report.interval_logmag_fit,
        }
    }
}

/// Aggregate over a sweep (or several beta2 sub-sweeps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub run_count: usize,
    pub diverged_count: usize,
    /// Runs with at least one detected spike.
    pub spiking_count: usize,
    pub quiet_count: usize,
    pub spiking_fraction: f64,
    pub slow_ratios: Vec<f64>,
    pub slow_ratio_median: Option<f64>,
    pub fast_ratio_median: Option<f64>,
    /// OLS of per-run interval-law slopes against `1/(1-beta2)`; present
    /// when the sweep covered >= 3 distinct beta2 values with fitted runs.
    pub cross_beta2_fit: Option<RegressionFit>,
    /// Explicit statement when no run spiked, so a null outcome is recorded
    /// rather than silently absent.
    pub negative_result: Option<String>,
    /// Full sweep configuration, embedded for provenance.
    pub provenance: SweepConfig,
    pub summaries: Vec<RunSummary>,
}

/// Builds the aggregate report from per-run summaries.
pub fn build_report(summaries: &[RunSummary], sweep: &SweepConfig) -> SweepReport {
    let run_count = summaries.len();
    let diverged_count = summaries.iter().filter(|s| s.diverged).count();
    let spiking: Vec<&RunSummary> = summaries.iter().filter(|s| s.spike_count > 0).collect();
    let spiking_count = spiking.len();
    let quiet_count = run_count - spiking_count;

    let slow_ratios: Vec<f64> = summaries.iter().filter_map(|s| s.slow_ratio).collect();
    let slow_ratio_median =
        if slow_ratios.is_empty() { None } else { Some(median(&slow_ratios)) };
    let fast_ratios: Vec<f64> = summaries.iter().filter_map(|s| s.fast_ratio).collect();
    let fast_ratio_median =
        if fast_ratios.is_empty() { None } else { Some(median(&fast_ratios)) };

    let fit_points: Vec<(f64, RegressionFit)> = summaries
        .iter()
        .filter_map(|s| s.interval_logmag_fit.map(|f| (s.beta2, f)))
        .collect();
    let cross_beta2_fit = fit_coefficient_vs_beta2(&fit_points).ok();

    let negative_result = (spiking_count == 0).then(|| {
        format!(
            "no spikes were detected in any of the {run_count} runs of this sweep; \
             the full configuration is embedded under `provenance`"
        )
    });

    SweepReport {
        run_count,
        diverged_count,
        spiking_count,
        quiet_count,
        spiking_fraction: if run_count == 0 { 0.0 } else { spiking_count as f64 / run_count as f64 },
        slow_ratios,
        slow_ratio_median,
        fast_ratio_median,
        cross_beta2_fit,
        negative_result,
        provenance: sweep.clone(),
        summaries: summaries.to_vec(),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into())
}

/// Human-readable table: one row per run plus the aggregate header lines.
pub fn render_table(report: &SweepReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "runs: {}   diverged: {}   spiking: {} ({:.1}%)   quiet: {}\n",
        report.run_count,
        report.diverged_count,
        report.spiking_count,
        100.0 * report.spiking_fraction,
        report.quiet_count,
    ));
    out.push_str(&format!(
        "slow period / (1/(1-beta2)) median: {}   fast period / (1/(1-beta1)) median: {}\n",
        opt(report.slow_ratio_median),
        opt(report.fast_ratio_median),
    ));
    if let Some(fit) = &report.cross_beta2_fit {
        out.push_str(&format!(
            "interval-law slope vs 1/(1-beta2): slope {:.4}, intercept {:.4}, r^2 {:.4} (n = {})\n",
            fit.slope, fit.intercept, fit.r_squared, fit.n
        ));
    }
    if let Some(neg) = &report.negative_result {
        out.push_str(&format!("negative result: {neg}\n"));
    }
    out.push_str(&format!(
        "{:>6} {:>8} {:>8} {:>12} {:>9} {:>7} {:>10} {:>10} {:>10}\n",
        "width", "dataset", "beta2", "final_loss", "diverged", "spikes", "interval", "slow", "fast"
    ));
    for s in &report.summaries {
        out.push_str(&format!(
            "{:>6} {:>8} {:>8} {:>12.4e} {:>9} {:>7} {:>10} {:>10} {:>10}\n",
            s.width,
            s.dataset_index,
            s.beta2,
            s.final_loss,
            s.diverged,
            s.spike_count,
            opt(s.median_interval),
            opt(s.slow_ratio),
            opt(s.fast_ratio),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(width: usize, spikes: usize, slow: Option<f64>) -> RunSummary {
        RunSummary {
            width,
            dataset_index: 0,
            beta2: 0.999,
            final_loss: 1e-4,
            diverged: false,
            spike_count: spikes,
            median_interval: slow.map(|r| r * 1000.0),
            slow_ratio: slow,
            fast_ratio: None,
            interval_logmag_fit: None,
        }
    }

    fn sweep() -> SweepConfig {
        SweepConfig::desk_scale("/tmp/s".into())
    }

    #[test]
    fn median_of_slow_ratios() {
        let summaries =
            vec![summary(5, 3, Some(0.9)), summary(6, 4, Some(1.1)), summary(7, 0, None)];
        let report = build_report(&summaries, &sweep());
        assert_eq!(report.slow_ratio_median, Some(1.0));
        assert_eq!(report.spiking_count, 2);
        assert_eq!(report.quiet_count, 1);
        assert!(report.negative_result.is_none());
    }

    #[test]
    fn zero_spiking_records_negative_result() {
        let summaries = vec![summary(5, 0, None), summary(6, 0, None)];
        let report = build_report(&summaries, &sweep());
        assert_eq!(report.spiking_count, 0);
        assert!(report.slow_ratio_median.is_none());
        let msg = report.negative_result.as_ref().expect("negative result must be stated");
        assert!(msg.contains("no spikes"));
        // Provenance embedded in full.
        assert_eq!(report.provenance, sweep());
    }

    #[test]
    fn table_has_one_row_per_run() {
        let summaries: Vec<RunSummary> =
            (0..5).map(|w| summary(5 + w, w, Some(1.0))).collect();
        let report = build_report(&summaries, &sweep());
        let table = render_table(&report);
        let data_rows = table.lines().filter(|l| l.trim_start().starts_with(char::is_numeric)).count();
        assert_eq!(data_rows, 5);
        assert!(table.contains("spiking: 5"));
    }

    #[test]
    fn cross_beta2_fit_needs_three_betas() {
        let mk = |beta2: f64| RunSummary {
            beta2,
            interval_logmag_fit: Some(RegressionFit {
                slope: 0.5 / (1.0 - beta2),
                intercept: 3.0,
                r_squared: 0.9,
                n: 6,
            }),
            ..summary(8, 5, Some(1.0))
        };
        let two = vec![mk(0.99), mk(0.999)];
        assert!(build_report(&two, &sweep()).cross_beta2_fit.is_none());
        let four = vec![mk(0.99), mk(0.995), mk(0.999), mk(0.9995)];
        let fit = build_report(&four, &sweep()).cross_beta2_fit.expect("fit present");
        assert!((fit.slope - 0.5).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-9);
    }
}
