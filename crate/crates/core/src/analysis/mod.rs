//! Turns trajectories into phenomena: spike trains, slow/fast periods,
//! interval–magnitude regressions, spiral fits, segment labels, and
//! next-spike predictions. Everything here is a pure function of its inputs.

pub mod period;
pub mod predict;
pub mod regression;
pub mod report;
pub mod segments;
pub mod spikes;
pub mod spiral;
pub mod stats;

pub use period::{
    estimate_fast_period, estimate_slow_period, FastPeriod, PeriodEstimate, PeriodMethod,
};
pub use predict::{predict_next_spike, SpikePrediction};
pub use regression::{fit_coefficient_vs_beta2, fit_interval_vs_logmag, ols, RegressionFit};
pub use report::{analyze, AnalysisReport, SpiralSection};
pub use segments::{classify_segments, SegmentKind, SegmentLabel};
pub use spikes::{detect_spikes, SpikeEvent, SpikeParams, SpikeTrain};
pub use spiral::{detect_spiral_pair, fit_spiral, triple_series, SpiralFit, SpiralPairFit};
