//! Loss-spike detection against a rolling-median baseline.

use serde::{Deserialize, Serialize};

use super::stats::rolling_median;
use crate::error::{Error, Result};

/// Detector configuration. The defaults (window 501, ratio 10, merge radius
/// 50) make the baseline robust to slow trends while treating only
/// order-of-magnitude excursions as spikes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeParams {
    /// Rolling-median window, odd, >= 3.
    pub window: usize,
    /// A spike must exceed `threshold_ratio * baseline`, > 1.
    pub threshold_ratio: f64,
    /// Candidates closer than this merge into one event, >= 1.
    pub min_separation: usize,
}

impl Default for SpikeParams {
    fn default() -> Self {
        SpikeParams { window: 501, threshold_ratio: 10.0, min_separation: 50 }
    }
}

impl SpikeParams {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window % 2 == 0 {
            return Err(Error::invalid(format!("window must be odd and >= 3, got {}", self.window)));
        }
        if !(self.threshold_ratio > 1.0) {
            return Err(Error::invalid(format!(
                "threshold_ratio must be > 1, got {}",
                self.threshold_ratio
            )));
        }
        if self.min_separation < 1 {
            return Err(Error::invalid("min_separation must be >= 1"));
        }
        Ok(())
    }
}

/// One loss explosion: where it peaked, how far above the baseline it got,
/// and the below-threshold epochs bracketing the excursion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeEvent {
    pub peak_epoch: usize,
    pub peak_loss: f64,
    /// Rolling-median baseline at the peak.
    pub baseline_loss: f64,
    /// `log10(peak_loss / baseline_loss)`.
    pub magnitude: f64,
    pub onset_epoch: usize,
    pub settle_epoch: usize,
}

/// Time-ordered spike events plus peak-to-peak distances.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpikeTrain {
    pub events: Vec<SpikeEvent>,
    pub intervals: Vec<usize>,
}

impl SpikeTrain {
    /// Builds a train from time-ordered events, deriving the intervals.
    pub fn from_events(events: Vec<SpikeEvent>) -> Result<Self> {
        for pair in events.windows(2) {
            if pair[1].peak_epoch <= pair[0].peak_epoch {
                return Err(Error::invalid("spike events must have strictly increasing peaks"));
            }
        }
        for e in &events {
            if !(e.onset_epoch <= e.peak_epoch && e.peak_epoch <= e.settle_epoch) {
                return Err(Error::invalid("spike onset/peak/settle out of order"));
            }
        }
        let intervals =
            events.windows(2).map(|p| p[1].peak_epoch - p[0].peak_epoch).collect();
        Ok(SpikeTrain { events, intervals })
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Detects loss spikes: epochs where the loss exceeds `threshold_ratio`
/// times a centered rolling-median baseline. Nearby candidates merge into a
/// single event whose peak is the maximum; onset and settle are the nearest
/// epochs at which the loss is back inside the threshold. Non-finite loss
/// values are divergence, not spikes, and are never candidates.
pub fn detect_spikes(loss: &[f64], params: &SpikeParams) -> Result<SpikeTrain> {
    params.validate()?;
    if loss.len() < 3 {
        return Err(Error::invalid(format!("series of {} values is too short", loss.len())));
    }
    let baseline = rolling_median(loss, params.window.min(odd_le(loss.len())));
    let above = |i: usize| -> bool {
        loss[i].is_finite()
            && baseline[i].is_finite()
            && loss[i] > params.threshold_ratio * baseline[i]
    };

    let candidates: Vec<usize> = (0..loss.len()).filter(|&i| above(i)).collect();

    let mut events = Vec::new();
    let mut group_start = 0;
    for k in 0..=candidates.len() {
        let group_ends = k == candidates.len()
            || (k > 0 && candidates[k] - candidates[k - 1] >= params.min_separation);
        if group_ends && k > group_start {
            let group = &candidates[group_start..k];
            let &peak_epoch = group
                .iter()
                .max_by(|&&a, &&b| loss[a].partial_cmp(&loss[b]).unwrap())
                .unwrap();
            let peak_loss = loss[peak_epoch];
            let baseline_loss = baseline[peak_epoch];
            let onset_epoch =
                (0..peak_epoch).rev().find(|&j| !above(j)).unwrap_or(0);
            let settle_epoch = (peak_epoch + 1..loss.len())
                .find(|&j| !loss[j].is_finite() || !above(j))
                .map(|j| if loss[j].is_finite() { j } else { j.saturating_sub(1) })
                .unwrap_or(loss.len() - 1);
            events.push(SpikeEvent {
                peak_epoch,
                peak_loss,
                baseline_loss,
                magnitude: libm::log10(peak_loss / baseline_loss.max(f64::MIN_POSITIVE)),
                onset_epoch,
                settle_epoch,
            });
        }
        if group_ends {
            group_start = k;
        }
    }
    SpikeTrain::from_events(events)
}

/// Largest odd value `<= n` (at least 1).
pub(crate) fn odd_le(n: usize) -> usize {
    if n % 2 == 1 {
        n
    } else {
        n.saturating_sub(1).max(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_with_peaks(len: usize, base: f64, peaks: &[(usize, f64)]) -> Vec<f64> {
        let mut s = vec![base; len];
        for &(at, value) in peaks {
            s[at] = value;
        }
        s
    }

    #[test]
    fn no_spikes_in_decreasing_loss() {
        let loss: Vec<f64> = (0..5000).map(|i| 1.0 / (1.0 + i as f64 * 0.01)).collect();
        let train = detect_spikes(&loss, &SpikeParams::default()).unwrap();
        assert!(train.is_empty());
        assert!(train.intervals.is_empty());
    }

    #[test]
    fn no_spikes_in_constant_loss() {
        let loss = vec![0.5; 2000];
        let train = detect_spikes(&loss, &SpikeParams::default()).unwrap();
        assert!(train.is_empty());
    }

    #[test]
    fn recovers_injected_peaks_exactly() {
        let loss =
            flat_with_peaks(6000, 1.0, &[(2000, 100.0), (3000, 100.0), (4200, 100.0)]);
        let train = detect_spikes(&loss, &SpikeParams::default()).unwrap();
        let peaks: Vec<usize> = train.events.iter().map(|e| e.peak_epoch).collect();
        assert_eq!(peaks, vec![2000, 3000, 4200]);
        assert_eq!(train.intervals, vec![1000, 1200]);
        for e in &train.events {
            assert_eq!(e.baseline_loss, 1.0);
            assert!((e.magnitude - 2.0).abs() < 1e-12);
            assert_eq!(e.onset_epoch, e.peak_epoch - 1);
            assert_eq!(e.settle_epoch, e.peak_epoch + 1);
        }
    }

    #[test]
    fn nearby_candidates_merge() {
        let loss = flat_with_peaks(3000, 1.0, &[(1000, 50.0), (1030, 80.0), (1500, 60.0)]);
        let train = detect_spikes(&loss, &SpikeParams::default()).unwrap();
        let peaks: Vec<usize> = train.events.iter().map(|e| e.peak_epoch).collect();
        // 1000 and 1030 are closer than min_separation; the peak is the max.
        assert_eq!(peaks, vec![1030, 1500]);
    }

    #[test]
    fn wide_excursion_brackets() {
        let mut loss = vec![1.0; 4000];
        for (off, v) in [30.0, 80.0, 200.0, 90.0, 40.0, 15.0].iter().enumerate() {
            loss[2000 + off] = *v;
        }
        let train = detect_spikes(&loss, &SpikeParams::default()).unwrap();
        assert_eq!(train.len(), 1);
        let e = &train.events[0];
        assert_eq!(e.peak_epoch, 2002);
        assert_eq!(e.onset_epoch, 1999);
        assert_eq!(e.settle_epoch, 2006);
    }

    #[test]
    fn nonfinite_values_are_not_spikes() {
        let mut loss = flat_with_peaks(3000, 1.0, &[(1000, 100.0)]);
        for v in loss.iter_mut().skip(2500) {
            *v = f64::INFINITY;
        }
        let train = detect_spikes(&loss, &SpikeParams::default()).unwrap();
        let peaks: Vec<usize> = train.events.iter().map(|e| e.peak_epoch).collect();
        assert_eq!(peaks, vec![1000]);
    }

    #[test]
    fn precondition_errors() {
        let loss = vec![1.0, 2.0];
        assert!(detect_spikes(&loss, &SpikeParams::default()).is_err());
        let loss = vec![1.0; 100];
        let bad_window = SpikeParams { window: 10, ..Default::default() };
        assert!(detect_spikes(&loss, &bad_window).is_err());
        let bad_ratio = SpikeParams { threshold_ratio: 1.0, ..Default::default() };
        assert!(detect_spikes(&loss, &bad_ratio).is_err());
        let bad_sep = SpikeParams { min_separation: 0, ..Default::default() };
        assert!(detect_spikes(&loss, &bad_sep).is_err());
    }

    #[test]
    fn randomized_injection_recall_and_precision() {
        use crate::rng::SplitMix64;
        let params = SpikeParams::default();
        for seed in 0..10u64 {
            let mut rng = SplitMix64::new(seed);
            let n = 20_000;
            let base = rng.uniform(0.1, 10.0);
            // Slowly varying baseline plus small noise, never near the x10 line.
            let mut loss: Vec<f64> = (0..n)
                .map(|i| {
                    let slow = 1.0 + 0.1 * libm::sin(2.0 * std::f64::consts::PI * i as f64 / 4000.0);
                    base * slow * (1.0 + 0.01 * rng.uniform(-1.0, 1.0))
                })
                .collect();
            let mut truth = Vec::new();
            let mut epoch = 600 + (rng.next_u64() % 500) as usize;
            while epoch + 600 < n {
                loss[epoch] *= rng.uniform(12.0, 100.0);
                truth.push(epoch);
                epoch += params.window + (rng.next_u64() % 1500) as usize;
            }
            let train = detect_spikes(&loss, &params).unwrap();
            let got: Vec<usize> = train.events.iter().map(|e| e.peak_epoch).collect();
            assert_eq!(got, truth, "seed {seed}");
        }
    }
}
