//! Partitions a loss series into smooth-monotone, oscillatory, spiking, and
//! diverged segments.

use serde::{Deserialize, Serialize};

use super::spikes::{odd_le, SpikeTrain};
use super::stats::rolling_median;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentKind {
    SmoothMonotone,
    Oscillatory,
    Spiking,
    Diverged,
}

/// One labeled range of epochs; ranges are inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentLabel {
    pub range: (usize, usize),
    pub kind: SegmentKind,
}

/// Fraction of adjacent-pair violations tolerated before a smoothed range
/// stops counting as monotone.
const MONOTONE_TOLERANCE: f64 = 0.01;

/// Smoothing window for the monotonicity check: wide enough to reject
/// isolated outliers, narrow enough to keep oscillations at scales of a few
/// tens of epochs visible.
const SMOOTH_WINDOW: usize = 21;

/// Labels every epoch of the run: the union of spike `[onset, settle]`
/// windows is spiking, a trailing non-finite range is diverged, and the
/// remaining gaps are smooth-monotone when their rolling median moves in one
/// direction (up to a 1% violation tolerance), oscillatory otherwise.
pub fn classify_segments(loss: &[f64], spikes: &SpikeTrain) -> Vec<SegmentLabel> {
    let n = loss.len();
    if n == 0 {
        return Vec::new();
    }
    let diverged_start = loss.iter().position(|x| !x.is_finite());
    let finite_end = diverged_start.unwrap_or(n); // exclusive

    // Merge overlapping spike windows, clipped to the finite prefix.
    let mut windows: Vec<(usize, usize)> = spikes
        .events
        .iter()
        .filter(|e| e.onset_epoch < finite_end)
        .map(|e| (e.onset_epoch, e.settle_epoch.min(finite_end.saturating_sub(1))))
        .collect();
    windows.sort_unstable();
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for w in windows {
        match merged.last_mut() {
            Some(last) if w.0 <= last.1 + 1 => last.1 = last.1.max(w.1),
            _ => merged.push(w),
        }
    }

    let mut out = Vec::new();
    let mut cursor = 0usize;
    for (start, end) in merged {
        if start > cursor {
            out.push(classify_quiet(loss, cursor, start - 1));
        }
        out.push(SegmentLabel { range: (start, end), kind: SegmentKind::Spiking });
        cursor = end + 1;
    }
    if cursor < finite_end {
        out.push(classify_quiet(loss, cursor, finite_end - 1));
    }
    if let Some(d) = diverged_start {
        out.push(SegmentLabel { range: (d.max(cursor), n - 1), kind: SegmentKind::Diverged });
    }
    out
}

fn classify_quiet(loss: &[f64], start: usize, end: usize) -> SegmentLabel {
    let span = &loss[start..=end];
    let window = SMOOTH_WINDOW.min(odd_le(span.len()));
    let med = rolling_median(span, window);
    let pairs = med.len().saturating_sub(1);
    let kind = if pairs == 0 {
        SegmentKind::SmoothMonotone
    } else {
        let decreasing = med[med.len() - 1] <= med[0];
        let violations = med
            .windows(2)
            .filter(|p| if decreasing { p[1] > p[0] } else { p[1] < p[0] })
            .count();
        if (violations as f64) <= MONOTONE_TOLERANCE * pairs as f64 {
            SegmentKind::SmoothMonotone
        } else {
            SegmentKind::Oscillatory
        }
    };
    SegmentLabel { range: (start, end), kind }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::spikes::{detect_spikes, SpikeParams};

    #[test]
    fn decreasing_loss_is_one_smooth_segment() {
        let loss: Vec<f64> = (0..3000).map(|i| 1.0 / (1.0 + 0.01 * i as f64)).collect();
        let spikes = detect_spikes(&loss, &SpikeParams::default()).unwrap();
        let segments = classify_segments(&loss, &spikes);
        assert_eq!(
            segments,
            vec![SegmentLabel { range: (0, 2999), kind: SegmentKind::SmoothMonotone }]
        );
    }

    #[test]
    fn spikes_interleave_quiet_segments() {
        let mut loss = vec![1.0; 6000];
        for &at in &[2000usize, 3000, 4200] {
            loss[at] = 100.0;
        }
        let spikes = detect_spikes(&loss, &SpikeParams::default()).unwrap();
        let segments = classify_segments(&loss, &spikes);
        let spiking: Vec<_> =
            segments.iter().filter(|s| s.kind == SegmentKind::Spiking).collect();
        let quiet: Vec<_> =
            segments.iter().filter(|s| s.kind != SegmentKind::Spiking).collect();
        assert_eq!(spiking.len(), 3);
        assert_eq!(quiet.len(), 4);
        assert_eq!(spiking[0].range, (1999, 2001));
    }

    #[test]
    fn nan_tail_is_diverged() {
        let mut loss: Vec<f64> = (0..1000).map(|i| 1.0 / (1.0 + i as f64)).collect();
        for v in loss.iter_mut().skip(800) {
            *v = f64::NAN;
        }
        let spikes = SpikeTrain::default();
        let segments = classify_segments(&loss, &spikes);
        assert_eq!(segments.last().unwrap().kind, SegmentKind::Diverged);
        assert_eq!(segments.last().unwrap().range, (800, 999));
    }

    #[test]
    fn oscillatory_segment_detected() {
        // A sawtooth with period 40 and swing 0.5 is far from monotone.
        let loss: Vec<f64> =
            (0..2000).map(|i| 1.0 + 0.5 * ((i % 40) as f64 / 40.0 - 0.5).abs()).collect();
        let spikes = SpikeTrain::default();
        let segments = classify_segments(&loss, &spikes);
        assert_eq!(segments.len(), 1);
        assert_eq!(segments[0].kind, SegmentKind::Oscillatory);
    }

    #[test]
    fn segments_partition_the_run() {
        let mut loss = vec![1.0; 4000];
        loss[1500] = 50.0;
        for v in loss.iter_mut().skip(3800) {
            *v = f64::INFINITY;
        }
        let spikes = detect_spikes(&loss, &SpikeParams::default()).unwrap();
        let segments = classify_segments(&loss, &spikes);
        assert_eq!(segments[0].range.0, 0);
        assert_eq!(segments.last().unwrap().range.1, 3999);
        for pair in segments.windows(2) {
            assert_eq!(pair[1].range.0, pair[0].range.1 + 1, "contiguous ranges");
        }
    }

    #[test]
    fn empty_loss_gives_no_segments() {
        assert!(classify_segments(&[], &SpikeTrain::default()).is_empty());
    }
}
