//! Small statistics helpers shared by the analysis passes.
//!
//! Rolling statistics use centered windows that truncate at the series
//! edges, and they ignore non-finite entries (a diverged tail must not
//! poison the baseline next to it).

/// Median of the finite values in `xs`; NaN when there are none.
/// Even-length inputs average the two middle values.
pub fn median(xs: &[f64]) -> f64 {
    let mut v: Vec<f64> = xs.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = v.len() / 2;
    if v.len() % 2 == 0 {
        (v[mid - 1] + v[mid]) * 0.5
    } else {
        v[mid]
    }
}

/// Centered rolling median with truncated edge windows. `window` must be odd.
pub fn rolling_median(series: &[f64], window: usize) -> Vec<f64> {
    assert!(window % 2 == 1, "rolling window must be odd");
    let n = series.len();
    let h = window / 2;
    let mut sorted: Vec<f64> = Vec::with_capacity(window);
    let mut out = Vec::with_capacity(n);

    let insert = |sorted: &mut Vec<f64>, x: f64| {
        if x.is_finite() {
            let at = sorted.partition_point(|&y| y < x);
            sorted.insert(at, x);
        }
    };
    let remove = |sorted: &mut Vec<f64>, x: f64| {
        if x.is_finite() {
            let at = sorted.partition_point(|&y| y < x);
            debug_assert!(at < sorted.len() && sorted[at] == x);
            sorted.remove(at);
        }
    };

    // Prime the window for index 0: [0, h].
    for &x in &series[..n.min(h + 1)] {
        insert(&mut sorted, x);
    }
    for i in 0..n {
        out.push(sorted_median(&sorted));
        // Slide to i+1: add i+1+h, drop i-h.
        if i + 1 + h < n {
            insert(&mut sorted, series[i + 1 + h]);
        }
        if i >= h {
            remove(&mut sorted, series[i - h]);
        }
    }
    out
}

fn sorted_median(sorted: &[f64]) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 0 {
        (sorted[mid - 1] + sorted[mid]) * 0.5
    } else {
        sorted[mid]
    }
}

/// Centered rolling mean with truncated edge windows. `window` must be odd.
/// Non-finite entries poison their windows (callers pre-filter).
pub fn rolling_mean(series: &[f64], window: usize) -> Vec<f64> {
    assert!(window % 2 == 1, "rolling window must be odd");
    let n = series.len();
    let h = window / 2;
    let mut out = Vec::with_capacity(n);
    let mut sum = 0.0;
    let mut count = 0usize;
    for &x in &series[..n.min(h + 1)] {
        sum += x;
        count += 1;
    }
    for i in 0..n {
        out.push(sum / count as f64);
        if i + 1 + h < n {
            sum += series[i + 1 + h];
            count += 1;
        }
        if i >= h {
            sum -= series[i - h];
            count -= 1;
        }
    }
    out
}

/// Normalized autocorrelation of `d` for lags `0..=max_lag`:
/// `acf[k] = sum_i d[i] d[i+k] / sum_i d[i]^2`. Returns `None` when the
/// zero-lag energy is zero (a constant-zero signal has no correlation
/// structure).
pub fn autocorrelation(d: &[f64], max_lag: usize) -> Option<Vec<f64>> {
    let n = d.len();
    let energy: f64 = d.iter().map(|x| x * x).sum();
    if energy == 0.0 {
        return None;
    }
    let mut acf = Vec::with_capacity(max_lag + 1);
    for lag in 0..=max_lag.min(n.saturating_sub(1)) {
        let mut c = 0.0;
        for i in 0..n - lag {
            c += d[i] * d[i + lag];
        }
        acf.push(c / energy);
    }
    Some(acf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_basics() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[1.0, 2.0, 3.0, 4.0]), 2.5);
        assert_eq!(median(&[5.0, f64::NAN, 1.0]), 3.0);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn rolling_median_flat_and_edges() {
        let series = vec![1.0; 10];
        assert_eq!(rolling_median(&series, 5), series);
        // Truncated edges on a ramp: window at index 0 covers [0, 1, 2].
        let ramp: Vec<f64> = (0..7).map(|i| i as f64).collect();
        let med = rolling_median(&ramp, 5);
        assert_eq!(med[0], 1.0);
        assert_eq!(med[1], 1.5);
        assert_eq!(med[3], 3.0);
        assert_eq!(med[6], 5.0);
    }

    #[test]
    fn rolling_median_rejects_single_outlier() {
        let mut series = vec![2.0; 101];
        series[50] = 500.0;
        let med = rolling_median(&series, 11);
        assert!(med.iter().all(|&m| m == 2.0));
    }

    #[test]
    fn rolling_median_skips_nonfinite() {
        let mut series = vec![1.0; 21];
        series[10] = f64::NAN;
        series[15] = f64::INFINITY;
        let med = rolling_median(&series, 5);
        assert!(med.iter().all(|&m| m == 1.0));
    }

    #[test]
    fn rolling_mean_matches_naive() {
        let series: Vec<f64> = (0..50).map(|i| (i as f64 * 0.7).sin()).collect();
        let fast = rolling_mean(&series, 9);
        for i in 0..series.len() {
            let lo = i.saturating_sub(4);
            let hi = (i + 4).min(series.len() - 1);
            let naive: f64 =
                series[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64;
            assert!((fast[i] - naive).abs() < 1e-9, "index {i}");
        }
    }

    #[test]
    fn autocorrelation_of_sinusoid_peaks_at_period() {
        let n = 400;
        let p = 20.0;
        let d: Vec<f64> =
            (0..n).map(|i| (2.0 * std::f64::consts::PI * i as f64 / p).sin()).collect();
        let acf = autocorrelation(&d, 100).unwrap();
        assert!((acf[0] - 1.0).abs() < 1e-12);
        assert!(acf[20] > acf[19] && acf[20] > acf[21]);
        assert!(acf[20] > 0.8);
        assert!(autocorrelation(&vec![0.0; 50], 10).is_none());
    }
}
