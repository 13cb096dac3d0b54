//! Shared fixtures for the pipeline benchmarks.

use adamlab_core::net::Activation;
use adamlab_core::{NetworkShape, PrecisionMode, RunConfig, Trajectory};

/// A short desk-scale run used as the common benchmark input.
pub fn bench_run_config(precision: PrecisionMode, epochs: usize) -> RunConfig {
    RunConfig {
        shape: NetworkShape::scalar(8, Activation::Tanh),
        dataset_index: 3,
        n_points: 32,
        init_seed: 1,
        precision,
        epochs,
        snapshot_stride: 10,
        ..RunConfig::default()
    }
}

/// A trained trajectory (memoizable by callers) for analysis benchmarks.
pub fn bench_trajectory(epochs: usize) -> Trajectory {
    adamlab_core::trainer::train(&bench_run_config(PrecisionMode::Native32, epochs))
        .expect("benchmark run config is valid")
}

/// Synthetic loss series with injected spikes for detector benchmarks.
pub fn spiky_series(n: usize) -> Vec<f64> {
    let mut loss: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + 1e-4 * i as f64)).collect();
    let mut at = 900;
    while at < n {
        loss[at] *= 50.0;
        at += 1000;
    }
    loss
}

/// Synthetic helix for spiral-fit benchmarks.
pub fn helix_points(n: usize) -> Vec<(usize, [f64; 3])> {
    (0..n)
        .map(|t| {
            let frac = t as f64 / n as f64;
            let angle = std::f64::consts::TAU * 10.0 * frac;
            (t, [angle.cos(), angle.sin(), frac])
        })
        .collect()
}
