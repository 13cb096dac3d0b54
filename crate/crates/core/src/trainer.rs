//! Deterministic long-horizon training loop.
//!
//! One epoch is one full-batch Adam step: compute loss and gradient over the
//! whole dataset, step, repeat. The loss is recorded every epoch and the
//! parameter vector every `snapshot_stride` epochs (always before the step,
//! so recomputing the loss at a snapshot reproduces the recorded value
//! exactly). Spikes are data; the loop only stops early when the loss itself
//! becomes non-finite, which is recorded as `diverged_at`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::net::{self, dispatch_mode, NetworkShape, ParameterVector};
use crate::optim::{self, AdamConfig, AdamState};
use crate::precision::{Arith, EmulatedArith, F32Arith, F64Arith, PrecisionMode};

/// Everything needed to reproduce one training run bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub shape: NetworkShape,
    pub dataset_index: u64,
    pub n_points: usize,
    pub init_seed: u64,
    pub adam: AdamConfig,
    pub precision: PrecisionMode,
    pub epochs: usize,
    pub snapshot_stride: usize,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.shape.validate()?;
        self.adam.validate()?;
        self.precision.validate()?;
        if self.n_points < 2 {
            return Err(crate::Error::invalid("n_points must be >= 2"));
        }
        if self.epochs < 1 {
            return Err(crate::Error::invalid("epochs must be >= 1"));
        }
        if self.snapshot_stride < 1 {
            return Err(crate::Error::invalid("snapshot_stride must be >= 1"));
        }
        Ok(())
    }
}

impl Default for RunConfig {
    /// Desk-scale defaults: a width-8 tanh network on dataset 0, 50 000
    /// epochs in native32 with snapshots every 10 epochs.
    fn default() -> Self {
        RunConfig {
            shape: NetworkShape::scalar(8, crate::net::Activation::Tanh),
            dataset_index: 0,
            n_points: 32,
            init_seed: 1,
            adam: AdamConfig::default(),
            precision: PrecisionMode::Native32,
            epochs: 50_000,
            snapshot_stride: 10,
        }
    }
}

/// Parameters recorded at one epoch (before that epoch's step).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub epoch: usize,
    pub params: ParameterVector,
}

/// The full record of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub config: RunConfig,
    /// One loss value per epoch, truncated at `diverged_at` when set.
    pub loss: Vec<f64>,
    /// Snapshots at epochs `0, s, 2s, ...` within the recorded range.
    pub snapshots: Vec<Snapshot>,
    /// Epoch of the first non-finite loss, if the run diverged.
    pub diverged_at: Option<usize>,
}

impl Trajectory {
    /// Epochs actually recorded (equals `config.epochs` unless diverged).
    pub fn recorded_epochs(&self) -> usize {
        self.loss.len()
    }

    pub fn final_loss(&self) -> f64 {
        *self.loss.last().expect("trajectory has at least one epoch")
    }

    /// Looks up the snapshot at an exact epoch.
    pub fn snapshot_at(&self, epoch: usize) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| s.epoch == epoch)
    }
}

/// Trains one network to completion (or divergence). Bit-deterministic in
/// the config, including under different thread schedules: the loop itself
/// is strictly sequential.
pub fn train(cfg: &RunConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let dataset = net::generate_dataset(cfg.dataset_index, cfg.n_points, &cfg.shape)?
        .quantized(cfg.precision);
    let params = net::init_params(&cfg.shape, cfg.init_seed).quantized(cfg.precision);
    let traj = dispatch_mode!(cfg.precision, a => train_loop(a, cfg, &dataset, params));
    Ok(traj)
}

fn train_loop<A: Arith>(
    a: A,
    cfg: &RunConfig,
    dataset: &net::Dataset,
    mut params: ParameterVector,
) -> Trajectory {
    let n = cfg.shape.parameter_count();
    let mut state = AdamState::new(n);
    let mut grad = vec![0.0; n];
    let mut ws = net::Workspace::for_shape(&cfg.shape);
    let mut loss_series = Vec::with_capacity(cfg.epochs);
    let mut snapshots = Vec::with_capacity(cfg.epochs / cfg.snapshot_stride + 1);
    let mut diverged_at = None;

    for epoch in 0..cfg.epochs {
        let loss = net::loss_and_grad_into(a, &params, &cfg.shape, dataset, &mut grad, &mut ws);
        loss_series.push(loss);
        if epoch % cfg.snapshot_stride == 0 {
            snapshots.push(Snapshot { epoch, params: params.clone() });
        }
        if !loss.is_finite() {
            diverged_at = Some(epoch);
            break;
        }
        optim::step_in_place(a, params.as_mut_slice(), &mut state, &grad, &cfg.adam);
    }

    Trajectory { config: cfg.clone(), loss: loss_series, snapshots, diverged_at }
}
