//! Sweep configuration and the TOML config-file schema.
//!
//! Every CLI flag has a config-file equivalent: `train` accepts a full
//! [`RunConfig`] as TOML, `sweep` accepts a [`SweepConfig`]. See the README
//! for the documented key schema.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use adamlab_core::net::Activation;
use adamlab_core::{AdamConfig, Error, NetworkShape, PrecisionMode, Result, RunConfig};

/// Environment variable consulted for the default output directory.
pub const OUT_DIR_ENV: &str = "ADAMLAB_OUT_DIR";

/// Per-run template shared by every run of a sweep; width and dataset index
/// come from the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunTemplate {
    pub input_dim: usize,
    pub output_dim: usize,
    pub activation: Activation,
    pub n_points: usize,
    pub init_seed: u64,
    pub adam: AdamConfig,
    pub precision: PrecisionMode,
    pub epochs: usize,
    pub snapshot_stride: usize,
}

impl Default for RunTemplate {
    fn default() -> Self {
        let base = RunConfig::default();
        RunTemplate {
            input_dim: base.shape.input_dim,
            output_dim: base.shape.output_dim,
            activation: base.shape.activation,
            n_points: base.n_points,
            init_seed: base.init_seed,
            adam: base.adam,
            precision: base.precision,
            epochs: base.epochs,
            snapshot_stride: base.snapshot_stride,
        }
    }
}

impl RunTemplate {
    /// Fills in one grid cell.
    pub fn instantiate(&self, width: usize, dataset_index: u64) -> RunConfig {
        RunConfig {
            shape: NetworkShape {
                input_dim: self.input_dim,
                hidden_width: width,
                output_dim: self.output_dim,
                activation: self.activation,
            },
            dataset_index,
            n_points: self.n_points,
            init_seed: self.init_seed,
            adam: self.adam,
            precision: self.precision,
            epochs: self.epochs,
            snapshot_stride: self.snapshot_stride,
        }
    }
}

/// A grid of runs: every width crossed with every dataset index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub widths: Vec<usize>,
    pub dataset_indices: Vec<u64>,
    #[serde(default)]
    pub base: RunTemplate,
    /// When set, the whole grid is repeated per beta2 value (in a
    /// `beta2_*` subdirectory each) and the cross-beta2 regression is
    /// computed by the `report` command.
    #[serde(default)]
    pub beta2_grid: Option<Vec<f64>>,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    pub output_dir: PathBuf,
}

fn default_parallelism() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

impl SweepConfig {
    /// 8 widths x 8 datasets; finishes on a laptop.
    pub fn desk_scale(output_dir: PathBuf) -> Self {
        SweepConfig {
            widths: (5..=12).collect(),
            dataset_indices: (0..8).collect(),
            base: RunTemplate::default(),
            beta2_grid: None,
            parallelism: default_parallelism(),
            output_dir,
        }
    }

    /// 40 widths x 40 datasets = 1600 runs.
    pub fn paper_scale(output_dir: PathBuf) -> Self {
        SweepConfig {
            widths: (5..=44).collect(),
            dataset_indices: (0..40).collect(),
            base: RunTemplate::default(),
            beta2_grid: None,
            parallelism: default_parallelism(),
            output_dir,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.is_empty() || self.dataset_indices.is_empty() {
            return Err(Error::InvalidArgument("widths and dataset_indices must be nonempty".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &w in &self.widths {
            if !seen.insert(w) {
                return Err(Error::InvalidArgument(format!("duplicate width {w}")));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for &d in &self.dataset_indices {
            if !seen.insert(d) {
                return Err(Error::InvalidArgument(format!("duplicate dataset index {d}")));
            }
        }
        if self.parallelism < 1 {
            return Err(Error::InvalidArgument("parallelism must be >= 1".into()));
        }
        if let Some(grid) = &self.beta2_grid {
            for &b in grid {
                if !(0.0..1.0).contains(&b) {
                    return Err(Error::InvalidArgument(format!("beta2 {b} outside [0, 1)")));
                }
            }
        }
        // Instantiating any cell validates the template fields.
        self.base.instantiate(self.widths[0], self.dataset_indices[0]).validate()
    }

    /// All run configs of the grid in deterministic (width-major) order.
    pub fn runs(&self) -> Vec<RunConfig> {
        self.widths
            .iter()
            .flat_map(|&w| {
                self.dataset_indices.iter().map(move |&d| self.base.instantiate(w, d))
            })
            .collect()
    }
}

pub fn load_sweep_config(path: &Path) -> Result<SweepConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg: SweepConfig = toml::from_str(&text)
        .map_err(|e| Error::Format(format!("bad sweep config {}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_run_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg: RunConfig = toml::from_str(&text)
        .map_err(|e| Error::Format(format!("bad run config {}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn save_sweep_config(cfg: &SweepConfig, path: &Path) -> Result<()> {
    let text = toml::to_string_pretty(cfg)
        .map_err(|e| Error::Format(format!("cannot serialize sweep config: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}
