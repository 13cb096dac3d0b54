//! Operational shell around `adamlab-core`: sweep orchestration with a
//! hashed, resumable manifest; per-run and sweep-level reports; SVG plots;
//! and the `adamlab` command-line interface.

pub mod config;
pub mod manifest;
pub mod report;
pub mod svg;
pub mod sweep;

pub use config::{load_run_config, load_sweep_config, RunTemplate, SweepConfig, OUT_DIR_ENV};
pub use manifest::{verify_dir, Manifest, VerifyReport};
pub use report::{build_report, render_table, RunSummary, SweepReport};
pub use sweep::{run_sweep, SweepOutcome};
