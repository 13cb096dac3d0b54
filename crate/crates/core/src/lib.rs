//! Deterministic laboratory for long-run Adam training dynamics on tiny MLPs.
//!
//! The crate is organized around a pipeline:
//!
//! 1. [`net`] — a one-hidden-layer network, synthetic teacher datasets,
//!    full-batch MSE loss and analytic gradients.
//! 2. [`precision`] — controllable floating-point precision: native 64/32-bit
//!    arithmetic or emulated formats with round-to-nearest-even quantization
//!    after every operation.
//! 3. [`optim`] — an Adam implementation with a fixed, documented operation
//!    order so runs are bit-reproducible.
//! 4. [`trainer`] — the long-horizon training loop producing [`Trajectory`]
//!    values, plus CSV / binary persistence in [`io`].
//! 5. [`analysis`] — loss-spike detection, slow/fast period estimation,
//!    interval–magnitude regressions, spiral fitting, segment classification,
//!    and next-spike prediction.
//!
//! Everything is a pure function of its inputs; no global state, no
//! platform-dependent RNG. See [`rng`] for the exact generator used.

pub mod analysis;
pub mod error;
pub mod io;
pub mod net;
pub mod optim;
pub mod precision;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
pub use net::{Activation, Dataset, NetworkShape, ParameterVector};
pub use optim::{AdamConfig, AdamState, ConvergenceCheck, StepResult};
pub use precision::PrecisionMode;
pub use trainer::{RunConfig, Trajectory};
