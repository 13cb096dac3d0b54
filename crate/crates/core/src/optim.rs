//! Adam with exponential-decay moment estimates and a fixed operation order.
//!
//! One step performs, in exactly this sequence (every operation rounded to
//! the precision mode's format):
//!
//! ```text
//! t     <- t + 1
//! p1    <- p1 * beta1                 // running beta1^t, starts at 1
//! p2    <- p2 * beta2                 // running beta2^t
//! bc1   <- 1 - p1
//! bc2   <- 1 - p2
//! for every coordinate i:
//!     m[i]  <- beta1 * m[i] + (1 - beta1) * g[i]
//!     v[i]  <- beta2 * v[i] + (1 - beta2) * (g[i] * g[i])
//!     mhat  <- m[i] / bc1
//!     vhat  <- v[i] / bc2
//!     th[i] <- th[i] - (alpha * mhat) / (sqrt(vhat) + eps)
//! ```
//!
//! The explicit `1 - beta^t` bias correction (rather than a fused step-size
//! rewrite) keeps the recurrences directly checkable against a scalar
//! reference implementation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{dispatch_mode, ParameterVector};
use crate::precision::{Arith, EmulatedArith, F32Arith, F64Arith, PrecisionMode};

/// Adam hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    /// Learning rate.
    pub alpha: f64,
    /// First-moment decay, in [0, 1).
    pub beta1: f64,
    /// Second-moment decay, in [0, 1).
    pub beta2: f64,
    /// Denominator offset.
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { alpha: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(0.0..1.0).contains(&self.beta1) {
            return Err(Error::invalid(format!("beta1 must be in [0, 1), got {}", self.beta1)));
        }
        if !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::invalid(format!("beta2 must be in [0, 1), got {}", self.beta2)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// Per-parameter moment estimates and the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub(crate) m: Vec<f64>,
    pub(crate) v: Vec<f64>,
    pub(crate) t: u64,
    // Running beta^t products; avoids recomputing powers every step.
    pub(crate) beta1_pow: f64,
    pub(crate) beta2_pow: f64,
}

impl AdamState {
    pub fn new(parameter_count: usize) -> Self {
        AdamState {
            m: vec![0.0; parameter_count],
            v: vec![0.0; parameter_count],
            t: 0,
            beta1_pow: 1.0,
            beta2_pow: 1.0,
        }
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// Outcome of one Adam step. `finite` is false when any updated parameter or
/// moment entry is non-finite (NaN and infinity propagate rather than stop
/// the step).
#[derive(Debug, Clone)]
pub struct StepResult {
    pub params: ParameterVector,
    pub state: AdamState,
    pub finite: bool,
}

/// Applies one Adam step under the given precision mode.
pub fn adam_step(
    params: ParameterVector,
    state: AdamState,
    g: &[f64],
    cfg: &AdamConfig,
    mode: PrecisionMode,
) -> Result<StepResult> {
    cfg.validate()?;
    mode.validate()?;
    if g.len() != params.len() || state.m.len() != params.len() {
        return Err(Error::invalid(format!(
            "length mismatch: params {}, grad {}, state {}",
            params.len(),
            g.len(),
            state.m.len()
        )));
    }
    if state.t >= 1 << 63 {
        return Err(Error::invalid("step counter exhausted"));
    }
    let mut params = params;
    let mut state = state;
    let finite = dispatch_mode!(mode, a => step_in_place(
        a, params.as_mut_slice(), &mut state, g, cfg));
    Ok(StepResult { params, state, finite })
}

/// In-place kernel shared with the training loop. Returns whether all
/// updated values are finite.
pub(crate) fn step_in_place<A: Arith>(
    a: A,
    params: &mut [f64],
    state: &mut AdamState,
    g: &[f64],
    cfg: &AdamConfig,
) -> bool {
    let alpha = a.round(cfg.alpha);
    let beta1 = a.round(cfg.beta1);
    let beta2 = a.round(cfg.beta2);
    let eps = a.round(cfg.epsilon);
    let one_minus_beta1 = a.sub(1.0, beta1);
    let one_minus_beta2 = a.sub(1.0, beta2);

    state.t += 1;
    state.beta1_pow = a.mul(state.beta1_pow, beta1);
    state.beta2_pow = a.mul(state.beta2_pow, beta2);
    let bc1 = a.sub(1.0, state.beta1_pow);
    let bc2 = a.sub(1.0, state.beta2_pow);

    let mut finite = true;
    for i in 0..params.len() {
        let gi = g[i];
        let m = a.add(a.mul(beta1, state.m[i]), a.mul(one_minus_beta1, gi));
        let v = a.add(a.mul(beta2, state.v[i]), a.mul(one_minus_beta2, a.mul(gi, gi)));
        state.m[i] = m;
        state.v[i] = v;
        let m_hat = a.div(m, bc1);
        let v_hat = a.div(v, bc2);
        let update = a.div(a.mul(alpha, m_hat), a.add(a.sqrt(v_hat), eps));
        let p = a.sub(params[i], update);
        params[i] = p;
        finite &= p.is_finite() && m.is_finite() && v.is_finite();
    }
    finite
}

/// Result of evaluating the classical convergence condition
/// `beta1^2 / sqrt(beta2) < 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCheck {
    pub satisfied: bool,
    pub report: String,
}

/// Evaluates `beta1^2 < sqrt(beta2)`. Satisfying it does not prevent
/// long-run divergence; it is reported alongside every run for context.
pub fn check_convergence_condition(cfg: &AdamConfig) -> ConvergenceCheck {
    let lhs = cfg.beta1 * cfg.beta1;
    let rhs = libm::sqrt(cfg.beta2);
    let satisfied = lhs < rhs;
    ConvergenceCheck {
        satisfied,
        report: format!(
            "beta1^2 = {lhs:.6} {} sqrt(beta2) = {rhs:.6}: convergence condition {}",
            if satisfied { "<" } else { ">=" },
            if satisfied { "satisfied" } else { "violated" }
        ),
    }
}
