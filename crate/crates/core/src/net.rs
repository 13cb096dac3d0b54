//! One-hidden-layer network, synthetic datasets, loss, and analytic gradients.
//!
//! The network is `y = W2 * act(W1 * x + b1) + b2` with a linear output
//! layer. Parameters live in a single flat vector with layout
//! `[W1 row-major | b1 | W2 row-major | b2]`; weight rows belong to the
//! receiving unit (`W1[k][i]` sits at `k * input_dim + i`).
//!
//! Accumulation order is fixed so results are reproducible bit for bit:
//! every dot product starts from the bias and adds products left to right,
//! and the loss sums squared errors point-major, output-dimension-minor.
//! Under an emulated [`PrecisionMode`] every one of those operations is
//! rounded to the target format.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precision::{Arith, EmulatedArith, F32Arith, F64Arith, PrecisionMode};
use crate::rng::{SplitMix64, STREAM_DATASET, STREAM_INIT};

/// Hidden width of the teacher network used by [`generate_dataset`].
const TEACHER_WIDTH: usize = 4;
/// Standard deviation of the Gaussian noise added to teacher targets.
const TARGET_NOISE_SIGMA: f64 = 0.01;

/// Hidden-layer activation function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Sigmoid,
    Relu,
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Activation::Tanh => write!(f, "tanh"),
            Activation::Sigmoid => write!(f, "sigmoid"),
            Activation::Relu => write!(f, "relu"),
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            "relu" => Ok(Activation::Relu),
            _ => Err(Error::invalid(format!("unknown activation `{s}`"))),
        }
    }
}

/// Architecture of the one-hidden-layer network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkShape {
    pub input_dim: usize,
    pub hidden_width: usize,
    pub output_dim: usize,
    pub activation: Activation,
}

impl NetworkShape {
    pub fn new(
        input_dim: usize,
        hidden_width: usize,
        output_dim: usize,
        activation: Activation,
    ) -> Result<Self> {
        let shape = NetworkShape { input_dim, hidden_width, output_dim, activation };
        shape.validate()?;
        Ok(shape)
    }

    /// Scalar-in, scalar-out network of the given width.
    pub fn scalar(hidden_width: usize, activation: Activation) -> Self {
        NetworkShape { input_dim: 1, hidden_width, output_dim: 1, activation }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim < 1 || self.hidden_width < 1 || self.output_dim < 1 {
            return Err(Error::invalid(format!(
                "all shape dimensions must be >= 1, got ({}, {}, {})",
                self.input_dim, self.hidden_width, self.output_dim
            )));
        }
        Ok(())
    }

    /// Total number of trainable parameters.
    pub fn parameter_count(&self) -> usize {
        let (i, h, o) = (self.input_dim, self.hidden_width, self.output_dim);
        i * h + h + h * o + o
    }

    /// Index ranges of the four parameter blocks in the flat layout.
    pub fn layout(&self) -> Layout {
        let (i, h, o) = (self.input_dim, self.hidden_width, self.output_dim);
        let w1 = 0..i * h;
        let b1 = w1.end..w1.end + h;
        let w2 = b1.end..b1.end + h * o;
        let b2 = w2.end..w2.end + o;
        Layout { w1, b1, w2, b2 }
    }
}

/// Block ranges into a [`ParameterVector`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub w1: std::ops::Range<usize>,
    pub b1: std::ops::Range<usize>,
    pub w2: std::ops::Range<usize>,
    pub b2: std::ops::Range<usize>,
}

/// Flat vector of all trainable parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    values: Vec<f64>,
}

impl ParameterVector {
    pub fn from_vec(values: Vec<f64>) -> Self {
        ParameterVector { values }
    }

    pub fn zeros(n: usize) -> Self {
        ParameterVector { values: vec![0.0; n] }
    }

    /// Packs the four blocks into the flat layout, validating sizes.
    pub fn from_parts(
        shape: &NetworkShape,
        w1: &[f64],
        b1: &[f64],
        w2: &[f64],
        b2: &[f64],
    ) -> Result<Self> {
        let l = shape.layout();
        if w1.len() != l.w1.len()
            || b1.len() != l.b1.len()
            || w2.len() != l.w2.len()
            || b2.len() != l.b2.len()
        {
            return Err(Error::invalid("parameter block sizes do not match shape"));
        }
        let mut values = Vec::with_capacity(shape.parameter_count());
        values.extend_from_slice(w1);
        values.extend_from_slice(b1);
        values.extend_from_slice(w2);
        values.extend_from_slice(b2);
        Ok(ParameterVector { values })
    }

    /// Borrows the four blocks `(w1, b1, w2, b2)`.
    pub fn split<'a>(&'a self, shape: &NetworkShape) -> Result<[&'a [f64]; 4]> {
        if self.len() != shape.parameter_count() {
            return Err(Error::invalid(format!(
                "parameter vector has {} entries, shape needs {}",
                self.len(),
                shape.parameter_count()
            )));
        }
        let l = shape.layout();
        Ok([&self.values[l.w1], &self.values[l.b1], &self.values[l.w2], &self.values[l.b2]])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Every entry rounded into the mode's format.
    pub fn quantized(&self, mode: PrecisionMode) -> Self {
        ParameterVector {
            values: self.values.iter().map(|&v| crate::precision::quantize(v, mode)).collect(),
        }
    }
}

impl std::ops::Index<usize> for ParameterVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// A synthetic regression dataset, regenerable bit-identically from its index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    inputs: Vec<f64>,  // row-major, n_points x input_dim
    targets: Vec<f64>, // row-major, n_points x output_dim
    pub dataset_index: u64,
    pub n_points: usize,
    input_dim: usize,
    output_dim: usize,
}

impl Dataset {
    pub fn from_rows(
        inputs: Vec<Vec<f64>>,
        targets: Vec<Vec<f64>>,
        dataset_index: u64,
    ) -> Result<Self> {
        if inputs.is_empty() || inputs.len() != targets.len() {
            return Err(Error::invalid("inputs and targets must be nonempty and equal length"));
        }
        let input_dim = inputs[0].len();
        let output_dim = targets[0].len();
        if inputs.iter().any(|r| r.len() != input_dim)
            || targets.iter().any(|r| r.len() != output_dim)
        {
            return Err(Error::invalid("ragged rows in dataset"));
        }
        let n_points = inputs.len();
        Ok(Dataset {
            inputs: inputs.into_iter().flatten().collect(),
            targets: targets.into_iter().flatten().collect(),
            dataset_index,
            n_points,
            input_dim,
            output_dim,
        })
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn target(&self, i: usize) -> &[f64] {
        &self.targets[i * self.output_dim..(i + 1) * self.output_dim]
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    /// Every value rounded into the mode's format.
    pub fn quantized(&self, mode: PrecisionMode) -> Self {
        let q = |v: &Vec<f64>| v.iter().map(|&x| crate::precision::quantize(x, mode)).collect();
        Dataset { inputs: q(&self.inputs), targets: q(&self.targets), ..self.clone() }
    }
}

/// Generates the dataset for `dataset_index`: a fixed-width-4 teacher network
/// with parameters uniform in [-2, 2] is sampled from the index, inputs are
/// `n_points` values evenly spaced in [-1, 1] (repeated across input
/// dimensions), and targets are the teacher outputs plus Gaussian noise with
/// sigma 0.01. Only `input_dim`, `output_dim`, and `activation` of `shape`
/// matter, so runs with different hidden widths share datasets.
pub fn generate_dataset(
    dataset_index: u64,
    n_points: usize,
    shape: &NetworkShape,
) -> Result<Dataset> {
    shape.validate()?;
    if n_points < 2 {
        return Err(Error::invalid(format!("n_points must be >= 2, got {n_points}")));
    }
    let teacher_shape = NetworkShape {
        input_dim: shape.input_dim,
        hidden_width: TEACHER_WIDTH,
        output_dim: shape.output_dim,
        activation: shape.activation,
    };
    let mut rng = SplitMix64::with_stream(dataset_index, STREAM_DATASET);
    let teacher = ParameterVector::from_vec(
        (0..teacher_shape.parameter_count()).map(|_| rng.uniform(-2.0, 2.0)).collect(),
    );

    let mut inputs = Vec::with_capacity(n_points * shape.input_dim);
    let mut targets = Vec::with_capacity(n_points * shape.output_dim);
    let mut ws = Workspace::for_shape(&teacher_shape);
    for i in 0..n_points {
        let t = -1.0 + 2.0 * (i as f64) / ((n_points - 1) as f64);
        let x = vec![t; shape.input_dim];
        forward_kernel(F64Arith, teacher.as_slice(), &teacher_shape, &x, &mut ws);
        for j in 0..shape.output_dim {
            targets.push(ws.output[j] + TARGET_NOISE_SIGMA * rng.normal());
        }
        inputs.extend_from_slice(&x);
    }
    Ok(Dataset {
        inputs,
        targets,
        dataset_index,
        n_points,
        input_dim: shape.input_dim,
        output_dim: shape.output_dim,
    })
}

/// Initial parameters: each layer's weights uniform in
/// `[-1/sqrt(fan_in), +1/sqrt(fan_in)]`, biases zero.
pub fn init_params(shape: &NetworkShape, init_seed: u64) -> ParameterVector {
    let mut rng = SplitMix64::with_stream(init_seed, STREAM_INIT);
    let l = shape.layout();
    let mut values = vec![0.0; shape.parameter_count()];
    let bound1 = 1.0 / libm::sqrt(shape.input_dim as f64);
    for v in &mut values[l.w1] {
        *v = rng.uniform(-bound1, bound1);
    }
    let bound2 = 1.0 / libm::sqrt(shape.hidden_width as f64);
    for v in &mut values[l.w2] {
        *v = rng.uniform(-bound2, bound2);
    }
    ParameterVector { values }
}

/// Reusable per-point buffers for the forward/backward kernels.
pub(crate) struct Workspace {
    pub hidden: Vec<f64>,
    pub output: Vec<f64>,
    residual: Vec<f64>,
}

impl Workspace {
    pub(crate) fn for_shape(shape: &NetworkShape) -> Self {
        Workspace {
            hidden: vec![0.0; shape.hidden_width],
            output: vec![0.0; shape.output_dim],
            residual: vec![0.0; shape.output_dim],
        }
    }
}

#[inline]
fn activate<A: Arith>(a: A, act: Activation, z: f64) -> f64 {
    match act {
        Activation::Tanh => a.tanh(z),
        // 1 / (1 + exp(-z)), every step rounded in emulated modes
        Activation::Sigmoid => a.div(1.0, a.add(1.0, a.exp(-z))),
        Activation::Relu => {
            if z > 0.0 {
                z
            } else {
                0.0
            }
        }
    }
}

/// Derivative of the activation expressed through its output value `y`.
/// For relu the subgradient at zero is taken as 0.
#[inline]
fn activate_prime<A: Arith>(a: A, act: Activation, y: f64) -> f64 {
    match act {
        Activation::Tanh => a.sub(1.0, a.mul(y, y)),
        Activation::Sigmoid => a.mul(y, a.sub(1.0, y)),
        Activation::Relu => {
            if y > 0.0 {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Forward pass for one input; fills `ws.hidden` and `ws.output`.
pub(crate) fn forward_kernel<A: Arith>(
    a: A,
    params: &[f64],
    shape: &NetworkShape,
    x: &[f64],
    ws: &mut Workspace,
) {
    let (ind, h, od) = (shape.input_dim, shape.hidden_width, shape.output_dim);
    let l = shape.layout();
    let (w1, b1, w2, b2) = (&params[l.w1], &params[l.b1], &params[l.w2], &params[l.b2]);
    for k in 0..h {
        let mut z = b1[k];
        for i in 0..ind {
            z = a.add(z, a.mul(w1[k * ind + i], x[i]));
        }
        ws.hidden[k] = activate(a, shape.activation, z);
    }
    for j in 0..od {
        let mut y = b2[j];
        for k in 0..h {
            y = a.add(y, a.mul(w2[j * h + k], ws.hidden[k]));
        }
        ws.output[j] = y;
    }
}

/// Full-batch MSE and (optionally) its analytic gradient.
///
/// With `WITH_GRAD` the gradient of the mean squared error with respect to
/// every parameter is accumulated into `grad` (which must be zeroed by the
/// caller). The loss-path operations are identical with and without the
/// gradient, so the two variants return bit-identical losses.
fn loss_grad_kernel<A: Arith, const WITH_GRAD: bool>(
    a: A,
    params: &[f64],
    shape: &NetworkShape,
    data: &Dataset,
    grad: &mut [f64],
    ws: &mut Workspace,
) -> f64 {
    let (ind, h, od) = (shape.input_dim, shape.hidden_width, shape.output_dim);
    let l = shape.layout();
    let n = data.n_points;
    let mut total = 0.0;
    for p in 0..n {
        let x = data.input(p);
        let t = data.target(p);
        forward_kernel(a, params, shape, x, ws);
        for j in 0..od {
            let r = a.sub(ws.output[j], t[j]);
            total = a.add(total, a.mul(r, r));
            ws.residual[j] = r;
        }
        if WITH_GRAD {
            let (gw1, rest) = grad.split_at_mut(l.b1.start);
            let (gb1, rest) = rest.split_at_mut(l.b1.len());
            let (gw2, gb2) = rest.split_at_mut(l.w2.len());
            let w2 = &params[l.w2.clone()];
            for j in 0..od {
                let r = ws.residual[j];
                gb2[j] = a.add(gb2[j], r);
                for k in 0..h {
                    gw2[j * h + k] = a.add(gw2[j * h + k], a.mul(r, ws.hidden[k]));
                }
            }
            for k in 0..h {
                let mut da = 0.0;
                for j in 0..od {
                    da = a.add(da, a.mul(ws.residual[j], w2[j * h + k]));
                }
                let dz = a.mul(da, activate_prime(a, shape.activation, ws.hidden[k]));
                gb1[k] = a.add(gb1[k], dz);
                for i in 0..ind {
                    gw1[k * ind + i] = a.add(gw1[k * ind + i], a.mul(dz, x[i]));
                }
            }
        }
    }
    let denom = a.mul(a.round(n as f64), a.round(od as f64));
    if WITH_GRAD {
        let scale = a.div(a.round(2.0), denom);
        for g in grad.iter_mut() {
            *g = a.mul(*g, scale);
        }
    }
    a.div(total, denom)
}

fn check_args(params: &ParameterVector, shape: &NetworkShape, data: &Dataset) -> Result<()> {
    shape.validate()?;
    if params.len() != shape.parameter_count() {
        return Err(Error::invalid(format!(
            "parameter vector has {} entries, shape needs {}",
            params.len(),
            shape.parameter_count()
        )));
    }
    if data.n_points == 0 {
        return Err(Error::invalid("dataset is empty"));
    }
    if data.input_dim != shape.input_dim || data.output_dim != shape.output_dim {
        return Err(Error::invalid("dataset dimensions do not match shape"));
    }
    Ok(())
}

macro_rules! dispatch_mode {
    ($mode:expr, $arith:ident => $body:expr) => {
        match $mode {
            PrecisionMode::Native64 => {
                let $arith = F64Arith;
                $body
            }
            PrecisionMode::Native32 => {
                let $arith = F32Arith;
                $body
            }
            PrecisionMode::Emulated { exponent_bits, mantissa_bits } => {
                let $arith = EmulatedArith::new(exponent_bits, mantissa_bits);
                $body
            }
        }
    };
}

pub(crate) use dispatch_mode;

/// Network output for one input vector, in binary64.
pub fn forward(params: &ParameterVector, shape: &NetworkShape, x: &[f64]) -> Result<Vec<f64>> {
    forward_with(params, shape, x, PrecisionMode::Native64)
}

/// Network output under an explicit precision mode.
pub fn forward_with(
    params: &ParameterVector,
    shape: &NetworkShape,
    x: &[f64],
    mode: PrecisionMode,
) -> Result<Vec<f64>> {
    shape.validate()?;
    if params.len() != shape.parameter_count() {
        return Err(Error::invalid("parameter vector length does not match shape"));
    }
    if x.len() != shape.input_dim {
        return Err(Error::invalid(format!(
            "input has {} entries, shape expects {}",
            x.len(),
            shape.input_dim
        )));
    }
    let mut ws = Workspace::for_shape(shape);
    dispatch_mode!(mode, a => forward_kernel(a, params.as_slice(), shape, x, &mut ws));
    Ok(ws.output)
}

/// Full-batch mean squared error, averaged over points and output
/// dimensions. A non-finite forward pass yields a non-finite loss; callers
/// treat that as divergence, not as an error.
pub fn mse_loss(params: &ParameterVector, shape: &NetworkShape, data: &Dataset) -> Result<f64> {
    mse_loss_with(params, shape, data, PrecisionMode::Native64)
}

pub fn mse_loss_with(
    params: &ParameterVector,
    shape: &NetworkShape,
    data: &Dataset,
    mode: PrecisionMode,
) -> Result<f64> {
    check_args(params, shape, data)?;
    let mut ws = Workspace::for_shape(shape);
    let loss = dispatch_mode!(mode, a => loss_grad_kernel::<_, false>(
        a, params.as_slice(), shape, data, &mut [], &mut ws));
    Ok(loss)
}

/// Analytic gradient of [`mse_loss`] in the flat parameter layout.
pub fn grad(params: &ParameterVector, shape: &NetworkShape, data: &Dataset) -> Result<Vec<f64>> {
    Ok(loss_and_grad_with(params, shape, data, PrecisionMode::Native64)?.1)
}

pub fn grad_with(
    params: &ParameterVector,
    shape: &NetworkShape,
    data: &Dataset,
    mode: PrecisionMode,
) -> Result<Vec<f64>> {
    Ok(loss_and_grad_with(params, shape, data, mode)?.1)
}

/// Loss and gradient from one shared pass.
pub fn loss_and_grad_with(
    params: &ParameterVector,
    shape: &NetworkShape,
    data: &Dataset,
    mode: PrecisionMode,
) -> Result<(f64, Vec<f64>)> {
    check_args(params, shape, data)?;
    let mut grad = vec![0.0; shape.parameter_count()];
    let mut ws = Workspace::for_shape(shape);
    let loss = dispatch_mode!(mode, a => loss_grad_kernel::<_, true>(
        a, params.as_slice(), shape, data, &mut grad, &mut ws));
    Ok((loss, grad))
}

/// In-place variant for hot loops: `grad` is zeroed and refilled.
pub(crate) fn loss_and_grad_into<A: Arith>(
    a: A,
    params: &ParameterVector,
    shape: &NetworkShape,
    data: &Dataset,
    grad: &mut [f64],
    ws: &mut Workspace,
) -> f64 {
    grad.fill(0.0);
    loss_grad_kernel::<_, true>(a, params.as_slice(), shape, data, grad, ws)
}
