//! Single-hidden-layer feed-forward network shared by the paired-input
//! (s2s) model and the conventional baseline.
//!
//! Architecture: `y = out(W2 · relu(W1 · x + b1) + b2)` where `out` is either
//! an element-wise sigmoid (trained with binary cross-entropy) or a softmax
//! (trained with categorical cross-entropy).

mod gradcheck;
mod model_io;
mod train;

pub use gradcheck::{
    finite_diff_check, finite_diff_check_with, GradCheckReport, ParamCoord, ParamTensor, FD_STEP,
};
pub use model_io::{read_model, write_model, MODEL_HEADER};
pub use train::{adam_update, train, AdamState, TrainReport};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numkit::{dot, Matrix, RngStream};

/// Predictions are clamped to `[LOG_CLIP, 1 - LOG_CLIP]` before taking logs.
pub const LOG_CLIP: f64 = 1e-12;

/// Largest double strictly below 1.
const SIGMOID_MAX: f64 = 1.0 - f64::EPSILON / 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputActivation {
    Sigmoid,
    Softmax,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Loss {
    /// Binary cross-entropy, averaged over output units and rows.
    Bce,
    /// Categorical cross-entropy, summed over classes and averaged over rows.
    CrossEntropy,
}

impl fmt::Display for OutputActivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputActivation::Sigmoid => "sigmoid",
            OutputActivation::Softmax => "softmax",
        })
    }
}

impl FromStr for OutputActivation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(OutputActivation::Sigmoid),
            "softmax" => Ok(OutputActivation::Softmax),
            other => Err(Error::config(format!(
                "unknown output activation `{other}`"
            ))),
        }
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Loss::Bce => "bce",
            Loss::CrossEntropy => "cross_entropy",
        })
    }
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bce" => Ok(Loss::Bce),
            "cross_entropy" => Ok(Loss::CrossEntropy),
            other => Err(Error::config(format!("unknown loss `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetConfig {
    pub input_dim: usize,
    pub hidden_units: usize,
    pub output_dim: usize,
    pub output_activation: OutputActivation,
    pub loss: Loss,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl NetConfig {
    pub const DEFAULT_EPOCHS: usize = 200;
    pub const DEFAULT_BATCH: usize = 32;
    pub const DEFAULT_LR: f64 = 1e-3;

    fn with_dims(
        input_dim: usize,
        hidden_units: usize,
        output_dim: usize,
        output_activation: OutputActivation,
    ) -> Self {
        NetConfig {
            input_dim,
            hidden_units,
            output_dim,
            output_activation,
            loss: match output_activation {
                OutputActivation::Sigmoid => Loss::Bce,
                OutputActivation::Softmax => Loss::CrossEntropy,
            },
            learning_rate: Self::DEFAULT_LR,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: Self::DEFAULT_EPOCHS,
            batch_size: Self::DEFAULT_BATCH,
            seed: 0,
        }
    }

    /// Paired-input network for `feature_dim`-wide samples and `num_classes`
    /// classes: `2d` inputs, `2K` sigmoid outputs, BCE.
    pub fn s2s(feature_dim: usize, num_classes: usize, hidden_units: usize) -> Self {
        Self::with_dims(
            2 * feature_dim,
            hidden_units,
            2 * num_classes,
            OutputActivation::Sigmoid,
        )
    }

    /// Conventional classifier: `d` inputs, `K` softmax outputs, cross-entropy.
    pub fn baseline(feature_dim: usize, num_classes: usize, hidden_units: usize) -> Self {
        Self::with_dims(
            feature_dim,
            hidden_units,
            num_classes,
            OutputActivation::Softmax,
        )
    }

    /// Builds a config from `[input, hidden, output]` layer widths. Only one
    /// hidden layer is supported.
    pub fn from_layer_sizes(sizes: &[usize], output_activation: OutputActivation) -> Result<Self> {
        match sizes {
            &[input, hidden, output] => {
                let cfg = Self::with_dims(input, hidden, output, output_activation);
                cfg.validate()?;
                Ok(cfg)
            }
            _ => Err(Error::config(format!(
                "exactly one hidden layer is supported, got layer sizes {sizes:?}"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("input_dim", self.input_dim),
            ("hidden_units", self.hidden_units),
            ("output_dim", self.output_dim),
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::config(format!("{name} must be >= 1")));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::config(format!("{name} must be in [0, 1), got {b}")));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::config(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        let paired = matches!(
            (self.output_activation, self.loss),
            (OutputActivation::Sigmoid, Loss::Bce)
                | (OutputActivation::Softmax, Loss::CrossEntropy)
        );
        if !paired {
            return Err(Error::config(format!(
                "loss {} cannot be used with {} outputs",
                self.loss, self.output_activation
            )));
        }
        Ok(())
    }
}

/// Network parameters. Also used as the gradient container, since
/// gradients have exactly the parameter shapes.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

pub type Gradients = Params;

impl Params {
    pub fn zeros_like(cfg: &NetConfig) -> Self {
        Params {
            w1: Matrix::zeros(cfg.hidden_units, cfg.input_dim),
            b1: vec![0.0; cfg.hidden_units],
            w2: Matrix::zeros(cfg.output_dim, cfg.hidden_units),
            b2: vec![0.0; cfg.output_dim],
        }
    }

    pub fn len(&self) -> usize {
        self.w1.data().len() + self.b1.len() + self.w2.data().len() + self.b2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parameter slices in the fixed order w1, b1, w2, b2.
    pub fn slices(&self) -> [&[f64]; 4] {
        [self.w1.data(), &self.b1, self.w2.data(), &self.b2]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.w1.data_mut(),
            &mut self.b1,
            self.w2.data_mut(),
            &mut self.b2,
        ]
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.slices().concat()
    }

    pub fn norm(&self) -> f64 {
        self.slices()
            .iter()
            .flat_map(|s| s.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.slices()
            .iter()
            .all(|s| s.iter().all(|v| v.is_finite()))
    }

    fn scale(&mut self, k: f64) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(|v| *v *= k);
        }
    }

    fn fill_zero(&mut self) {
        for s in self.slices_mut() {
            s.fill(0.0);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub params: Params,
    pub config: NetConfig,
}

/// Reusable buffers for per-row forward/backward passes.
pub(crate) struct Scratch {
    hidden: Vec<f64>,
    output: Vec<f64>,
    delta_out: Vec<f64>,
    delta_hidden: Vec<f64>,
}

impl Scratch {
    pub(crate) fn new(cfg: &NetConfig) -> Self {
        Scratch {
            hidden: vec![0.0; cfg.hidden_units],
            output: vec![0.0; cfg.output_dim],
            delta_out: vec![0.0; cfg.output_dim],
            delta_hidden: vec![0.0; cfg.hidden_units],
        }
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    let s = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, SIGMOID_MAX)
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

#[inline]
fn clip(y: f64) -> f64 {
    y.clamp(LOG_CLIP, 1.0 - LOG_CLIP)
}

fn bce_unchecked(predicted: &[f64], target: &[f64]) -> f64 {
    let sum: f64 = predicted
        .iter()
        .zip(target)
        .map(|(&y, &t)| {
            let y = clip(y);
            // hard targets need only one log
            if t == 1.0 {
                -y.ln()
            } else if t == 0.0 {
                -(1.0 - y).ln()
            } else {
                -(t * y.ln() + (1.0 - t) * (1.0 - y).ln())
            }
        })
        .sum();
    sum / predicted.len() as f64
}

fn cross_entropy_unchecked(predicted: &[f64], target: &[f64]) -> f64 {
    predicted
        .iter()
        .zip(target)
        .filter(|(_, &t)| t != 0.0)
        .map(|(&y, &t)| -t * clip(y).ln())
        .sum()
}

/// Binary cross-entropy averaged over units.
pub fn bce_loss(predicted: &[f64], target: &[f64]) -> Result<f64> {
    if predicted.len() != target.len() || predicted.is_empty() {
        return Err(Error::shape("bce_loss", predicted.len(), target.len()));
    }
    Ok(bce_unchecked(predicted, target))
}

/// Categorical cross-entropy `-Σ t·ln y`.
pub fn cross_entropy_loss(predicted: &[f64], target: &[f64]) -> Result<f64> {
    if predicted.len() != target.len() || predicted.is_empty() {
        return Err(Error::shape(
            "cross_entropy_loss",
            predicted.len(),
            target.len(),
        ));
    }
    Ok(cross_entropy_unchecked(predicted, target))
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Glorot-uniform weights, zero biases.
pub fn init_network(config: NetConfig, rng: &mut RngStream) -> Result<Network> {
    config.validate()?;
    let mut params = Params::zeros_like(&config);
    let glorot = |m: &mut Matrix, rng: &mut RngStream| {
        let (fan_out, fan_in) = m.shape();
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for w in m.data_mut() {
            *w = rng.uniform(-bound, bound);
        }
    };
    glorot(&mut params.w1, rng);
    glorot(&mut params.w2, rng);
    Ok(Network { params, config })
}

impl Network {
    /// Network with explicit parameters; shapes must agree with `config`.
    pub fn from_params(config: NetConfig, params: Params) -> Result<Self> {
        config.validate()?;
        let expect = Params::zeros_like(&config);
        let shapes_ok = params.w1.shape() == expect.w1.shape()
            && params.w2.shape() == expect.w2.shape()
            && params.b1.len() == expect.b1.len()
            && params.b2.len() == expect.b2.len();
        if !shapes_ok {
            return Err(Error::shape(
                "Network::from_params",
                format!(
                    "config {}-{}-{}",
                    config.input_dim, config.hidden_units, config.output_dim
                ),
                format!(
                    "w1 {:?}, b1 {}, w2 {:?}, b2 {}",
                    params.w1.shape(),
                    params.b1.len(),
                    params.w2.shape(),
                    params.b2.len()
                ),
            ));
        }
        Ok(Network { params, config })
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.config.output_dim
    }

    /// Forward pass for one row; fills `scratch.hidden` and `scratch.output`.
    #[inline]
    fn forward_row(&self, x: &[f64], scratch: &mut Scratch) {
        let p = &self.params;
        for (h, (w, b)) in scratch.hidden.iter_mut().zip(p.w1.iter_rows().zip(&p.b1)) {
            let z = dot(w, x) + b;
            // NaN must propagate, so no f64::max here.
            *h = if z < 0.0 { 0.0 } else { z };
        }
        for (o, (w, b)) in scratch.output.iter_mut().zip(p.w2.iter_rows().zip(&p.b2)) {
            *o = dot(w, &scratch.hidden) + b;
        }
        match self.config.output_activation {
            OutputActivation::Sigmoid => scratch.output.iter_mut().for_each(|o| *o = sigmoid(*o)),
            OutputActivation::Softmax => softmax_in_place(&mut scratch.output),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.config.input_dim {
            return Err(Error::shape("forward", self.config.input_dim, x.len()));
        }
        let mut scratch = Scratch::new(&self.config);
        self.forward_row(x, &mut scratch);
        Ok(scratch.output)
    }

    /// Forward pass over every row of `inputs`.
    pub fn forward_batch(&self, inputs: &Matrix) -> Result<Matrix> {
        if inputs.cols() != self.config.input_dim {
            return Err(Error::shape(
                "forward_batch",
                self.config.input_dim,
                inputs.cols(),
            ));
        }
        let mut scratch = Scratch::new(&self.config);
        let mut out = Vec::with_capacity(inputs.rows() * self.config.output_dim);
        for x in inputs.iter_rows() {
            self.forward_row(x, &mut scratch);
            out.extend_from_slice(&scratch.output);
        }
        Matrix::new(inputs.rows(), self.config.output_dim, out)
    }

    pub fn predict_class(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }

    fn row_loss(&self, predicted: &[f64], target: &[f64]) -> f64 {
        match self.config.loss {
            Loss::Bce => bce_unchecked(predicted, target),
            Loss::CrossEntropy => cross_entropy_unchecked(predicted, target),
        }
    }

    fn check_batch(&self, op: &'static str, inputs: &Matrix, targets: &Matrix) -> Result<()> {
        if inputs.cols() != self.config.input_dim
            || targets.cols() != self.config.output_dim
            || inputs.rows() != targets.rows()
        {
            return Err(Error::shape(
                op,
                format!("inputs {}x{}", inputs.rows(), inputs.cols()),
                format!(
                    "targets {}x{} for a {}-{}-{} network",
                    targets.rows(),
                    targets.cols(),
                    self.config.input_dim,
                    self.config.hidden_units,
                    self.config.output_dim
                ),
            ));
        }
        Ok(())
    }

    /// Mean loss over the rows of the batch (0 for an empty batch).
    pub fn batch_loss(&self, inputs: &Matrix, targets: &Matrix) -> Result<f64> {
        self.check_batch("batch_loss", inputs, targets)?;
        if inputs.rows() == 0 {
            return Ok(0.0);
        }
        let mut scratch = Scratch::new(&self.config);
        let total: f64 = (0..inputs.rows())
            .map(|r| {
                self.forward_row(inputs.row(r), &mut scratch);
                self.row_loss(&scratch.output, targets.row(r))
            })
            .sum();
        Ok(total / inputs.rows() as f64)
    }

    /// Analytic gradient of [`Network::batch_loss`] with respect to every
    /// parameter.
    ///
    /// For sigmoid outputs this is the gradient of the unclipped BCE, which
    /// matches the clipped loss everywhere except in fully saturated units.
    pub fn gradient(&self, inputs: &Matrix, targets: &Matrix) -> Result<Gradients> {
        self.check_batch("gradient", inputs, targets)?;
        let mut grads = Params::zeros_like(&self.config);
        if inputs.rows() == 0 {
            return Ok(grads);
        }
        let mut scratch = Scratch::new(&self.config);
        self.accumulate(inputs, targets, 0..inputs.rows(), &mut grads, &mut scratch);
        grads.scale(1.0 / inputs.rows() as f64);
        Ok(grads)
    }

    /// Adds the per-row gradient sums for `rows` into `grads` and returns the
    /// summed per-row loss. Shapes must already be checked.
    pub(crate) fn accumulate(
        &self,
        inputs: &Matrix,
        targets: &Matrix,
        rows: impl IntoIterator<Item = usize>,
        grads: &mut Gradients,
        scratch: &mut Scratch,
    ) -> f64 {
        let p = &self.params;
        let n_out = self.config.output_dim as f64;
        let mut loss = 0.0;
        for r in rows {
            let x = inputs.row(r);
            let t = targets.row(r);
            self.forward_row(x, scratch);
            loss += self.row_loss(&scratch.output, t);

            match self.config.loss {
                Loss::Bce => {
                    for ((d, &y), &t) in scratch.delta_out.iter_mut().zip(&scratch.output).zip(t) {
                        *d = (y - t) / n_out;
                    }
                }
                Loss::CrossEntropy => {
                    let t_sum: f64 = t.iter().sum();
                    for ((d, &y), &t) in scratch.delta_out.iter_mut().zip(&scratch.output).zip(t) {
                        *d = y * t_sum - t;
                    }
                }
            }

            for (o, &d) in scratch.delta_out.iter().enumerate() {
                grads.b2[o] += d;
                if d != 0.0 {
                    for (g, &h) in grads.w2.row_mut(o).iter_mut().zip(&scratch.hidden) {
                        *g += d * h;
                    }
                }
            }
            scratch.delta_hidden.fill(0.0);
            for (&d, w) in scratch.delta_out.iter().zip(p.w2.iter_rows()) {
                for (dh, &wv) in scratch.delta_hidden.iter_mut().zip(w) {
                    *dh += d * wv;
                }
            }
            for (j, (&h, &dh)) in scratch.hidden.iter().zip(&scratch.delta_hidden).enumerate() {
                if h <= 0.0 {
                    continue;
                }
                grads.b1[j] += dh;
                for (g, &xi) in grads.w1.row_mut(j).iter_mut().zip(x) {
                    *g += dh * xi;
                }
            }
        }
        loss
    }
}
