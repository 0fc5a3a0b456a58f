//! A small dense multilayer perceptron with scalar input and output,
//! full-batch backpropagation and Adam.
//!
//! Parameters live in one flat buffer. Layer `l` occupies a contiguous block
//! holding its weight matrix (row-major, `outputs × inputs`) followed by its
//! bias vector, so gradients and optimizer moments share the same layout.

use std::fmt::Write as _;
use std::str::FromStr;

use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView2, ArrayViewMut2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NeuralError {
    #[error("network needs at least one layer")]
    NoLayers,
    #[error("layer widths must be positive")]
    ZeroWidth,
    #[error("network input and output widths must both be 1 (got {input} and {output})")]
    NotScalar { input: usize, output: usize },
    #[error("activation list has {got} entries for {expected} layers")]
    ActivationCount { expected: usize, got: usize },
    #[error("parameter buffer has {got} entries, expected {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("loss became non-finite at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation's output value.
    #[inline]
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
        }
    }
}

impl FromStr for Activation {
    type Err = NeuralError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            "identity" => Ok(Activation::Identity),
            other => Err(NeuralError::Checkpoint(format!(
                "unknown activation `{other}`"
            ))),
        }
    }
}

/// Training pairs `(x, target)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingSet {
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
}

impl TrainingSet {
    pub fn new(inputs: Vec<f64>, targets: Vec<f64>) -> Self {
        assert_eq!(
            inputs.len(),
            targets.len(),
            "inputs and targets differ in length"
        );
        TrainingSet { inputs, targets }
    }

    pub fn from_fn(inputs: &[f64], f: impl Fn(f64) -> f64) -> Self {
        TrainingSet {
            inputs: inputs.to_vec(),
            targets: inputs.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.inputs
            .iter()
            .copied()
            .zip(self.targets.iter().copied())
    }
}

#[derive(Debug, Clone, Copy)]
struct LayerShape {
    inputs: usize,
    outputs: usize,
    /// Offset of the weight block in the parameter buffer.
    offset: usize,
}

impl LayerShape {
    fn bias_offset(&self) -> usize {
        self.offset + self.inputs * self.outputs
    }

    fn param_count(&self) -> usize {
        self.outputs * (self.inputs + 1)
    }
}

/// Dense feed-forward network `R -> R`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    widths: Vec<usize>,
    activations: Vec<Activation>,
    params: Vec<f64>,
}

impl Mlp {
    /// Network with all parameters zero. `widths` includes the input and
    /// output widths (both 1); `activations` has one entry per layer.
    pub fn zeros(widths: &[usize], activations: &[Activation]) -> Result<Self, NeuralError> {
        if widths.len() < 2 {
            return Err(NeuralError::NoLayers);
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(NeuralError::ZeroWidth);
        }
        let (input, output) = (widths[0], widths[widths.len() - 1]);
        if input != 1 || output != 1 {
            return Err(NeuralError::NotScalar { input, output });
        }
        if activations.len() != widths.len() - 1 {
            return Err(NeuralError::ActivationCount {
                expected: widths.len() - 1,
                got: activations.len(),
            });
        }
        let count = widths.windows(2).map(|w| w[1] * (w[0] + 1)).sum();
        Ok(Mlp {
            widths: widths.to_vec(),
            activations: activations.to_vec(),
            params: vec![0.0; count],
        })
    }

    /// Hidden layers share `hidden`; the output layer uses `output`.
    pub fn with_activations(
        widths: &[usize],
        hidden: Activation,
        output: Activation,
    ) -> Result<Self, NeuralError> {
        let layers = widths.len().saturating_sub(1);
        let mut acts = vec![hidden; layers];
        if let Some(last) = acts.last_mut() {
            *last = output;
        }
        Self::zeros(widths, &acts)
    }

    /// Draws weights and biases uniformly from `±sqrt(6 / (n_in + n_out))`.
    pub fn randomize(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for shape in self.shapes().collect::<Vec<_>>() {
            let limit = (6.0 / (shape.inputs + shape.outputs) as f64).sqrt();
            let block = &mut self.params[shape.offset..shape.offset + shape.param_count()];
            for p in block {
                *p = rng.gen_range(-limit..limit);
            }
        }
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<(), NeuralError> {
        if params.len() != self.params.len() {
            return Err(NeuralError::ShapeMismatch {
                expected: self.params.len(),
                got: params.len(),
            });
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    fn shapes(&self) -> impl Iterator<Item = LayerShape> + '_ {
        let mut offset = 0;
        self.widths.windows(2).map(move |w| {
            let shape = LayerShape {
                inputs: w[0],
                outputs: w[1],
                offset,
            };
            offset += shape.param_count();
            shape
        })
    }

    fn weight_view(&self, shape: &LayerShape) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape(
            (shape.outputs, shape.inputs),
            &self.params[shape.offset..shape.bias_offset()],
        )
        .expect("weight block shape")
    }

    fn bias_view(&self, shape: &LayerShape) -> &[f64] {
        &self.params[shape.bias_offset()..shape.bias_offset() + shape.outputs]
    }

    fn max_width(&self) -> usize {
        self.widths.iter().copied().max().unwrap_or(1)
    }

    /// Forward pass for a single input.
    pub fn forward(&self, x: f64) -> f64 {
        let width = self.max_width();
        let mut a = vec![0.0; width];
        let mut next = vec![0.0; width];
        a[0] = x;
        for (shape, &act) in self.shapes().zip(&self.activations) {
            let w = &self.params[shape.offset..shape.bias_offset()];
            let b = &self.params[shape.bias_offset()..shape.bias_offset() + shape.outputs];
            let input = &a[..shape.inputs];
            for (o, out) in next[..shape.outputs].iter_mut().enumerate() {
                let row = &w[o * shape.inputs..(o + 1) * shape.inputs];
                *out = act.apply(dot(row, input) + b[o]);
            }
            std::mem::swap(&mut a, &mut next);
        }
        a[0]
    }

    /// Mean squared error over the set.
    pub fn mse(&self, set: &TrainingSet) -> f64 {
        if set.is_empty() {
            return 0.0;
        }
        let sum: f64 = set.iter().map(|(x, t)| (self.forward(x) - t).powi(2)).sum();
        sum / set.len() as f64
    }

    /// Loss and its exact gradient with respect to every parameter.
    pub fn loss_and_gradient(&self, set: &TrainingSet) -> Result<(f64, Vec<f64>), NeuralError> {
        let mut grad = vec![0.0; self.params.len()];
        let loss = self.accumulate_gradient(set, &mut grad)?;
        Ok((loss, grad))
    }

    /// Writes the gradient of the MSE into `grad` and returns the loss.
    pub fn accumulate_gradient(
        &self,
        set: &TrainingSet,
        grad: &mut [f64],
    ) -> Result<f64, NeuralError> {
        if set.is_empty() {
            return Err(NeuralError::EmptyTrainingSet);
        }
        if grad.len() != self.params.len() {
            return Err(NeuralError::ShapeMismatch {
                expected: self.params.len(),
                got: grad.len(),
            });
        }
        let shapes: Vec<LayerShape> = self.shapes().collect();
        let n = set.len();

        // Column m of acts[l] holds layer l's activation for sample m.
        let mut acts: Vec<Array2<f64>> = Vec::with_capacity(shapes.len() + 1);
        acts.push(Array2::from_shape_vec((1, n), set.inputs.clone()).expect("1 x n input"));
        for (shape, &act) in shapes.iter().zip(&self.activations) {
            let w = self.weight_view(shape);
            let b = self.bias_view(shape);
            let mut z = w.dot(acts.last().expect("input pushed"));
            for (mut row, &bias) in z.rows_mut().into_iter().zip(b) {
                row.mapv_inplace(|v| act.apply(v + bias));
            }
            acts.push(z);
        }

        let output = acts.last().expect("at least one layer").row(0);
        let scale = 2.0 / n as f64;
        let mut loss = 0.0;
        // dL/da of the output layer.
        let mut delta = Array2::<f64>::zeros((1, n));
        for ((d, &y), &t) in delta.iter_mut().zip(output).zip(&set.targets) {
            let r = y - t;
            loss += r * r;
            *d = scale * r;
        }

        for (l, (shape, &act)) in shapes.iter().zip(&self.activations).enumerate().rev() {
            let out = &acts[l + 1];
            delta.zip_mut_with(out, |d, &a| *d *= act.derivative_from_output(a));
            let (wgrad, bgrad) = grad[shape.offset..shape.bias_offset() + shape.outputs]
                .split_at_mut(shape.inputs * shape.outputs);
            let mut wgrad = ArrayViewMut2::from_shape((shape.outputs, shape.inputs), wgrad)
                .expect("weight block shape");
            general_mat_mul(1.0, &delta, &acts[l].t(), 0.0, &mut wgrad);
            for (g, row) in bgrad.iter_mut().zip(delta.rows()) {
                *g = row.sum();
            }
            if l > 0 {
                delta = self.weight_view(shape).t().dot(&delta);
            }
        }
        Ok(loss / n as f64)
    }

    /// Plain-text checkpoint, see [`Mlp::from_text`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("mlp v1\n");
        let widths: Vec<String> = self.widths.iter().map(|w| w.to_string()).collect();
        let _ = writeln!(out, "widths {}", widths.join(" "));
        let acts: Vec<&str> = self.activations.iter().map(|a| a.name()).collect();
        let _ = writeln!(out, "activations {}", acts.join(" "));
        for (l, shape) in self.shapes().enumerate() {
            let _ = writeln!(out, "layer {} {} {}", l + 1, shape.outputs, shape.inputs);
            for o in 0..shape.outputs {
                let start = shape.offset + o * shape.inputs;
                write_row(&mut out, &self.params[start..start + shape.inputs]);
            }
            let b = shape.bias_offset();
            out.push_str("bias\n");
            write_row(&mut out, &self.params[b..b + shape.outputs]);
        }
        out
    }

    /// Parses the format written by [`Mlp::to_text`]:
    ///
    /// ```text
    /// mlp v1
    /// widths 1 100 50 5 1
    /// activations tanh tanh tanh sigmoid
    /// layer 1 100 1          # index, rows, columns
    /// <one row of weights per line>
    /// bias
    /// <biases on one line>
    /// layer 2 50 100
    /// ...
    /// ```
    pub fn from_text(text: &str) -> Result<Self, NeuralError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| NeuralError::Checkpoint(format!("missing {what}")))
        };
        if next("header")? != "mlp v1" {
            return Err(NeuralError::Checkpoint("bad header".into()));
        }
        let widths: Vec<usize> = parse_tagged(next("widths")?, "widths")?;
        let activations = tagged_words(next("activations")?, "activations")?
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<Activation>, _>>()?;
        let mut net = Mlp::zeros(&widths, &activations)?;
        let shapes: Vec<LayerShape> = net.shapes().collect();
        for (l, shape) in shapes.iter().enumerate() {
            let header: Vec<usize> = parse_tagged(next("layer header")?, "layer")?;
            if header != [l + 1, shape.outputs, shape.inputs] {
                return Err(NeuralError::Checkpoint(format!(
                    "layer {} header {header:?} does not match widths",
                    l + 1
                )));
            }
            for o in 0..shape.outputs {
                let row: Vec<f64> = parse_row(next("weight row")?)?;
                if row.len() != shape.inputs {
                    return Err(NeuralError::Checkpoint(format!(
                        "layer {} row {} has {} values",
                        l + 1,
                        o,
                        row.len()
                    )));
                }
                let start = shape.offset + o * shape.inputs;
                net.params[start..start + shape.inputs].copy_from_slice(&row);
            }
            if next("bias tag")? != "bias" {
                return Err(NeuralError::Checkpoint("expected `bias`".into()));
            }
            let bias: Vec<f64> = parse_row(next("bias row")?)?;
            if bias.len() != shape.outputs {
                return Err(NeuralError::Checkpoint(format!(
                    "layer {} bias length",
                    l + 1
                )));
            }
            let b = shape.bias_offset();
            net.params[b..b + shape.outputs].copy_from_slice(&bias);
        }
        if net.params.iter().any(|p| !p.is_finite()) {
            return Err(NeuralError::Checkpoint("non-finite parameter".into()));
        }
        Ok(net)
    }
}

/// Dot product with independent partial sums so the adds can pipeline.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn write_row(out: &mut String, values: &[f64]) {
    let row: Vec<String> = values.iter().map(|v| format!("{v:e}")).collect();
    out.push_str(&row.join(" "));
    out.push('\n');
}

fn tagged_words<'a>(line: &'a str, tag: &str) -> Result<Vec<&'a str>, NeuralError> {
    let mut words = line.split_whitespace();
    if words.next() != Some(tag) {
        return Err(NeuralError::Checkpoint(format!("expected `{tag}` line")));
    }
    Ok(words.collect())
}

fn parse_tagged<T: FromStr>(line: &str, tag: &str) -> Result<Vec<T>, NeuralError> {
    tagged_words(line, tag)?
        .iter()
        .map(|w| {
            w.parse()
                .map_err(|_| NeuralError::Checkpoint(format!("bad value `{w}` in `{tag}` line")))
        })
        .collect()
}

fn parse_row(line: &str) -> Result<Vec<f64>, NeuralError> {
    line.split_whitespace()
        .map(|w| {
            w.parse()
                .map_err(|_| NeuralError::Checkpoint(format!("bad number `{w}`")))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moment accumulators, shaped like the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl AdamState {
    pub fn new(param_count: usize, config: AdamConfig) -> Self {
        AdamState {
            config,
            step: 0,
            first: vec![0.0; param_count],
            second: vec![0.0; param_count],
        }
    }

    pub fn for_net(net: &Mlp, config: AdamConfig) -> Self {
        Self::new(net.param_count(), config)
    }

    pub fn reset(&mut self) {
        self.step = 0;
        self.first.iter_mut().for_each(|m| *m = 0.0);
        self.second.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second
    }

    /// One bias-corrected Adam update of `params` along `grad`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<(), NeuralError> {
        let n = self.first.len();
        for len in [params.len(), grad.len()] {
            if len != n {
                return Err(NeuralError::ShapeMismatch {
                    expected: n,
                    got: len,
                });
            }
        }
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for i in 0..n {
            let g = grad[i];
            let m = beta1 * self.first[i] + (1.0 - beta1) * g;
            let v = beta2 * self.second[i] + (1.0 - beta2) * g * g;
            self.first[i] = m;
            self.second[i] = v;
            params[i] -= learning_rate * (m / c1) / ((v / c2).sqrt() + epsilon);
        }
        Ok(())
    }

    /// Checkpoint text: a header line followed by the step count and the two
    /// moment vectors, one per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let c = &self.config;
        let _ = writeln!(
            out,
            "adam v1 {} {:e} {:e} {:e} {:e}",
            self.first.len(),
            c.learning_rate,
            c.beta1,
            c.beta2,
            c.epsilon
        );
        let _ = writeln!(out, "step {}", self.step);
        write_row(&mut out, &self.first);
        write_row(&mut out, &self.second);
        out
    }

    pub fn from_text(text: &str) -> Result<Self, NeuralError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| NeuralError::Checkpoint("empty".into()))?;
        let words: Vec<&str> = header.split_whitespace().collect();
        if words.len() != 7 || words[0] != "adam" || words[1] != "v1" {
            return Err(NeuralError::Checkpoint("bad adam header".into()));
        }
        let bad = |w: &str| NeuralError::Checkpoint(format!("bad value `{w}`"));
        let n: usize = words[2].parse().map_err(|_| bad(words[2]))?;
        let f = |w: &str| w.parse::<f64>().map_err(|_| bad(w));
        let config = AdamConfig {
            learning_rate: f(words[3])?,
            beta1: f(words[4])?,
            beta2: f(words[5])?,
            epsilon: f(words[6])?,
        };
        let step_line = lines
            .next()
            .ok_or_else(|| NeuralError::Checkpoint("missing step".into()))?;
        let step: Vec<u64> = parse_tagged(step_line, "step")?;
        let first = parse_row(lines.next().unwrap_or(""))?;
        let second = parse_row(lines.next().unwrap_or(""))?;
        if step.len() != 1 || first.len() != n || second.len() != n {
            return Err(NeuralError::Checkpoint("adam moment lengths".into()));
        }
        Ok(AdamState {
            config,
            step: step[0],
            first,
            second,
        })
    }
}

/// Stopping rules for [`train`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingSchedule {
    pub max_epochs: usize,
    pub loss_target: f64,
    /// Window, in epochs, over which the best loss must keep improving.
    pub patience: usize,
    /// Minimum relative improvement of the best loss across one window.
    pub improvement_floor: f64,
    /// Factor applied to the learning rate when a window stalls; `1.0`
    /// stops training at the first stall instead.
    pub lr_decay: f64,
    /// A stall that would push the learning rate below this ends training.
    pub min_learning_rate: f64,
}

impl Default for TrainingSchedule {
    fn default() -> Self {
        TrainingSchedule {
            max_epochs: 5000,
            loss_target: 1e-7,
            patience: 200,
            improvement_floor: 1e-3,
            lr_decay: 1.0,
            min_learning_rate: 0.0,
        }
    }
}

/// Why [`train`] returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainingStop {
    /// The loss reached `loss_target`.
    Target,
    /// A patience window stalled with no learning-rate decay left.
    Stalled,
    /// `max_epochs` ran out.
    EpochLimit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingReport {
    /// Adam updates applied.
    pub epochs: usize,
    pub initial_loss: f64,
    /// Loss of the returned (best-seen) parameters.
    pub final_loss: f64,
    pub stop: TrainingStop,
}

/// Full-batch Adam on the MSE. On return `net` holds the best parameters
/// seen, so the loss never ends above where it started.
pub fn train(
    net: &mut Mlp,
    set: &TrainingSet,
    schedule: &TrainingSchedule,
    adam: &mut AdamState,
) -> Result<TrainingReport, NeuralError> {
    if set.is_empty() {
        return Err(NeuralError::EmptyTrainingSet);
    }
    if adam.first.len() != net.param_count() {
        return Err(NeuralError::ShapeMismatch {
            expected: net.param_count(),
            got: adam.first.len(),
        });
    }
    let mut grad = vec![0.0; net.param_count()];
    let initial_loss = net.accumulate_gradient(set, &mut grad)?;
    if !initial_loss.is_finite() {
        return Err(NeuralError::Diverged { epoch: 0 });
    }
    let mut best_loss = initial_loss;
    let mut best_params = net.params.clone();
    let mut epochs = 0;

    // best_loss at each epoch, for the patience window.
    let mut best_history = Vec::with_capacity(schedule.max_epochs + 1);
    best_history.push(best_loss);

    let mut loss = initial_loss;
    let mut window_start = 0;
    let mut stalled = false;
    while loss > schedule.loss_target && epochs < schedule.max_epochs {
        adam.step(&mut net.params, &grad)?;
        epochs += 1;
        loss = net.accumulate_gradient(set, &mut grad)?;
        if !loss.is_finite() {
            net.params.copy_from_slice(&best_params);
            return Err(NeuralError::Diverged { epoch: epochs });
        }
        if loss < best_loss {
            best_loss = loss;
            best_params.copy_from_slice(&net.params);
        }
        best_history.push(best_loss);
        if schedule.patience > 0 && epochs >= window_start + schedule.patience {
            let before = best_history[epochs - schedule.patience];
            if before - best_loss < schedule.improvement_floor * before {
                let lr = adam.config.learning_rate * schedule.lr_decay;
                if schedule.lr_decay >= 1.0 || lr < schedule.min_learning_rate {
                    stalled = true;
                    break;
                }
                adam.config.learning_rate = lr;
                window_start = epochs;
            }
        }
    }
    net.params.copy_from_slice(&best_params);
    let stop = if stalled {
        TrainingStop::Stalled
    } else if loss <= schedule.loss_target {
        TrainingStop::Target
    } else {
        TrainingStop::EpochLimit
    };
    Ok(TrainingReport {
        epochs,
        initial_loss,
        final_loss: best_loss,
        stop,
    })
}
