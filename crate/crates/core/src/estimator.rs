//! Average-flux estimators queried by the characteristic sweep.
//!
//! Three realizations share the [`FluxEstimator`] contract: the neural
//! surrogate ([`AnnEstimator`]), interpolation on the sample points
//! ([`MeshEstimator`]) and a wrapped closed-form function
//! ([`ExactEstimator`]) used as an oracle.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use thiserror::Error;

use crate::neural::{
    self, Activation, AdamConfig, AdamState, Mlp, NeuralError, TrainingReport, TrainingSchedule,
    TrainingSet, TrainingStop,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("mesh samples contain a duplicate abscissa x = {0}")]
    DuplicateAbscissa(f64),
    #[error("sample x = {x} lies outside the domain [{a}, {b}]")]
    OutsideDomain { x: f64, a: f64, b: f64 },
    #[error("non-finite training value at x = {0}")]
    NonFinite(f64),
    #[error("unknown estimator kind `{0}`")]
    UnknownKind(String),
    #[error("unknown interpolation order `{0}`")]
    UnknownOrder(String),
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Ann,
    Mesh,
    Exact,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Ann => "ann",
            EstimatorKind::Mesh => "mesh",
            EstimatorKind::Exact => "exact",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = EstimatorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ann" => Ok(EstimatorKind::Ann),
            "mesh" => Ok(EstimatorKind::Mesh),
            "exact" => Ok(EstimatorKind::Exact),
            other => Err(EstimatorError::UnknownKind(other.to_string())),
        }
    }
}

/// Outcome of one [`FluxEstimator::fit`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitReport {
    pub epochs: usize,
    /// Mean squared misfit to the training targets after fitting.
    pub loss: f64,
}

/// A callable estimate of the average flux on `[a, b]`.
///
/// `estimate` must be free of observable side effects apart from the
/// clamp counter, so sweeps may call it from many threads at once.
pub trait FluxEstimator: Send + Sync {
    fn kind(&self) -> EstimatorKind;

    fn domain(&self) -> (f64, f64);

    /// Estimate at `x`; points outside the domain are clamped to it.
    fn estimate(&self, x: f64) -> f64;

    fn fit(&mut self, set: &TrainingSet) -> Result<FitReport, EstimatorError>;

    /// Number of `estimate` calls that had to clamp their argument.
    fn clamped_evaluations(&self) -> u64;
}

/// Domain bounds plus a counter of out-of-domain queries.
#[derive(Debug)]
struct ClampedDomain {
    a: f64,
    b: f64,
    clamped: AtomicU64,
}

impl ClampedDomain {
    fn new(a: f64, b: f64) -> Self {
        ClampedDomain {
            a,
            b,
            clamped: AtomicU64::new(0),
        }
    }

    #[inline]
    fn clamp(&self, x: f64) -> f64 {
        if x < self.a {
            self.clamped.fetch_add(1, Ordering::Relaxed);
            self.a
        } else if x > self.b {
            self.clamped.fetch_add(1, Ordering::Relaxed);
            self.b
        } else {
            x
        }
    }

    fn count(&self) -> u64 {
        self.clamped.load(Ordering::Relaxed)
    }

    fn check(&self, set: &TrainingSet) -> Result<(), EstimatorError> {
        if set.is_empty() {
            return Err(EstimatorError::EmptyTrainingSet);
        }
        for (x, t) in set.iter() {
            if !(x >= self.a && x <= self.b) {
                return Err(EstimatorError::OutsideDomain {
                    x,
                    a: self.a,
                    b: self.b,
                });
            }
            if !t.is_finite() {
                return Err(EstimatorError::NonFinite(x));
            }
        }
        Ok(())
    }
}

impl Clone for ClampedDomain {
    fn clone(&self) -> Self {
        ClampedDomain {
            a: self.a,
            b: self.b,
            clamped: AtomicU64::new(self.count()),
        }
    }
}

/// Closed-form flux; `fit` leaves it unchanged.
#[derive(Clone)]
pub struct ExactEstimator {
    domain: ClampedDomain,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl ExactEstimator {
    pub fn new(a: f64, b: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ExactEstimator {
            domain: ClampedDomain::new(a, b),
            f: Arc::new(f),
        }
    }
}

impl fmt::Debug for ExactEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExactEstimator")
            .field("domain", &(self.domain.a, self.domain.b))
            .finish_non_exhaustive()
    }
}

impl FluxEstimator for ExactEstimator {
    fn kind(&self) -> EstimatorKind {
        EstimatorKind::Exact
    }

    fn domain(&self) -> (f64, f64) {
        (self.domain.a, self.domain.b)
    }

    fn estimate(&self, x: f64) -> f64 {
        (self.f)(self.domain.clamp(x))
    }

    fn fit(&mut self, set: &TrainingSet) -> Result<FitReport, EstimatorError> {
        let loss = if set.is_empty() {
            0.0
        } else {
            set.iter()
                .map(|(x, t)| (self.estimate(x) - t).powi(2))
                .sum::<f64>()
                / set.len() as f64
        };
        Ok(FitReport { epochs: 0, loss })
    }

    fn clamped_evaluations(&self) -> u64 {
        self.domain.count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Interpolation {
    Linear,
    /// C² cubic spline with end slopes taken from the cubic through the
    /// four outermost points at each end.
    Cubic,
}

impl Interpolation {
    pub fn name(self) -> &'static str {
        match self {
            Interpolation::Linear => "linear",
            Interpolation::Cubic => "cubic",
        }
    }
}

impl FromStr for Interpolation {
    type Err = EstimatorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(Interpolation::Linear),
            "cubic" => Ok(Interpolation::Cubic),
            other => Err(EstimatorError::UnknownOrder(other.to_string())),
        }
    }
}

/// Interpolant through flux values on a grid that spans `[a, b]`.
#[derive(Debug, Clone)]
pub struct MeshEstimator {
    domain: ClampedDomain,
    order: Interpolation,
    grid: Vec<f64>,
    values: Vec<f64>,
    /// Spline second derivatives at grid points (cubic order only).
    curvature: Vec<f64>,
}

impl MeshEstimator {
    /// An estimator that is identically zero until first fitted.
    pub fn new(a: f64, b: f64, order: Interpolation) -> Self {
        MeshEstimator {
            domain: ClampedDomain::new(a, b),
            order,
            grid: vec![a, b],
            values: vec![0.0, 0.0],
            curvature: vec![0.0, 0.0],
        }
    }

    pub fn from_values(
        a: f64,
        b: f64,
        order: Interpolation,
        grid: &[f64],
        values: &[f64],
    ) -> Result<Self, EstimatorError> {
        let mut est = MeshEstimator::new(a, b, order);
        est.fit(&TrainingSet::new(grid.to_vec(), values.to_vec()))?;
        Ok(est)
    }

    pub fn order(&self) -> Interpolation {
        self.order
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn interpolate(&self, x: f64) -> f64 {
        let g = &self.grid;
        // Interval [g[i], g[i+1]] containing x.
        let i = g.partition_point(|&p| p <= x).clamp(1, g.len() - 1) - 1;
        let (x0, x1) = (g[i], g[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let h = x1 - x0;
        match self.order {
            Interpolation::Linear => y0 + (y1 - y0) * (x - x0) / h,
            Interpolation::Cubic => {
                let (m0, m1) = (self.curvature[i], self.curvature[i + 1]);
                let (l, r) = (x1 - x, x - x0);
                m0 * l * l * l / (6.0 * h)
                    + m1 * r * r * r / (6.0 * h)
                    + (y0 / h - m0 * h / 6.0) * l
                    + (y1 / h - m1 * h / 6.0) * r
            }
        }
    }
}

/// Derivative at `at` of the interpolating polynomial through `pts`.
fn lagrange_slope(pts: &[(f64, f64)], at: f64) -> f64 {
    let mut slope = 0.0;
    for (j, &(xj, yj)) in pts.iter().enumerate() {
        // d/dx of the j-th basis polynomial.
        let mut denom = 1.0;
        for (k, &(xk, _)) in pts.iter().enumerate() {
            if k != j {
                denom *= xj - xk;
            }
        }
        let mut numer = 0.0;
        for k in (0..pts.len()).filter(|&k| k != j) {
            let mut prod = 1.0;
            for (l, &(xl, _)) in pts.iter().enumerate() {
                if l != j && l != k {
                    prod *= at - xl;
                }
            }
            numer += prod;
        }
        slope += yj * numer / denom;
    }
    slope
}

/// Second derivatives of the clamped cubic spline through `(xs, ys)`.
fn clamped_spline(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    if n < 3 {
        return vec![0.0; n];
    }
    let end = 4.min(n);
    let head: Vec<(f64, f64)> = xs[..end]
        .iter()
        .copied()
        .zip(ys[..end].iter().copied())
        .collect();
    let tail: Vec<(f64, f64)> = xs[n - end..]
        .iter()
        .copied()
        .zip(ys[n - end..].iter().copied())
        .collect();
    let slope_left = lagrange_slope(&head, xs[0]);
    let slope_right = lagrange_slope(&tail, xs[n - 1]);

    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let secant: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    diag[0] = 2.0 * h[0];
    upper[0] = h[0];
    rhs[0] = 6.0 * (secant[0] - slope_left);
    for i in 1..n - 1 {
        lower[i] = h[i - 1];
        diag[i] = 2.0 * (h[i - 1] + h[i]);
        upper[i] = h[i];
        rhs[i] = 6.0 * (secant[i] - secant[i - 1]);
    }
    lower[n - 1] = h[n - 2];
    diag[n - 1] = 2.0 * h[n - 2];
    rhs[n - 1] = 6.0 * (slope_right - secant[n - 2]);

    // Thomas algorithm; the system is diagonally dominant.
    for i in 1..n {
        let factor = lower[i] / diag[i - 1];
        diag[i] -= factor * upper[i - 1];
        rhs[i] -= factor * rhs[i - 1];
    }
    let mut m = vec![0.0; n];
    m[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
    }
    m
}

impl FluxEstimator for MeshEstimator {
    fn kind(&self) -> EstimatorKind {
        EstimatorKind::Mesh
    }

    fn domain(&self) -> (f64, f64) {
        (self.domain.a, self.domain.b)
    }

    fn estimate(&self, x: f64) -> f64 {
        self.interpolate(self.domain.clamp(x))
    }

    /// Replaces the grid by the sorted samples. Missing endpoints are added
    /// with the value of the nearest sample.
    fn fit(&mut self, set: &TrainingSet) -> Result<FitReport, EstimatorError> {
        self.domain.check(set)?;
        let mut pairs: Vec<(f64, f64)> = set.iter().collect();
        pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(EstimatorError::DuplicateAbscissa(w[0].0));
        }
        let (a, b) = (self.domain.a, self.domain.b);
        if pairs[0].0 > a {
            pairs.insert(0, (a, pairs[0].1));
        }
        let last = pairs[pairs.len() - 1];
        if last.0 < b {
            pairs.push((b, last.1));
        }
        self.grid = pairs.iter().map(|p| p.0).collect();
        self.values = pairs.iter().map(|p| p.1).collect();
        self.curvature = match self.order {
            Interpolation::Linear => vec![0.0; self.grid.len()],
            Interpolation::Cubic => clamped_spline(&self.grid, &self.values),
        };
        Ok(FitReport {
            epochs: 0,
            loss: 0.0,
        })
    }

    fn clamped_evaluations(&self) -> u64 {
        self.domain.count()
    }
}

/// Network shape and optimizer settings for the neural estimator.
///
/// The default output layer is the identity: a sigmoid cannot reach a flux
/// of 1, which the manufactured problem attains at its inflow boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnConfig {
    /// Layer widths including the scalar input and output.
    pub widths: Vec<usize>,
    pub hidden: Activation,
    pub output: Activation,
    pub adam: AdamConfig,
    pub schedule: TrainingSchedule,
    /// Re-draw the weights before every fit instead of warm-starting.
    pub cold_start: bool,
    /// When the last training run ended above `refit_floor * loss_target`,
    /// its loss is taken as the network's floor: a warm refit is skipped if the network
    /// already fits the new data within this factor of that floor, since more
    /// epochs would only move it around. `0` disables.
    pub refit_slack: f64,
    /// Multiple of `loss_target` below which a missed target counts as
    /// ordinary training noise rather than a capacity floor.
    pub refit_floor: f64,
}

impl Default for AnnConfig {
    fn default() -> Self {
        AnnConfig {
            widths: vec![1, 100, 50, 5, 1],
            hidden: Activation::Tanh,
            output: Activation::Identity,
            adam: AdamConfig {
                learning_rate: 1e-2,
                ..AdamConfig::default()
            },
            schedule: TrainingSchedule {
                loss_target: 1e-9,
                lr_decay: 0.5,
                min_learning_rate: 1e-6,
                ..TrainingSchedule::default()
            },
            cold_start: false,
            refit_slack: 2.0,
            refit_floor: 10.0,
        }
    }
}

/// Multilayer-perceptron surrogate. The network sees `x` rescaled from
/// `[a, b]` onto `[-1, 1]`; its output is the flux estimate.
#[derive(Debug, Clone)]
pub struct AnnEstimator {
    domain: ClampedDomain,
    config: AnnConfig,
    seed: u64,
    net: Mlp,
    adam: AdamState,
    last_report: Option<TrainingReport>,
}

impl AnnEstimator {
    pub fn new(a: f64, b: f64, config: AnnConfig, seed: u64) -> Result<Self, EstimatorError> {
        let mut net = Mlp::with_activations(&config.widths, config.hidden, config.output)?;
        net.randomize(seed);
        let adam = AdamState::for_net(&net, config.adam);
        Ok(AnnEstimator {
            domain: ClampedDomain::new(a, b),
            config,
            seed,
            net,
            adam,
            last_report: None,
        })
    }

    /// Wraps an existing network, e.g. one restored from a checkpoint.
    pub fn from_net(a: f64, b: f64, net: Mlp, config: AnnConfig) -> Self {
        let adam = AdamState::for_net(&net, config.adam);
        AnnEstimator {
            domain: ClampedDomain::new(a, b),
            config,
            seed: 0,
            net,
            adam,
            last_report: None,
        }
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    pub fn adam(&self) -> &AdamState {
        &self.adam
    }

    pub fn adam_mut(&mut self) -> &mut AdamState {
        &mut self.adam
    }

    pub fn config(&self) -> &AnnConfig {
        &self.config
    }

    pub fn last_report(&self) -> Option<TrainingReport> {
        self.last_report
    }

    #[inline]
    fn network_input(&self, x: f64) -> f64 {
        let (a, b) = (self.domain.a, self.domain.b);
        2.0 * (x - a) / (b - a) - 1.0
    }

    /// Training set in network coordinates.
    fn to_network_set(&self, set: &TrainingSet) -> TrainingSet {
        TrainingSet::new(
            set.inputs.iter().map(|&x| self.network_input(x)).collect(),
            set.targets.clone(),
        )
    }

    /// Mean squared misfit of the current network on `set`.
    pub fn loss(&self, set: &TrainingSet) -> f64 {
        self.net.mse(&self.to_network_set(set))
    }

    /// Checkpoint text: domain line, network, then optimizer state.
    pub fn to_checkpoint(&self) -> String {
        format!(
            "ann-estimator v1\ndomain {:e} {:e}\n{}{}",
            self.domain.a,
            self.domain.b,
            self.net.to_text(),
            self.adam.to_text()
        )
    }

    pub fn from_checkpoint(text: &str, config: AnnConfig) -> Result<Self, EstimatorError> {
        let bad = |m: &str| EstimatorError::Neural(NeuralError::Checkpoint(m.to_string()));
        let mut parts = text.splitn(3, '\n');
        if parts.next().map(str::trim) != Some("ann-estimator v1") {
            return Err(bad("bad estimator header"));
        }
        let domain: Vec<f64> = parts
            .next()
            .and_then(|l| l.strip_prefix("domain "))
            .ok_or_else(|| bad("missing domain"))?
            .split_whitespace()
            .map(|w| w.parse().map_err(|_| bad("bad domain value")))
            .collect::<Result<_, _>>()?;
        if domain.len() != 2 {
            return Err(bad("domain needs two values"));
        }
        let rest = parts.next().unwrap_or("");
        let split = rest
            .find("adam v1")
            .ok_or_else(|| bad("missing optimizer state"))?;
        let net = Mlp::from_text(&rest[..split])?;
        let adam = AdamState::from_text(&rest[split..])?;
        if adam.first_moment().len() != net.param_count() {
            return Err(bad("optimizer state does not match network"));
        }
        let mut est = AnnEstimator::from_net(domain[0], domain[1], net, config);
        est.adam = adam;
        Ok(est)
    }
}

impl FluxEstimator for AnnEstimator {
    fn kind(&self) -> EstimatorKind {
        EstimatorKind::Ann
    }

    fn domain(&self) -> (f64, f64) {
        (self.domain.a, self.domain.b)
    }

    fn estimate(&self, x: f64) -> f64 {
        self.net.forward(self.network_input(self.domain.clamp(x)))
    }

    fn fit(&mut self, set: &TrainingSet) -> Result<FitReport, EstimatorError> {
        self.domain.check(set)?;
        if self.config.cold_start {
            self.net.randomize(self.seed);
            self.adam = AdamState::for_net(&self.net, self.config.adam);
        }
        let scaled = self.to_network_set(set);
        let floor = self.last_report.filter(|r| {
            !self.config.cold_start
                && r.stop != TrainingStop::Target
                && r.final_loss > self.config.refit_floor * self.config.schedule.loss_target
        });
        if let Some(last) = floor {
            let loss = self.net.mse(&scaled);
            if loss <= self.config.refit_slack * last.final_loss {
                return Ok(FitReport { epochs: 0, loss });
            }
        }
        let report = neural::train(
            &mut self.net,
            &scaled,
            &self.config.schedule,
            &mut self.adam,
        )?;
        self.last_report = Some(report);
        Ok(FitReport {
            epochs: report.epochs,
            loss: report.final_loss,
        })
    }

    fn clamped_evaluations(&self) -> u64 {
        self.domain.count()
    }
}
