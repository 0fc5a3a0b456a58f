//! Source iteration driven by characteristic sweeps and a refitted flux
//! estimator.
//!
//! Each iterate sweeps every direction at every sample point using the
//! previous estimator for the scattering source, assembles the average flux
//! at the samples, refits the estimator on those values, checks the stop
//! rule on the same points and only then draws fresh samples.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::estimator::{
    AnnConfig, AnnEstimator, EstimatorError, EstimatorKind, ExactEstimator, FitReport,
    FluxEstimator, Interpolation, MeshEstimator,
};
use crate::neural::TrainingSet;
use crate::quadrature::{discrete_ordinates, AngularQuadrature, QuadratureError};
use crate::transport::{
    average_flux, moc_intensity, path_length, TransportError, TransportProblem, DEFAULT_SWEEP_TOL,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("sweep failed at sample {sample}, direction {direction}: {source}")]
    Sweep {
        sample: usize,
        direction: usize,
        source: TransportError,
    },
    #[error("estimator fit failed at iteration {iteration}: {source}")]
    Fit {
        iteration: usize,
        source: EstimatorError,
    },
    #[error("the exact estimator needs a reference flux function")]
    MissingExactFlux,
    #[error("{what}: got {got} values, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

/// Initial flux guess used for the first fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialFlux {
    Zero,
    Constant(f64),
    /// Mean of the two boundary intensities.
    BoundaryAverage,
}

impl InitialFlux {
    pub fn value(&self, problem: &TransportProblem) -> f64 {
        match *self {
            InitialFlux::Zero => 0.0,
            InitialFlux::Constant(c) => c,
            InitialFlux::BoundaryAverage => 0.5 * (problem.inflow_left() + problem.inflow_right()),
        }
    }
}

/// How sample points are placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleLayout {
    /// Endpoints plus uniformly drawn interior points.
    Random,
    /// Equally spaced points including both endpoints.
    Uniform,
}

/// Which pair of flux vectors the stop rule compares at the iterate's
/// sample points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopMeasure {
    /// Refitted estimator against the previous estimator.
    EstimatorChange,
    /// Swept flux against the previous estimator.
    SweepResidual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub n_quad: usize,
    pub n_samples: usize,
    pub epsilon: f64,
    pub max_iters: usize,
    pub sweep_tol: f64,
    pub resample: bool,
    pub layout: SampleLayout,
    pub seed: u64,
    pub estimator: EstimatorKind,
    pub ann: AnnConfig,
    pub mesh_order: Interpolation,
    pub initial: InitialFlux,
    pub stop: StopMeasure,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            n_quad: 100,
            n_samples: 101,
            epsilon: 1e-5,
            max_iters: 500,
            sweep_tol: DEFAULT_SWEEP_TOL,
            resample: true,
            layout: SampleLayout::Random,
            seed: 0,
            estimator: EstimatorKind::Ann,
            ann: AnnConfig::default(),
            mesh_order: Interpolation::Cubic,
            initial: InitialFlux::Zero,
            stop: StopMeasure::EstimatorChange,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::InvalidConfig(m));
        if self.n_quad < 2 || self.n_quad % 2 != 0 {
            return bad(format!(
                "quadrature order must be even and >= 2 (got {})",
                self.n_quad
            ));
        }
        if self.n_samples < 2 {
            return bad(format!("need at least 2 samples (got {})", self.n_samples));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive (got {})", self.epsilon));
        }
        if self.max_iters < 1 {
            return bad("max_iters must be at least 1".into());
        }
        if !(self.sweep_tol > 0.0 && self.sweep_tol.is_finite()) {
            return bad(format!(
                "sweep tolerance must be positive (got {})",
                self.sweep_tol
            ));
        }
        Ok(())
    }
}

/// Any of the estimator realizations, chosen at run time.
#[derive(Debug, Clone)]
pub enum Estimator {
    Ann(AnnEstimator),
    Mesh(MeshEstimator),
    Exact(ExactEstimator),
}

impl Estimator {
    pub fn as_ann(&self) -> Option<&AnnEstimator> {
        match self {
            Estimator::Ann(e) => Some(e),
            _ => None,
        }
    }

    pub fn as_mesh(&self) -> Option<&MeshEstimator> {
        match self {
            Estimator::Mesh(e) => Some(e),
            _ => None,
        }
    }

    fn inner(&self) -> &dyn FluxEstimator {
        match self {
            Estimator::Ann(e) => e,
            Estimator::Mesh(e) => e,
            Estimator::Exact(e) => e,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn FluxEstimator {
        match self {
            Estimator::Ann(e) => e,
            Estimator::Mesh(e) => e,
            Estimator::Exact(e) => e,
        }
    }
}

impl FluxEstimator for Estimator {
    fn kind(&self) -> EstimatorKind {
        self.inner().kind()
    }

    fn domain(&self) -> (f64, f64) {
        self.inner().domain()
    }

    #[inline]
    fn estimate(&self, x: f64) -> f64 {
        match self {
            Estimator::Ann(e) => e.estimate(x),
            Estimator::Mesh(e) => e.estimate(x),
            Estimator::Exact(e) => e.estimate(x),
        }
    }

    fn fit(&mut self, set: &TrainingSet) -> Result<FitReport, EstimatorError> {
        self.inner_mut().fit(set)
    }

    fn clamped_evaluations(&self) -> u64 {
        self.inner().clamped_evaluations()
    }
}

pub type FluxFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Builds the estimator named in `config`. `exact` supplies the function
/// for the exact kind.
pub fn build_estimator(
    problem: &TransportProblem,
    config: &SolverConfig,
    exact: Option<FluxFn>,
) -> Result<Estimator, SolverError> {
    let (a, b) = problem.domain();
    Ok(match config.estimator {
        EstimatorKind::Ann => {
            Estimator::Ann(AnnEstimator::new(a, b, config.ann.clone(), config.seed)?)
        }
        EstimatorKind::Mesh => Estimator::Mesh(MeshEstimator::new(a, b, config.mesh_order)),
        EstimatorKind::Exact => {
            let f = exact.ok_or(SolverError::MissingExactFlux)?;
            Estimator::Exact(ExactEstimator::new(a, b, move |x| f(x)))
        }
    })
}

/// `n` sorted points on `[a, b]`: both endpoints plus `n - 2` distinct
/// interior points drawn uniformly.
pub fn draw_samples<R: Rng + ?Sized>(n: usize, a: f64, b: f64, rng: &mut R) -> Vec<f64> {
    let mut points = Vec::with_capacity(n.max(2));
    points.push(a);
    points.push(b);
    while points.len() < n {
        let x = rng.gen_range(a..b);
        if x > a && !points.contains(&x) {
            points.push(x);
        }
    }
    points.sort_by(f64::total_cmp);
    points
}

pub fn uniform_points(n: usize, a: f64, b: f64) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|k| {
            if k == n - 1 {
                b
            } else {
                a + (b - a) * k as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Average flux at every sample point, from a characteristic sweep over all
/// directions with the scattering source taken from `estimator`.
pub fn sweep<E: FluxEstimator + ?Sized>(
    problem: &TransportProblem,
    quad: &AngularQuadrature,
    estimator: &E,
    samples: &[f64],
    tol: f64,
) -> Result<Vec<f64>, SolverError> {
    samples
        .par_iter()
        .enumerate()
        .map(|(m, &x)| {
            let mut intensities = Vec::with_capacity(quad.count());
            for (i, &mu) in quad.nodes().iter().enumerate() {
                let wrap = |source| SolverError::Sweep {
                    sample: m,
                    direction: i,
                    source,
                };
                let point = path_length(x, mu, problem).map_err(wrap)?;
                intensities.push(moc_intensity(&point, estimator, problem, tol).map_err(wrap)?);
            }
            average_flux(&intensities, quad).map_err(|source| SolverError::Sweep {
                sample: m,
                direction: 0,
                source,
            })
        })
        .collect()
}

/// Euclidean norm.
pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Stop rule `‖new − old‖₂ < max(ε, ε‖new‖₂)`; returns the verdict and the
/// difference norm.
pub fn converged(
    psi_new: &[f64],
    psi_old: &[f64],
    epsilon: f64,
) -> Result<(bool, f64), SolverError> {
    if psi_new.len() != psi_old.len() {
        return Err(SolverError::LengthMismatch {
            what: "flux vectors",
            expected: psi_old.len(),
            got: psi_new.len(),
        });
    }
    let metric = psi_new
        .iter()
        .zip(psi_old)
        .map(|(n, o)| (n - o).powi(2))
        .sum::<f64>()
        .sqrt();
    let threshold = epsilon.max(epsilon * l2_norm(psi_new));
    Ok((metric < threshold, metric))
}

/// One source iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub metric: f64,
    pub threshold: f64,
    pub train_loss: f64,
    pub epochs: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub estimator: Estimator,
    pub history: Vec<IterationRecord>,
    pub converged: bool,
    /// Sample points of the last iterate and the swept flux there.
    pub samples: Vec<f64>,
    pub psi: Vec<f64>,
    pub initial_fit: FitReport,
}

impl SolveResult {
    pub fn iterations(&self) -> usize {
        self.history.len()
    }

    pub fn final_metric(&self) -> Option<f64> {
        self.history.last().map(|r| r.metric)
    }

    pub fn evaluate(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.estimator.estimate(x)).collect()
    }
}

/// Runs source iteration with the estimator named in `config`.
pub fn solve(
    problem: &TransportProblem,
    config: &SolverConfig,
) -> Result<SolveResult, SolverError> {
    solve_observed(problem, config, None, |_| {})
}

/// Like [`solve`], passing each iteration record to `observe` as it
/// completes. `exact` is required for the exact estimator kind.
pub fn solve_observed(
    problem: &TransportProblem,
    config: &SolverConfig,
    exact: Option<FluxFn>,
    observe: impl FnMut(&IterationRecord),
) -> Result<SolveResult, SolverError> {
    config.validate()?;
    let estimator = build_estimator(problem, config, exact)?;
    solve_with(problem, config, estimator, observe)
}

/// Source iteration with a caller-provided estimator.
pub fn solve_with(
    problem: &TransportProblem,
    config: &SolverConfig,
    mut estimator: Estimator,
    mut observe: impl FnMut(&IterationRecord),
) -> Result<SolveResult, SolverError> {
    config.validate()?;
    let quad = discrete_ordinates(config.n_quad)?;
    let (a, b) = problem.domain();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let next_samples = |rng: &mut ChaCha8Rng| match config.layout {
        SampleLayout::Random => draw_samples(config.n_samples, a, b, rng),
        SampleLayout::Uniform => uniform_points(config.n_samples, a, b),
    };

    let mut samples = next_samples(&mut rng);
    let psi0 = config.initial.value(problem);
    let initial_fit = estimator
        .fit(&TrainingSet::new(
            samples.clone(),
            vec![psi0; samples.len()],
        ))
        .map_err(|source| SolverError::Fit {
            iteration: 0,
            source,
        })?;

    let mut history = Vec::new();
    let mut psi = vec![psi0; samples.len()];
    let mut done = false;
    for iteration in 1..=config.max_iters {
        let started = Instant::now();
        psi = sweep(problem, &quad, &estimator, &samples, config.sweep_tol)?;
        let previous: Vec<f64> = samples.iter().map(|&x| estimator.estimate(x)).collect();
        let report = estimator
            .fit(&TrainingSet::new(samples.clone(), psi.clone()))
            .map_err(|source| SolverError::Fit { iteration, source })?;
        let current: Vec<f64> = match config.stop {
            StopMeasure::EstimatorChange => {
                samples.iter().map(|&x| estimator.estimate(x)).collect()
            }
            StopMeasure::SweepResidual => psi.clone(),
        };
        let (stop, metric) = converged(&current, &previous, config.epsilon)?;
        let record = IterationRecord {
            iteration,
            metric,
            threshold: config.epsilon.max(config.epsilon * l2_norm(&current)),
            train_loss: report.loss,
            epochs: report.epochs,
            seconds: started.elapsed().as_secs_f64(),
        };
        observe(&record);
        history.push(record);
        if stop {
            done = true;
            break;
        }
        if config.resample && iteration < config.max_iters {
            samples = next_samples(&mut rng);
        }
    }

    Ok(SolveResult {
        estimator,
        history,
        converged: done,
        samples,
        psi,
        initial_fit,
    })
}
