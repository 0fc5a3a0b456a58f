//! Test problems on the unit slab and error metrics.
//!
//! `problem1` is a manufactured case whose angular flux `e^{-α σ_t x}` is the
//! same in every direction; `problem2-<σ_s>` is a unit-thickness slab with a
//! parabolic source, vacuum boundaries and `σ_t = 1`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::estimator::{EstimatorKind, FluxEstimator, Interpolation, MeshEstimator};
use crate::solver::{self, FluxFn, SampleLayout, SolverConfig, SolverError};
use crate::transport::{TransportError, TransportProblem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("kappa ({kappa}) must equal sigma_t - sigma_s ({diff})")]
    Inconsistent { kappa: f64, diff: f64 },
    #[error("unknown problem `{0}` (expected problem1 or problem2-<sigma_s>)")]
    UnknownName(String),
    #[error("benchmark scattering coefficient must lie in [0, 1) (got {0})")]
    BadScattering(f64),
    #[error("oracle needs at least {min_points} mesh points and {min_quad} directions")]
    OracleResolution { min_points: usize, min_quad: usize },
    #[error("oracle did not converge within {0} iterations")]
    OracleUnconverged(usize),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Manufactured problem with exact flux `e^{-α σ_t x}` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedProblem {
    pub kappa: f64,
    pub alpha: f64,
    pub sigma_t: f64,
    pub sigma_s: f64,
}

const CONSISTENCY_TOL: f64 = 1e-12;

impl ManufacturedProblem {
    pub fn new(kappa: f64, alpha: f64, sigma_t: f64, sigma_s: f64) -> Result<Self, ProblemError> {
        let diff = sigma_t - sigma_s;
        if !((kappa - diff).abs() <= CONSISTENCY_TOL) {
            return Err(ProblemError::Inconsistent { kappa, diff });
        }
        Ok(ManufacturedProblem {
            kappa,
            alpha,
            sigma_t,
            sigma_s,
        })
    }

    /// Derives `σ_t = κ + σ_s`.
    pub fn from_scattering(kappa: f64, alpha: f64, sigma_s: f64) -> Self {
        ManufacturedProblem {
            kappa,
            alpha,
            sigma_t: kappa + sigma_s,
            sigma_s,
        }
    }

    /// κ = 0.1, α = 5, σ_s = 0.5, σ_t = 0.6.
    pub fn canonical() -> Self {
        Self::from_scattering(0.1, 5.0, 0.5)
    }

    /// `(κ − α σ_t μ) e^{−α σ_t x}`
    pub fn source(&self, x: f64, mu: f64) -> f64 {
        (self.kappa - self.alpha * self.sigma_t * mu) * (-self.alpha * self.sigma_t * x).exp()
    }

    pub fn exact_average_flux(&self, x: f64) -> f64 {
        (-self.alpha * self.sigma_t * x).exp()
    }

    /// Same as the average flux: the manufactured angular flux is isotropic.
    pub fn exact_angular_flux(&self, x: f64, _mu: f64) -> f64 {
        self.exact_average_flux(x)
    }

    /// Residual of the transport equation at `(x, mu)` for the exact flux.
    pub fn residual(&self, x: f64, mu: f64) -> f64 {
        let psi = self.exact_average_flux(x);
        let dpsi = -self.alpha * self.sigma_t * psi;
        mu * dpsi + self.sigma_t * psi - self.sigma_s * psi - self.source(x, mu)
    }

    pub fn exact_fn(&self) -> FluxFn {
        let p = *self;
        Arc::new(move |x| p.exact_average_flux(x))
    }

    pub fn to_transport(&self) -> Result<TransportProblem, ProblemError> {
        let p = *self;
        Ok(TransportProblem::new(
            0.0,
            1.0,
            self.sigma_t,
            self.sigma_s,
            move |x, mu| p.source(x, mu),
            1.0,
            (-self.alpha * self.sigma_t).exp(),
        )?)
    }
}

/// Unit slab, `σ_t = 1`, `q = x − x²`, vacuum boundaries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkProblem {
    pub sigma_s: f64,
}

impl BenchmarkProblem {
    pub const SIGMA_T: f64 = 1.0;

    pub fn new(sigma_s: f64) -> Result<Self, ProblemError> {
        if !(sigma_s >= 0.0 && sigma_s < Self::SIGMA_T) {
            return Err(ProblemError::BadScattering(sigma_s));
        }
        Ok(BenchmarkProblem { sigma_s })
    }

    pub fn source(x: f64) -> f64 {
        x - x * x
    }

    pub fn to_transport(&self) -> Result<TransportProblem, ProblemError> {
        Ok(TransportProblem::new(
            0.0,
            1.0,
            Self::SIGMA_T,
            self.sigma_s,
            |x, _| Self::source(x),
            0.0,
            0.0,
        )?)
    }
}

/// A catalog entry, addressable by name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemSpec {
    Manufactured(ManufacturedProblem),
    Benchmark(BenchmarkProblem),
}

impl ProblemSpec {
    pub fn name(&self) -> String {
        match self {
            ProblemSpec::Manufactured(_) => "problem1".to_string(),
            ProblemSpec::Benchmark(p) => format!("problem2-{}", p.sigma_s),
        }
    }

    pub fn to_transport(&self) -> Result<TransportProblem, ProblemError> {
        match self {
            ProblemSpec::Manufactured(p) => p.to_transport(),
            ProblemSpec::Benchmark(p) => p.to_transport(),
        }
    }

    /// Closed-form average flux, when one exists.
    pub fn exact(&self) -> Option<FluxFn> {
        match self {
            ProblemSpec::Manufactured(p) => Some(p.exact_fn()),
            ProblemSpec::Benchmark(_) => None,
        }
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for ProblemSpec {
    type Err = ProblemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "problem1" {
            return Ok(ProblemSpec::Manufactured(ManufacturedProblem::canonical()));
        }
        if s == "problem2" {
            return Ok(ProblemSpec::Benchmark(BenchmarkProblem::new(0.9)?));
        }
        if let Some(value) = s.strip_prefix("problem2-") {
            let sigma_s: f64 = value
                .parse()
                .map_err(|_| ProblemError::UnknownName(s.to_string()))?;
            return Ok(ProblemSpec::Benchmark(BenchmarkProblem::new(sigma_s)?));
        }
        Err(ProblemError::UnknownName(s.to_string()))
    }
}

/// Unnormalized Euclidean norm of `estimator − reference` over `grid`.
pub fn l2_error<E, F>(estimator: &E, reference: F, grid: &[f64]) -> f64
where
    E: FluxEstimator + ?Sized,
    F: Fn(f64) -> f64,
{
    grid.iter()
        .map(|&x| (estimator.estimate(x) - reference(x)).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Largest pointwise difference over `grid`.
pub fn max_error<E, F>(estimator: &E, reference: F, grid: &[f64]) -> f64
where
    E: FluxEstimator + ?Sized,
    F: Fn(f64) -> f64,
{
    grid.iter()
        .map(|&x| (estimator.estimate(x) - reference(x)).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub mesh_points: usize,
    pub n_quad: usize,
    pub epsilon: f64,
    pub max_iters: usize,
    pub sweep_tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            mesh_points: 1025,
            n_quad: 100,
            epsilon: 1e-8,
            max_iters: 5000,
            sweep_tol: 1e-11,
        }
    }
}

pub const ORACLE_MIN_POINTS: usize = 256;
pub const ORACLE_MIN_QUAD: usize = 100;

/// Reference flux from a classical solve: cubic interpolation on a fixed
/// uniform mesh, no resampling and no network.
pub fn benchmark_oracle(
    problem: &BenchmarkProblem,
    config: &OracleConfig,
) -> Result<MeshEstimator, ProblemError> {
    if config.mesh_points < ORACLE_MIN_POINTS || config.n_quad < ORACLE_MIN_QUAD {
        return Err(ProblemError::OracleResolution {
            min_points: ORACLE_MIN_POINTS,
            min_quad: ORACLE_MIN_QUAD,
        });
    }
    mesh_reference(&problem.to_transport()?, config)
}

/// Fixed-mesh source iteration on any problem; shared by the oracle and its
/// tests. Bypasses the resolution floor of [`benchmark_oracle`].
pub fn mesh_reference(
    problem: &TransportProblem,
    config: &OracleConfig,
) -> Result<MeshEstimator, ProblemError> {
    let solver_config = SolverConfig {
        n_quad: config.n_quad,
        n_samples: config.mesh_points,
        epsilon: config.epsilon,
        max_iters: config.max_iters,
        sweep_tol: config.sweep_tol,
        resample: false,
        layout: SampleLayout::Uniform,
        estimator: EstimatorKind::Mesh,
        mesh_order: Interpolation::Cubic,
        ..SolverConfig::default()
    };
    let result = solver::solve(problem, &solver_config)?;
    if !result.converged {
        return Err(ProblemError::OracleUnconverged(config.max_iters));
    }
    match result.estimator {
        solver::Estimator::Mesh(mesh) => Ok(mesh),
        _ => unreachable!("mesh kind requested"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::ExactEstimator;

    #[test]
    fn canonical_parameters_are_consistent() {
        let p = ManufacturedProblem::canonical();
        assert!((p.sigma_t - 0.6).abs() < 1e-15);
        assert!(ManufacturedProblem::new(p.kappa, p.alpha, p.sigma_t, p.sigma_s).is_ok());
        assert!(matches!(
            ManufacturedProblem::new(0.2, 5.0, 0.6, 0.5),
            Err(ProblemError::Inconsistent { .. })
        ));
    }

    #[test]
    fn manufactured_source_examples() {
        let p = ManufacturedProblem::canonical();
        assert!((p.source(0.0, 0.0) - 0.1).abs() < 1e-15);
        let expect = (0.1 - 3.0) * (-0.75f64).exp();
        assert!((p.source(0.25, 1.0) - expect).abs() < 1e-14);
        assert!((p.source(0.25, 1.0) + 1.3698).abs() < 1e-4);

        let flat = ManufacturedProblem::from_scattering(0.1, 0.0, 0.5);
        for (x, mu) in [(0.0, -1.0), (0.4, 0.2), (1.0, 1.0)] {
            assert_eq!(flat.source(x, mu), 0.1);
            assert_eq!(flat.exact_average_flux(x), 1.0);
        }
    }

    #[test]
    fn exact_flux_matches_tabulated_values() {
        let p = ManufacturedProblem::canonical();
        assert_eq!(p.exact_average_flux(0.0), 1.0);
        assert!((p.exact_average_flux(0.5) - 0.2231).abs() < 5e-5);
        assert!((p.exact_average_flux(1.0) - 0.0498).abs() < 5e-5);
    }

    #[test]
    fn boundary_data_follow_the_exact_flux() {
        let p = ManufacturedProblem::canonical();
        let t = p.to_transport().unwrap();
        assert_eq!(t.inflow_left(), 1.0);
        assert!((t.inflow_right() - (-3.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn catalog_names() {
        assert_eq!(
            "problem1".parse::<ProblemSpec>().unwrap(),
            ProblemSpec::Manufactured(ManufacturedProblem::canonical())
        );
        for s in [0.9, 0.99, 0.999] {
            let spec: ProblemSpec = format!("problem2-{s}").parse().unwrap();
            assert_eq!(
                spec,
                ProblemSpec::Benchmark(BenchmarkProblem { sigma_s: s })
            );
            assert_eq!(spec.name(), format!("problem2-{s}"));
        }
        assert!(matches!(
            "problem3".parse::<ProblemSpec>(),
            Err(ProblemError::UnknownName(_))
        ));
        assert!(matches!(
            "problem2-1.5".parse::<ProblemSpec>(),
            Err(ProblemError::BadScattering(_))
        ));
    }

    #[test]
    fn l2_error_examples() {
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let est = ExactEstimator::new(0.0, 1.0, |x| x * x);
        assert_eq!(l2_error(&est, |x| x * x, &grid), 0.0);
        let delta = 1e-3;
        let e = l2_error(&est, |x| x * x + delta, &grid);
        assert!((e - delta * (grid.len() as f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn oracle_rejects_coarse_settings() {
        let p = BenchmarkProblem::new(0.9).unwrap();
        let coarse = OracleConfig {
            mesh_points: 64,
            ..OracleConfig::default()
        };
        assert!(matches!(
            benchmark_oracle(&p, &coarse),
            Err(ProblemError::OracleResolution { .. })
        ));
    }
}
