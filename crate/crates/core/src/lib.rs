//! Slab neutral-particle transport by discrete ordinates, source iteration
//! and the method of characteristics, with a pluggable average-flux
//! estimator: a multilayer perceptron retrained every iteration, spline or
//! linear interpolation on the sample points, or a closed-form function.
//!
//! ```no_run
//! use annmoc::{problems::ManufacturedProblem, solver::{solve, SolverConfig}};
//!
//! let problem = ManufacturedProblem::canonical().to_transport().unwrap();
//! let result = solve(&problem, &SolverConfig::default()).unwrap();
//! println!("converged after {} iterations", result.iterations());
//! ```

pub mod estimator;
pub mod neural;
pub mod problems;
pub mod quadrature;
pub mod solver;
pub mod transport;

pub use estimator::{
    AnnConfig, AnnEstimator, EstimatorKind, ExactEstimator, FitReport, FluxEstimator,
    Interpolation, MeshEstimator,
};
pub use neural::{
    Activation, AdamConfig, AdamState, Mlp, TrainingReport, TrainingSchedule, TrainingSet,
    TrainingStop,
};
pub use problems::{BenchmarkProblem, ManufacturedProblem, OracleConfig, ProblemSpec};
pub use quadrature::{discrete_ordinates, gauss_legendre, AngularQuadrature};
pub use solver::{
    solve, Estimator, InitialFlux, IterationRecord, SampleLayout, SolveResult, SolverConfig,
    StopMeasure,
};
pub use transport::{Coefficient, TransportProblem};
