//! Run configuration: a TOML file, overridden by command-line flags.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use annmoc::neural::Activation;
use annmoc::problems::{BenchmarkProblem, ManufacturedProblem, ProblemSpec};
use annmoc::{EstimatorKind, InitialFlux, Interpolation, SampleLayout, SolverConfig, StopMeasure};
use clap::Args;
use serde::Deserialize;

use crate::CliError;

pub const DEFAULT_GRID: usize = 101;
pub const DEFAULT_OUT: &str = "annmoc-out";

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Catalog name: problem1, problem2 or problem2-<sigma_s>.
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long = "sigma-s")]
    pub sigma_s: Option<f64>,
    /// Absorption κ of the manufactured problem.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Decay factor α of the manufactured problem.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long = "n-quad")]
    pub n_quad: Option<usize>,
    #[arg(long = "n-samples")]
    pub n_samples: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
    /// ann, mesh or exact.
    #[arg(long)]
    pub estimator: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of uniform evaluation points for flux.csv.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Keep the first sample set for every iteration.
    #[arg(long = "no-resample")]
    pub no_resample: bool,
}

/// On-disk layout of the configuration file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub problem: Option<String>,
    pub sigma_s: Option<f64>,
    pub kappa: Option<f64>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    pub grid: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub training: TrainingSection,
    #[serde(default)]
    pub emit: EmitSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub n_quad: Option<usize>,
    pub n_samples: Option<usize>,
    pub epsilon: Option<f64>,
    pub max_iters: Option<usize>,
    pub sweep_tol: Option<f64>,
    pub resample: Option<bool>,
    pub estimator: Option<String>,
    pub mesh_order: Option<String>,
    /// random or uniform
    pub layout: Option<String>,
    /// zero, boundary-average, or a number
    pub initial: Option<toml::Value>,
    /// estimator-change or sweep-residual
    pub stop: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    pub widths: Option<Vec<usize>>,
    pub hidden: Option<String>,
    pub output: Option<String>,
    pub learning_rate: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub adam_epsilon: Option<f64>,
    pub max_epochs: Option<usize>,
    pub loss_target: Option<f64>,
    pub patience: Option<usize>,
    pub improvement_floor: Option<f64>,
    pub lr_decay: Option<f64>,
    pub min_learning_rate: Option<f64>,
    pub cold_start: Option<bool>,
    pub refit_slack: Option<f64>,
    pub refit_floor: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitSection {
    pub flux: Option<bool>,
    pub history: Option<bool>,
    pub checkpoint: Option<bool>,
    pub summary: Option<bool>,
}

/// Which artifacts a run writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Emit {
    pub flux: bool,
    pub history: bool,
    pub checkpoint: bool,
    pub summary: bool,
}

impl Default for Emit {
    fn default() -> Self {
        Emit {
            flux: true,
            history: true,
            checkpoint: true,
            summary: true,
        }
    }
}

/// Fully resolved configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub solver: SolverConfig,
    pub out: PathBuf,
    pub grid: usize,
    pub emit: Emit,
    /// True when no seed was supplied and one was drawn from the clock.
    pub seed_generated: bool,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config file: {e}")))
    }
}

impl RunConfig {
    /// Reads the file named by `--config`, if any, then applies the flags.
    pub fn from_args(args: &CommonArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        Self::resolve(&file, args)
    }

    pub fn resolve(file: &FileConfig, args: &CommonArgs) -> Result<Self, CliError> {
        let name = args
            .problem
            .clone()
            .or_else(|| file.problem.clone())
            .unwrap_or_else(|| "problem1".to_string());
        let problem = resolve_problem(
            &name,
            args.sigma_s.or(file.sigma_s),
            args.kappa.or(file.kappa),
            args.alpha.or(file.alpha),
        )?;

        let mut solver = SolverConfig::default();
        let s = &file.solver;
        set(&mut solver.n_quad, args.n_quad.or(s.n_quad));
        set(&mut solver.n_samples, args.n_samples.or(s.n_samples));
        set(&mut solver.epsilon, args.epsilon.or(s.epsilon));
        set(&mut solver.max_iters, args.max_iters.or(s.max_iters));
        set(&mut solver.sweep_tol, s.sweep_tol);
        set(&mut solver.resample, s.resample);
        if args.no_resample {
            solver.resample = false;
        }
        if let Some(kind) = args.estimator.as_ref().or(s.estimator.as_ref()) {
            solver.estimator = parse_kind(kind)?;
        }
        if let Some(order) = &s.mesh_order {
            solver.mesh_order = order
                .parse::<Interpolation>()
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        if let Some(layout) = &s.layout {
            solver.layout = parse_layout(layout)?;
        }
        if let Some(initial) = &s.initial {
            solver.initial = parse_initial(initial)?;
        }
        if let Some(stop) = &s.stop {
            solver.stop = parse_stop(stop)?;
        }

        let t = &file.training;
        let ann = &mut solver.ann;
        if let Some(widths) = &t.widths {
            ann.widths = widths.clone();
        }
        if let Some(hidden) = &t.hidden {
            ann.hidden = parse_activation(hidden)?;
        }
        if let Some(output) = &t.output {
            ann.output = parse_activation(output)?;
        }
        set(&mut ann.adam.learning_rate, t.learning_rate);
        set(&mut ann.adam.beta1, t.beta1);
        set(&mut ann.adam.beta2, t.beta2);
        set(&mut ann.adam.epsilon, t.adam_epsilon);
        set(&mut ann.schedule.max_epochs, t.max_epochs);
        set(&mut ann.schedule.loss_target, t.loss_target);
        set(&mut ann.schedule.patience, t.patience);
        set(&mut ann.schedule.improvement_floor, t.improvement_floor);
        set(&mut ann.schedule.lr_decay, t.lr_decay);
        set(&mut ann.schedule.min_learning_rate, t.min_learning_rate);
        set(&mut ann.cold_start, t.cold_start);
        set(&mut ann.refit_slack, t.refit_slack);
        set(&mut ann.refit_floor, t.refit_floor);

        let (seed, seed_generated) = match args.seed.or(file.seed) {
            Some(seed) => (seed, false),
            None => (clock_seed(), true),
        };
        solver.seed = seed;
        solver
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;

        let grid = args.grid.or(file.grid).unwrap_or(DEFAULT_GRID);
        if grid < 2 {
            return Err(CliError::Config(format!(
                "grid needs at least 2 points (got {grid})"
            )));
        }
        let out = args
            .out
            .clone()
            .or_else(|| file.out.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));

        let e = &file.emit;
        let defaults = Emit::default();
        let emit = Emit {
            flux: e.flux.unwrap_or(defaults.flux),
            history: e.history.unwrap_or(defaults.history),
            checkpoint: e.checkpoint.unwrap_or(defaults.checkpoint),
            summary: e.summary.unwrap_or(defaults.summary),
        };

        Ok(RunConfig {
            problem,
            solver,
            out,
            grid,
            emit,
            seed_generated,
        })
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn clock_seed() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0)
}

pub fn resolve_problem(
    name: &str,
    sigma_s: Option<f64>,
    kappa: Option<f64>,
    alpha: Option<f64>,
) -> Result<ProblemSpec, CliError> {
    let base: ProblemSpec = name
        .parse()
        .map_err(|e: annmoc::problems::ProblemError| CliError::Config(e.to_string()))?;
    match base {
        ProblemSpec::Manufactured(p) => {
            let kappa = kappa.unwrap_or(p.kappa);
            let alpha = alpha.unwrap_or(p.alpha);
            let sigma_s = sigma_s.unwrap_or(p.sigma_s);
            for (key, v) in [("kappa", kappa), ("alpha", alpha), ("sigma-s", sigma_s)] {
                if !v.is_finite() {
                    return Err(CliError::Config(format!("{key} must be finite")));
                }
            }
            if kappa < 0.0 || sigma_s < 0.0 {
                return Err(CliError::Config(
                    "kappa and sigma-s must be nonnegative".to_string(),
                ));
            }
            Ok(ProblemSpec::Manufactured(
                ManufacturedProblem::from_scattering(kappa, alpha, sigma_s),
            ))
        }
        ProblemSpec::Benchmark(p) => {
            if kappa.is_some() || alpha.is_some() {
                return Err(CliError::Config(
                    "kappa and alpha apply only to problem1".to_string(),
                ));
            }
            let sigma_s = sigma_s.unwrap_or(p.sigma_s);
            BenchmarkProblem::new(sigma_s)
                .map(ProblemSpec::Benchmark)
                .map_err(|e| CliError::Config(e.to_string()))
        }
    }
}

pub fn parse_kind(s: &str) -> Result<EstimatorKind, CliError> {
    s.parse()
        .map_err(|e: annmoc::estimator::EstimatorError| CliError::Config(e.to_string()))
}

/// Comma-separated estimator kinds.
pub fn parse_kinds(s: &str) -> Result<Vec<EstimatorKind>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|k| !k.is_empty())
        .map(parse_kind)
        .collect()
}

fn parse_activation(s: &str) -> Result<Activation, CliError> {
    s.parse()
        .map_err(|_| CliError::Config(format!("unknown activation `{s}`")))
}

pub fn layout_name(layout: SampleLayout) -> &'static str {
    match layout {
        SampleLayout::Random => "random",
        SampleLayout::Uniform => "uniform",
    }
}

fn parse_layout(s: &str) -> Result<SampleLayout, CliError> {
    match s {
        "random" => Ok(SampleLayout::Random),
        "uniform" => Ok(SampleLayout::Uniform),
        other => Err(CliError::Config(format!("unknown sample layout `{other}`"))),
    }
}

pub fn stop_name(stop: StopMeasure) -> &'static str {
    match stop {
        StopMeasure::EstimatorChange => "estimator-change",
        StopMeasure::SweepResidual => "sweep-residual",
    }
}

fn parse_stop(s: &str) -> Result<StopMeasure, CliError> {
    match s {
        "estimator-change" => Ok(StopMeasure::EstimatorChange),
        "sweep-residual" => Ok(StopMeasure::SweepResidual),
        other => Err(CliError::Config(format!("unknown stop measure `{other}`"))),
    }
}

pub fn initial_name(initial: InitialFlux) -> String {
    match initial {
        InitialFlux::Zero => "zero".to_string(),
        InitialFlux::Constant(c) => crate::output::float(c),
        InitialFlux::BoundaryAverage => "boundary-average".to_string(),
    }
}

fn parse_initial(v: &toml::Value) -> Result<InitialFlux, CliError> {
    match v {
        toml::Value::String(s) if s == "zero" => Ok(InitialFlux::Zero),
        toml::Value::String(s) if s == "boundary-average" => Ok(InitialFlux::BoundaryAverage),
        toml::Value::Float(c) => Ok(InitialFlux::Constant(*c)),
        toml::Value::Integer(c) => Ok(InitialFlux::Constant(*c as f64)),
        other => Err(CliError::Config(format!("unknown initial flux `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args() -> CommonArgs {
        CommonArgs {
            seed: Some(3),
            ..CommonArgs::default()
        }
    }

    #[test]
    fn defaults_resolve_to_problem1() {
        let cfg = RunConfig::resolve(&FileConfig::default(), &args()).unwrap();
        assert!(matches!(cfg.problem, ProblemSpec::Manufactured(_)));
        assert_eq!(cfg.grid, DEFAULT_GRID);
        assert_eq!(cfg.solver.seed, 3);
        assert!(!cfg.seed_generated);
        assert_eq!(cfg.solver.n_quad, 100);
    }

    #[test]
    fn flags_win_over_file() {
        let file = FileConfig::parse(
            "problem = \"problem2\"\nseed = 9\n[solver]\nn_quad = 8\nestimator = \"mesh\"\n",
        )
        .unwrap();
        let mut a = args();
        a.n_quad = Some(16);
        let cfg = RunConfig::resolve(&file, &a).unwrap();
        assert_eq!(cfg.solver.n_quad, 16);
        assert_eq!(cfg.solver.seed, 3);
        assert_eq!(cfg.solver.estimator, EstimatorKind::Mesh);
        assert!(matches!(cfg.problem, ProblemSpec::Benchmark(p) if p.sigma_s == 0.9));
    }

    #[test]
    fn missing_seed_is_generated() {
        let cfg = RunConfig::resolve(&FileConfig::default(), &CommonArgs::default()).unwrap();
        assert!(cfg.seed_generated);
    }

    #[test]
    fn rejects_bad_values() {
        let mut a = args();
        a.problem = Some("problem3".into());
        assert!(matches!(
            RunConfig::resolve(&FileConfig::default(), &a),
            Err(CliError::Config(_))
        ));
        let mut a = args();
        a.grid = Some(1);
        assert!(RunConfig::resolve(&FileConfig::default(), &a).is_err());
        let mut a = args();
        a.n_quad = Some(7);
        assert!(RunConfig::resolve(&FileConfig::default(), &a).is_err());
        let mut a = args();
        a.problem = Some("problem2".into());
        a.kappa = Some(0.2);
        assert!(RunConfig::resolve(&FileConfig::default(), &a).is_err());
        assert!(FileConfig::parse("unknown_key = 1").is_err());
    }

    #[test]
    fn manufactured_overrides_keep_consistency() {
        let mut a = args();
        a.kappa = Some(0.3);
        a.sigma_s = Some(0.2);
        let cfg = RunConfig::resolve(&FileConfig::default(), &a).unwrap();
        match cfg.problem {
            ProblemSpec::Manufactured(p) => {
                assert!((p.sigma_t - 0.5).abs() < 1e-15);
                assert_eq!(p.alpha, 5.0);
            }
            _ => panic!("expected problem1"),
        }
    }

    #[test]
    fn initial_flux_forms() {
        let file = FileConfig::parse("[solver]\ninitial = 0.25\n").unwrap();
        let cfg = RunConfig::resolve(&file, &args()).unwrap();
        assert_eq!(cfg.solver.initial, InitialFlux::Constant(0.25));
        let file = FileConfig::parse("[solver]\ninitial = \"boundary-average\"\n").unwrap();
        let cfg = RunConfig::resolve(&file, &args()).unwrap();
        assert_eq!(cfg.solver.initial, InitialFlux::BoundaryAverage);
    }

    #[test]
    fn kinds_list() {
        assert_eq!(
            parse_kinds("ann, mesh").unwrap(),
            vec![EstimatorKind::Ann, EstimatorKind::Mesh]
        );
        assert!(parse_kinds("ann,spline").is_err());
    }
}
