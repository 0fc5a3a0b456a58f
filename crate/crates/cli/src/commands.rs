//! The `run`, `compare` and `oracle` subcommands.

use std::time::Instant;

use annmoc::problems::{
    benchmark_oracle, l2_error, max_error, OracleConfig, ProblemError, ProblemSpec,
};
use annmoc::solver::{solve_observed, uniform_points, FluxFn};
use annmoc::{EstimatorKind, FluxEstimator, IterationRecord, SolveResult, SolverConfig};

use crate::config::{initial_name, layout_name, stop_name, RunConfig};
use crate::output::{self, float, CompareRow};
use crate::{CliError, EXIT_NOT_CONVERGED, EXIT_OK};

#[derive(Debug)]
pub struct RunOutcome {
    pub result: SolveResult,
    pub grid: Vec<f64>,
    pub flux: Vec<f64>,
    pub reference: Option<Vec<f64>>,
    pub l2_error: Option<f64>,
    pub max_error: Option<f64>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.result.converged {
            EXIT_OK
        } else {
            EXIT_NOT_CONVERGED
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub rows: Vec<CompareRow>,
}

impl CompareOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.rows.iter().all(|r| r.converged) {
            EXIT_OK
        } else {
            EXIT_NOT_CONVERGED
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleOutcome {
    pub grid: Vec<f64>,
    pub flux: Vec<f64>,
}

fn reference_error(e: ProblemError) -> CliError {
    match e {
        ProblemError::OracleResolution { .. } => CliError::Config(e.to_string()),
        other => CliError::Reference(other),
    }
}

fn solve_problem(
    cfg: &RunConfig,
    solver: &SolverConfig,
    observe: impl FnMut(&IterationRecord),
) -> Result<SolveResult, CliError> {
    let transport = cfg
        .problem
        .to_transport()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(solve_observed(
        &transport,
        solver,
        cfg.problem.exact(),
        observe,
    )?)
}

fn evaluate(reference: &FluxFn, xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|&x| reference(x)).collect()
}

/// Solves once and writes the enabled artifacts into `cfg.out`.
pub fn run(cfg: &RunConfig, observe: impl FnMut(&IterationRecord)) -> Result<RunOutcome, CliError> {
    if cfg.solver.estimator == EstimatorKind::Exact && cfg.problem.exact().is_none() {
        return Err(CliError::Config(format!(
            "{} has no closed-form flux for the exact estimator",
            cfg.problem
        )));
    }
    output::ensure_dir(&cfg.out)?;
    let result = solve_problem(cfg, &cfg.solver, observe)?;

    let grid = uniform_points(cfg.grid, 0.0, 1.0);
    let flux = result.evaluate(&grid);
    let exact = cfg.problem.exact();
    let reference = exact.as_ref().map(|f| evaluate(f, &grid));
    let l2 = exact
        .as_ref()
        .map(|f| l2_error(&result.estimator, |x| f(x), &grid));
    let linf = exact
        .as_ref()
        .map(|f| max_error(&result.estimator, |x| f(x), &grid));

    let dir = &cfg.out;
    if cfg.emit.flux {
        output::write_flux(
            &output::artifact(dir, output::FLUX_FILE),
            &grid,
            &flux,
            reference.as_deref(),
        )?;
    }
    if cfg.emit.history {
        output::write_history(
            &output::artifact(dir, output::HISTORY_FILE),
            &result.history,
        )?;
        output::write_timing(&output::artifact(dir, output::TIMING_FILE), &result.history)?;
    }
    if cfg.emit.checkpoint {
        if let Some(ann) = result.estimator.as_ann() {
            output::write_text(
                &output::artifact(dir, output::CHECKPOINT_FILE),
                &ann.to_checkpoint(),
            )?;
        }
    }
    if cfg.emit.summary {
        let mut entries = vec![("command".to_string(), "run".to_string())];
        entries.push(("converged".into(), result.converged.to_string()));
        entries.push(("iterations".into(), result.iterations().to_string()));
        entries.push((
            "final_metric".into(),
            result
                .final_metric()
                .map(float)
                .unwrap_or_else(|| "none".into()),
        ));
        entries.push((
            "l2_error".into(),
            l2.map(float).unwrap_or_else(|| "unknown".into()),
        ));
        entries.push((
            "max_error".into(),
            linf.map(float).unwrap_or_else(|| "unknown".into()),
        ));
        entries.push(("initial_fit_loss".into(), float(result.initial_fit.loss)));
        entries.push((
            "clamped_evaluations".into(),
            result.estimator.clamped_evaluations().to_string(),
        ));
        entries.extend(config_entries(cfg, &cfg.solver));
        output::write_summary(&output::artifact(dir, output::SUMMARY_FILE), &entries)?;
    }

    Ok(RunOutcome {
        result,
        grid,
        flux,
        reference,
        l2_error: l2,
        max_error: linf,
    })
}

/// Runs the same problem and seed once per kind and tabulates the results.
pub fn compare(
    cfg: &RunConfig,
    kinds: &[EstimatorKind],
    mut observe: impl FnMut(EstimatorKind, &IterationRecord),
) -> Result<CompareOutcome, CliError> {
    if kinds.len() < 2 {
        return Err(CliError::Config(format!(
            "compare needs at least 2 estimator kinds (got {})",
            kinds.len()
        )));
    }
    let exact = cfg.problem.exact();
    if exact.is_none() && kinds.contains(&EstimatorKind::Exact) {
        return Err(CliError::Config(format!(
            "{} has no closed-form flux for the exact estimator",
            cfg.problem
        )));
    }
    output::ensure_dir(&cfg.out)?;
    let grid = uniform_points(cfg.grid, 0.0, 1.0);
    let reference: Vec<f64> = match (&exact, &cfg.problem) {
        (Some(f), _) => evaluate(f, &grid),
        (None, ProblemSpec::Benchmark(p)) => {
            let oracle = benchmark_oracle(p, &oracle_config(cfg)).map_err(reference_error)?;
            grid.iter().map(|&x| oracle.estimate(x)).collect()
        }
        (None, ProblemSpec::Manufactured(_)) => unreachable!("manufactured problems are exact"),
    };

    let mut rows = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let solver = SolverConfig {
            estimator: kind,
            ..cfg.solver.clone()
        };
        let started = Instant::now();
        let result = solve_problem(cfg, &solver, |r| observe(kind, r))?;
        let seconds = started.elapsed().as_secs_f64();
        let values = result.evaluate(&grid);
        let l2 = values
            .iter()
            .zip(&reference)
            .map(|(v, r)| (v - r).powi(2))
            .sum::<f64>()
            .sqrt();
        rows.push(CompareRow {
            kind: kind.name().to_string(),
            converged: result.converged,
            iterations: result.iterations(),
            final_metric: result.final_metric().unwrap_or(f64::NAN),
            l2_error: l2,
            seconds,
        });
    }

    output::write_compare(&output::artifact(&cfg.out, output::COMPARE_FILE), &rows)?;
    if cfg.emit.summary {
        let mut entries = vec![("command".to_string(), "compare".to_string())];
        let names: Vec<&str> = kinds.iter().map(|k| k.name()).collect();
        entries.push(("kinds".into(), names.join(",")));
        entries.push((
            "reference".into(),
            if exact.is_some() { "exact" } else { "oracle" }.into(),
        ));
        entries.extend(config_entries(cfg, &cfg.solver));
        output::write_summary(&output::artifact(&cfg.out, output::SUMMARY_FILE), &entries)?;
    }
    Ok(CompareOutcome { rows })
}

fn oracle_config(cfg: &RunConfig) -> OracleConfig {
    OracleConfig {
        n_quad: cfg.solver.n_quad.max(OracleConfig::default().n_quad),
        ..OracleConfig::default()
    }
}

/// Writes the fine-mesh reference flux of a benchmark problem.
pub fn oracle(cfg: &RunConfig) -> Result<OracleOutcome, CliError> {
    let ProblemSpec::Benchmark(problem) = cfg.problem else {
        return Err(CliError::Config(format!(
            "oracle applies to problem2 variants only (got {})",
            cfg.problem
        )));
    };
    let oc = oracle_config(cfg);
    output::ensure_dir(&cfg.out)?;
    let mesh = benchmark_oracle(&problem, &oc).map_err(reference_error)?;
    let grid = uniform_points(cfg.grid, 0.0, 1.0);
    let flux: Vec<f64> = grid.iter().map(|&x| mesh.estimate(x)).collect();
    output::write_flux(
        &output::artifact(&cfg.out, output::FLUX_FILE),
        &grid,
        &flux,
        None,
    )?;
    if cfg.emit.summary {
        let entries = vec![
            ("command".to_string(), "oracle".to_string()),
            ("problem".into(), cfg.problem.name()),
            ("sigma_s".into(), float(problem.sigma_s)),
            ("mesh_points".into(), oc.mesh_points.to_string()),
            ("n_quad".into(), oc.n_quad.to_string()),
            ("epsilon".into(), float(oc.epsilon)),
            ("max_iters".into(), oc.max_iters.to_string()),
            ("sweep_tol".into(), float(oc.sweep_tol)),
            ("grid".into(), cfg.grid.to_string()),
        ];
        output::write_summary(&output::artifact(&cfg.out, output::SUMMARY_FILE), &entries)?;
    }
    Ok(OracleOutcome { grid, flux })
}

/// Every resolved setting, enough to repeat the run.
pub fn config_entries(cfg: &RunConfig, s: &SolverConfig) -> Vec<(String, String)> {
    let mut e: Vec<(String, String)> = Vec::new();
    let mut put = |k: &str, v: String| e.push((k.to_string(), v));
    put("problem", cfg.problem.name());
    match cfg.problem {
        ProblemSpec::Manufactured(p) => {
            put("kappa", float(p.kappa));
            put("alpha", float(p.alpha));
            put("sigma_t", float(p.sigma_t));
            put("sigma_s", float(p.sigma_s));
        }
        ProblemSpec::Benchmark(p) => {
            put("sigma_t", float(annmoc::BenchmarkProblem::SIGMA_T));
            put("sigma_s", float(p.sigma_s));
        }
    }
    put("seed", s.seed.to_string());
    put("seed_generated", cfg.seed_generated.to_string());
    put("estimator", s.estimator.name().to_string());
    put("n_quad", s.n_quad.to_string());
    put("n_samples", s.n_samples.to_string());
    put("epsilon", float(s.epsilon));
    put("max_iters", s.max_iters.to_string());
    put("sweep_tol", float(s.sweep_tol));
    put("resample", s.resample.to_string());
    put("layout", layout_name(s.layout).to_string());
    put("initial", initial_name(s.initial));
    put("stop", stop_name(s.stop).to_string());
    put("mesh_order", s.mesh_order.name().to_string());
    let widths: Vec<String> = s.ann.widths.iter().map(|w| w.to_string()).collect();
    put("widths", widths.join("-"));
    put("hidden", s.ann.hidden.name().to_string());
    put("output", s.ann.output.name().to_string());
    put("learning_rate", float(s.ann.adam.learning_rate));
    put("beta1", float(s.ann.adam.beta1));
    put("beta2", float(s.ann.adam.beta2));
    put("adam_epsilon", float(s.ann.adam.epsilon));
    put("max_epochs", s.ann.schedule.max_epochs.to_string());
    put("loss_target", float(s.ann.schedule.loss_target));
    put("patience", s.ann.schedule.patience.to_string());
    put("improvement_floor", float(s.ann.schedule.improvement_floor));
    put("lr_decay", float(s.ann.schedule.lr_decay));
    put("min_learning_rate", float(s.ann.schedule.min_learning_rate));
    put("cold_start", s.ann.cold_start.to_string());
    put("refit_slack", float(s.ann.refit_slack));
    put("refit_floor", float(s.ann.refit_floor));
    put("grid", cfg.grid.to_string());
    put("out", cfg.out.display().to_string());
    e
}
