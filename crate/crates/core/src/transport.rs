//! Slab transport problem data and the method-of-characteristics evaluation
//! of a directional intensity.
//!
//! A direction `mu` is followed from its inflow boundary (`a` when `mu > 0`,
//! `b` when `mu < 0`), so positions along a characteristic are
//! `x(s) = x_in + s * mu` with `s >= 0`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::estimator::FluxEstimator;
use crate::quadrature::{AdaptiveIntegrator, AngularQuadrature, QuadratureError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransportError {
    #[error("domain endpoints must satisfy a < b (got a = {a}, b = {b})")]
    InvalidDomain { a: f64, b: f64 },
    #[error("scattering coefficient {sigma_s} exceeds total coefficient {sigma_t} at x = {x}")]
    ScatteringExceedsTotal { x: f64, sigma_s: f64, sigma_t: f64 },
    #[error("{what} is negative or non-finite at x = {x}")]
    BadCoefficient { what: &'static str, x: f64 },
    #[error("interior source is non-finite at x = {x}, mu = {mu}")]
    BadSource { x: f64, mu: f64 },
    #[error("boundary intensity must be finite and non-negative (got {0})")]
    BadInflow(f64),
    #[error("direction cosine must be non-zero and within [-1, 1] (got {0})")]
    BadDirection(f64),
    #[error("point x = {x} lies outside the domain [{a}, {b}]")]
    OutsideDomain { x: f64, a: f64, b: f64 },
    #[error("got {got} intensities for a {expected}-direction quadrature")]
    LengthMismatch { expected: usize, got: usize },
    #[error("characteristic integration failed: {0}")]
    Integration(#[from] QuadratureError),
}

/// A cross section, constant or varying in space.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    Variable(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Coefficient {
    pub fn variable(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Coefficient::Variable(Arc::new(f))
    }

    #[inline]
    pub fn at(&self, x: f64) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Variable(f) => f(x),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Coefficient::Constant(c) => Some(*c),
            Coefficient::Variable(_) => None,
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "Constant({c})"),
            Coefficient::Variable(_) => f.write_str("Variable(..)"),
        }
    }
}

impl From<f64> for Coefficient {
    fn from(c: f64) -> Self {
        Coefficient::Constant(c)
    }
}

pub type SourceFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Points at which coefficient invariants are checked on construction.
const VALIDATION_POINTS: usize = 257;

/// Mono-energetic, isotropically scattering slab problem on `[a, b]`.
#[derive(Clone)]
pub struct TransportProblem {
    a: f64,
    b: f64,
    sigma_t: Coefficient,
    sigma_s: Coefficient,
    source: SourceFn,
    inflow_left: f64,
    inflow_right: f64,
}

impl fmt::Debug for TransportProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransportProblem")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("sigma_t", &self.sigma_t)
            .field("sigma_s", &self.sigma_s)
            .field("inflow_left", &self.inflow_left)
            .field("inflow_right", &self.inflow_right)
            .finish_non_exhaustive()
    }
}

impl TransportProblem {
    /// Builds and validates a problem. `source` is `q(x, mu)`; `inflow_left`
    /// enters at `a` for `mu > 0` and `inflow_right` at `b` for `mu < 0`.
    pub fn new(
        a: f64,
        b: f64,
        sigma_t: impl Into<Coefficient>,
        sigma_s: impl Into<Coefficient>,
        source: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        inflow_left: f64,
        inflow_right: f64,
    ) -> Result<Self, TransportError> {
        let problem = TransportProblem {
            a,
            b,
            sigma_t: sigma_t.into(),
            sigma_s: sigma_s.into(),
            source: Arc::new(source),
            inflow_left,
            inflow_right,
        };
        problem.validate()?;
        Ok(problem)
    }

    fn validate(&self) -> Result<(), TransportError> {
        let (a, b) = (self.a, self.b);
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(TransportError::InvalidDomain { a, b });
        }
        for inflow in [self.inflow_left, self.inflow_right] {
            if !(inflow.is_finite() && inflow >= 0.0) {
                return Err(TransportError::BadInflow(inflow));
            }
        }
        for k in 0..VALIDATION_POINTS {
            let x = a + (b - a) * k as f64 / (VALIDATION_POINTS - 1) as f64;
            let st = self.sigma_t.at(x);
            let ss = self.sigma_s.at(x);
            if !(st.is_finite() && st >= 0.0) {
                return Err(TransportError::BadCoefficient { what: "sigma_t", x });
            }
            if !(ss.is_finite() && ss >= 0.0) {
                return Err(TransportError::BadCoefficient { what: "sigma_s", x });
            }
            if ss > st {
                return Err(TransportError::ScatteringExceedsTotal {
                    x,
                    sigma_s: ss,
                    sigma_t: st,
                });
            }
            for mu in [-1.0, -0.5, 0.5, 1.0] {
                if !(self.source)(x, mu).is_finite() {
                    return Err(TransportError::BadSource { x, mu });
                }
            }
        }
        Ok(())
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn sigma_t(&self) -> &Coefficient {
        &self.sigma_t
    }

    pub fn sigma_s(&self) -> &Coefficient {
        &self.sigma_s
    }

    pub fn inflow_left(&self) -> f64 {
        self.inflow_left
    }

    pub fn inflow_right(&self) -> f64 {
        self.inflow_right
    }

    #[inline]
    pub fn source(&self, x: f64, mu: f64) -> f64 {
        (self.source)(x, mu)
    }

    /// Inflow boundary position and intensity for direction `mu`.
    pub fn inflow(&self, mu: f64) -> (f64, f64) {
        if mu > 0.0 {
            (self.a, self.inflow_left)
        } else {
            (self.b, self.inflow_right)
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.a && x <= self.b
    }
}

/// A point on the characteristic through `x` along `mu`; `s` is the path
/// length back to the inflow boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicPoint {
    pub x: f64,
    pub mu: f64,
    pub s: f64,
}

impl CharacteristicPoint {
    /// Position reached after path length `t` from the inflow boundary.
    #[inline]
    pub fn position(&self, t: f64) -> f64 {
        // x_in + t*mu, written relative to x so that t = s returns x exactly.
        self.x - (self.s - t) * self.mu
    }
}

/// Anchors the characteristic through `x` along `mu` at its inflow boundary.
pub fn path_length(
    x: f64,
    mu: f64,
    problem: &TransportProblem,
) -> Result<CharacteristicPoint, TransportError> {
    if !(mu != 0.0 && mu.is_finite() && mu.abs() <= 1.0) {
        return Err(TransportError::BadDirection(mu));
    }
    if !problem.contains(x) {
        return Err(TransportError::OutsideDomain {
            x,
            a: problem.a,
            b: problem.b,
        });
    }
    let (x_in, _) = problem.inflow(mu);
    let s = ((x - x_in) / mu).max(0.0);
    Ok(CharacteristicPoint { x, mu, s })
}

/// `∫_{s_lo}^{s_hi} sigma_t(x(s)) ds` along direction `mu`.
pub fn optical_depth(
    s_lo: f64,
    s_hi: f64,
    mu: f64,
    problem: &TransportProblem,
) -> Result<f64, TransportError> {
    if s_hi <= s_lo {
        return Ok(0.0);
    }
    match problem.sigma_t.as_constant() {
        Some(c) => Ok(c * (s_hi - s_lo)),
        None => {
            let (x_in, _) = problem.inflow(mu);
            let f = |t: f64| problem.sigma_t.at(x_in + t * mu);
            Ok(AdaptiveIntegrator::default().integrate(f, s_lo, s_hi, OPTICAL_DEPTH_TOL)?)
        }
    }
}

const OPTICAL_DEPTH_TOL: f64 = 1e-13;

/// Contributions from beyond this many mean free paths are below `e^-50`
/// relative and are dropped.
const MAX_OPTICAL_PATH: f64 = 50.0;

/// Seed panels span at most this optical thickness.
const PANEL_OPTICAL_LENGTH: f64 = 4.0;

/// Default absolute tolerance for characteristic integrals.
pub const DEFAULT_SWEEP_TOL: f64 = 1e-9;

/// Directional intensity at `point` with the scattering source built from
/// `estimator`:
///
/// `I = I_in e^{-τ(0,s)} + ∫_0^s [σ_s Ψ̃ + q](x(s')) e^{-τ(s',s)} ds'`
pub fn moc_intensity<E: FluxEstimator + ?Sized>(
    point: &CharacteristicPoint,
    estimator: &E,
    problem: &TransportProblem,
    tol: f64,
) -> Result<f64, TransportError> {
    let (_, inflow) = problem.inflow(point.mu);
    let s = point.s;
    let mu = point.mu;
    let emission = |t: f64| {
        let x = point.position(t);
        problem.sigma_s.at(x) * estimator.estimate(x) + problem.source(x, mu)
    };

    match problem.sigma_t.as_constant() {
        Some(sigma_t) => {
            let total_depth = sigma_t * s;
            let s_start = if total_depth > MAX_OPTICAL_PATH {
                s - MAX_OPTICAL_PATH / sigma_t
            } else {
                0.0
            };
            let panels = ((sigma_t * (s - s_start)) / PANEL_OPTICAL_LENGTH)
                .ceil()
                .max(1.0) as usize;
            let breaks: Vec<f64> = (0..=panels)
                .map(|k| {
                    if k == panels {
                        s
                    } else {
                        s_start + (s - s_start) * k as f64 / panels as f64
                    }
                })
                .collect();
            let integrand = |t: f64| emission(t) * (-sigma_t * (s - t)).exp();
            let collided = if s > 0.0 {
                AdaptiveIntegrator::default().integrate_partitioned(integrand, &breaks, tol)?
            } else {
                0.0
            };
            Ok(inflow * (-total_depth).exp() + collided)
        }
        None => {
            let attenuation = |t: f64| optical_depth(t, s, mu, problem).map(|d| (-d).exp());
            let integrand = |t: f64| emission(t) * attenuation(t).unwrap_or(f64::NAN);
            let collided = if s > 0.0 {
                AdaptiveIntegrator::default().integrate(integrand, 0.0, s, tol)?
            } else {
                0.0
            };
            Ok(inflow * attenuation(0.0)? + collided)
        }
    }
}

/// `½ Σ w_i I_i`.
pub fn average_flux(intensities: &[f64], quad: &AngularQuadrature) -> Result<f64, TransportError> {
    if intensities.len() != quad.count() {
        return Err(TransportError::LengthMismatch {
            expected: quad.count(),
            got: intensities.len(),
        });
    }
    Ok(0.5
        * intensities
            .iter()
            .zip(quad.weights())
            .map(|(i, w)| i * w)
            .sum::<f64>())
}
