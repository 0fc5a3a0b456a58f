//! Angular quadrature for the discrete-ordinates discretization and an
//! adaptive 1D integrator for characteristic integrals.
//!
//! Gauss–Legendre nodes are found by Newton iteration on the three-term
//! Legendre recurrence, started from Chebyshev-like initial guesses. Only the
//! non-negative half is computed; the negative half is its mirror image, so
//! the rule is symmetric bit for bit.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use thiserror::Error;

/// Errors raised while building a quadrature rule or integrating.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("quadrature order must be at least 1")]
    ZeroOrder,
    #[error(
        "discrete-ordinates sets need an even order (got {0}); odd rules have a node at mu = 0"
    )]
    OddOrder(usize),
    #[error("invalid integration interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("integration tolerance must be positive and finite (got {0})")]
    InvalidTolerance(f64),
    #[error("panel budget of {budget} exhausted with error estimate {estimate:e} above tolerance {tol:e}")]
    BudgetExhausted {
        budget: usize,
        estimate: f64,
        tol: f64,
    },
    #[error("integrand returned a non-finite value near s = {at}")]
    NonFinite { at: f64 },
}

/// A discrete set of direction cosines and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularQuadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Newton stops once the step falls below this.
const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITERS: usize = 100;

/// Evaluates `P_n(x)` and `P_n'(x)` with the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p_next = ((2.0 * k - 1.0) * x * p - (k - 1.0) * p_prev) / k;
        p_prev = p;
        p = p_next;
    }
    let n = n as f64;
    let dp = n * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// The `n`-point Gauss–Legendre rule on `[-1, 1]`, nodes ascending.
///
/// Odd `n` is allowed here and places a node at exactly zero. Use
/// [`discrete_ordinates`] when the rule drives a characteristic sweep.
pub fn gauss_legendre(n: usize) -> Result<AngularQuadrature, QuadratureError> {
    if n == 0 {
        return Err(QuadratureError::ZeroOrder);
    }
    let half = n / 2;
    let mut positive = Vec::with_capacity(half);
    // Roots in (0, 1), largest first.
    for i in 0..half {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..NEWTON_MAX_ITERS {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() <= NEWTON_TOL {
                break;
            }
        }
        // Refresh the derivative at the final root for the weight.
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        positive.push((x, w));
    }

    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for &(x, w) in &positive {
        nodes.push(-x);
        weights.push(w);
    }
    if n % 2 == 1 {
        let (_, d) = legendre_with_derivative(n, 0.0);
        nodes.push(0.0);
        weights.push(2.0 / (d * d));
    }
    for &(x, w) in positive.iter().rev() {
        nodes.push(x);
        weights.push(w);
    }
    Ok(AngularQuadrature { nodes, weights })
}

/// Gauss–Legendre directions for a sweep: like [`gauss_legendre`] but
/// rejects odd orders, which would place a direction at `mu = 0`.
pub fn discrete_ordinates(n: usize) -> Result<AngularQuadrature, QuadratureError> {
    if n == 0 {
        return Err(QuadratureError::ZeroOrder);
    }
    if n % 2 == 1 {
        return Err(QuadratureError::OddOrder(n));
    }
    gauss_legendre(n)
}

impl AngularQuadrature {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn count(&self) -> usize {
        self.nodes.len()
    }

    /// Iterates `(mu_i, w_i)` pairs in ascending `mu`.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Applies the rule to `f` on `[-1, 1]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.iter().map(|(mu, w)| w * f(mu)).sum()
    }

    /// Applies the rule to `f`, mapped affinely onto `[lo, hi]`.
    pub fn integrate_on<F: Fn(f64) -> f64>(&self, lo: f64, hi: f64, f: F) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        half * self.iter().map(|(t, w)| w * f(mid + half * t)).sum::<f64>()
    }
}

/// Order of the Gauss rule applied on each panel.
const PANEL_ORDER: usize = 10;

fn panel_rule() -> &'static AngularQuadrature {
    static RULE: OnceLock<AngularQuadrature> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(PANEL_ORDER).expect("fixed panel order is valid"))
}

/// Default cap on the number of panels held by one adaptive integration.
pub const DEFAULT_PANEL_BUDGET: usize = 1 << 16;

/// A panel carries its single-rule estimate and the estimate from its two
/// halves; the difference bounds the error of the coarse value, and the
/// halves are what gets summed.
#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    left: f64,
    right: f64,
    error: f64,
}

impl Panel {
    fn new<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, coarse: f64) -> Self {
        let mid = 0.5 * (lo + hi);
        let rule = panel_rule();
        let left = rule.integrate_on(lo, mid, f);
        let right = rule.integrate_on(mid, hi, f);
        let error = (coarse - (left + right)).abs();
        Panel {
            lo,
            hi,
            left,
            right,
            error,
        }
    }

    fn value(&self) -> f64 {
        self.left + self.right
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive panel integrator: the panel with the largest error
/// estimate is bisected until the summed estimate meets the tolerance.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveIntegrator {
    pub max_panels: usize,
}

impl Default for AdaptiveIntegrator {
    fn default() -> Self {
        AdaptiveIntegrator {
            max_panels: DEFAULT_PANEL_BUDGET,
        }
    }
}

impl AdaptiveIntegrator {
    pub fn new(max_panels: usize) -> Self {
        AdaptiveIntegrator {
            max_panels: max_panels.max(1),
        }
    }

    /// Integrates `f` over `[lo, hi]` to absolute tolerance `tol`.
    pub fn integrate<F: Fn(f64) -> f64>(
        &self,
        f: F,
        lo: f64,
        hi: f64,
        tol: f64,
    ) -> Result<f64, QuadratureError> {
        self.integrate_partitioned(f, &[lo, hi], tol)
    }

    /// Integrates `f` over `[breaks[0], breaks[last]]`, seeding the adaptive
    /// loop with one panel per consecutive pair of breakpoints.
    pub fn integrate_partitioned<F: Fn(f64) -> f64>(
        &self,
        f: F,
        breaks: &[f64],
        tol: f64,
    ) -> Result<f64, QuadratureError> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(QuadratureError::InvalidTolerance(tol));
        }
        let (lo, hi) = match (breaks.first(), breaks.last()) {
            (Some(&lo), Some(&hi)) if breaks.len() >= 2 => (lo, hi),
            _ => {
                return Err(QuadratureError::InvalidInterval {
                    lo: f64::NAN,
                    hi: f64::NAN,
                })
            }
        };
        if !(lo.is_finite() && hi.is_finite()) || breaks.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(QuadratureError::InvalidInterval { lo, hi });
        }

        let rule = panel_rule();
        let mut heap = BinaryHeap::with_capacity(breaks.len() * 2);
        for w in breaks.windows(2) {
            if w[1] > w[0] {
                let coarse = rule.integrate_on(w[0], w[1], &f);
                heap.push(Panel::new(&f, w[0], w[1], coarse));
            }
        }

        let mut error: f64 = heap.iter().map(|p| p.error).sum();
        loop {
            if !error.is_finite() {
                let at = heap
                    .iter()
                    .find(|p| !p.error.is_finite())
                    .map_or(lo, |p| 0.5 * (p.lo + p.hi));
                return Err(QuadratureError::NonFinite { at });
            }
            if error <= tol {
                break;
            }
            if heap.len() >= self.max_panels {
                return Err(QuadratureError::BudgetExhausted {
                    budget: self.max_panels,
                    estimate: error,
                    tol,
                });
            }
            let worst = heap.pop().expect("non-empty while error > tol");
            let mid = 0.5 * (worst.lo + worst.hi);
            if mid <= worst.lo || mid >= worst.hi {
                // Panel cannot be split further in floating point.
                return Err(QuadratureError::BudgetExhausted {
                    budget: heap.len() + 1,
                    estimate: error,
                    tol,
                });
            }
            let left = Panel::new(&f, worst.lo, mid, worst.left);
            let right = Panel::new(&f, mid, worst.hi, worst.right);
            error += left.error + right.error - worst.error;
            heap.push(left);
            heap.push(right);
            if error <= tol {
                // Guard against drift in the running sum before accepting.
                error = heap.iter().map(|p| p.error).sum();
            }
        }
        Ok(heap.iter().map(Panel::value).sum())
    }
}

/// `∫_{lo}^{hi} f(s) ds` to absolute tolerance `tol` with the default budget.
pub fn integrate_on_segment<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64, QuadratureError> {
    AdaptiveIntegrator::default().integrate(f, lo, hi, tol)
}
