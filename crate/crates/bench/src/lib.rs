//! Fixtures shared by the benchmarks.

use annmoc::neural::{Activation, Mlp, TrainingSet};
use annmoc::{AnnConfig, AnnEstimator, ManufacturedProblem, TransportProblem};

/// The default 1-100-50-5-1 network with seeded weights.
pub fn default_net(seed: u64) -> Mlp {
    let mut net = Mlp::with_activations(&[1, 100, 50, 5, 1], Activation::Tanh, Activation::Sigmoid)
        .expect("valid widths");
    net.randomize(seed);
    net
}

/// `e^{-3x}` on `n` uniform points of `[0, 1]`.
pub fn decay_set(n: usize) -> TrainingSet {
    let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    TrainingSet::from_fn(&xs, |x| (-3.0 * x).exp())
}

pub fn manufactured() -> TransportProblem {
    ManufacturedProblem::canonical()
        .to_transport()
        .expect("canonical problem is valid")
}

pub fn surrogate(seed: u64) -> AnnEstimator {
    AnnEstimator::new(0.0, 1.0, AnnConfig::default(), seed).expect("default config is valid")
}
