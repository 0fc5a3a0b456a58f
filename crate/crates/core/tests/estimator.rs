use annmoc::neural::{Activation, TrainingSet, TrainingStop};
use annmoc::{
    AnnConfig, AnnEstimator, EstimatorKind, ExactEstimator, FluxEstimator, Interpolation,
    MeshEstimator,
};
use proptest::prelude::*;

#[test]
fn zero_network_with_sigmoid_output_estimates_half() {
    let config = AnnConfig {
        output: Activation::Sigmoid,
        ..AnnConfig::default()
    };
    let mut sig = AnnEstimator::new(0.0, 1.0, config, 1).unwrap();
    sig.net_mut().params_mut().iter_mut().for_each(|p| *p = 0.0);
    for x in [0.0, 0.3, 1.0] {
        assert_eq!(sig.estimate(x), 0.5);
    }
    assert_eq!(sig.kind(), EstimatorKind::Ann);
}

#[test]
fn ann_fits_a_constant() {
    let mut config = AnnConfig::default();
    config.schedule.loss_target = 1e-6;
    let mut est = AnnEstimator::new(0.0, 1.0, config, 3).unwrap();
    let xs: Vec<f64> = (0..21).map(|i| i as f64 / 20.0).collect();
    est.fit(&TrainingSet::from_fn(&xs, |_| 0.3)).unwrap();
    for k in 0..=100 {
        let y = est.estimate(k as f64 / 100.0);
        assert!((0.29..=0.31).contains(&y), "estimate {y}");
    }
}

#[test]
fn ann_reported_loss_matches_its_mse() {
    let mut est = AnnEstimator::new(0.0, 2.0, AnnConfig::default(), 8).unwrap();
    let xs: Vec<f64> = (0..11).map(|i| 0.2 * i as f64).collect();
    let set = TrainingSet::from_fn(&xs, |x| 0.5 + 0.1 * x);
    let report = est.fit(&set).unwrap();
    let mse = set
        .iter()
        .map(|(x, t)| (est.estimate(x) - t).powi(2))
        .sum::<f64>()
        / set.len() as f64;
    assert!(
        mse <= report.loss * (1.0 + 1e-12) + 1e-18,
        "{mse} vs {}",
        report.loss
    );
}

#[test]
fn warm_refit_at_the_noise_floor_is_skipped() {
    // A tiny network stalls well above the loss target.
    let mut config = AnnConfig {
        widths: vec![1, 3, 1],
        ..AnnConfig::default()
    };
    config.schedule.patience = 50;
    config.schedule.improvement_floor = 0.5;
    let xs: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
    let set = TrainingSet::from_fn(&xs, |x| (6.0 * x).sin());
    let mut est = AnnEstimator::new(0.0, 1.0, config.clone(), 6).unwrap();
    est.fit(&set).unwrap();
    let first = est.last_report().unwrap();
    assert_eq!(first.stop, TrainingStop::Stalled);
    let before = est.net().params().to_vec();
    let again = est.fit(&set).unwrap();
    assert_eq!(again.epochs, 0);
    assert_eq!(est.net().params(), &before[..]);

    let mut eager = AnnEstimator::new(
        0.0,
        1.0,
        AnnConfig {
            refit_slack: 0.0,
            ..config
        },
        6,
    )
    .unwrap();
    eager.fit(&set).unwrap();
    assert!(eager.fit(&set).unwrap().epochs > 0);
}

#[test]
fn refits_after_reaching_the_target_are_not_skipped() {
    let mut config = AnnConfig::default();
    config.schedule.loss_target = 1e-6;
    let mut est = AnnEstimator::new(0.0, 1.0, config, 3).unwrap();
    let xs: Vec<f64> = (0..21).map(|i| i as f64 / 20.0).collect();
    est.fit(&TrainingSet::from_fn(&xs, |_| 0.3)).unwrap();
    assert_eq!(est.last_report().unwrap().stop, TrainingStop::Target);
    let shifted = TrainingSet::from_fn(&xs, |_| 0.31);
    assert!(est.fit(&shifted).unwrap().epochs > 0);
}

#[test]
fn checkpoint_restores_estimates() {
    let mut est = AnnEstimator::new(-1.0, 3.0, AnnConfig::default(), 4).unwrap();
    let xs = [-1.0, 0.0, 1.5, 3.0];
    est.fit(&TrainingSet::from_fn(&xs, |x| 0.2 + 0.05 * x))
        .unwrap();
    let back = AnnEstimator::from_checkpoint(&est.to_checkpoint(), AnnConfig::default()).unwrap();
    for x in [-1.0, 0.3, 2.9] {
        assert_eq!(back.estimate(x), est.estimate(x));
    }
    assert_eq!(back.adam().step, est.adam().step);
}

#[test]
fn exact_kind_examples() {
    let est = ExactEstimator::new(0.0, 1.0, |x| (-3.0 * x).exp());
    assert!((est.estimate(0.25) - 0.4723665527).abs() < 1e-10);
    assert_eq!(est.kind(), EstimatorKind::Exact);
}

#[test]
fn mesh_rejects_duplicates_and_points_outside() {
    let mut mesh = MeshEstimator::new(0.0, 1.0, Interpolation::Cubic);
    assert!(mesh
        .fit(&TrainingSet::new(vec![0.2, 0.2], vec![1.0, 2.0]))
        .is_err());
    assert!(mesh
        .fit(&TrainingSet::new(vec![0.2, 1.5], vec![1.0, 2.0]))
        .is_err());
    assert!(mesh.fit(&TrainingSet::default()).is_err());
}

#[test]
fn cubic_mesh_converges_at_fourth_order() {
    let f = |x: f64| (2.0 * x).sin() + x * x;
    let err = |n: usize| {
        let grid: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
        let mesh =
            MeshEstimator::from_values(0.0, 1.0, Interpolation::Cubic, &grid, &values).unwrap();
        (0..=997)
            .map(|k| k as f64 / 997.0)
            .map(|x| (mesh.estimate(x) - f(x)).abs())
            .fold(0.0, f64::max)
    };
    let ratio = err(32) / err(64);
    assert!(ratio > 12.0, "error ratio {ratio}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn mesh_reproduces_its_training_values(
        mut xs in prop::collection::vec(0.0f64..=1.0, 2..40),
        seed_values in prop::collection::vec(-5.0f64..5.0, 40),
        cubic in any::<bool>(),
    ) {
        xs.sort_by(f64::total_cmp);
        xs.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        prop_assume!(xs.len() >= 2);
        let values: Vec<f64> = xs.iter().zip(&seed_values).map(|(_, v)| *v).collect();
        let order = if cubic { Interpolation::Cubic } else { Interpolation::Linear };
        let mesh = MeshEstimator::from_values(0.0, 1.0, order, &xs, &values).unwrap();
        for (x, v) in xs.iter().zip(&values) {
            prop_assert!((mesh.estimate(*x) - v).abs() <= 1e-12 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn mesh_is_exact_for_lines_and_cubics(
        c in prop::array::uniform4(-2.0f64..2.0),
        n in 5usize..30,
    ) {
        let cubic = move |x: f64| c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x;
        let line = move |x: f64| c[0] + c[1] * x;
        let grid: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let mesh = MeshEstimator::from_values(
            0.0, 1.0, Interpolation::Cubic, &grid, &grid.iter().map(|&x| cubic(x)).collect::<Vec<_>>(),
        ).unwrap();
        let lin = MeshEstimator::from_values(
            0.0, 1.0, Interpolation::Linear, &grid, &grid.iter().map(|&x| line(x)).collect::<Vec<_>>(),
        ).unwrap();
        for k in 0..=50 {
            let x = k as f64 / 50.0;
            prop_assert!((mesh.estimate(x) - cubic(x)).abs() < 1e-10);
            prop_assert!((lin.estimate(x) - line(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_domain_queries_clamp(x in 1.0f64..100.0) {
        let est = ExactEstimator::new(0.0, 1.0, |x| 2.0 * x);
        prop_assert_eq!(est.estimate(x + 1e-12), 2.0);
        prop_assert_eq!(est.estimate(-x), 0.0);
        prop_assert_eq!(est.clamped_evaluations(), 2);
    }
}
