use annmoc::quadrature::{
    gauss_legendre, integrate_on_segment, AdaptiveIntegrator, QuadratureError,
};
use proptest::prelude::*;

fn monomial_integral(k: u32) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        2.0 / (k as f64 + 1.0)
    }
}

#[test]
fn monomials_exact_up_to_degree_2n_minus_1() {
    for n in [2usize, 10, 100] {
        let q = gauss_legendre(n).unwrap();
        let total: f64 = q.weights().iter().sum();
        assert!((total - 2.0).abs() < 1e-12, "n={n}: weight sum {total}");
        for k in 0..(2 * n as u32) {
            let got = q.integrate(|mu| mu.powi(k as i32));
            let want = monomial_integral(k);
            assert!((got - want).abs() < 1e-12, "n={n} k={k}: {got} vs {want}");
        }
    }
}

#[test]
fn degree_2n_is_not_exact() {
    let q = gauss_legendre(3).unwrap();
    let got = q.integrate(|mu| mu.powi(6));
    assert!((got - 2.0 / 7.0).abs() > 1e-6);
}

#[test]
fn two_point_rule() {
    let q = gauss_legendre(2).unwrap();
    let r = 1.0 / 3f64.sqrt();
    assert!((q.nodes()[0] + r).abs() < 1e-15 && (q.nodes()[1] - r).abs() < 1e-15);
    assert!(q.weights().iter().all(|w| (w - 1.0).abs() < 1e-15));
}

#[test]
fn rejects_zero_order() {
    assert!(matches!(gauss_legendre(0), Err(QuadratureError::ZeroOrder)));
}

#[test]
fn adaptive_handles_steep_exponential() {
    // ∫_0^50 e^{-(50-t)} dt = 1 - e^{-50}
    let got = integrate_on_segment(|t| (-(50.0 - t)).exp(), 0.0, 50.0, 1e-12).unwrap();
    assert!((got - (1.0 - (-50f64).exp())).abs() < 1e-12);
}

#[test]
fn adaptive_reports_exhausted_budget() {
    let r = AdaptiveIntegrator::new(4).integrate(|t| (1.0 / t).sin(), 1e-6, 1.0, 1e-14);
    assert!(matches!(r, Err(QuadratureError::BudgetExhausted { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_order_integrates_its_monomials(n in 1usize..=120, frac in 0.0f64..1.0) {
        let q = gauss_legendre(n).unwrap();
        let k = ((2 * n - 1) as f64 * frac).floor() as u32;
        let got = q.integrate(|mu| mu.powi(k as i32));
        prop_assert!((got - monomial_integral(k)).abs() < 1e-12);
    }

    #[test]
    fn rule_is_mirror_symmetric(n in 1usize..=200) {
        let q = gauss_legendre(n).unwrap();
        let nodes = q.nodes();
        let weights = q.weights();
        for i in 0..n {
            prop_assert_eq!(nodes[i], -nodes[n - 1 - i]);
            prop_assert_eq!(weights[i], weights[n - 1 - i]);
        }
        prop_assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn segment_integral_is_additive(
        a in -2.0f64..0.0,
        width in 0.1f64..3.0,
        split in 0.05f64..0.95,
        rate in 0.1f64..20.0,
        freq in 0.0f64..6.0,
    ) {
        // Smooth on each side of t = 0; the kink is passed as a breakpoint.
        let tol = 1e-10;
        let f = |t: f64| (-rate * t.abs()).exp() * (freq * t).cos();
        let c = a + width;
        let b = a + split * width;
        let integral = |lo: f64, hi: f64| {
            let breaks: Vec<f64> = if lo < 0.0 && hi > 0.0 { vec![lo, 0.0, hi] } else { vec![lo, hi] };
            AdaptiveIntegrator::default().integrate_partitioned(f, &breaks, tol).unwrap()
        };
        let whole = integral(a, c);
        let parts = integral(a, b) + integral(b, c);
        prop_assert!((whole - parts).abs() <= 3.0 * tol, "{} vs {}", whole, parts);
        if c <= 0.0 {
            return Ok(());
        }
        let exact = |lo: f64, hi: f64| {
            // ∫ e^{-r|t|} cos(ωt) over [lo, 0] and [0, hi]
            let side = |l: f64| {
                let d = rate * rate + freq * freq;
                (rate - (-rate * l).exp() * (rate * (freq * l).cos() - freq * (freq * l).sin())) / d
            };
            side(-lo) + side(hi)
        };
        prop_assert!((whole - exact(a, c)).abs() <= tol, "{} vs {}", whole, exact(a, c));
    }

    #[test]
    fn adaptive_matches_closed_form_polynomial_exponential(
        s in 0.0f64..40.0,
        sigma in 0.05f64..5.0,
    ) {
        // ∫_0^s t e^{-σ(s-t)} dt = s/σ - (1 - e^{-σ s})/σ²
        let tol = 1e-10;
        let got = integrate_on_segment(|t| t * (-sigma * (s - t)).exp(), 0.0, s, tol).unwrap();
        let want = s / sigma - (1.0 - (-sigma * s).exp()) / (sigma * sigma);
        prop_assert!((got - want).abs() <= tol, "{} vs {}", got, want);
    }
}
