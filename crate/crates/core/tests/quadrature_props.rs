use eqe::quadrature::{
    integrate_finite, integrate_finite_with, integrate_semi_infinite, integrate_semi_infinite_with,
    QuadConfig, QuadResult,
};
use eqe::specfun::erf;

#[test]
fn trivial_values() {
    let r = integrate_finite(|_| 1.0, 0.0, 1.0, 1e-12).unwrap();
    assert!((r.value - 1.0).abs() < 1e-14);
    assert!(r.error_estimate >= 0.0 && r.evaluations > 0);
    let r = integrate_finite(|t| (-t * t).exp(), 0.0, 1.0, 1e-12).unwrap();
    assert!((r.value - 0.5 * std::f64::consts::PI.sqrt() * erf(1.0)).abs() < 1e-13);
    let r = integrate_finite(|t| t * t * t, 0.0, 2.0, 1e-12).unwrap();
    assert!((r.value - 4.0).abs() < 1e-12);
    let r = integrate_semi_infinite(|t| (-t).exp(), 1e-12).unwrap();
    assert!((r.value - 1.0).abs() < 1e-12);
}

#[test]
fn inverse_square_root_endpoint_singularity() {
    // ∫₀^∞ y^{-1/2} e^{-y} dy = √π
    let r = integrate_semi_infinite(|y| (-y).exp() / y.sqrt(), 1e-12).unwrap();
    assert!((r.value / std::f64::consts::PI.sqrt() - 1.0).abs() < 1e-11);
    // ∫₀¹ y^{-1/2} dy = 2
    let r = integrate_finite(|y| 1.0 / y.sqrt(), 0.0, 1.0, 1e-12).unwrap();
    assert!((r.value - 2.0).abs() < 1e-11);
}

#[test]
fn additivity_within_error_estimates() {
    let f = |t: f64| (3.0 * t).sin() * (-0.3 * t).exp() + t.sqrt();
    let (a, c, b) = (0.0, 1.7, 4.0);
    let left = integrate_finite(f, a, c, 1e-12).unwrap();
    let right = integrate_finite(f, c, b, 1e-12).unwrap();
    let whole = integrate_finite(f, a, b, 1e-12).unwrap();
    let slack = left.error_estimate
        + right.error_estimate
        + whole.error_estimate
        + 4.0 * f64::EPSILON * whole.value.abs();
    assert!((left.value + right.value - whole.value).abs() <= slack);
}

#[test]
fn deterministic() {
    let f = |t: f64| (t * 1.3).cos() / (1.0 + t * t);
    let a = integrate_finite(f, -2.0, 5.0, 1e-11).unwrap();
    let b = integrate_finite(f, -2.0, 5.0, 1e-11).unwrap();
    assert_eq!(a, b);
    let g = |t: f64| t.powf(1.5) * (2.0 * t - t * t).exp();
    assert_eq!(
        integrate_semi_infinite(g, 1e-12).unwrap(),
        integrate_semi_infinite(g, 1e-12).unwrap()
    );
}

#[test]
fn bad_inputs_rejected() {
    assert!(integrate_finite(|t| t, 1.0, 0.0, 1e-10).is_err());
    assert!(integrate_finite(|t| t, 0.0, f64::INFINITY, 1e-10).is_err());
    assert!(integrate_finite(|t| t, 0.0, 1.0, 0.0).is_err());
    assert!(integrate_semi_infinite(|_| f64::NAN, 1e-10).is_err());
}

/// Runs `run` at the default budget, then again with the minimum level raised
/// until at least twice as many nodes are used.
fn with_double_budget(run: impl Fn(QuadConfig) -> QuadResult) -> (QuadResult, QuadResult) {
    let base = run(QuadConfig::default());
    let mut config = QuadConfig::default();
    loop {
        config.min_level += 1;
        let r = run(config);
        if r.evaluations >= 2 * base.evaluations {
            return (base, r);
        }
    }
}

#[test]
fn radial_integrand_family_double_budget() {
    let tol = 1e-10;
    let mut worst: f64 = 0.0;
    for d in 1..=10 {
        let p = 0.5 * d as f64 - 1.0;
        for &l1 in &[-20.0, -5.0, 0.0, 5.0, 20.0] {
            for &l2 in &[0.05, 0.5, 5.0, 50.0] {
                let h = |y: f64| p * y.ln() + l1 * y - l2 * y * y;
                // interior stationary point of h, or the origin
                let disc = l1 * l1 + 8.0 * l2 * p;
                let peak = if disc > 0.0 {
                    ((l1 + disc.sqrt()) / (4.0 * l2)).max(0.0)
                } else {
                    0.0
                };
                let shift = if peak > 0.0 { h(peak) } else { 0.0 };
                let f = |y: f64| if y > 0.0 { (h(y) - shift).exp() } else { 0.0 };
                let (t0, t1) = with_double_budget(|c| {
                    let tail = integrate_semi_infinite_with(|t| f(peak + t), tol, c).unwrap();
                    if peak > 0.0 {
                        let head = integrate_finite_with(f, 0.0, peak, tol, c).unwrap();
                        QuadResult {
                            value: head.value + tail.value,
                            error_estimate: head.error_estimate + tail.error_estimate,
                            evaluations: head.evaluations + tail.evaluations,
                        }
                    } else {
                        tail
                    }
                });
                let rel = (t0.value - t1.value).abs() / t1.value;
                worst = worst.max(rel);
                assert!(rel <= 1e-10, "D={d} ({l1},{l2}): {rel:e}");
            }
        }
    }
    eprintln!("worst relative change under double budget: {worst:e}");
}
