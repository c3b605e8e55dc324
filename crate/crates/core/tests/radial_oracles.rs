use std::f64::consts::PI;

use eqe::quadrature::{integrate_finite, integrate_semi_infinite};
use eqe::specfun::erf;
use eqe::{
    entropy, log_density, log_density_elliptical, log_norm_const, log_norm_const_d1_neg,
    log_norm_const_d2_closed, radial_moment, EllipticalGamma, EllipticalParams, MomentPair,
    NormMethod, RadialParams, SeededGenerator,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rp(d: usize, l1: f64, l2: f64) -> RadialParams {
    RadialParams::new(d, l1, l2).unwrap()
}

fn ln_z(d: usize, l1: f64, l2: f64, m: NormMethod) -> f64 {
    log_norm_const(&rp(d, l1, l2), m).unwrap().value
}

/// `∫₀^∞ y^p e^{λ₁y − λ₂y²} dy` straight from the semi-infinite rule.
fn y_integral(p: f64, l1: f64, l2: f64) -> f64 {
    integrate_semi_infinite(|y| y.powf(p) * (l1 * y - l2 * y * y).exp(), 1e-12)
        .unwrap()
        .value
}

/// Half the surface area of the unit sphere in `ℝᵈ`, from the recursion
/// `S_{n+1} = 2π S_{n−1}/n` starting at `S₀ = 2`, `S₁ = 2π`.
fn half_sphere(d: usize) -> f64 {
    let mut s = [2.0, 2.0 * PI];
    let mut n = 1;
    while n < d - 1 {
        let next = 2.0 * PI * s[0] / n as f64;
        s = [s[1], next];
        n += 1;
    }
    0.5 * if d == 1 { s[0] } else { s[1] }
}

#[test]
fn surface_area_recursion_agrees() {
    assert!((half_sphere(2) - PI).abs() < 1e-15);
    assert!((half_sphere(3) - 2.0 * PI).abs() < 1e-14);
    assert!((half_sphere(5) - 4.0 * PI * PI / 3.0).abs() < 1e-13);
    for d in 1..=10 {
        assert!((2.0 * half_sphere(d) / eqe::sphere_surface_area(d - 1) - 1.0).abs() < 1e-14);
    }
}

#[test]
fn normalizer_trivial_and_closed_values() {
    let want = (PI.powf(1.5) / 2.0).ln();
    for m in [NormMethod::Pcf, NormMethod::Quadrature, NormMethod::Auto] {
        assert!((ln_z(2, 0.0, 1.0, m) - want).abs() < 1e-12);
    }
    let want = (PI / 2.0 * PI.sqrt() * 1f64.exp() * (1.0 + erf(1.0))).ln();
    assert!((ln_z(2, 2.0, 1.0, NormMethod::Pcf) - want).abs() < 1e-12);
}

#[test]
fn normalizer_five_dimensions_against_quadrature() {
    let want = (half_sphere(5) * y_integral(1.5, 3.0, 0.7)).ln();
    for m in [NormMethod::Pcf, NormMethod::Quadrature] {
        let got = ln_z(5, 3.0, 0.7, m);
        assert!(
            (got - want).abs() < 1e-11 * want.abs().max(1.0),
            "{got} vs {want}"
        );
    }
}

#[test]
fn planar_closed_form_against_quadrature() {
    assert!(
        (log_norm_const_d2_closed(0.0, 1.0).unwrap() - (PI.powf(1.5) / 2.0).ln()).abs() < 1e-14
    );
    for &(l1, l2) in &[(8.0, 4.0), (-4.0, 1.0)] {
        let want = (PI * y_integral(0.0, l1, l2)).ln();
        let got = log_norm_const_d2_closed(l1, l2).unwrap();
        assert!(
            (got - want).abs() < 1e-11 * want.abs().max(1.0),
            "({l1},{l2}): {got} vs {want}"
        );
    }
}

#[test]
fn line_bessel_form_against_quadrature() {
    for &(l1, l2) in &[(-1.0, 1.0), (-10.0, 2.0), (-0.1, 0.5)] {
        let want = y_integral(-0.5, l1, l2).ln();
        let got = log_norm_const_d1_neg(l1, l2).unwrap();
        assert!((got - want).abs() < 1e-9, "({l1},{l2}): {got} vs {want}");
    }
    assert!(log_norm_const_d1_neg(1.0, 1.0).is_err());
}

#[test]
fn moments_trivial_and_ratio_oracle() {
    let p = rp(2, 0.0, 1.0);
    assert!((radial_moment(&p, 2).unwrap() - 1.0 / PI.sqrt()).abs() < 1e-12);
    assert!((radial_moment(&p, 4).unwrap() - 0.5).abs() < 1e-12);
    let want = y_integral(1.5, 8.0, 4.0) / y_integral(0.5, 8.0, 4.0);
    let got = radial_moment(&rp(3, 8.0, 4.0), 2).unwrap();
    assert!((got / want - 1.0).abs() < 1e-11, "{got} vs {want}");
}

#[test]
fn pcf_agrees_with_quadrature_over_contract_box() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..300 {
        let d = rng.random_range(1..=10);
        let l1 = rng.random_range(-20.0..20.0);
        let l2 = 10f64.powf(rng.random_range(0.05f64.log10()..50f64.log10()));
        let a = ln_z(d, l1, l2, NormMethod::Pcf);
        let b = ln_z(d, l1, l2, NormMethod::Quadrature);
        assert!(
            (a - b).abs() <= 1e-8 * a.abs() + 1e-10,
            "D={d} ({l1},{l2}): {a} vs {b}"
        );
    }
}

#[test]
fn gradient_identity_by_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = 1e-5;
    for _ in 0..50 {
        let d = rng.random_range(1..=8);
        let l1 = rng.random_range(-6.0..10.0);
        let l2 = rng.random_range(0.2..5.0);
        let f = |a: f64, b: f64| ln_z(d, a, b, NormMethod::Auto);
        let g1 = (f(l1 + h, l2) - f(l1 - h, l2)) / (2.0 * h);
        let g2 = (f(l1, l2 + h) - f(l1, l2 - h)) / (2.0 * h);
        let p = rp(d, l1, l2);
        let m2 = radial_moment(&p, 2).unwrap();
        let m4 = radial_moment(&p, 4).unwrap();
        assert!(
            (g1 / m2 - 1.0).abs() < 1e-5,
            "D={d} ({l1},{l2}): {g1} vs {m2}"
        );
        assert!(
            (-g2 / m4 - 1.0).abs() < 1e-5,
            "D={d} ({l1},{l2}): {g2} vs {m4}"
        );
    }
}

/// `S_{D−1} ∫₀^∞ r^{D−1} p(r e₁) dr` over equal pieces covering the bulk.
fn radial_mass(p: &RadialParams) -> f64 {
    let d = p.dim();
    let y_peak = (p.lambda1() / (2.0 * p.lambda2())).max(0.0);
    let r_hi = (y_peak + 40.0 / p.lambda2().sqrt()).sqrt();
    let f = |r: f64| {
        let mut x = vec![0.0; d];
        x[0] = r;
        r.powi(d as i32 - 1) * log_density(p, &x).unwrap().exp()
    };
    let pieces = 64;
    let w = r_hi / pieces as f64;
    let mut total = 0.0;
    for i in 0..pieces {
        total += integrate_finite(f, i as f64 * w, (i + 1) as f64 * w, 1e-12)
            .unwrap()
            .value;
    }
    2.0 * half_sphere(d) * total
}

#[test]
fn density_integrates_to_one() {
    let mut n = 0;
    for d in [1, 2, 3, 5, 8] {
        for &(l1, l2) in &[
            (-5.0, 1.0),
            (0.0, 0.5),
            (2.0, 1.0),
            (8.0, 4.0),
            (20.0, 50.0),
            (12.0, 0.5),
        ] {
            let mass = radial_mass(&rp(d, l1, l2));
            assert!((mass - 1.0).abs() < 1e-8, "D={d} ({l1},{l2}): {mass}");
            n += 1;
        }
    }
    assert_eq!(n, 30);
}

#[test]
fn entropy_trivial_value_and_scaling() {
    let want = 0.5 + (PI.powf(1.5) / 2.0).ln();
    assert!((entropy(&rp(2, 0.0, 1.0)).unwrap() - want).abs() < 1e-12);
    for d in [1, 2, 4, 7] {
        for &(l1, l2) in &[(8.0, 4.0), (-3.0, 0.5), (1.0, 2.0)] {
            let h0 = entropy(&rp(d, l1, l2)).unwrap();
            for s in [0.3, 2.0, 17.0] {
                let hs = entropy(&rp(d, l1 / s, l2 / (s * s))).unwrap();
                let want = h0 + 0.5 * d as f64 * f64::ln(s);
                assert!(
                    (hs - want).abs() < 1e-9 * want.abs().max(1.0),
                    "D={d} s={s}"
                );
            }
        }
    }
}

fn random_spd(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(d, d) * 0.5
}

#[test]
fn elliptical_density_is_whitened_spherical_density() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for d in [1, 2, 3, 6] {
        let sigma = random_spd(&mut rng, d);
        let mu = DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0));
        let radial = rp(d, 3.0, 1.5);
        let e = EllipticalParams::from_sigma(mu.clone(), sigma.clone(), radial).unwrap();
        let chol = sigma.clone().cholesky().unwrap();
        let ln_det = sigma.determinant().ln();
        for _ in 0..10 {
            let x = DVector::from_fn(d, |_, _| rng.random_range(-3.0..3.0));
            let z = chol.l().solve_lower_triangular(&(&x - &mu)).unwrap();
            let want = log_density(&radial, z.as_slice()).unwrap() - 0.5 * ln_det;
            let got = log_density_elliptical(&e, x.as_slice()).unwrap();
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }
    let spherical = EllipticalParams::spherical(rp(3, 8.0, 4.0));
    let x = [0.2, -0.7, 1.1];
    assert_eq!(
        log_density_elliptical(&spherical, &x).unwrap(),
        log_density(spherical.radial(), &x).unwrap()
    );
}

#[test]
fn ring_maximum_on_the_unit_circle() {
    let p = rp(2, 8.0, 4.0);
    let ln_z2 = ln_z(2, 8.0, 4.0, NormMethod::Auto);
    for t in [0.0, 0.4, 2.0, 5.5] {
        let x = [f64::cos(t), f64::sin(t)];
        assert!((log_density(&p, &x).unwrap() - (4.0 - ln_z2)).abs() < 1e-12);
    }
    assert!((log_density(&p, &[0.0, 0.0]).unwrap() + ln_z2).abs() < 1e-15);
}

fn moment_targets(p: &RadialParams) -> MomentPair {
    MomentPair::new(radial_moment(p, 2).unwrap(), radial_moment(p, 4).unwrap()).unwrap()
}

#[test]
fn eqe_entropy_dominates_matched_gamma() {
    let sets = [
        (2, 8.0, 4.0),
        (2, 2.0, 1.0),
        (1, 3.0, 1.0),
        (3, 8.0, 4.0),
        (3, 20.0, 2.0),
        (4, 1.0, 0.125),
        (5, 6.0, 0.5),
        (2, 0.5, 2.0),
        (6, 30.0, 10.0),
        (10, 4.0, 0.3),
    ];
    for &(d, l1, l2) in &sets {
        let p = rp(d, l1, l2);
        assert!(p.is_annular());
        let eg = EllipticalGamma::moment_matched(d, &moment_targets(&p)).unwrap();
        let (h, h_eg) = (entropy(&p).unwrap(), eg.entropy().unwrap());
        assert!(h >= h_eg - 1e-9, "D={d} ({l1},{l2}): {h} < {h_eg}");
    }
}

#[test]
fn gamma_reference_entropy_matches_monte_carlo() {
    let n = 200_000;
    for &(d, a, b) in &[(2, 2.0, 1.0), (3, 0.8, 2.5), (5, 6.0, 0.3)] {
        let eg = EllipticalGamma::new(DMatrix::identity(d, d), a, b).unwrap();
        let x = eg.sample(n, &mut SeededGenerator::new(21)).unwrap();
        let lp: Vec<f64> = (0..n)
            .map(|i| eg.log_density(x.row(i).transpose().as_slice()).unwrap())
            .collect();
        let mean = lp.iter().sum::<f64>() / n as f64;
        let var = lp.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        let h = eg.entropy().unwrap();
        assert!(
            (h + mean).abs() < 3.0 * se,
            "D={d} a={a}: {h} vs {} (se {se})",
            -mean
        );
        let (m2, _) = eg.moments();
        let emp = (0..n).map(|i| x.row(i).norm_squared()).sum::<f64>() / n as f64;
        assert!((emp / m2 - 1.0).abs() < 0.02);
    }
}
