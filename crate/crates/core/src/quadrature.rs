//! Double-exponential quadrature.
//!
//! Finite intervals use the tanh-sinh substitution, `[0, ∞)` uses exp-sinh.
//! Both refine by halving the step (each level reuses every previous node)
//! until two successive estimates agree to the requested relative
//! tolerance. The endpoint clustering of the substitutions absorbs
//! integrable endpoint singularities such as `y^{-1/2}` at 0.
//!
//! Everything here is a deterministic loop over a fixed node sequence, so
//! identical inputs give bit-identical results.

use std::f64::consts::FRAC_PI_2;

use crate::error::{EqeError, Result};

/// Outcome of a quadrature call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Absolute error estimate: the change between the last two levels.
    pub error_estimate: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub max_evaluations: usize,
    /// Levels below this are never accepted as converged.
    pub min_level: u32,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            max_evaluations: 1_000_000,
            min_level: 3,
        }
    }
}

/// Half-width of the `t` range; weights beyond it are below `1e-60`.
const T_MAX: f64 = 4.5;
/// Upper `t` limit for exp-sinh, `x ≈ 2e11`.
const T_MAX_EXP_SINH: f64 = 3.5;
const ABS_FLOOR: f64 = 1e-300;

/// `∫₀^∞ f(y) dy` for an integrand that decays faster than any power.
pub fn integrate_semi_infinite<F>(f: F, target_rel_tol: f64) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    integrate_semi_infinite_with(f, target_rel_tol, QuadConfig::default())
}

pub fn integrate_semi_infinite_with<F>(
    f: F,
    target_rel_tol: f64,
    config: QuadConfig,
) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    check_tol(target_rel_tol)?;
    // node at t: x = exp(π/2 sinh t), dx/dt = π/2 cosh t · x
    let node = |t: f64| -> Option<(f64, f64)> {
        let x = (FRAC_PI_2 * t.sinh()).exp();
        if x == 0.0 || !x.is_finite() {
            return None;
        }
        Some((x, FRAC_PI_2 * t.cosh() * x))
    };
    refine(
        |t| {
            if t > T_MAX_EXP_SINH {
                return Ok(0.0);
            }
            match node(t) {
                Some((x, w)) => eval(&f, x).map(|v| w * v),
                None => Ok(0.0),
            }
        },
        target_rel_tol,
        config,
    )
}

/// `∫ₐᵇ f(t) dt` for `a < b`.
pub fn integrate_finite<F>(f: F, a: f64, b: f64, target_rel_tol: f64) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    integrate_finite_with(f, a, b, target_rel_tol, QuadConfig::default())
}

pub fn integrate_finite_with<F>(
    f: F,
    a: f64,
    b: f64,
    target_rel_tol: f64,
    config: QuadConfig,
) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    check_tol(target_rel_tol)?;
    if !(a.is_finite() && b.is_finite()) || !(a < b) {
        return Err(EqeError::InvalidParameter(format!(
            "integration interval [{a}, {b}] must be finite with a < b"
        )));
    }
    let half = 0.5 * (b - a);
    let res = refine(
        |t| {
            let u = FRAC_PI_2 * t.sinh();
            let cu = u.cosh();
            // distance from the nearer endpoint, in units of the half width
            let delta = (-u.abs()).exp() / cu;
            let w = FRAC_PI_2 * t.cosh() / (cu * cu);
            if w == 0.0 || delta == 0.0 {
                return Ok(0.0);
            }
            let x = if t >= 0.0 {
                b - half * delta
            } else {
                a + half * delta
            };
            if x <= a || x >= b {
                return Ok(0.0);
            }
            eval(&f, x).map(|v| w * v)
        },
        target_rel_tol,
        config,
    )?;
    Ok(QuadResult {
        value: res.value * half,
        error_estimate: res.error_estimate * half,
        evaluations: res.evaluations,
    })
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(EqeError::InvalidParameter(format!(
            "target relative tolerance {tol} must lie in (0, 1)"
        )));
    }
    Ok(())
}

fn eval<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64> {
    let v = f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EqeError::Domain {
            func: "quadrature",
            detail: format!("integrand is not finite at x = {x:e}"),
        })
    }
}

/// Trapezoidal sums of `g(t)` over `[-T_MAX, T_MAX]` with halving steps.
fn refine<G>(g: G, tol: f64, config: QuadConfig) -> Result<QuadResult>
where
    G: Fn(f64) -> Result<f64>,
{
    let mut evaluations = 0usize;
    let mut h = 1.0f64;
    let n0 = T_MAX as i64;
    let mut sum = g(0.0)?;
    evaluations += 1;
    for k in 1..=n0 {
        let t = k as f64;
        sum += g(t)? + g(-t)?;
        evaluations += 2;
    }
    let mut estimate = h * sum;
    let mut level = 0u32;
    loop {
        level += 1;
        h *= 0.5;
        // new nodes at odd multiples of h
        let count = (T_MAX / h) as i64;
        let mut k = 1;
        while k <= count {
            let t = k as f64 * h;
            sum += g(t)? + g(-t)?;
            evaluations += 2;
            k += 2;
        }
        let next = h * sum;
        let err = (next - estimate).abs();
        estimate = next;
        if level >= config.min_level && err <= (tol * next.abs()).max(ABS_FLOOR) {
            return Ok(QuadResult {
                value: next,
                error_estimate: err,
                evaluations,
            });
        }
        if evaluations + 2 * (T_MAX / h) as usize > config.max_evaluations {
            return Err(EqeError::Quadrature {
                estimate: next,
                error: err,
                evaluations,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gaussian_half_line() {
        let r = integrate_semi_infinite(|y| (-y * y).exp(), 1e-13).unwrap();
        assert!((r.value - PI.sqrt() / 2.0).abs() < 1e-14);
        assert!(r.error_estimate >= 0.0 && r.evaluations > 0);
    }

    #[test]
    fn first_moment_half_line() {
        let r = integrate_semi_infinite(|y| y * (-y * y).exp(), 1e-13).unwrap();
        assert!((r.value - 0.5).abs() < 1e-14);
    }

    #[test]
    fn radial_family_reduces_to_gaussian() {
        // (D, λ₁, λ₂) = (2, 0, 1): y^0 e^{-y²}
        let (d, l1, l2) = (2.0f64, 0.0, 1.0);
        let r = integrate_semi_infinite(
            |y: f64| y.powf(d / 2.0 - 1.0) * (l1 * y - l2 * y * y).exp(),
            1e-12,
        )
        .unwrap();
        assert!((r.value - PI.sqrt() / 2.0).abs() < 1e-13);
    }

    #[test]
    fn inverse_sqrt_singularity_at_zero() {
        // ∫₀^∞ y^{-1/2} e^{-y²} dy = Γ(1/4)/2
        let r = integrate_semi_infinite(|y: f64| y.powf(-0.5) * (-y * y).exp(), 1e-12).unwrap();
        let want = 0.5 * 3.625_609_908_221_908_3;
        assert!(((r.value - want) / want).abs() < 1e-12);
        // finite version: ∫₀¹ t^{-1/2} dt = 2
        let r = integrate_finite(|t: f64| t.powf(-0.5), 0.0, 1.0, 1e-12).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn finite_examples() {
        let r = integrate_finite(|_| 1.0, 0.0, 1.0, 1e-12).unwrap();
        assert!((r.value - 1.0).abs() < 1e-15);
        let r = integrate_finite(|t| (-t * t).exp(), 0.0, 1.0, 1e-13).unwrap();
        let want = PI.sqrt() / 2.0 * crate::specfun::erf(1.0);
        assert!((r.value - want).abs() < 1e-15);
        let r = integrate_finite(|t| t * t * t, 0.0, 2.0, 1e-13).unwrap();
        assert!((r.value - 4.0).abs() < 1e-13);
    }

    #[test]
    fn deterministic() {
        let f = |y: f64| (y.sin() + 2.0) * (-y).exp();
        let a = integrate_semi_infinite(f, 1e-10).unwrap();
        let b = integrate_semi_infinite(f, 1e-10).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn budget_exhaustion_reports_best_estimate() {
        let cfg = QuadConfig {
            max_evaluations: 100,
            min_level: 3,
        };
        let err = integrate_finite_with(|t: f64| (40.0 * t).sin().abs(), 0.0, 3.0, 1e-14, cfg)
            .unwrap_err();
        match err {
            EqeError::Quadrature {
                estimate,
                evaluations,
                ..
            } => {
                assert!(estimate.is_finite());
                assert!(evaluations <= 100);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_interval_and_tolerance() {
        assert!(integrate_finite(|t| t, 1.0, 1.0, 1e-8).is_err());
        assert!(integrate_finite(|t| t, 0.0, f64::INFINITY, 1e-8).is_err());
        assert!(integrate_semi_infinite(|t| t, 0.0).is_err());
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        assert!(integrate_finite(|_| f64::NAN, 0.0, 1.0, 1e-8).is_err());
    }
}
