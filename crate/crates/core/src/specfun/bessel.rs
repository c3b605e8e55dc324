use std::f64::consts::PI;

use super::ScaledValue;
use crate::error::{EqeError, Result};

const ORDER: f64 = 0.25;
const EPS: f64 = 1e-16;
const MAX_ITER: usize = 100_000;
/// Temme's series below this argument, Steed's continued fraction above.
const SERIES_MAX_X: f64 = 2.0;

/// Modified Bessel function of the second kind `K_{1/4}(x)`, `x > 0`.
///
/// Small arguments use Temme's series; larger ones use Steed's evaluation
/// of the continued fraction for `K_ν(x) e^{x}`, so the result stays finite
/// in scaled form long after `e^{-x}` underflows.
pub fn bessel_k_quarter(x: f64) -> Result<ScaledValue> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(EqeError::Domain {
            func: "bessel_k_quarter",
            detail: format!("x = {x} (requires finite x > 0)"),
        });
    }
    if x < SERIES_MAX_X {
        temme_series(x)
    } else {
        steed_cf2(x)
    }
}

fn temme_series(x: f64) -> Result<ScaledValue> {
    let mu = ORDER;
    let mu2 = mu * mu;
    let half_x = 0.5 * x;
    let pimu = PI * mu;
    let fact = pimu / pimu.sin();
    let d = -half_x.ln();
    let e = mu * d;
    let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };

    let rgamma_plus = 1.0 / libm::tgamma(1.0 + mu);
    let rgamma_minus = 1.0 / libm::tgamma(1.0 - mu);
    let gam1 = (rgamma_minus - rgamma_plus) / (2.0 * mu);
    let gam2 = 0.5 * (rgamma_minus + rgamma_plus);

    let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
    let mut sum = ff;
    let ee = e.exp();
    let mut p = 0.5 * ee / rgamma_plus;
    let mut q = 0.5 / (ee * rgamma_minus);
    let mut c = 1.0;
    let quarter_x2 = half_x * half_x;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - mu2);
        c *= quarter_x2 / fi;
        p /= fi - mu;
        q /= fi + mu;
        let del = c * ff;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            return Ok(ScaledValue::from_f64(sum));
        }
    }
    Err(EqeError::SeriesDivergence {
        what: "bessel_k_quarter (Temme series)",
        terms: MAX_ITER,
    })
}

fn steed_cf2(x: f64) -> Result<ScaledValue> {
    let mu2 = ORDER * ORDER;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - mu2;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            let log_k = 0.5 * (PI / (2.0 * x)).ln() - x - s.ln();
            return Ok(ScaledValue::from_log(log_k));
        }
    }
    Err(EqeError::SeriesDivergence {
        what: "bessel_k_quarter (continued fraction)",
        terms: MAX_ITER,
    })
}
