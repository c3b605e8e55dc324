//! Parabolic cylinder function `D_ν(z)` for real `z` and `ν ≤ 0`.
//!
//! Three regimes:
//!
//! * `|z| ≥ ASYMPTOTIC_MIN_ABS_Z`: the large-argument expansions, accepted
//!   only if the terms drop below `1e-17` before they start growing;
//! * `z ≤ KUMMER_MAX_Z`: the two-Kummer-function combination
//!   `D_ν(z) = 2^{ν/2} e^{-z²/4} [√π/Γ((1−ν)/2) M(−ν/2, ½, z²/2)
//!   − √(2π) z/Γ(−ν/2) M((1−ν)/2, 3/2, z²/2)]`, whose two terms add for
//!   `z ≤ 0` and cancel for `z > 0`;
//! * `KUMMER_MAX_Z < z` below the asymptotic region: Taylor-series
//!   integration of Weber's equation `y'' = (z²/4 − ν − ½) y` leftwards from
//!   a point where the asymptotic expansion holds. `D_ν` is the recessive
//!   solution at `+∞`, so it dominates in that direction and the march is
//!   stable.

use std::f64::consts::{LN_2, PI};

use super::{kummer_m, lgamma_pos, ScaledValue};
use crate::error::{EqeError, Result};

/// Smallest `|z|` at which the asymptotic expansions are attempted.
pub(crate) const ASYMPTOTIC_MIN_ABS_Z: f64 = 10.0;

/// Largest positive `z` evaluated through the Kummer combination; the
/// cancellation there costs about `z²/2` nats, i.e. under one digit.
pub(crate) const KUMMER_MAX_Z: f64 = 1.0;

const ASYMPTOTIC_TOL: f64 = 1e-17;
const MAX_ASYMPTOTIC_TERMS: usize = 400;
const MAX_TAYLOR_TERMS: usize = 400;

/// `D_ν(z)` in scaled form.
///
/// Only non-positive orders are supported; these are the orders `−D/2`
/// arising from the normalization constant. Relative accuracy is about
/// `1e-12` on `ν ∈ [−10, 0]`, `|z| ≤ 40`.
pub fn pcf_d(nu: f64, z: f64) -> Result<ScaledValue> {
    if !nu.is_finite() || !z.is_finite() {
        return Err(EqeError::Domain {
            func: "pcf_d",
            detail: format!("non-finite input nu={nu} z={z}"),
        });
    }
    if nu > 0.0 {
        return Err(EqeError::Domain {
            func: "pcf_d",
            detail: format!("order nu={nu} must be <= 0"),
        });
    }
    if nu == 0.0 {
        return Ok(ScaledValue::from_log(-0.25 * z * z));
    }
    if z.abs() >= ASYMPTOTIC_MIN_ABS_Z {
        let asym = if z > 0.0 {
            asymptotic_positive(nu, z).map(|(v, _)| v)
        } else {
            asymptotic_negative(nu, -z)
        };
        if let Some(v) = asym {
            return Ok(v);
        }
    }
    if z <= KUMMER_MAX_Z {
        kummer_combination(nu, z)
    } else {
        march_from_asymptotic(nu, z)
    }
}

fn kummer_combination(nu: f64, z: f64) -> Result<ScaledValue> {
    let x = 0.5 * z * z;
    let common = 0.5 * nu * LN_2 - 0.25 * z * z;
    let even = kummer_m(-0.5 * nu, 0.5, x)?
        .scale_log(common + 0.5 * PI.ln() - lgamma_pos(0.5 * (1.0 - nu)));
    if z == 0.0 {
        return Ok(even);
    }
    let odd = kummer_m(0.5 * (1.0 - nu), 1.5, x)?
        .scale_log(common + 0.5 * (2.0 * PI).ln() - lgamma_pos(-0.5 * nu) + z.abs().ln());
    let odd = if z > 0.0 { -odd } else { odd };
    Ok(even.add(&odd))
}

/// `D_ν(z) ~ z^ν e^{−z²/4} Σ (−1)^s (−ν)_{2s} / (s! (2z²)^s)` for `z → +∞`.
///
/// Returns the value and the logarithmic derivative `D_ν'(z)/D_ν(z)`, or
/// `None` when the series cannot reach full precision at this `z`.
fn asymptotic_positive(nu: f64, z: f64) -> Option<(ScaledValue, f64)> {
    let two_z2 = 2.0 * z * z;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    // Σ (−2s/z) t_s, the derivative of the series in z
    let mut dsum = 0.0f64;
    let mut converged = false;
    for s in 0..MAX_ASYMPTOTIC_TERMS {
        let sf = s as f64;
        let next = -term * (-nu + 2.0 * sf) * (-nu + 2.0 * sf + 1.0) / ((sf + 1.0) * two_z2);
        if next == 0.0 {
            converged = true;
            break;
        }
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        dsum += -2.0 * (sf + 1.0) / z * term;
        if term.abs() < ASYMPTOTIC_TOL * sum.abs() {
            converged = true;
            break;
        }
    }
    if !converged || sum <= 0.0 {
        return None;
    }
    let log_val = nu * z.ln() - 0.25 * z * z + sum.ln();
    let log_deriv = nu / z - 0.5 * z + dsum / sum;
    Some((ScaledValue::from_log(log_val), log_deriv))
}

/// `D_ν(−x) ~ √(2π)/Γ(−ν) e^{x²/4} x^{−ν−1} Σ (ν+1)_{2s} / (s! (2x²)^s)`
/// for `x → +∞`. The recessive companion term is below `e^{−x²/2}` relative
/// and dropped.
fn asymptotic_negative(nu: f64, x: f64) -> Option<ScaledValue> {
    let two_x2 = 2.0 * x * x;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut converged = false;
    for s in 0..MAX_ASYMPTOTIC_TERMS {
        let sf = s as f64;
        let next = term * (nu + 1.0 + 2.0 * sf) * (nu + 2.0 + 2.0 * sf) / ((sf + 1.0) * two_x2);
        if next == 0.0 {
            converged = true;
            break;
        }
        if next.abs() >= term.abs() && s > 0 {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < ASYMPTOTIC_TOL * sum.abs() {
            converged = true;
            break;
        }
    }
    if !converged || sum <= 0.0 {
        return None;
    }
    let log_val =
        0.5 * (2.0 * PI).ln() - lgamma_pos(-nu) + 0.25 * x * x + (-nu - 1.0) * x.ln() + sum.ln();
    Some(ScaledValue::from_log(log_val))
}

fn march_from_asymptotic(nu: f64, z: f64) -> Result<ScaledValue> {
    let mut start = z.max(ASYMPTOTIC_MIN_ABS_Z);
    let (anchor, log_deriv) = loop {
        if let Some(found) = asymptotic_positive(nu, start) {
            break found;
        }
        start *= 1.25;
        if start > 1e4 {
            return Err(EqeError::SeriesDivergence {
                what: "pcf_d asymptotic anchor",
                terms: MAX_ASYMPTOTIC_TERMS,
            });
        }
    };
    if start == z {
        return Ok(anchor);
    }

    // (y, y') normalized so that y = 1, with the magnitude kept in log_scale
    let mut log_scale = anchor.log_abs();
    let mut y = 1.0f64;
    let mut dy = log_deriv;
    let mut z0 = start;
    let mut coeffs = vec![0.0f64; MAX_TAYLOR_TERMS + 1];
    while z0 > z {
        let q0 = 0.25 * z0 * z0 - nu - 0.5;
        let step = (1.2 / (q0.abs() + 1.0).sqrt()).min(0.5).min(z0 - z);
        let h = -step;

        coeffs[0] = y;
        coeffs[1] = dy;
        let mut y_new = y + dy * h;
        let mut dy_new = dy;
        let mut hk = h; // h^k for the current k
        let mut quiet = 0;
        let mut k = 2;
        loop {
            if k > MAX_TAYLOR_TERMS {
                return Err(EqeError::SeriesDivergence {
                    what: "pcf_d Taylor step",
                    terms: MAX_TAYLOR_TERMS,
                });
            }
            let c_km2 = coeffs[k - 2];
            let c_km3 = if k >= 3 { coeffs[k - 3] } else { 0.0 };
            let c_km4 = if k >= 4 { coeffs[k - 4] } else { 0.0 };
            let c = (q0 * c_km2 + 0.5 * z0 * c_km3 + 0.25 * c_km4) / ((k * (k - 1)) as f64);
            coeffs[k] = c;
            dy_new += k as f64 * c * hk;
            hk *= h;
            let t = c * hk;
            y_new += t;
            if t.abs() <= 1e-18 * y_new.abs()
                && (k as f64 * c * hk / h).abs() <= 1e-18 * dy_new.abs().max(y_new.abs())
            {
                quiet += 1;
                if quiet >= 3 {
                    break;
                }
            } else {
                quiet = 0;
            }
            k += 1;
        }

        if !(y_new > 0.0) || !dy_new.is_finite() {
            return Err(EqeError::SeriesDivergence {
                what: "pcf_d Taylor march",
                terms: k,
            });
        }
        log_scale += y_new.ln();
        dy = dy_new / y_new;
        y = 1.0;
        z0 = if step == z0 - z { z } else { z0 + h };
    }
    Ok(ScaledValue::from_log(log_scale + y.ln()))
}
