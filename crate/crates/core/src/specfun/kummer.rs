use super::{ScaledSum, ScaledValue};
use crate::error::{EqeError, Result};

const MAX_TERMS: usize = 200_000;
const RESCALE_AT: f64 = 1e250;

/// Kummer's confluent hypergeometric function `M(a, b, z) = Σ (a)ₙ/(b)ₙ zⁿ/n!`.
///
/// Negative `z` goes through Kummer's transformation
/// `M(a, b, z) = e^z M(b − a, b, −z)` so that the summed series has
/// positive terms whenever `0 ≤ a ≤ b`. The partial sums are rescaled as
/// they grow, so arguments far beyond the `f64` range of `e^z` are fine.
///
/// Fails with a domain error when `b` is a non-positive integer, and with
/// [`EqeError::SeriesDivergence`] when the series does not settle or when
/// sign cancellation leaves fewer than ten significant digits.
pub fn kummer_m(a: f64, b: f64, z: f64) -> Result<ScaledValue> {
    if !(a.is_finite() && b.is_finite() && z.is_finite()) {
        return Err(EqeError::Domain {
            func: "kummer_m",
            detail: format!("non-finite input a={a} b={b} z={z}"),
        });
    }
    if b <= 0.0 && b == b.round() {
        return Err(EqeError::Domain {
            func: "kummer_m",
            detail: format!("b = {b} is a non-positive integer"),
        });
    }
    if z == 0.0 || a == 0.0 {
        return Ok(ScaledValue::ONE);
    }
    if z < 0.0 {
        let inner = series(b - a, b, -z)?;
        return Ok(inner.scale_log(z));
    }
    series(a, b, z)
}

fn series(a: f64, b: f64, z: f64) -> Result<ScaledValue> {
    let mut acc = ScaledSum::new();
    acc.sum = 1.0;
    let mut term = 1.0f64;
    let mut max_term = 1.0f64;
    let mut small_run = 0;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        let num = a + nf;
        if num == 0.0 {
            // polynomial case: series terminates
            return finish(acc, max_term);
        }
        term *= num / (b + nf) * z / (nf + 1.0);
        acc.sum += term;
        max_term = max_term.max(term.abs());

        // beyond the peak of the terms, stop once they are negligible
        let ratio = ((a + nf + 1.0) / (b + nf + 1.0) * z / (nf + 2.0)).abs();
        if ratio < 1.0 && term.abs() <= 1e-17 * acc.sum.abs() {
            small_run += 1;
            if small_run >= 2 {
                return finish(acc, max_term);
            }
        } else {
            small_run = 0;
        }

        if acc.sum.abs() > RESCALE_AT || term.abs() > RESCALE_AT {
            acc.sum /= RESCALE_AT;
            term /= RESCALE_AT;
            max_term /= RESCALE_AT;
            acc.log_scale += RESCALE_AT.ln();
        }
    }
    Err(EqeError::SeriesDivergence {
        what: "kummer_m",
        terms: MAX_TERMS,
    })
}

fn finish(acc: ScaledSum, max_term: f64) -> Result<ScaledValue> {
    // digits lost to cancellation
    if acc.sum == 0.0 || max_term / acc.sum.abs() > 1e5 {
        return Err(EqeError::SeriesDivergence {
            what: "kummer_m (cancellation)",
            terms: 0,
        });
    }
    Ok(acc.value())
}
