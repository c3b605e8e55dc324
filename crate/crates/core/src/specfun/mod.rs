//! Special functions needed by the normalization constant and its
//! relatives: log-gamma, erf, Kummer's confluent hypergeometric `M`, the
//! parabolic cylinder function `D_ν` for `ν ≤ 0`, and `K_{1/4}`.
//!
//! Values that can leave the `f64` range are returned as [`ScaledValue`].

mod bessel;
mod kummer;
mod pcf;
mod scaled;

pub use bessel::bessel_k_quarter;
pub use kummer::kummer_m;
pub use pcf::pcf_d;
pub(crate) use scaled::ScaledSum;
pub use scaled::ScaledValue;

use crate::error::{EqeError, Result};

/// `ln Γ(x)` for `x > 0`.
///
/// Near the zeros at 1 and 2 a Taylor series keeps full relative accuracy;
/// elsewhere a Lanczos approximation is used.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(EqeError::Domain {
            func: "log_gamma",
            detail: format!("x = {x} (requires finite x > 0)"),
        });
    }
    Ok(lgamma_positive(x))
}

/// The error function `erf(x) = 2/√π ∫₀ˣ e^{-t²} dt`.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// `erfc(x) = 1 - erf(x)` without cancellation for large `x`.
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// `ln erfc(x)`, finite for every finite `x` (no underflow for large `x`).
pub fn ln_erfc(x: f64) -> f64 {
    if x < LN_ERFC_CF_MIN_X {
        return libm::erfc(x).ln();
    }
    // erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    let mut tail = x;
    for n in (1..=60).rev() {
        tail = x + 0.5 * n as f64 / tail;
    }
    -x * x - 0.5 * std::f64::consts::PI.ln() - tail.ln()
}

/// Below this `erfc` is comfortably inside the normal range.
const LN_ERFC_CF_MIN_X: f64 = 20.0;

/// `ln Γ(x)` for arguments already known to be positive.
pub(crate) fn lgamma_pos(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    lgamma_positive(x)
}

/// ζ(k) for k = 2, 3, …, 41.
const ZETA: [f64; 40] = [
    1.6449340668482264,
    1.2020569031595943,
    1.0823232337111382,
    1.0369277551433699,
    1.0173430619844491,
    1.0083492773819228,
    1.0040773561979443,
    1.0020083928260822,
    1.0009945751278181,
    1.0004941886041195,
    1.000246086553308,
    1.0001227133475785,
    1.0000612481350587,
    1.000030588236307,
    1.0000152822594087,
    1.0000076371976379,
    1.000003817293265,
    1.0000019082127166,
    1.0000009539620339,
    1.0000004769329868,
    1.0000002384505027,
    1.000000119219926,
    1.0000000596081891,
    1.0000000298035035,
    1.0000000149015548,
    1.0000000074507118,
    1.000000003725334,
    1.0000000018626597,
    1.0000000009313274,
    1.0000000004656629,
    1.0000000002328312,
    1.0000000001164155,
    1.0000000000582077,
    1.0000000000291039,
    1.0000000000145519,
    1.000000000007276,
    1.000000000003638,
    1.000000000001819,
    1.0000000000009095,
    1.0000000000004547,
];

/// Lanczos coefficients, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Width of the windows around the zeros of ln Γ at 1 and 2 where the
/// Taylor series about 1 is used.
const SERIES_WINDOW: f64 = 0.3;

/// `ln Γ(1 + z) = −γ z + Σ_{k≥2} (−z)^k ζ(k)/k` for `|z| ≤ SERIES_WINDOW`.
fn lgamma1p_series(z: f64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let mut pow = -z;
    let mut acc = 0.0;
    for (i, zeta) in ZETA.iter().enumerate() {
        let k = (i + 2) as f64;
        pow *= -z;
        acc += zeta * pow / k;
    }
    acc - EULER_GAMMA * z
}

fn lgamma_lanczos(x: f64) -> f64 {
    let xm1 = x - 1.0;
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (xm1 + i as f64);
    }
    let t = xm1 + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (xm1 + 0.5) * t.ln() - t + a.ln()
}

fn lgamma_positive(x: f64) -> f64 {
    if x < SERIES_WINDOW {
        lgamma1p_series(x) - x.ln()
    } else if (x - 1.0).abs() <= SERIES_WINDOW {
        lgamma1p_series(x - 1.0)
    } else if (x - 2.0).abs() <= SERIES_WINDOW {
        (x - 2.0).ln_1p() + lgamma1p_series(x - 2.0)
    } else {
        lgamma_lanczos(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// ζ(k) for k ≥ 2: direct sum to N plus Euler–Maclaurin tail.
    fn zeta(k: u32) -> f64 {
        let n = 20.0f64;
        let s = k as f64;
        let mut sum = 0.0;
        for j in 1..20 {
            sum += (j as f64).powf(-s);
        }
        // tail from N: N^{1-s}/(s-1) + N^{-s}/2 + Σ B_{2j}/(2j)! s(s+1)..(s+2j-2) N^{-s-2j+1}
        let bern = [
            1.0 / 6.0,
            -1.0 / 30.0,
            1.0 / 42.0,
            -1.0 / 30.0,
            5.0 / 66.0,
            -691.0 / 2730.0,
        ];
        let mut tail = n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
        let mut rising = s;
        let mut fact = 2.0;
        for (j, b) in bern.iter().enumerate() {
            let p = 2 * j + 2;
            tail += b / fact * rising * n.powf(-s - p as f64 + 1.0);
            rising *= (s + p as f64 - 1.0) * (s + p as f64);
            fact *= ((p + 1) * (p + 2)) as f64;
        }
        sum + tail
    }

    /// ln Γ(1+z) = -γz + Σ_{k≥2} (-1)^k ζ(k) z^k / k, |z| ≤ 1/2.
    fn lgamma_series_about_one(z: f64) -> f64 {
        let euler_gamma = 0.577_215_664_901_532_9;
        let mut acc = -euler_gamma * z;
        for k in 2..90u32 {
            let term = zeta(k) * (-z).powi(k as i32) / k as f64;
            acc += term;
            if term.abs() < 1e-20 {
                break;
            }
        }
        acc
    }

    #[test]
    fn zeta_oracle_sanity() {
        assert!((zeta(2) - PI * PI / 6.0).abs() < 1e-15);
        assert!((zeta(4) - PI.powi(4) / 90.0).abs() < 1e-15);
    }

    #[test]
    fn log_gamma_trivial_values() {
        assert_eq!(log_gamma(1.0).unwrap(), 0.0);
        assert!((log_gamma(0.5).unwrap() - PI.sqrt().ln()).abs() < 1e-15);
        assert!((log_gamma(5.0).unwrap() - 24f64.ln()).abs() < 1e-14 * 24f64.ln());
    }

    #[test]
    fn log_gamma_relative_accuracy_near_zeros() {
        for &z in &[-0.4, -0.1, -1e-3, -1e-7, 1e-9, 1e-5, 0.01, 0.2, 0.45] {
            // compare at the arguments actually representable
            let z1 = (1.0 + z) - 1.0;
            let oracle = lgamma_series_about_one(z1);
            let got = log_gamma(1.0 + z1).unwrap();
            assert!(
                ((got - oracle) / oracle).abs() <= 1e-13,
                "z={z} got={got} oracle={oracle}"
            );
            // ln Γ(2+z) = ln(1+z) + ln Γ(1+z)
            let z2 = (2.0 + z) - 2.0;
            let oracle2 = z2.ln_1p() + lgamma_series_about_one(z2);
            let got2 = log_gamma(2.0 + z2).unwrap();
            assert!(((got2 - oracle2) / oracle2).abs() <= 1e-13, "z={z}");
        }
    }

    #[test]
    fn log_gamma_recurrence_over_range() {
        // ln Γ(x+1) = ln Γ(x) + ln x across [1e-3, 170]
        let mut x = 1e-3;
        while x < 169.0 {
            let lhs = log_gamma(x + 1.0).unwrap();
            let rhs = log_gamma(x).unwrap() + x.ln();
            let scale = lhs.abs().max(1e-300);
            if (x + 1.0 - 1.0).abs() > 0.1 && (x + 1.0 - 2.0).abs() > 0.1 {
                assert!((lhs - rhs).abs() / scale <= 1e-13, "x={x}");
            }
            x *= 1.37;
        }
        // Stirling check at the top of the range
        let x = 170.0f64;
        let stirling = (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + 1.0 / (12.0 * x)
            - 1.0 / (360.0 * x.powi(3));
        assert!((log_gamma(x).unwrap() - stirling).abs() / stirling < 1e-14);
    }

    #[test]
    fn log_gamma_rejects_non_positive() {
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.5).is_err());
        assert!(log_gamma(f64::NAN).is_err());
    }

    /// erf(x) = 2/√π Σ (-1)^n x^{2n+1} / (n! (2n+1)), summed with compensation.
    fn erf_taylor(x: f64) -> f64 {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        let mut pow = x;
        let mut n = 0u32;
        loop {
            let term = pow / (2 * n + 1) as f64;
            let y = term - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            if term.abs() < 1e-20 {
                break;
            }
            n += 1;
            pow *= -x * x / n as f64;
        }
        2.0 / PI.sqrt() * sum
    }

    #[test]
    fn erf_matches_taylor_oracle() {
        assert!((erf(1.0) - 0.842_700_792_949_714_9).abs() < 1e-15);
        for i in 0..=30 {
            let x = -1.5 + 0.1 * i as f64;
            assert!((erf(x) - erf_taylor(x)).abs() <= 1e-14, "x={x}");
        }
    }

    #[test]
    fn ln_erfc_continuous_and_asymptotic() {
        // both branches at the switch
        let x = LN_ERFC_CF_MIN_X;
        let lib = libm::erfc(x).ln();
        let cf = {
            let mut tail = x;
            for n in (1..=60).rev() {
                tail = x + 0.5 * n as f64 / tail;
            }
            -x * x - 0.5 * PI.ln() - tail.ln()
        };
        assert!((lib - cf).abs() < 1e-12 * lib.abs());
        // 30-digit reference values
        assert!((ln_erfc(30.0) - -903.974_117_110_643_9).abs() < 1e-12 * 904.0);
        assert!((ln_erfc(44.0) - -1_940.356_812_674_766_5).abs() < 1e-12 * 1941.0);
        assert_eq!(ln_erfc(0.0), 0.0);
        assert!((ln_erfc(-10.0) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn erf_shape() {
        assert_eq!(erf(0.0), 0.0);
        let mut prev = -1.0;
        for i in 0..=240 {
            let x = -6.0 + 0.05 * i as f64;
            let v = erf(x);
            assert_eq!(v, -erf(-x));
            assert!(v >= prev);
            assert!(v.abs() <= 1.0);
            prev = v;
        }
        assert!(erf(6.0) > 1.0 - 1e-15);
        assert!(erf(-6.0) < -1.0 + 1e-15);
    }
}
