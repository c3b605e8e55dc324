//! Normalization constant, radial moments, entropy and log-density of the
//! spherical and elliptical EQE.
//!
//! With `y = r²` every quantity reduces to
//! `I(p) = ∫₀^∞ y^p exp(λ₁y − λ₂y²) dy`, and `Z_D = (S_{D−1}/2) I(D/2 − 1)`.
//! The closed form of `I` goes through `D_{−D/2}`; the quadrature route
//! integrates `I` directly. Both work in log space throughout.

use std::f64::consts::PI;

use crate::error::{EqeError, Result};
use crate::params::{EllipticalParams, RadialParams};
use crate::quadrature::{integrate_finite, integrate_semi_infinite};
use crate::specfun::{bessel_k_quarter, ln_erfc, pcf_d};

/// Relative tolerance of every quadrature evaluation of `I(p)`.
pub const QUAD_REL_TOL: f64 = 1e-12;

/// How to evaluate `ln Z_D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormMethod {
    /// Parabolic-cylinder closed form, falling back to quadrature if a
    /// special function fails to converge.
    #[default]
    Auto,
    /// Parabolic-cylinder closed form only; failures are returned.
    Pcf,
    Quadrature,
}

/// Which route actually produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Pcf,
    Quadrature,
    PcfFallbackToQuadrature,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Pcf => "pcf",
            Provenance::Quadrature => "quadrature",
            Provenance::PcfFallbackToQuadrature => "pcf_fallback_quadrature",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNormConst {
    pub value: f64,
    pub provenance: Provenance,
}

/// `ln S_n`, the log surface area of the unit `n`-sphere in `R^{n+1}`.
pub fn log_sphere_surface_area(n: usize) -> f64 {
    let h = 0.5 * (n as f64 + 1.0);
    std::f64::consts::LN_2 + h * PI.ln() - lgamma(h)
}

/// `S_n = 2π^{(n+1)/2} / Γ((n+1)/2)`.
pub fn sphere_surface_area(n: usize) -> f64 {
    log_sphere_surface_area(n).exp()
}

fn lgamma(x: f64) -> f64 {
    crate::specfun::lgamma_pos(x)
}

/// `ln Z_D(λ₁, λ₂)`.
pub fn log_norm_const(p: &RadialParams, method: NormMethod) -> Result<LogNormConst> {
    log_z_dim(p.dim(), p.lambda1(), p.lambda2(), method)
}

/// `ln Z` with the dimension passed separately so moment ratios can reuse
/// the same `(λ₁, λ₂)` at `D + k`.
fn log_z_dim(dim: usize, l1: f64, l2: f64, method: NormMethod) -> Result<LogNormConst> {
    match method {
        NormMethod::Pcf => Ok(LogNormConst {
            value: log_z_pcf(dim, l1, l2)?,
            provenance: Provenance::Pcf,
        }),
        NormMethod::Quadrature => Ok(LogNormConst {
            value: log_z_quadrature(dim, l1, l2)?,
            provenance: Provenance::Quadrature,
        }),
        NormMethod::Auto => match log_z_pcf(dim, l1, l2) {
            Ok(value) => Ok(LogNormConst {
                value,
                provenance: Provenance::Pcf,
            }),
            Err(e) if e.is_numerical() => {
                let value = log_z_quadrature(dim, l1, l2).map_err(|q| {
                    q.context(format!("quadrature fallback after pcf failure ({e})"))
                })?;
                Ok(LogNormConst {
                    value,
                    provenance: Provenance::PcfFallbackToQuadrature,
                })
            }
            Err(e) => Err(e),
        },
    }
}

/// `ln(S_{D−1}/2) − (D/4) ln(2λ₂) + ln Γ(D/2) + λ₁²/(8λ₂) + ln D_{−D/2}(−λ₁/√(2λ₂))`.
fn log_z_pcf(dim: usize, l1: f64, l2: f64) -> Result<f64> {
    let d = dim as f64;
    let z = -l1 / (2.0 * l2).sqrt();
    let pcf =
        pcf_d(-0.5 * d, z).map_err(|e| e.context(format!("ln Z_{dim} via D_(-{d}/2)({z:e})")))?;
    Ok(
        log_sphere_surface_area(dim - 1) - std::f64::consts::LN_2 - 0.25 * d * (2.0 * l2).ln()
            + lgamma(0.5 * d)
            + l1 * l1 / (8.0 * l2)
            + pcf.ln(),
    )
}

fn log_z_quadrature(dim: usize, l1: f64, l2: f64) -> Result<f64> {
    let log_i = log_y_integral(0.5 * dim as f64 - 1.0, l1, l2, QUAD_REL_TOL).map_err(|e| {
        e.context(format!(
            "ln Z_{dim} by quadrature (lambda1 = {l1}, lambda2 = {l2})"
        ))
    })?;
    Ok(log_sphere_surface_area(dim - 1) - std::f64::consts::LN_2 + log_i)
}

/// Half-widths, in units of the local Gaussian scale, of the window around
/// the peak that is integrated separately from the two tails.
const PEAK_HALF_WIDTHS: f64 = 10.0;

/// `ln ∫₀^∞ y^p exp(λ₁y − λ₂y²) dy` for `p > −1`.
///
/// The integrand is divided by its value at the peak before integrating,
/// and the range is split into left tail, peak window and right tail so
/// that narrow peaks far from the origin are resolved.
pub(crate) fn log_y_integral(p: f64, l1: f64, l2: f64, tol: f64) -> Result<f64> {
    if !(p > -1.0) {
        return Err(EqeError::InvalidParameter(format!(
            "power {p} must exceed -1"
        )));
    }
    let h = |y: f64| p * y.ln() + l1 * y - l2 * y * y;
    let (center, width, shift) = match interior_mode(p, l1, l2) {
        Some(yc) => (yc, 1.0 / (p / (yc * yc) + 2.0 * l2).sqrt(), h(yc)),
        None => {
            let mut w = 1.0 / (2.0 * l2).sqrt();
            if l1 < 0.0 {
                w = w.min(1.0 / -l1);
            }
            let shift = if p == 0.0 { 0.0 } else { h(w) };
            (0.0, w, shift)
        }
    };
    let g = |y: f64| if y <= 0.0 { 0.0 } else { (h(y) - shift).exp() };
    let lo = center - PEAK_HALF_WIDTHS * width;
    let hi = center + PEAK_HALF_WIDTHS * width;
    let mut total = 0.0;
    if lo > 0.0 {
        total += integrate_finite(g, 0.0, lo, tol)?.value;
    }
    total += integrate_finite(g, lo.max(0.0), hi, tol)?.value;
    total += integrate_semi_infinite(|s| width * g(hi + width * s), tol)?.value;
    Ok(shift + total.ln())
}

/// Local maximum of `p ln y + λ₁y − λ₂y²` on `(0, ∞)`, if one exists.
fn interior_mode(p: f64, l1: f64, l2: f64) -> Option<f64> {
    // stationary points solve 2λ₂y² − λ₁y − p = 0; the larger root is the max
    let disc = l1 * l1 + 8.0 * l2 * p;
    if disc < 0.0 {
        return None;
    }
    let root = disc.sqrt();
    // avoid cancellation when λ₁ < 0
    let y = if l1 >= 0.0 {
        (l1 + root) / (4.0 * l2)
    } else {
        -2.0 * p / (l1 - root)
    };
    (y > 0.0 && y.is_finite()).then_some(y)
}

/// `ln Z₂ = ln(π/2) + ½ ln(π/λ₂) + λ₁²/(4λ₂) + ln[1 − erf(−λ₁/(2√λ₂))]`.
pub fn log_norm_const_d2_closed(lambda1: f64, lambda2: f64) -> Result<f64> {
    let p = RadialParams::new(2, lambda1, lambda2)?;
    let (l1, l2) = (p.lambda1(), p.lambda2());
    let x = -l1 / (2.0 * l2.sqrt());
    Ok((0.5 * PI).ln() + 0.5 * (PI / l2).ln() + l1 * l1 / (4.0 * l2) + ln_erfc(x))
}

/// `ln Z₁` for `λ₁ < 0`: with `a = −λ₁`, `x = a²/(8λ₂)`,
/// `Z₁ = ½ √(a/λ₂) eˣ K_{1/4}(x)`.
pub fn log_norm_const_d1_neg(lambda1: f64, lambda2: f64) -> Result<f64> {
    let p = RadialParams::new(1, lambda1, lambda2)?;
    if !(p.lambda1() < 0.0) {
        return Err(EqeError::InvalidParameter(format!(
            "lambda1 = {lambda1} must be < 0 for the K_1/4 form"
        )));
    }
    let a = -p.lambda1();
    let b = p.lambda2();
    let x = a * a / (8.0 * b);
    let k = bessel_k_quarter(x).map_err(|e| e.context("ln Z_1 via K_1/4"))?;
    Ok(-std::f64::consts::LN_2 + 0.5 * (a / b).ln() + x + k.ln())
}

fn check_moment_order(k: u32) -> Result<()> {
    if k == 0 || k % 2 != 0 {
        return Err(EqeError::InvalidParameter(format!(
            "moment order k = {k} must be a positive even integer"
        )));
    }
    Ok(())
}

/// `ln E[r^k]` from `Z_{D+k} S_{D−1} / (Z_D S_{D+k−1})`.
pub fn log_radial_moment(p: &RadialParams, k: u32, method: NormMethod) -> Result<f64> {
    check_moment_order(k)?;
    let base = log_norm_const(p, method)?.value;
    log_moment_given_base(p, k, base, method)
}

fn log_moment_given_base(p: &RadialParams, k: u32, log_z: f64, method: NormMethod) -> Result<f64> {
    let dim = p.dim();
    let up = dim + k as usize;
    let log_zk = log_z_dim(up, p.lambda1(), p.lambda2(), method)?.value;
    Ok(log_zk - log_z + log_sphere_surface_area(dim - 1) - log_sphere_surface_area(up - 1))
}

/// `E[r^k]` for even `k ≥ 2`.
pub fn radial_moment(p: &RadialParams, k: u32) -> Result<f64> {
    Ok(log_radial_moment(p, k, NormMethod::Auto)?.exp())
}

/// Several moments sharing one evaluation of `ln Z_D`.
pub fn radial_moments<const N: usize>(
    p: &RadialParams,
    ks: [u32; N],
    method: NormMethod,
) -> Result<[f64; N]> {
    for &k in &ks {
        check_moment_order(k)?;
    }
    let base = log_norm_const(p, method)?.value;
    let mut out = [0.0; N];
    for (slot, &k) in out.iter_mut().zip(ks.iter()) {
        *slot = log_moment_given_base(p, k, base, method)?.exp();
    }
    Ok(out)
}

/// Differential entropy in nats, `λ₂E[r⁴] − λ₁E[r²] + ln Z_D`.
pub fn entropy(p: &RadialParams) -> Result<f64> {
    entropy_with(p, NormMethod::Auto)
}

pub fn entropy_with(p: &RadialParams, method: NormMethod) -> Result<f64> {
    let log_z = log_norm_const(p, method)?.value;
    let m2 = log_moment_given_base(p, 2, log_z, method)?.exp();
    let m4 = log_moment_given_base(p, 4, log_z, method)?.exp();
    Ok(p.lambda2() * m4 - p.lambda1() * m2 + log_z)
}

/// Entropy of the elliptical law: the spherical value plus `½ ln|Σ|`.
pub fn entropy_elliptical(p: &EllipticalParams) -> Result<f64> {
    Ok(entropy(p.radial())? + 0.5 * p.log_det_sigma())
}

/// Spherical EQE with `ln Z_D` evaluated once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalEqe {
    params: RadialParams,
    log_z: LogNormConst,
}

impl SphericalEqe {
    pub fn new(params: RadialParams) -> Result<Self> {
        Self::with_method(params, NormMethod::Auto)
    }

    pub fn with_method(params: RadialParams, method: NormMethod) -> Result<Self> {
        let log_z = log_norm_const(&params, method)?;
        Ok(Self { params, log_z })
    }

    pub fn params(&self) -> &RadialParams {
        &self.params
    }

    pub fn log_norm_const(&self) -> LogNormConst {
        self.log_z
    }

    /// Log-density as a function of `q = xᵀx`.
    pub fn log_density_q(&self, q: f64) -> f64 {
        self.params.lambda1() * q - self.params.lambda2() * q * q - self.log_z.value
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.params.dim() {
            return Err(EqeError::DimensionMismatch {
                expected: self.params.dim(),
                got: x.len(),
            });
        }
        Ok(self.log_density_q(x.iter().map(|v| v * v).sum()))
    }

    /// Log-density of the radius, `ln S_{D−1} + (D−1) ln r + log p(r)`.
    pub fn log_radial_density(&self, r: f64) -> f64 {
        let d = self.params.dim();
        let power = if d == 1 {
            0.0
        } else {
            (d as f64 - 1.0) * r.ln()
        };
        log_sphere_surface_area(d - 1) + power + self.log_density_q(r * r)
    }
}

/// Elliptical EQE with `ln Z_D` and `ln|Σ|` evaluated once.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticalEqe {
    params: EllipticalParams,
    spherical: SphericalEqe,
    half_log_det: f64,
}

impl EllipticalEqe {
    pub fn new(params: EllipticalParams) -> Result<Self> {
        let spherical = SphericalEqe::new(*params.radial())?;
        let half_log_det = 0.5 * params.log_det_sigma();
        Ok(Self {
            params,
            spherical,
            half_log_det,
        })
    }

    pub fn params(&self) -> &EllipticalParams {
        &self.params
    }

    pub fn spherical(&self) -> &SphericalEqe {
        &self.spherical
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        let z = self.params.whiten(x)?;
        Ok(self.spherical.log_density_q(z.norm_squared()) - self.half_log_det)
    }
}

/// One-off spherical log-density; prefer [`SphericalEqe`] for repeated use.
pub fn log_density(p: &RadialParams, x: &[f64]) -> Result<f64> {
    SphericalEqe::new(*p)?.log_density(x)
}

/// One-off elliptical log-density; prefer [`EllipticalEqe`] for repeated use.
pub fn log_density_elliptical(p: &EllipticalParams, x: &[f64]) -> Result<f64> {
    EllipticalEqe::new(p.clone())?.log_density(x)
}
