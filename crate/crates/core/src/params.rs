//! Parameter types and conversions between the natural `(λ₁, λ₂)` form, the
//! ring `(α, R)` form and the elliptical `(μ, Σ)` extension.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{EqeError, Result};

/// Natural parameters of the spherical density `∝ exp(λ₁ r² − λ₂ r⁴)` in
/// `dim` dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialParams {
    dim: usize,
    lambda1: f64,
    lambda2: f64,
}

impl RadialParams {
    pub fn new(dim: usize, lambda1: f64, lambda2: f64) -> Result<Self> {
        if dim == 0 {
            return Err(EqeError::InvalidParameter("dim must be >= 1".into()));
        }
        if !lambda1.is_finite() {
            return Err(EqeError::InvalidParameter(format!(
                "lambda1 = {lambda1} must be finite"
            )));
        }
        if !(lambda2 > 0.0) || !lambda2.is_finite() {
            return Err(EqeError::InvalidParameter(format!(
                "lambda2 = {lambda2} must be finite and > 0 for the density to normalize"
            )));
        }
        Ok(Self {
            dim,
            lambda1,
            lambda2,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    /// Annular means the radial profile has its mode away from the origin.
    pub fn is_annular(&self) -> bool {
        self.lambda1 > 0.0
    }

    /// Same `λ₂`, different dimension and first parameter. Used for the
    /// conditional and marginal constructions.
    pub fn with(&self, dim: usize, lambda1: f64) -> Result<Self> {
        Self::new(dim, lambda1, self.lambda2)
    }

    /// Radius at which `λ₁ r² − λ₂ r⁴` peaks, `√(λ₁ / 2λ₂)`.
    pub fn mode_radius(&self) -> Result<f64> {
        if self.lambda1 <= 0.0 {
            return Err(EqeError::InvalidParameter(format!(
                "lambda1 = {} <= 0: the density decays monotonically from the origin",
                self.lambda1
            )));
        }
        Ok((self.lambda1 / (2.0 * self.lambda2)).sqrt())
    }

    pub fn to_ring(&self) -> Result<RingParams> {
        radial_to_ring(self)
    }
}

/// Ring form `exp(α (r²/R² − r⁴/2R⁴))`: `R` is the mode radius and `α`
/// sets the thickness of the ring (larger is thinner).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingParams {
    dim: usize,
    alpha: f64,
    radius: f64,
}

impl RingParams {
    pub fn new(dim: usize, alpha: f64, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(EqeError::InvalidParameter("dim must be >= 1".into()));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(EqeError::InvalidParameter(format!(
                "alpha = {alpha} must be > 0"
            )));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(EqeError::InvalidParameter(format!(
                "R = {radius} must be > 0"
            )));
        }
        Ok(Self { dim, alpha, radius })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn to_radial(&self) -> RadialParams {
        ring_to_radial(self)
    }
}

/// `λ₁ = α/R²`, `λ₂ = α/(2R⁴)`.
pub fn ring_to_radial(p: &RingParams) -> RadialParams {
    let r2 = p.radius * p.radius;
    RadialParams {
        dim: p.dim,
        lambda1: p.alpha / r2,
        lambda2: p.alpha / (2.0 * r2 * r2),
    }
}

/// Inverse of [`ring_to_radial`]; only defined for `λ₁ > 0`.
pub fn radial_to_ring(p: &RadialParams) -> Result<RingParams> {
    if p.lambda1 <= 0.0 {
        return Err(EqeError::InvalidParameter(format!(
            "lambda1 = {} <= 0 has no ring form",
            p.lambda1
        )));
    }
    let r2 = p.lambda1 / (2.0 * p.lambda2);
    RingParams::new(p.dim, p.lambda1 * r2, r2.sqrt())
}

/// Targets `(E[r²], E[r⁴])` for the maximum-entropy fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPair {
    c2: f64,
    c4: f64,
}

impl MomentPair {
    pub fn new(c2: f64, c4: f64) -> Result<Self> {
        if !(c2 > 0.0 && c2.is_finite()) || !(c4 > 0.0 && c4.is_finite()) {
            return Err(EqeError::InvalidParameter(format!(
                "moments must be positive and finite (c2 = {c2}, c4 = {c4})"
            )));
        }
        if !(c4 > c2 * c2) {
            return Err(EqeError::InvalidParameter(format!(
                "c4 = {c4} must exceed c2² = {} (r² needs positive variance)",
                c2 * c2
            )));
        }
        Ok(Self { c2, c4 })
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn c4(&self) -> f64 {
        self.c4
    }

    /// `c₄ / c₂²`; the feasible region is `1 < ratio < (D+2)/D`.
    pub fn kurtosis_ratio(&self) -> f64 {
        self.c4 / (self.c2 * self.c2)
    }
}

/// The spherical law moved to mean `μ` with `x − μ = L z`, `Σ = L Lᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticalParams {
    mu: DVector<f64>,
    factor: DMatrix<f64>,
    radial: RadialParams,
}

impl EllipticalParams {
    /// Factors a full `Σ` once; rejects matrices that are not SPD.
    pub fn from_sigma(mu: DVector<f64>, sigma: DMatrix<f64>, radial: RadialParams) -> Result<Self> {
        let d = radial.dim();
        check_dims(d, mu.len(), sigma.nrows(), sigma.ncols())?;
        if sigma.iter().any(|v| !v.is_finite()) {
            return Err(EqeError::NotSpd("sigma has non-finite entries".into()));
        }
        let asym = (&sigma - sigma.transpose()).abs().max();
        if asym > 1e-10 * sigma.abs().max().max(1.0) {
            return Err(EqeError::NotSpd(format!(
                "sigma is not symmetric (max asymmetry {asym:e})"
            )));
        }
        let chol = nalgebra::Cholesky::new(sigma)
            .ok_or_else(|| EqeError::NotSpd("Cholesky factorization failed".into()))?;
        Self::from_factor(mu, chol.l(), radial)
    }

    /// Takes a lower-triangular factor with strictly positive diagonal.
    pub fn from_factor(
        mu: DVector<f64>,
        factor: DMatrix<f64>,
        radial: RadialParams,
    ) -> Result<Self> {
        let d = radial.dim();
        check_dims(d, mu.len(), factor.nrows(), factor.ncols())?;
        if mu.iter().any(|v| !v.is_finite()) {
            return Err(EqeError::InvalidParameter(
                "mu has non-finite entries".into(),
            ));
        }
        for i in 0..d {
            if !(factor[(i, i)] > 0.0) || !factor[(i, i)].is_finite() {
                return Err(EqeError::NotSpd(format!(
                    "factor diagonal entry {i} is {} (must be > 0)",
                    factor[(i, i)]
                )));
            }
            for j in (i + 1)..d {
                if factor[(i, j)] != 0.0 {
                    return Err(EqeError::NotSpd("factor must be lower triangular".into()));
                }
            }
        }
        Ok(Self { mu, factor, radial })
    }

    /// `μ = 0`, `Σ = I`.
    pub fn spherical(radial: RadialParams) -> Self {
        let d = radial.dim();
        Self {
            mu: DVector::zeros(d),
            factor: DMatrix::identity(d, d),
            radial,
        }
    }

    pub fn dim(&self) -> usize {
        self.radial.dim()
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn radial(&self) -> &RadialParams {
        &self.radial
    }

    pub fn sigma(&self) -> DMatrix<f64> {
        &self.factor * self.factor.transpose()
    }

    pub fn log_det_sigma(&self) -> f64 {
        2.0 * self.factor.diagonal().iter().map(|v| v.ln()).sum::<f64>()
    }

    /// `z = L⁻¹(x − μ)`.
    pub fn whiten(&self, x: &[f64]) -> Result<DVector<f64>> {
        if x.len() != self.dim() {
            return Err(EqeError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let centered = DVector::from_column_slice(x) - &self.mu;
        self.factor
            .solve_lower_triangular(&centered)
            .ok_or_else(|| EqeError::NotSpd("singular factor".into()))
    }

    /// `x = μ + L z`.
    pub fn unwhiten(&self, z: &[f64]) -> DVector<f64> {
        &self.mu + &self.factor * DVector::from_column_slice(z)
    }
}

fn check_dims(d: usize, mu: usize, rows: usize, cols: usize) -> Result<()> {
    if mu != d {
        return Err(EqeError::DimensionMismatch {
            expected: d,
            got: mu,
        });
    }
    if rows != d || cols != d {
        return Err(EqeError::DimensionMismatch {
            expected: d,
            got: if rows != d { rows } else { cols },
        });
    }
    Ok(())
}
