//! Elliptical Gamma reference law: `q = xᵀΣ⁻¹x` is Gamma(shape `a`, scale
//! `b`) and the direction is uniform. Used as a baseline for the
//! maximum-entropy comparison.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Gamma};

use crate::error::{EqeError, Result};
use crate::params::MomentPair;
use crate::quadrature::{integrate_finite, integrate_semi_infinite};
use crate::sampling::SeededGenerator;
use crate::specfun::log_gamma;

#[derive(Debug, Clone, PartialEq)]
pub struct EllipticalGamma {
    dim: usize,
    factor: DMatrix<f64>,
    a: f64,
    b: f64,
}

impl EllipticalGamma {
    pub fn new(sigma: DMatrix<f64>, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
            return Err(EqeError::InvalidParameter(format!(
                "a = {a} and b = {b} must be > 0"
            )));
        }
        let dim = sigma.nrows();
        if dim == 0 || sigma.ncols() != dim {
            return Err(EqeError::DimensionMismatch {
                expected: dim,
                got: sigma.ncols(),
            });
        }
        let chol =
            nalgebra::Cholesky::new(sigma).ok_or_else(|| EqeError::NotSpd("sigma".into()))?;
        Ok(Self {
            dim,
            factor: chol.l(),
            a,
            b,
        })
    }

    /// `Σ = I` with `(a, b)` chosen so that `E[q] = c₂`, `E[q²] = c₄`.
    pub fn moment_matched(dim: usize, targets: &MomentPair) -> Result<Self> {
        let (c2, c4) = (targets.c2(), targets.c4());
        let a = c2 * c2 / (c4 - c2 * c2);
        Self::new(DMatrix::identity(dim, dim), a, c2 / a)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> f64 {
        self.a
    }

    pub fn scale(&self) -> f64 {
        self.b
    }

    fn half_log_det(&self) -> f64 {
        self.factor.diagonal().iter().map(|v| v.ln()).sum()
    }

    /// `ln Γ(D/2) − (D/2) ln π − ln Γ(a) − a ln b − ½ ln|Σ|`.
    fn log_const(&self) -> f64 {
        let h = 0.5 * self.dim as f64;
        lg(h)
            - h * std::f64::consts::PI.ln()
            - lg(self.a)
            - self.a * self.b.ln()
            - self.half_log_det()
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(EqeError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let z = self
            .factor
            .solve_lower_triangular(&DVector::from_column_slice(x))
            .ok_or_else(|| EqeError::NotSpd("singular factor".into()))?;
        let q = z.norm_squared();
        let h = 0.5 * self.dim as f64;
        Ok(self.log_const() + (self.a - h) * q.ln() - q / self.b)
    }

    /// `(E[q], E[q²]) = (ab, ab²(a+1))`; with `Σ = I` these are `E[r²]`, `E[r⁴]`.
    pub fn moments(&self) -> (f64, f64) {
        (self.a * self.b, self.a * self.b * self.b * (self.a + 1.0))
    }

    /// `r²` at the density maximum, `b(a − D/2)`, when `a > D/2`.
    pub fn mode_radius_sq(&self) -> Option<f64> {
        let h = 0.5 * self.dim as f64;
        (self.a > h).then(|| self.b * (self.a - h))
    }

    /// Entropy in nats; `E[ln q]` is evaluated by quadrature.
    pub fn entropy(&self) -> Result<f64> {
        let h = 0.5 * self.dim as f64;
        let e_ln_q = self.b.ln() + expected_ln_standard_gamma(self.a)?;
        Ok(-self.log_const() - (self.a - h) * e_ln_q + self.a)
    }

    /// `n × D` draws.
    pub fn sample(&self, n: usize, gen: &mut SeededGenerator) -> Result<DMatrix<f64>> {
        let gamma =
            Gamma::new(self.a, self.b).map_err(|e| EqeError::InvalidParameter(e.to_string()))?;
        let mut out = DMatrix::zeros(n, self.dim);
        let mut dir = vec![0.0; self.dim];
        for i in 0..n {
            let r = gamma.sample(gen.rng()).sqrt();
            gen.unit_vector(&mut dir);
            let x = &self.factor * DVector::from_column_slice(&dir) * r;
            out.row_mut(i).copy_from(&x.transpose());
        }
        Ok(out)
    }
}

fn lg(x: f64) -> f64 {
    crate::specfun::lgamma_pos(x)
}

/// `∫₀^∞ ln s · s^{a−1} e^{−s} / Γ(a) ds`.
fn expected_ln_standard_gamma(a: f64) -> Result<f64> {
    let lga = log_gamma(a)?;
    let f = |s: f64| s.ln() * ((a - 1.0) * s.ln() - s - lga).exp();
    let split = a + 10.0 * a.sqrt() + 10.0;
    let head = integrate_finite(f, 0.0, split, 1e-12)?.value;
    let tail = integrate_semi_infinite(|t| f(split + t), 1e-12)?.value;
    Ok(head + tail)
}
