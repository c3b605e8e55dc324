//! Maximum-entropy fitting: find `(λ₁, λ₂)` with `E[r²] = c₂`, `E[r⁴] = c₄`.
//!
//! The multipliers minimize the convex dual `L(η) = ln Z(η) − η·c` over the
//! natural parameters `η = (λ₁, −λ₂)`. Its gradient is `E[(r², r⁴)] − c`
//! and its Hessian is the covariance of `(r², r⁴)`, so Newton's method with
//! backtracking converges to the unique solution when one exists.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{EqeError, Result};
use crate::params::{EllipticalParams, MomentPair, RadialParams};
use crate::radial::{log_norm_const, radial_moments, NormMethod};

pub const MAX_ITERATIONS: usize = 200;
/// Relative margin below the Gaussian kurtosis ratio treated as infeasible.
pub const BOUNDARY_EPS: f64 = 1e-6;
/// Fraction of the feasible kurtosis interval, measured from the Gaussian
/// end, that is reported as near the boundary.
pub const NEAR_BOUNDARY_FRACTION: f64 = 0.05;
/// A fit is converged when both relative residuals are at most this.
pub const CONVERGED_RESIDUAL: f64 = 1e-8;
/// Iteration stops early once both relative residuals reach this.
const TARGET_RESIDUAL: f64 = 1e-13;
const ARMIJO: f64 = 1e-4;
/// Below this Newton decrement the predicted change of the objective is
/// lost in its rounding, so steps are judged by the residual instead.
const NOISE_DECREMENT: f64 = 1e-12;
/// Plain Newton steps tried before switching to damping.
const NEWTON_HALVINGS: i32 = 4;

/// `(μ, t)` pairs tried in order: Newton with halving, then Newton on
/// `H + μ diag(H)` with growing `μ`, which tends to a scaled gradient step.
fn step_schedule() -> impl Iterator<Item = (f64, f64)> {
    let newton = (0..NEWTON_HALVINGS).map(|k| (0.0, 0.5f64.powi(k)));
    let damped = (-4..=16).map(|k| (10f64.powi(k), 1.0));
    newton.chain(damped)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feasibility {
    Interior,
    NearGaussianBoundary,
    Infeasible,
}

impl Feasibility {
    pub fn as_str(&self) -> &'static str {
        match self {
            Feasibility::Interior => "interior",
            Feasibility::NearGaussianBoundary => "near_gaussian_boundary",
            Feasibility::Infeasible => "infeasible",
        }
    }
}

/// `(D+2)/D`, the value of `c₄/c₂²` for a Gaussian in `D` dimensions.
pub fn gaussian_kurtosis_ratio(dim: usize) -> f64 {
    (dim as f64 + 2.0) / dim as f64
}

pub fn classify(dim: usize, targets: &MomentPair) -> Feasibility {
    let g = gaussian_kurtosis_ratio(dim);
    let k = targets.kurtosis_ratio();
    if k >= g * (1.0 - BOUNDARY_EPS) {
        Feasibility::Infeasible
    } else if (g - k) / (g - 1.0) < NEAR_BOUNDARY_FRACTION {
        Feasibility::NearGaussianBoundary
    } else {
        Feasibility::Interior
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Dual objective `ln Z − λ₁c₂ + λ₂c₄` in the scaled problem.
    pub objective: f64,
    pub residual: (f64, f64),
    /// Backtracking factor of the Newton step that produced this iterate
    /// (1 for damped steps).
    pub step: f64,
    /// Levenberg–Marquardt damping `μ` of that step, 0 for plain Newton.
    pub damping: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedParams {
    Radial(RadialParams),
    Elliptical(EllipticalParams),
}

impl FittedParams {
    pub fn radial(&self) -> &RadialParams {
        match self {
            FittedParams::Radial(p) => p,
            FittedParams::Elliptical(p) => p.radial(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub params: FittedParams,
    pub targets: MomentPair,
    pub iterations: usize,
    /// `(|E[r²] − c₂|/c₂, |E[r⁴] − c₄|/c₄)` at the returned parameters.
    pub residual: (f64, f64),
    pub converged: bool,
    pub feasibility: Feasibility,
    pub trace: Vec<IterationRecord>,
}

struct Eval {
    objective: f64,
    m: [f64; 4],
}

impl Eval {
    fn residual(&self, c: &MomentPair) -> (f64, f64) {
        (
            (self.m[0] - c.c2()).abs() / c.c2(),
            (self.m[1] - c.c4()).abs() / c.c4(),
        )
    }
}

fn evaluate(dim: usize, l1: f64, l2: f64, c: &MomentPair) -> Result<Eval> {
    let p = RadialParams::new(dim, l1, l2)?;
    let log_z = log_norm_const(&p, NormMethod::Auto)?.value;
    let m = radial_moments(&p, [2, 4, 6, 8], NormMethod::Auto)?;
    Ok(Eval {
        objective: log_z - l1 * c.c2() + l2 * c.c4(),
        m,
    })
}

/// Solves for `(λ₁, λ₂)` in `dim` dimensions.
pub fn fit_moments(dim: usize, targets: &MomentPair) -> Result<FitReport> {
    if dim == 0 {
        return Err(EqeError::InvalidParameter("dim must be >= 1".into()));
    }
    let feasibility = classify(dim, targets);
    if feasibility == Feasibility::Infeasible {
        return Err(EqeError::Infeasible(format!(
            "c4/c2^2 = {} is at or beyond the Gaussian value {} for D = {dim}; \
             no lambda2 > 0 matches these moments (heavy-tailed or Gaussian data)",
            targets.kurtosis_ratio(),
            gaussian_kurtosis_ratio(dim)
        )));
    }

    // scale so that c₂ = 1; λ₁ and λ₂ then scale as s⁻¹ and s⁻²
    let s = targets.c2();
    let c = MomentPair::new(1.0, targets.c4() / (s * s))?;

    let mut l2 = dim as f64 / (2.0 * (c.c4() - 1.0));
    let mut l1 = 2.0 * l2 * c.c2();
    let mut cur = evaluate(dim, l1, l2, &c)?;
    let mut trace = vec![IterationRecord {
        iteration: 0,
        lambda1: l1,
        lambda2: l2,
        objective: cur.objective,
        residual: cur.residual(&c),
        step: 0.0,
        damping: 0.0,
    }];
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        let res = cur.residual(&c);
        if res.0 <= TARGET_RESIDUAL && res.1 <= TARGET_RESIDUAL {
            break;
        }
        iterations += 1;
        let [m2, m4, m6, m8] = cur.m;
        // gradient and Hessian in η = (λ₁, −λ₂)
        let g = Vector2::new(m2 - c.c2(), m4 - c.c4());
        let h = Matrix2::new(m4 - m2 * m2, m6 - m2 * m4, m6 - m2 * m4, m8 - m4 * m4);
        let det = h[(0, 0)] * h[(1, 1)] - h[(0, 1)] * h[(1, 0)];
        if !(h[(0, 0)] > 0.0 && det > 0.0) {
            return Err(EqeError::FitDivergence {
                iterations,
                residual: res,
            }
            .context(format!(
                "Hessian lost positive definiteness at lambda = ({l1}, {l2})"
            )));
        }
        let newton = -h.try_inverse().expect("positive definite") * g;
        let noise = NOISE_DECREMENT * cur.objective.abs().max(1.0);
        let mut accepted = None;
        for (mu, t) in step_schedule() {
            let step = if mu == 0.0 {
                newton * t
            } else {
                let damped = h + Matrix2::from_diagonal(&h.diagonal()) * mu;
                -damped.try_inverse().expect("positive definite") * g
            };
            let slope = g.dot(&step);
            let (n1, n2) = (l1 + step[0], l2 - step[1]);
            if !(n2 > 0.0) {
                continue;
            }
            let Ok(next) = evaluate(dim, n1, n2, &c) else {
                continue;
            };
            let armijo = next.objective <= cur.objective + ARMIJO * slope;
            let res_next = next.residual(&c);
            let terminal = mu == 0.0
                && -slope < noise
                && next.objective <= cur.objective + noise
                && res_next.0.max(res_next.1) < res.0.max(res.1);
            if armijo || terminal {
                accepted = Some((n1, n2, next, t, mu));
                break;
            }
        }
        match accepted {
            Some((n1, n2, next, t, mu)) => {
                l1 = n1;
                l2 = n2;
                cur = next;
                trace.push(IterationRecord {
                    iteration: iterations,
                    lambda1: l1,
                    lambda2: l2,
                    objective: cur.objective,
                    residual: cur.residual(&c),
                    step: t,
                    damping: mu,
                });
            }
            // no further decrease is representable
            None => break,
        }
    }

    let residual = cur.residual(&c);
    let converged = residual.0 <= CONVERGED_RESIDUAL && residual.1 <= CONVERGED_RESIDUAL;
    if !converged {
        let tail: Vec<String> = trace
            .iter()
            .rev()
            .take(3)
            .map(|r| format!("#{} ({:e}, {:e})", r.iteration, r.lambda1, r.lambda2))
            .collect();
        return Err(EqeError::FitDivergence {
            iterations,
            residual,
        }
        .context(format!(
            "moment fit in D = {dim}, last iterates (scaled to c2 = 1): {}",
            tail.join(", ")
        )));
    }
    let params = RadialParams::new(dim, l1 / s, l2 / (s * s))?;
    Ok(FitReport {
        params: FittedParams::Radial(params),
        targets: *targets,
        iterations,
        residual,
        converged,
        feasibility,
        trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Spherical,
    Elliptical,
}

/// Fits rows of `data` (`n × D`).
///
/// Spherical: `μ = 0`, `Σ = I`. Elliptical: `μ̂` is the sample mean and `Σ̂`
/// the sample covariance rescaled to unit determinant; `(λ₁, λ₂)` are then
/// fitted to the moments of `q = (x − μ̂)ᵀΣ̂⁻¹(x − μ̂)`.
pub fn fit_data(data: &DMatrix<f64>, model: Model) -> Result<FitReport> {
    let (n, d) = data.shape();
    if d == 0 {
        return Err(EqeError::InvalidParameter("data has no columns".into()));
    }
    if n <= d + 1 {
        return Err(EqeError::InvalidParameter(format!(
            "need more than D + 1 = {} rows, got {n}",
            d + 1
        )));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(EqeError::InvalidParameter(
            "data contains non-finite values".into(),
        ));
    }
    let (mu, factor) = match model {
        Model::Spherical => (DVector::zeros(d), DMatrix::identity(d, d)),
        Model::Elliptical => {
            let mu = data.row_mean().transpose();
            let mut centered = data.clone();
            for mut row in centered.row_iter_mut() {
                row -= mu.transpose();
            }
            let cov = centered.transpose() * &centered / (n as f64 - 1.0);
            let chol = nalgebra::Cholesky::new(cov)
                .ok_or_else(|| EqeError::NotSpd("sample covariance is degenerate".into()))?;
            let mut l = chol.l();
            // det Σ̂ = 1  ⇔  Π L_ii = 1
            let log_det_half: f64 = l.diagonal().iter().map(|v| v.ln()).sum();
            l *= (-log_det_half / d as f64).exp();
            (mu, l)
        }
    };
    let mut s2 = 0.0;
    let mut s4 = 0.0;
    for row in data.row_iter() {
        let centered = row.transpose() - &mu;
        let z = factor
            .solve_lower_triangular(&centered)
            .ok_or_else(|| EqeError::NotSpd("singular shape factor".into()))?;
        let q = z.norm_squared();
        s2 += q;
        s4 += q * q;
    }
    let targets = MomentPair::new(s2 / n as f64, s4 / n as f64)?;
    let report = fit_moments(d, &targets).map_err(|e| e.context("fitting data moments"))?;
    let params = match model {
        Model::Spherical => report.params,
        Model::Elliptical => FittedParams::Elliptical(EllipticalParams::from_factor(
            mu,
            factor,
            *report.params.radial(),
        )?),
    };
    Ok(FitReport { params, ..report })
}
