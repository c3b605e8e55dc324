//! Conditionals and marginals under a coordinate split `x = (x₁, x₂)`.
//!
//! Expanding `(q₁ + q₂)²` shows that `x₁ | x₂` is again EQE with first
//! parameter `λ₁ − 2λ₂ q₂`, and integrating `x₂` out leaves
//! `exp(λ₁q₁ − λ₂q₁²) Z_{D₂}(λ₁ − 2λ₂q₁, λ₂) / Z_D`.

use crate::error::{EqeError, Result};
use crate::params::{EllipticalParams, RadialParams};
use crate::radial::{log_norm_const, log_radial_moment, NormMethod};

/// `x₁` takes the first `dim1` coordinates, `x₂` the remaining `dim2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockSplit {
    dim1: usize,
    dim2: usize,
}

impl BlockSplit {
    pub fn new(dim1: usize, dim2: usize) -> Result<Self> {
        if dim1 == 0 || dim2 == 0 {
            return Err(EqeError::InvalidParameter(format!(
                "block sizes must be >= 1 (got {dim1} + {dim2})"
            )));
        }
        Ok(Self { dim1, dim2 })
    }

    pub fn dim1(&self) -> usize {
        self.dim1
    }

    pub fn dim2(&self) -> usize {
        self.dim2
    }

    pub fn swapped(&self) -> Self {
        Self {
            dim1: self.dim2,
            dim2: self.dim1,
        }
    }

    fn check(&self, p: &RadialParams) -> Result<()> {
        if self.dim1 + self.dim2 != p.dim() {
            return Err(EqeError::DimensionMismatch {
                expected: p.dim(),
                got: self.dim1 + self.dim2,
            });
        }
        Ok(())
    }
}

/// Parameters of `x₁ | x₂` given `‖x₂‖²`: `(dim1, λ₁ − 2λ₂‖x₂‖², λ₂)`.
pub fn conditional_params(
    p: &RadialParams,
    split: BlockSplit,
    x2_norm_sq: f64,
) -> Result<RadialParams> {
    split.check(p)?;
    if !(x2_norm_sq >= 0.0) || !x2_norm_sq.is_finite() {
        return Err(EqeError::InvalidParameter(format!(
            "x2_norm_sq = {x2_norm_sq} must be finite and >= 0"
        )));
    }
    p.with(split.dim1, p.lambda1() - 2.0 * p.lambda2() * x2_norm_sq)
}

/// Marginal of `x₁` with `ln Z_D` cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Marginal {
    params: RadialParams,
    split: BlockSplit,
    log_z: f64,
}

impl Marginal {
    pub fn new(params: RadialParams, split: BlockSplit) -> Result<Self> {
        split.check(&params)?;
        let log_z = log_norm_const(&params, NormMethod::Auto)?.value;
        Ok(Self {
            params,
            split,
            log_z,
        })
    }

    pub fn params(&self) -> &RadialParams {
        &self.params
    }

    pub fn split(&self) -> BlockSplit {
        self.split
    }

    /// Log-density at any `x₁` with `‖x₁‖² = q1`.
    pub fn log_density_q(&self, q1: f64) -> Result<f64> {
        let (l1, l2) = (self.params.lambda1(), self.params.lambda2());
        let inner = self.params.with(self.split.dim2, l1 - 2.0 * l2 * q1)?;
        let log_inner = log_norm_const(&inner, NormMethod::Auto)?.value;
        Ok(l1 * q1 - l2 * q1 * q1 + log_inner - self.log_z)
    }

    pub fn log_density(&self, x1: &[f64]) -> Result<f64> {
        if x1.len() != self.split.dim1 {
            return Err(EqeError::DimensionMismatch {
                expected: self.split.dim1,
                got: x1.len(),
            });
        }
        if x1.iter().any(|v| !v.is_finite()) {
            return Err(EqeError::InvalidParameter("x1 must be finite".into()));
        }
        self.log_density_q(x1.iter().map(|v| v * v).sum())
    }

    /// `(1/2r₁) d/dr₁` of the log-density:
    /// `λ₁ − 2λ₂(r₁² + E[r₂²])`, the expectation taken in `dim2`
    /// dimensions at the shifted parameter `λ₁ − 2λ₂r₁²`.
    fn half_log_slope(&self, r1: f64) -> Result<f64> {
        let (l1, l2) = (self.params.lambda1(), self.params.lambda2());
        let q1 = r1 * r1;
        let inner = self.params.with(self.split.dim2, l1 - 2.0 * l2 * q1)?;
        let m2 = log_radial_moment(&inner, 2, NormMethod::Auto)?.exp();
        Ok(l1 - 2.0 * l2 * (q1 + m2))
    }

    /// Radii of the local maxima of the marginal along `r₁ = ‖x₁‖`,
    /// ascending; `0` is included when the origin is a local maximum.
    pub fn peaks(&self) -> Result<Vec<f64>> {
        let mut peaks = Vec::new();
        let at_origin = self.half_log_slope(0.0)?;
        if at_origin < 0.0 {
            peaks.push(0.0);
        }
        // every positive stationary point has r₁² < λ₁/(2λ₂)
        let Ok(r_mode) = self.params.mode_radius() else {
            return Ok(peaks);
        };
        let grid = peak_grid(r_mode);
        let mut stationary = usize::from(at_origin != 0.0);
        let mut prev_r = 0.0;
        let mut prev_v = at_origin;
        for &r in &grid {
            let v = self.half_log_slope(r)?;
            if (prev_v > 0.0) != (v > 0.0) {
                stationary += 1;
                let root = self.bisect(prev_r, r, prev_v)?;
                if prev_v > 0.0 {
                    peaks.push(root);
                }
            }
            prev_r = r;
            prev_v = v;
        }
        if stationary > 2 {
            return Err(EqeError::Domain {
                func: "marginal_peaks",
                detail: format!("found {stationary} stationary points; at most two expected"),
            });
        }
        Ok(peaks)
    }

    fn bisect(&self, mut lo: f64, mut hi: f64, v_lo: f64) -> Result<f64> {
        let lo_positive = v_lo > 0.0;
        while hi - lo > PEAK_TOL {
            let mid = 0.5 * (lo + hi);
            let v = self.half_log_slope(mid)?;
            if (v > 0.0) == lo_positive {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

const PEAK_GRID_POINTS: usize = 512;
const PEAK_TOL: f64 = 1e-10;

/// Half uniform on `(0, R]`, half geometrically clustered just below `R`.
fn peak_grid(r_mode: f64) -> Vec<f64> {
    let half = PEAK_GRID_POINTS / 2;
    let mut grid: Vec<f64> = (1..=half)
        .map(|i| r_mode * i as f64 / half as f64)
        .collect();
    for i in 0..half {
        let gap = 10f64.powf(-10.0 * i as f64 / (half - 1) as f64);
        grid.push(r_mode * (1.0 - gap));
    }
    grid.retain(|&r| r > 0.0);
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    grid
}

/// One-off marginal log-density; prefer [`Marginal`] for repeated use.
pub fn marginal_log_density(p: &RadialParams, split: BlockSplit, x1: &[f64]) -> Result<f64> {
    Marginal::new(*p, split)?.log_density(x1)
}

pub fn marginal_peaks(p: &RadialParams, split: BlockSplit) -> Result<Vec<f64>> {
    Marginal::new(*p, split)?.peaks()
}

/// Marginal of the first `dim1` coordinates of an elliptical EQE whose
/// scale matrix is block diagonal for `split`.
pub fn elliptical_marginal_log_density(
    p: &EllipticalParams,
    split: BlockSplit,
    x1: &[f64],
) -> Result<f64> {
    let d1 = split.dim1();
    split.check(p.radial())?;
    if x1.len() != d1 {
        return Err(EqeError::DimensionMismatch {
            expected: d1,
            got: x1.len(),
        });
    }
    let l = p.factor();
    if l.view((d1, 0), (split.dim2(), d1))
        .iter()
        .any(|&v| v != 0.0)
    {
        return Err(EqeError::InvalidParameter(
            "scale matrix couples the two blocks; the marginal is not of EQE form".into(),
        ));
    }
    let l11 = l.view((0, 0), (d1, d1)).into_owned();
    let centered = nalgebra::DVector::from_column_slice(x1) - p.mu().rows(0, d1);
    let z1 = l11
        .solve_lower_triangular(&centered)
        .ok_or_else(|| EqeError::NotSpd("singular factor block".into()))?;
    let half_log_det: f64 = l11.diagonal().iter().map(|v| v.ln()).sum();
    Ok(Marginal::new(*p.radial(), split)?.log_density_q(z1.norm_squared())? - half_log_det)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::SphericalEqe;

    #[test]
    fn conditional_examples() {
        let p = RadialParams::new(2, 8.0, 4.0).unwrap();
        let s = BlockSplit::new(1, 1).unwrap();
        assert_eq!(conditional_params(&p, s, 1.0).unwrap().lambda1(), 0.0);
        assert_eq!(conditional_params(&p, s, 0.5).unwrap().lambda1(), 4.0);
        assert!(conditional_params(&p, s, -1.0).is_err());
        assert!(conditional_params(&p, BlockSplit::new(1, 2).unwrap(), 0.1).is_err());
    }

    #[test]
    fn slice_through_3d() {
        // D = 3 conditioned on x₃ = c: annular slice iff c < R
        let p = RadialParams::new(3, 2.0, 1.0).unwrap();
        let s = BlockSplit::new(2, 1).unwrap();
        assert!(conditional_params(&p, s, 0.9 * 0.9).unwrap().is_annular());
        assert!(!conditional_params(&p, s, 1.0).unwrap().is_annular());
        assert!(!conditional_params(&p, s, 1.2 * 1.2).unwrap().is_annular());
    }

    #[test]
    fn marginal_at_origin() {
        let p = RadialParams::new(3, 2.0, 1.0).unwrap();
        let s = BlockSplit::new(1, 2).unwrap();
        let m = Marginal::new(p, s).unwrap();
        let want = log_norm_const(&RadialParams::new(2, 2.0, 1.0).unwrap(), NormMethod::Auto)
            .unwrap()
            .value
            - log_norm_const(&p, NormMethod::Auto).unwrap().value;
        assert!((m.log_density(&[0.0]).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn bimodal_marginal_of_figure_parameters() {
        let p = RadialParams::new(2, 8.0, 4.0).unwrap();
        let peaks = marginal_peaks(&p, BlockSplit::new(1, 1).unwrap()).unwrap();
        assert_eq!(peaks.len(), 1, "{peaks:?}");
        assert!(peaks[0] > 0.0 && peaks[0] < 1.0);
    }

    #[test]
    fn monotone_case_peaks_only_at_origin() {
        let p = RadialParams::new(3, -1.0, 0.7).unwrap();
        let peaks = marginal_peaks(&p, BlockSplit::new(2, 1).unwrap()).unwrap();
        assert_eq!(peaks, vec![0.0]);
    }

    #[test]
    fn chain_rule_at_a_point() {
        // marginal of (x₁, x₂) plus the conditional of x₃ given them
        let p = RadialParams::new(3, 2.0, 1.0).unwrap();
        let x = [0.4, -0.7, 0.3];
        let joint = SphericalEqe::new(p).unwrap().log_density(&x).unwrap();
        let marg = marginal_log_density(&p, BlockSplit::new(2, 1).unwrap(), &x[..2]).unwrap();
        let q12 = x[0] * x[0] + x[1] * x[1];
        let cond = conditional_params(&p, BlockSplit::new(1, 2).unwrap(), q12).unwrap();
        let c = SphericalEqe::new(cond)
            .unwrap()
            .log_density(&x[2..])
            .unwrap();
        assert!((joint - (marg + c)).abs() < 1e-12);
    }

    #[test]
    fn elliptical_marginal_requires_block_diagonal_scale() {
        use nalgebra::{DMatrix, DVector};
        let radial = RadialParams::new(2, 2.0, 1.0).unwrap();
        let s = BlockSplit::new(1, 1).unwrap();
        let coupled = EllipticalParams::from_sigma(
            DVector::zeros(2),
            DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
            radial,
        )
        .unwrap();
        assert!(elliptical_marginal_log_density(&coupled, s, &[0.1]).is_err());
        let diag = EllipticalParams::from_sigma(
            DVector::from_vec(vec![1.0, -1.0]),
            DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]),
            radial,
        )
        .unwrap();
        let got = elliptical_marginal_log_density(&diag, s, &[2.0]).unwrap();
        let want = marginal_log_density(&radial, s, &[0.5]).unwrap() - 2f64.ln();
        assert!((got - want).abs() < 1e-14);
    }
}
