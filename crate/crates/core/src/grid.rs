//! Planar density grids for plotting.

use crate::error::{EqeError, Result};
use crate::params::EllipticalParams;
use crate::radial::EllipticalEqe;

/// `(x1, x2, density)` on an `npts × npts` grid over `[xmin, xmax]²`.
///
/// Rows are ordered with `x1` outermost. Only defined for `D = 2`.
pub fn density_grid(
    p: &EllipticalParams,
    xmin: f64,
    xmax: f64,
    npts: usize,
) -> Result<Vec<[f64; 3]>> {
    if p.dim() != 2 {
        return Err(EqeError::DimensionMismatch {
            expected: 2,
            got: p.dim(),
        });
    }
    if !(xmin.is_finite() && xmax.is_finite() && xmin < xmax) {
        return Err(EqeError::InvalidParameter(format!(
            "grid range [{xmin}, {xmax}] must be finite with xmin < xmax"
        )));
    }
    if npts < 2 {
        return Err(EqeError::InvalidParameter(format!(
            "npts = {npts} must be at least 2"
        )));
    }
    let eqe = EllipticalEqe::new(p.clone())?;
    let axis = grid_axis(xmin, xmax, npts);
    let mut out = Vec::with_capacity(npts * npts);
    for &a in &axis {
        for &b in &axis {
            out.push([a, b, eqe.log_density(&[a, b])?.exp()]);
        }
    }
    Ok(out)
}

/// `npts` equally spaced points from `xmin` to `xmax`; symmetric ranges give
/// exactly negated coordinates.
pub fn grid_axis(xmin: f64, xmax: f64, npts: usize) -> Vec<f64> {
    let step = (xmax - xmin) / (npts - 1) as f64;
    (0..npts)
        .map(|i| {
            let j = npts - 1 - i;
            if i <= j {
                xmin + i as f64 * step
            } else {
                xmax - j as f64 * step
            }
        })
        .collect()
}
