//! The Elliptical Quartic Exponential (EQE) distribution,
//! `p(x) ∝ exp(λ₁q − λ₂q²)` with `q = (x − μ)ᵀΣ⁻¹(x − μ)` and `λ₂ > 0`.
//!
//! Normalization, moments, entropy, densities, sampling, conditionals,
//! marginals and the maximum-entropy fit from `(E[r²], E[r⁴])`.

pub mod condmarg;
pub mod eg;
pub mod error;
pub mod fit;
pub mod grid;
pub mod io;
pub mod params;
pub mod quadrature;
pub mod radial;
pub mod sampling;
pub mod specfun;

pub use condmarg::{
    conditional_params, marginal_log_density, marginal_peaks, BlockSplit, Marginal,
};
pub use eg::EllipticalGamma;
pub use error::{EqeError, Result};
pub use fit::{fit_data, fit_moments, Feasibility, FitReport, FittedParams, Model};
pub use grid::density_grid;
pub use params::{
    radial_to_ring, ring_to_radial, EllipticalParams, MomentPair, RadialParams, RingParams,
};
pub use radial::{
    entropy, log_density, log_density_elliptical, log_norm_const, log_norm_const_d1_neg,
    log_norm_const_d2_closed, radial_moment, sphere_surface_area, EllipticalEqe, LogNormConst,
    NormMethod, Provenance, SphericalEqe,
};
pub use sampling::{sample, sample_elliptical, RadialCdfTable, SeededGenerator};
