//! Inverse-CDF sampling of the radius, uniform directions, and the affine
//! map for the elliptical law.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{EqeError, Result};
use crate::params::{EllipticalParams, RadialParams};
use crate::quadrature::{integrate_finite, integrate_semi_infinite};
use crate::radial::SphericalEqe;

pub const DEFAULT_KNOTS: usize = 2048;
/// Largest acceptable mass beyond `r_max`.
const TAIL_MASS: f64 = 1e-14;
const SEGMENT_TOL: f64 = 1e-12;
const VALIDATION_POINTS: usize = 64;
const VALIDATION_SEED: u64 = 0x5eed_cdf0;
/// Required accuracy of the inverse CDF, in `r`.
pub const INVERSE_TOL_R: f64 = 1e-9;

/// Deterministic random stream; the same seed always yields the same draws.
#[derive(Debug, Clone)]
pub struct SeededGenerator {
    seed: u64,
    rng: ChaCha8Rng,
}

impl SeededGenerator {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream `stream` of the same seed, used per worker.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn open01(&mut self) -> f64 {
        let bits = self.rng.random::<u64>() >> 11;
        (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Uniform point on the unit sphere in `R^dim`.
    pub fn unit_vector(&mut self, out: &mut [f64]) {
        loop {
            let mut norm2 = 0.0;
            for v in out.iter_mut() {
                *v = self.standard_normal();
                norm2 += *v * *v;
            }
            if norm2 > 1e-300 {
                let inv = 1.0 / norm2.sqrt();
                out.iter_mut().for_each(|v| *v *= inv);
                return;
            }
        }
    }
}

/// Tabulated CDF of the radius with a monotone cubic Hermite interpolant.
#[derive(Debug, Clone)]
pub struct RadialCdfTable {
    eqe: SphericalEqe,
    knots: Vec<f64>,
    cdf: Vec<f64>,
    pdf: Vec<f64>,
}

impl RadialCdfTable {
    pub fn build(params: RadialParams) -> Result<Self> {
        Self::build_with_knots(params, DEFAULT_KNOTS)
    }

    pub fn build_with_knots(params: RadialParams, n_knots: usize) -> Result<Self> {
        if n_knots < 16 {
            return Err(EqeError::InvalidParameter(format!(
                "n_knots = {n_knots} is below 16"
            )));
        }
        let eqe = SphericalEqe::new(params)?;
        let pdf = |r: f64| radial_pdf(&eqe, r);
        let r_max = find_r_max(&eqe)?;

        // pilot pass on a uniform grid, then knots uniform in probability
        let pilot_n = n_knots / 4;
        let pilot: Vec<f64> = (0..pilot_n)
            .map(|i| r_max * i as f64 / (pilot_n - 1) as f64)
            .collect();
        let pilot_cdf = cumulative(&pdf, &pilot)?;
        let total = *pilot_cdf.last().unwrap();
        let n_quantile = n_knots - pilot_n;
        let mut knots = pilot.clone();
        let mut seg = 0;
        for j in 1..n_quantile {
            let u = total * j as f64 / n_quantile as f64;
            while seg + 2 < pilot.len() && pilot_cdf[seg + 1] < u {
                seg += 1;
            }
            let (f0, f1) = (pilot_cdf[seg], pilot_cdf[seg + 1]);
            let t = if f1 > f0 {
                ((u - f0) / (f1 - f0)).clamp(0.0, 1.0)
            } else {
                0.5
            };
            knots.push(pilot[seg] + t * (pilot[seg + 1] - pilot[seg]));
        }
        knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let min_gap = 1e-12 * r_max;
        knots.dedup_by(|b, a| *b - *a < min_gap);
        *knots.last_mut().unwrap() = r_max;

        let raw_cdf = cumulative(&pdf, &knots)?;
        // far in the tail the increments drop below one ulp of the running
        // sum; keep only knots that still raise the CDF, and keep r_max last
        let mut kept: Vec<(f64, f64)> = Vec::with_capacity(knots.len());
        for (&r, &c) in knots.iter().zip(raw_cdf.iter()) {
            match kept.last_mut() {
                Some(last) if c <= last.1 => {
                    if r == r_max {
                        *last = (r, c.max(last.1));
                    }
                }
                _ => kept.push((r, c)),
            }
        }
        if kept.len() < 4 {
            return Err(EqeError::Domain {
                func: "build_radial_table",
                detail: "too few distinct CDF levels".into(),
            });
        }
        let knots: Vec<f64> = kept.iter().map(|k| k.0).collect();
        let cdf: Vec<f64> = kept.iter().map(|k| k.1).collect();
        let pdf_vals: Vec<f64> = knots.iter().map(|&r| pdf(r)).collect();
        let table = Self {
            eqe,
            knots,
            cdf,
            pdf: pdf_vals,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn params(&self) -> &RadialParams {
        self.eqe.params()
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn cdf_values(&self) -> &[f64] {
        &self.cdf
    }

    pub fn r_max(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    /// Interpolated CDF at `r`.
    pub fn cdf(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r >= self.r_max() {
            return 1.0;
        }
        let i = self.knots.partition_point(|&k| k <= r) - 1;
        self.hermite(i, r)
    }

    /// Inverse CDF; `u` outside the tabulated range maps to `0` or `r_max`.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        if u <= self.cdf[0] {
            return self.knots[0];
        }
        let last = self.cdf.len() - 1;
        if u >= self.cdf[last] {
            return self.knots[last];
        }
        let i = self.cdf.partition_point(|&c| c <= u) - 1;
        let (mut lo, mut hi) = (self.knots[i], self.knots[i + 1]);
        let (f0, f1) = (self.cdf[i], self.cdf[i + 1]);
        let mut r = lo + (hi - lo) * ((u - f0) / (f1 - f0));
        for _ in 0..100 {
            let g = self.hermite(i, r) - u;
            if g > 0.0 {
                hi = r;
            } else {
                lo = r;
            }
            let slope = self.hermite_slope(i, r);
            let mut next = if slope > 0.0 { r - g / slope } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - r).abs() <= 1e-15 * r.abs().max(1e-300) || hi - lo <= 1e-15 * hi {
                return next;
            }
            r = next;
        }
        r
    }

    /// Slopes clamped per segment so the cubic stays monotone.
    fn segment(&self, i: usize) -> (f64, f64, f64, f64, f64, f64) {
        let (r0, r1) = (self.knots[i], self.knots[i + 1]);
        let (f0, f1) = (self.cdf[i], self.cdf[i + 1]);
        let h = r1 - r0;
        let delta = (f1 - f0) / h;
        let (mut m0, mut m1) = (self.pdf[i], self.pdf[i + 1]);
        let a = m0 / delta;
        let b = m1 / delta;
        let s = a * a + b * b;
        if s > 9.0 {
            let tau = 3.0 / s.sqrt();
            m0 = tau * a * delta;
            m1 = tau * b * delta;
        }
        (r0, h, f0, f1, m0, m1)
    }

    fn hermite(&self, i: usize, r: f64) -> f64 {
        let (r0, h, f0, f1, m0, m1) = self.segment(i);
        let t = (r - r0) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * f0
            + (t3 - 2.0 * t2 + t) * h * m0
            + (-2.0 * t3 + 3.0 * t2) * f1
            + (t3 - t2) * h * m1
    }

    fn hermite_slope(&self, i: usize, r: f64) -> f64 {
        let (r0, h, f0, f1, m0, m1) = self.segment(i);
        let t = (r - r0) / h;
        let t2 = t * t;
        (6.0 * t2 - 6.0 * t) * (f0 - f1) / h
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (3.0 * t2 - 2.0 * t) * m1
    }

    /// Re-integrates the density up to the interpolated quantile at fixed
    /// random levels and checks the implied error in `r`.
    fn validate(&self) -> Result<()> {
        let mut gen = SeededGenerator::new(VALIDATION_SEED);
        let pdf = |r: f64| radial_pdf(&self.eqe, r);
        for _ in 0..VALIDATION_POINTS {
            let u = gen.open01();
            let r = self.inverse_cdf(u);
            let exact = integrate_in_pieces(&pdf, 0.0, r, 8)?;
            let dens = pdf(r);
            let err_r = (exact - u).abs() / dens.max(1e-300);
            if err_r > INVERSE_TOL_R && (exact - u).abs() > 1e-14 {
                return Err(EqeError::Domain {
                    func: "build_radial_table",
                    detail: format!("inverse CDF error {err_r:e} in r at u = {u}"),
                });
            }
        }
        Ok(())
    }

    /// One draw of the radius.
    pub fn sample_radius(&self, gen: &mut SeededGenerator) -> f64 {
        self.inverse_cdf(gen.open01())
    }

    /// `n × D` matrix of spherical draws.
    pub fn sample(&self, n: usize, gen: &mut SeededGenerator) -> DMatrix<f64> {
        let d = self.params().dim();
        let mut out = DMatrix::zeros(n, d);
        let mut dir = vec![0.0; d];
        for i in 0..n {
            let r = self.sample_radius(gen);
            gen.unit_vector(&mut dir);
            for j in 0..d {
                out[(i, j)] = r * dir[j];
            }
        }
        out
    }

    /// Splits `n` draws over `workers` threads; worker `w` uses stream `w`
    /// of `seed` and the rows are the concatenation of the worker outputs.
    pub fn sample_parallel(&self, n: usize, seed: u64, workers: usize) -> DMatrix<f64> {
        let workers = workers.max(1).min(n.max(1));
        let d = self.params().dim();
        let base = n / workers;
        let extra = n % workers;
        let chunks: Vec<DMatrix<f64>> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let count = base + usize::from(w < extra);
                    s.spawn(move || {
                        let mut gen = SeededGenerator::with_stream(seed, w as u64);
                        self.sample(count, &mut gen)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sampling worker panicked"))
                .collect()
        });
        let mut out = DMatrix::zeros(n, d);
        let mut row = 0;
        for c in chunks {
            out.rows_mut(row, c.nrows()).copy_from(&c);
            row += c.nrows();
        }
        out
    }
}

fn radial_pdf(eqe: &SphericalEqe, r: f64) -> f64 {
    if r < 0.0 {
        return 0.0;
    }
    if r == 0.0 && eqe.params().dim() > 1 {
        return 0.0;
    }
    eqe.log_radial_density(r).exp()
}

/// Smallest tried radius past the mode whose tail mass is below `TAIL_MASS`.
fn find_r_max(eqe: &SphericalEqe) -> Result<f64> {
    let p = eqe.params();
    let d = p.dim() as f64;
    let (l1, l2) = (p.lambda1(), p.lambda2());
    // mode in y = r² of the radial density r^{D-1} exp(λ₁r² − λ₂r⁴)
    let y_peak =
        ((l1 + (l1 * l1 + 8.0 * l2 * (0.5 * d - 0.5).max(0.0)).sqrt()) / (4.0 * l2)).max(0.0);
    let width = 1.0 / (2.0 * l2).sqrt();
    let mut y = y_peak + 4.0 * width;
    for _ in 0..200 {
        let r = y.sqrt();
        let tail = integrate_semi_infinite(|s| radial_pdf(eqe, r + s), 1e-6)?.value;
        if tail < TAIL_MASS {
            return Ok(r);
        }
        y += width;
    }
    Err(EqeError::Domain {
        func: "build_radial_table",
        detail: "could not bound the radial tail".into(),
    })
}

/// CDF at every knot by summing segment integrals.
fn cumulative<F: Fn(f64) -> f64>(pdf: &F, knots: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(knots.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in knots.windows(2) {
        acc += integrate_finite(pdf, w[0], w[1], SEGMENT_TOL)?.value;
        out.push(acc);
    }
    Ok(out)
}

fn integrate_in_pieces<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, pieces: usize) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let h = (b - a) / pieces as f64;
    let mut acc = 0.0;
    for i in 0..pieces {
        let lo = a + h * i as f64;
        let hi = if i + 1 == pieces { b } else { lo + h };
        acc += integrate_finite(f, lo, hi, SEGMENT_TOL)?.value;
    }
    Ok(acc)
}

/// `n × D` draws from the spherical law.
pub fn sample(params: &RadialParams, n: usize, gen: &mut SeededGenerator) -> Result<DMatrix<f64>> {
    check_n(n)?;
    Ok(RadialCdfTable::build(*params)?.sample(n, gen))
}

/// `n × D` draws of `μ + L z` with `z` from the spherical law.
pub fn sample_elliptical(
    params: &EllipticalParams,
    n: usize,
    gen: &mut SeededGenerator,
) -> Result<DMatrix<f64>> {
    check_n(n)?;
    let z = RadialCdfTable::build(*params.radial())?.sample(n, gen);
    Ok(apply_affine(params, z))
}

/// Maps each row `z` to `μ + L z`.
pub fn apply_affine(params: &EllipticalParams, z: DMatrix<f64>) -> DMatrix<f64> {
    let mut x = z * params.factor().transpose();
    for mut row in x.row_iter_mut() {
        row += params.mu().transpose();
    }
    x
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(EqeError::InvalidParameter(
            "sample size must be >= 1".into(),
        ));
    }
    Ok(())
}
