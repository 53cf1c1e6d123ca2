//! The angle travelled by Brownian motion on `S_{n−1}` in time `t`.
//!
//! The generator in the polar angle is `∂²_r + (n−2) cot r ∂_r`, so the
//! transition density from the pole, relative to the uniform measure, is the
//! zonal series `K_t(z) = Σ_ℓ e^{−tℓ(n+ℓ−2)} √d_ℓ γ_ℓ(z)` at `z = cos r`.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use std::f64::consts::PI;

use crate::special::{heat_weight, ln_harmonic_dimension, GegenbauerBasis};
use crate::{Error, Result};

/// Tail tolerance for the series truncation.
pub const HEAT_TOL: f64 = 1e-7;
/// Largest truncation degree the series sampler accepts.
pub const HEAT_MAX_DEGREE: usize = 400;
const MIN_GRID_CELLS: usize = 4096;
const MAX_GRID_CELLS: usize = 1 << 20;
const TAIL_SCAN_LIMIT: usize = 1_000_000;

fn ln_tail_term(n: usize, t: f64, ell: usize) -> f64 {
    let l = ell as f64;
    -t * l * (n as f64 + l - 2.0) + ln_harmonic_dimension(n, ell)
}

/// Smallest `L` with `Σ_{ℓ>L} e^{−tℓ(n+ℓ−2)} d_ℓ < tol`, or `None` when
/// the scan limit is reached first.
pub fn truncation_degree(n: usize, t: f64, tol: f64) -> Option<usize> {
    if t <= 0.0 {
        return None;
    }
    // Terms rise to a peak and then fall faster than geometrically; scan until
    // they are far below tol past the peak, then sum the tail backwards.
    let ln_tol = tol.ln();
    let mut terms = Vec::new();
    let mut ell = 1;
    let mut prev = f64::NEG_INFINITY;
    loop {
        if ell > TAIL_SCAN_LIMIT {
            return None;
        }
        let x = ln_tail_term(n, t, ell);
        terms.push(x);
        if x < prev && x < ln_tol - 60.0 {
            break;
        }
        prev = x;
        ell += 1;
    }
    // terms[i] belongs to degree i + 1.
    let mut tail = 0.0;
    let mut answer = terms.len();
    for i in (0..terms.len()).rev() {
        tail += terms[i].exp();
        if tail >= tol {
            break;
        }
        answer = i;
    }
    Some(answer)
}

/// Smallest `t` (to relative precision `1e-6`) at which the series needs no
/// more than [`HEAT_MAX_DEGREE`] terms for tolerance [`HEAT_TOL`].
pub fn heat_t_min(n: usize) -> f64 {
    let fits = |t: f64| truncation_degree(n, t, HEAT_TOL).is_some_and(|l| l <= HEAT_MAX_DEGREE);
    let (mut lo, mut hi) = (1e-12f64, 1.0f64);
    while !fits(hi) {
        hi *= 2.0;
    }
    while hi / lo > 1.0 + 1e-6 {
        let mid = (lo * hi).sqrt();
        if fits(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Tabulated law of the polar angle `r ∈ [0, π]` after time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatRadialDistribution {
    n: usize,
    t: f64,
    truncation: usize,
    /// Cell boundaries `r_0 = 0 < … < r_G = π`.
    grid: Vec<f64>,
    /// CDF at the cell boundaries.
    cdf: Vec<f64>,
    /// Normalized density at boundaries and midpoints, length `2G + 1`.
    density: Vec<f64>,
}

/// Builds the series distribution; `t` must be at least [`heat_t_min`].
pub fn build_heat_distribution(n: usize, t: f64, tol: f64) -> Result<HeatRadialDistribution> {
    if n < 3 {
        return Err(Error::Dimension {
            n,
            reason: "the heat series needs n >= 3",
        });
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::OutOfRange {
            name: "tol",
            value: tol,
            expected: "tol > 0",
        });
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::OutOfRange {
            name: "t",
            value: t,
            expected: "finite t >= 0",
        });
    }
    let too_small = || Error::HeatTimeTooSmall {
        n,
        t,
        t_min: heat_t_min(n),
    };
    let truncation = truncation_degree(n, t, tol).ok_or_else(too_small)?;
    if truncation > HEAT_MAX_DEGREE {
        return Err(too_small());
    }
    let basis = GegenbauerBasis::new(n, truncation)?;
    let weights: Vec<f64> = (0..=truncation)
        .map(|ell| heat_weight(n, t, ell))
        .collect();
    let cells = ((PI / (t.sqrt() / 50.0)).ceil() as usize).clamp(MIN_GRID_CELLS, MAX_GRID_CELLS);
    let h = PI / cells as f64;
    let mut gammas = vec![0.0; truncation + 1];
    let mut density = Vec::with_capacity(2 * cells + 1);
    for i in 0..=2 * cells {
        let r = i as f64 * h / 2.0;
        basis.eval_all(r.cos(), &mut gammas)?;
        let k: f64 = weights.iter().zip(&gammas).map(|(w, g)| w * g).sum();
        density.push((k * r.sin().powi(n as i32 - 2)).max(0.0));
    }
    let mut cdf = Vec::with_capacity(cells + 1);
    cdf.push(0.0);
    let mut acc = 0.0;
    for c in 0..cells {
        acc += h / 6.0 * (density[2 * c] + 4.0 * density[2 * c + 1] + density[2 * c + 2]);
        cdf.push(acc);
    }
    if !acc.is_finite() || acc <= 0.0 {
        return Err(Error::Numerical(format!("heat density has mass {acc}")));
    }
    cdf.iter_mut().for_each(|c| *c /= acc);
    density.iter_mut().for_each(|d| *d /= acc);
    let grid = (0..=cells).map(|i| i as f64 * h).collect();
    Ok(HeatRadialDistribution {
        n,
        t,
        truncation,
        grid,
        cdf,
        density,
    })
}

impl HeatRadialDistribution {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn truncation_degree(&self) -> usize {
        self.truncation
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    /// CDF at an arbitrary angle, interpolated linearly between cells.
    pub fn cdf_at(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r >= PI {
            return 1.0;
        }
        let h = self.grid[1];
        let c = ((r / h) as usize).min(self.grid.len() - 2);
        let frac = (r - self.grid[c]) / h;
        self.cdf[c] + frac * (self.cdf[c + 1] - self.cdf[c])
    }

    /// `E[g(r)]` by Simpson's rule on the tabulated density.
    pub fn expectation(&self, g: impl Fn(f64) -> f64) -> f64 {
        let h = self.grid[1];
        let cells = self.grid.len() - 1;
        (0..cells)
            .map(|c| {
                let r = self.grid[c];
                h / 6.0
                    * (self.density[2 * c] * g(r)
                        + 4.0 * self.density[2 * c + 1] * g(r + h / 2.0)
                        + self.density[2 * c + 2] * g(r + h))
            })
            .sum()
    }

    /// Inverse-CDF sample with linear interpolation inside a cell.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let c = self.cdf.partition_point(|&v| v <= u).clamp(1, self.cdf.len() - 1) - 1;
        let (lo, hi) = (self.cdf[c], self.cdf[c + 1]);
        let frac = if hi > lo { (u - lo) / (hi - lo) } else { 0.5 };
        (self.grid[c] + frac * (self.grid[c + 1] - self.grid[c])).clamp(0.0, PI)
    }
}

/// Euler-type integration of the Jacobi angle `dr = (n−2) cot r dt + √2 dW`
/// from `r = 0`.
///
/// Each step moves the distance to the nearer pole by an exact step of the
/// `(n−1)`-dimensional Bessel process and then adds the drift difference
/// `(n−2)(cot s − 1/s) dt`. Reflection keeps the angle in `[0, π]`.
pub fn simulate_jacobi_angle<R: Rng + ?Sized>(n: usize, t: f64, dt: f64, rng: &mut R) -> Result<f64> {
    let chi = jacobi_check(n, t, dt)?;
    let Some(chi) = chi else { return Ok(0.0) };
    jacobi_path(n, t, dt, &chi, rng)
}

fn jacobi_check(n: usize, t: f64, dt: f64) -> Result<Option<ChiSquared<f64>>> {
    if n < 3 {
        return Err(Error::Dimension {
            n,
            reason: "the Jacobi angle needs n >= 3",
        });
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::OutOfRange {
            name: "t",
            value: t,
            expected: "finite t >= 0",
        });
    }
    if t == 0.0 {
        return Ok(None);
    }
    if dt.is_nan() || dt <= 0.0 || dt > t / 100.0 {
        return Err(Error::OutOfRange {
            name: "dt",
            value: dt,
            expected: "0 < dt <= t/100",
        });
    }
    ChiSquared::new((n - 2) as f64)
        .map(Some)
        .map_err(|e| Error::Numerical(e.to_string()))
}

fn jacobi_path<R: Rng + ?Sized>(n: usize, t: f64, dt: f64, chi: &ChiSquared<f64>, rng: &mut R) -> Result<f64> {
    let drift = (n - 2) as f64;
    let mut r = 0.0f64;
    let mut elapsed = 0.0;
    while elapsed < t {
        let h = dt.min(t - elapsed);
        elapsed += h;
        let flip = r > PI / 2.0;
        let s = if flip { PI - r } else { r };
        let sigma = (2.0 * h).sqrt();
        let g: f64 = rng.sample(StandardNormal);
        let x: f64 = chi.sample(rng);
        let bessel = ((s + sigma * g).powi(2) + sigma * sigma * x).sqrt();
        let correction = if s > 1e-8 { 1.0 / s.tan() - 1.0 / s } else { -s / 3.0 };
        let mut s_new = bessel + drift * correction * h;
        if s_new < 0.0 {
            s_new = -s_new;
        }
        r = if flip { PI - s_new } else { s_new };
        if r < 0.0 {
            r = -r;
        }
        if r > PI {
            r = 2.0 * PI - r;
        }
        if !r.is_finite() || !(0.0..=PI).contains(&r) {
            return Err(Error::Unstable(format!(
                "Jacobi angle left [0, π] at time {elapsed} (r = {r}); reduce dt"
            )));
        }
    }
    Ok(r)
}

/// Angle sampler: the tabulated series when `t ≥ t_min(n)`, otherwise the
/// SDE with step `t/1000`.
#[derive(Debug, Clone)]
pub enum HeatSampler {
    /// `t = 0`: the particle does not move.
    Still,
    Series(HeatRadialDistribution),
    Sde { n: usize, t: f64, dt: f64, chi: ChiSquared<f64> },
}

impl HeatSampler {
    pub fn new(n: usize, t: f64) -> Result<Self> {
        if t == 0.0 && n >= 3 {
            return Ok(HeatSampler::Still);
        }
        match build_heat_distribution(n, t, HEAT_TOL) {
            Ok(dist) => Ok(HeatSampler::Series(dist)),
            Err(Error::HeatTimeTooSmall { .. }) => Self::sde(n, t, t / 1000.0),
            Err(e) => Err(e),
        }
    }

    pub fn sde(n: usize, t: f64, dt: f64) -> Result<Self> {
        match jacobi_check(n, t, dt)? {
            None => Ok(HeatSampler::Still),
            Some(chi) => Ok(HeatSampler::Sde { n, t, dt, chi }),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match self {
            HeatSampler::Still => Ok(0.0),
            HeatSampler::Series(d) => Ok(d.sample(rng)),
            HeatSampler::Sde { n, t, dt, chi } => jacobi_path(*n, *t, *dt, chi, rng),
        }
    }
}
