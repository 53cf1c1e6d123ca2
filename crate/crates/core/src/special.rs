//! Special functions for harmonic analysis on `S_{n-1}`.
//!
//! Everything here is parametrized by the ambient dimension `n ≥ 3` and the
//! Gegenbauer index `α = n/2 − 1`. Zonal functions on the sphere are
//! functions of `z = η·x ∈ [−1, 1]`, integrated against the normalized weight
//! `w_α(z) = (1 − z²)^{α − 1/2}`.

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

use crate::{Error, Result};

/// Slack allowed on `|z| ≤ 1` before an argument is rejected; dot products of
/// unit vectors routinely land a few ulps outside the interval.
const UNIT_INTERVAL_SLACK: f64 = 1e-12;

/// Node count [`integrate_zonal`] starts from.
pub const DEFAULT_QUADRATURE_POINTS: usize = 64;

/// Exact binomial coefficient `C(m, k)`, `None` on overflow. `k > m` gives 0.
pub fn binomial(m: u64, k: u64) -> Option<u128> {
    if k > m {
        return Some(0);
    }
    let k = k.min(m - k);
    let mut c: u128 = 1;
    for i in 1..=k as u128 {
        // c * (m - k + i) is divisible by i at every step.
        c = c.checked_mul(m as u128 - k as u128 + i)? / i;
    }
    Some(c)
}

fn check_dimension(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::Dimension {
            n,
            reason: "harmonic dimension formula needs n >= 3",
        });
    }
    Ok(())
}

/// Both closed forms for the dimension of degree-`ell` harmonics in `n`
/// variables: `C(n+ℓ−1, ℓ) − C(n+ℓ−3, ℓ−2)` and `(n+2ℓ−2)/(n−2)·C(n+ℓ−3, ℓ)`.
pub fn harmonic_dimension_forms(n: usize, ell: usize) -> Result<(u128, u128)> {
    check_dimension(n)?;
    let (n, l) = (n as u64, ell as u64);
    let overflow = || Error::Overflow("harmonic dimension");
    let total = binomial(n + l - 1, l).ok_or_else(overflow)?;
    let shifted = if l >= 2 {
        binomial(n + l - 3, l - 2).ok_or_else(overflow)?
    } else {
        0
    };
    let difference = total - shifted;
    let ratio = binomial(n + l - 3, l)
        .ok_or_else(overflow)?
        .checked_mul((n + 2 * l - 2) as u128)
        .ok_or_else(overflow)?;
    let quotient = ratio / (n - 2) as u128;
    if quotient * (n - 2) as u128 != ratio {
        return Err(Error::Numerical(format!(
            "(n+2l-2) C(n+l-3, l) not divisible by n-2 for n = {n}, l = {l}"
        )));
    }
    Ok((difference, quotient))
}

/// Dimension `d_ℓ` of the space of degree-`ell` spherical harmonics on `S_{n-1}`,
/// in exact integer arithmetic.
pub fn harmonic_dimension(n: usize, ell: usize) -> Result<u128> {
    let (a, b) = harmonic_dimension_forms(n, ell)?;
    if a != b {
        return Err(Error::Numerical(format!(
            "dimension forms disagree for n = {n}, l = {ell}: {a} vs {b}"
        )));
    }
    Ok(a)
}

/// `ln d_ℓ`, valid for large `ell` where [`harmonic_dimension`] overflows.
pub fn ln_harmonic_dimension(n: usize, ell: usize) -> f64 {
    debug_assert!(n >= 3);
    if ell == 0 {
        return 0.0;
    }
    let (n, l) = (n as f64, ell as f64);
    ((n + 2.0 * l - 2.0) / (n - 2.0)).ln() + ln_gamma(n + l - 2.0)
        - ln_gamma(l + 1.0)
        - ln_gamma(n - 2.0)
}

/// Surface area `Ω_{n−1} = 2π^{n/2}/Γ(n/2)` of the unit sphere in `R^n`.
pub fn sphere_surface_area(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Dimension {
            n,
            reason: "sphere surface area needs n >= 2",
        });
    }
    Ok(ln_sphere_surface_area(n).exp())
}

fn ln_sphere_surface_area(n: usize) -> f64 {
    let half = n as f64 / 2.0;
    2f64.ln() + half * PI.ln() - ln_gamma(half)
}

/// Kravchuk polynomial `κ_k(h) = Σ_j (−1)^j C(k, j) C(n−k, h−j)`.
///
/// Equals the sum of a weight-`k` character over the Hamming sphere of
/// radius `h` in `Z_2^n`.
pub fn kravchuk(n: usize, k: usize, h: usize) -> Result<i128> {
    if k > n || h > n {
        return Err(Error::OutOfRange {
            name: if k > n { "k" } else { "h" },
            value: k.max(h) as f64,
            expected: "0 <= k, h <= n",
        });
    }
    let mut sum: i128 = 0;
    for j in 0..=k.min(h) {
        let a = binomial(k as u64, j as u64).ok_or(Error::Overflow("kravchuk"))?;
        let b = binomial((n - k) as u64, (h - j) as u64).ok_or(Error::Overflow("kravchuk"))?;
        let term = i128::try_from(a.checked_mul(b).ok_or(Error::Overflow("kravchuk"))?)
            .map_err(|_| Error::Overflow("kravchuk"))?;
        if j % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    Ok(sum)
}

/// Monic three-term recurrence coefficient `β_ℓ` for Gegenbauer index `alpha`:
/// `p_{ℓ+1}(z) = z p_ℓ(z) − β_ℓ p_{ℓ−1}(z)`.
fn monic_beta(alpha: f64, ell: usize) -> f64 {
    let l = ell as f64;
    l * (l + 2.0 * alpha - 1.0) / (4.0 * (l + alpha) * (l + alpha - 1.0))
}

/// Normalized zonal polynomials `γ_0..γ_L` for a fixed dimension.
///
/// `γ_ℓ = G^{(ℓ)}/√N^{(ℓ)}` where `G^{(ℓ)}` is the Gegenbauer polynomial of
/// index `α` and `N^{(ℓ)} = α/(α+ℓ)·C(2α+ℓ−1, ℓ)` its squared norm under the
/// normalized zonal inner product. Evaluation runs the orthonormal
/// three-term recurrence, so no `G^{(ℓ)}` or `N^{(ℓ)}` is ever formed.
#[derive(Debug, Clone, PartialEq)]
pub struct GegenbauerBasis {
    n: usize,
    alpha: f64,
    max_degree: usize,
    /// `(a_ℓ, b_ℓ, c_ℓ)` with `γ_{ℓ+1} = (a_ℓ z + b_ℓ) γ_ℓ − c_ℓ γ_{ℓ−1}`.
    recurrence: Vec<[f64; 3]>,
    norms: Vec<f64>,
}

impl GegenbauerBasis {
    pub fn new(n: usize, max_degree: usize) -> Result<Self> {
        check_dimension(n)?;
        let alpha = n as f64 / 2.0 - 1.0;
        // Off-diagonal entries of the Jacobi matrix, indexed by ℓ ≥ 1.
        let offdiag = |ell: usize| monic_beta(alpha, ell).sqrt();
        let recurrence = (0..max_degree)
            .map(|ell| {
                let next = offdiag(ell + 1);
                let prev = if ell == 0 { 0.0 } else { offdiag(ell) };
                [1.0 / next, 0.0, prev / next]
            })
            .collect();
        let norms = (0..=max_degree)
            .map(|ell| {
                // C(2α+ℓ−1, ℓ) as a product of small ratios.
                let binom: f64 = (1..=ell)
                    .map(|i| (2.0 * alpha + i as f64 - 1.0) / i as f64)
                    .product();
                alpha / (alpha + ell as f64) * binom
            })
            .collect();
        Ok(GegenbauerBasis {
            n,
            alpha,
            max_degree,
            recurrence,
            norms,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn recurrence_coeffs(&self) -> &[[f64; 3]] {
        &self.recurrence
    }

    /// `N^{(ℓ)}` for `ℓ = 0..=L`.
    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    fn check_z(z: f64) -> Result<f64> {
        if !z.is_finite() || z.abs() > 1.0 + UNIT_INTERVAL_SLACK {
            return Err(Error::OutOfRange {
                name: "z",
                value: z,
                expected: "|z| <= 1",
            });
        }
        Ok(z.clamp(-1.0, 1.0))
    }

    /// `γ_ℓ(z)`.
    pub fn eval(&self, ell: usize, z: f64) -> Result<f64> {
        if ell > self.max_degree {
            return Err(Error::OutOfRange {
                name: "ell",
                value: ell as f64,
                expected: "ell <= max_degree",
            });
        }
        let z = Self::check_z(z)?;
        let (mut prev, mut cur) = (0.0, 1.0);
        for &[a, b, c] in &self.recurrence[..ell] {
            let next = (a * z + b) * cur - c * prev;
            prev = cur;
            cur = next;
        }
        Ok(cur)
    }

    /// Writes `γ_0(z), …, γ_L(z)` into `out` (length `L + 1`).
    pub fn eval_all(&self, z: f64, out: &mut [f64]) -> Result<()> {
        if out.len() != self.max_degree + 1 {
            return Err(Error::LengthMismatch {
                expected: self.max_degree + 1,
                got: out.len(),
            });
        }
        let z = Self::check_z(z)?;
        out[0] = 1.0;
        let (mut prev, mut cur) = (0.0, 1.0);
        for (ell, &[a, b, c]) in self.recurrence.iter().enumerate() {
            let next = (a * z + b) * cur - c * prev;
            prev = cur;
            cur = next;
            out[ell + 1] = cur;
        }
        Ok(())
    }
}

/// Truncated zonal heat kernel `Σ_{ℓ≤L} e^{−tℓ(n+ℓ−2)} √d_ℓ γ_ℓ(z)`, the
/// density (relative to the uniform measure) of a Brownian particle started
/// at the pole, at latitude `z` after time `t`.
pub fn heat_kernel_series(basis: &GegenbauerBasis, t: f64, z: f64) -> Result<f64> {
    let mut gammas = vec![0.0; basis.max_degree() + 1];
    basis.eval_all(z, &mut gammas)?;
    let n = basis.n();
    Ok(gammas
        .iter()
        .enumerate()
        .map(|(ell, g)| heat_weight(n, t, ell) * g)
        .sum())
}

/// `e^{−tℓ(n+ℓ−2)} √d_ℓ`.
pub(crate) fn heat_weight(n: usize, t: f64, ell: usize) -> f64 {
    let l = ell as f64;
    (-t * l * (n as f64 + l - 2.0) + 0.5 * ln_harmonic_dimension(n, ell)).exp()
}

/// Gauss–Jacobi rule for the zonal inner product on `S_{n−1}`.
///
/// Weights are normalized to sum to one, i.e. they already include the
/// `Ω_{n−2}/Ω_{n−1}` factor, so `integrate(f)` approximates `⟨f, 1⟩_S`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub n: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Highest polynomial degree integrated exactly.
    pub fn degree(&self) -> usize {
        2 * self.nodes.len() - 1
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * f(z))
            .sum()
    }

    /// `⟨f, g⟩_S` for zonal `f` and `g`.
    pub fn inner(&self, f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64) -> f64 {
        self.integrate(|z| f(z) * g(z))
    }
}

const GOLUB_WELSCH_MAX_ITERATIONS: usize = 10_000;

/// Golub–Welsch construction of the `points`-node rule for weight
/// `(1 − z²)^{α−1/2}`, `α = n/2 − 1`.
pub fn gauss_jacobi_rule(n: usize, points: usize) -> Result<QuadratureRule> {
    check_dimension(n)?;
    if points == 0 {
        return Err(Error::OutOfRange {
            name: "points",
            value: 0.0,
            expected: "points >= 1",
        });
    }
    let alpha = n as f64 / 2.0 - 1.0;
    let jacobi = DMatrix::from_fn(points, points, |i, j| {
        if i.abs_diff(j) == 1 {
            monic_beta(alpha, i.max(j)).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::try_new(jacobi, f64::EPSILON, GOLUB_WELSCH_MAX_ITERATIONS).ok_or(
        Error::NoConvergence {
            iterations: GOLUB_WELSCH_MAX_ITERATIONS,
        },
    )?;
    let mut pairs: Vec<(f64, f64)> = (0..points)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    Ok(QuadratureRule {
        n,
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1 / total).collect(),
    })
}

/// `⟨f, 1⟩_S` for a zonal integrand, doubling the node count from
/// [`DEFAULT_QUADRATURE_POINTS`] until two successive rules agree to `tol`.
pub fn integrate_zonal(n: usize, f: impl Fn(f64) -> f64, tol: f64) -> Result<f64> {
    const MAX_POINTS: usize = 1024;
    let mut points = DEFAULT_QUADRATURE_POINTS;
    let mut previous = gauss_jacobi_rule(n, points)?.integrate(&f);
    while points < MAX_POINTS {
        points *= 2;
        let current = gauss_jacobi_rule(n, points)?.integrate(&f);
        if (current - previous).abs() <= tol * current.abs().max(1.0) {
            return Ok(current);
        }
        previous = current;
    }
    Err(Error::Numerical(format!(
        "zonal quadrature did not settle to {tol:e} with {MAX_POINTS} nodes"
    )))
}
