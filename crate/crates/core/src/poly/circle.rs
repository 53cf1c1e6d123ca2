//! Restriction of a polynomial to a great circle and root counting there.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::SparsePolynomial;
use crate::special::binomial;
use crate::{Error, Result};

const FRAME_TOL: f64 = 1e-10;

/// Grid size of the sign-change scan that cross-checks the eigenvalue count.
pub const SIGN_SCAN_POINTS: usize = 4096;

/// `θ ↦ p(u cos θ + w sin θ)` for an orthonormal pair `u, w`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleRestriction {
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    /// Total degree bound `d` of the restriction.
    pub degree: usize,
    /// `cos_sin[i][j]` is the coefficient of `cos^i θ · sin^j θ`.
    pub cos_sin: Vec<Vec<f64>>,
    /// Coefficient of `e^{ikθ}` at index `k + d`, for `k = −d..=d`.
    pub fourier: Vec<Complex64>,
}

impl CircleRestriction {
    /// Evaluates the trigonometric form at `θ`.
    pub fn eval(&self, theta: f64) -> f64 {
        let d = self.degree as i64;
        self.fourier
            .iter()
            .enumerate()
            .map(|(idx, a)| {
                let k = idx as i64 - d;
                (a * Complex64::from_polar(1.0, k as f64 * theta)).re
            })
            .sum()
    }

    /// Evaluates the `(cos, sin)` form at `θ`.
    pub fn eval_cos_sin(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        let mut total = 0.0;
        for (i, row) in self.cos_sin.iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                if a != 0.0 {
                    total += a * c.powi(i as i32) * s.powi(j as i32);
                }
            }
        }
        total
    }

    /// The point `u cos θ + w sin θ`.
    pub fn point(&self, theta: f64) -> Vec<f64> {
        let (s, c) = theta.sin_cos();
        self.u.iter().zip(&self.w).map(|(a, b)| a * c + b * s).collect()
    }

    pub fn max_abs_fourier(&self) -> f64 {
        self.fourier.iter().fold(0.0, |m, a| m.max(a.norm()))
    }
}

/// Substitutes `x ← u cos θ + w sin θ` into `p`.
pub fn restrict_to_great_circle(p: &SparsePolynomial, u: &[f64], w: &[f64]) -> Result<CircleRestriction> {
    let n = p.n();
    for v in [u, w] {
        if v.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: v.len(),
            });
        }
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let deviation = (dot(u, u) - 1.0)
        .abs()
        .max((dot(w, w) - 1.0).abs())
        .max(dot(u, w).abs());
    if deviation > FRAME_TOL {
        return Err(Error::NotOrthonormal { deviation });
    }
    let d = p.degree();
    let mut cos_sin = vec![vec![0.0; d + 1]; d + 1];
    for (e, &c) in p.terms() {
        // Homogeneous (cos, sin) polynomial of degree |e|, indexed by sin power.
        let mut acc = vec![c];
        for (i, &k) in e.iter().enumerate() {
            for _ in 0..k {
                let mut next = vec![0.0; acc.len() + 1];
                for (j, &a) in acc.iter().enumerate() {
                    next[j] += a * u[i];
                    next[j + 1] += a * w[i];
                }
                acc = next;
            }
        }
        let m = acc.len() - 1;
        for (j, a) in acc.into_iter().enumerate() {
            cos_sin[m - j][j] += a;
        }
    }
    let fourier = cos_sin_to_fourier(&cos_sin, d);
    Ok(CircleRestriction {
        u: u.to_vec(),
        w: w.to_vec(),
        degree: d,
        cos_sin,
        fourier,
    })
}

/// `cos^i sin^j = ((z + 1/z)/2)^i ((z − 1/z)/2i)^j` with `z = e^{iθ}`.
fn cos_sin_to_fourier(cos_sin: &[Vec<f64>], d: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); 2 * d + 1];
    let minus_i = Complex64::new(0.0, -1.0);
    for (i, row) in cos_sin.iter().enumerate() {
        for (j, &a) in row.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let scale = a / 2f64.powi((i + j) as i32) * minus_i.powi(j as i32);
            for ai in 0..=i {
                let ci = binomial(i as u64, ai as u64).unwrap() as f64;
                for bj in 0..=j {
                    let cj = binomial(j as u64, bj as u64).unwrap() as f64;
                    let sign = if bj % 2 == 0 { 1.0 } else { -1.0 };
                    let k = i as i64 - 2 * ai as i64 + j as i64 - 2 * bj as i64;
                    out[(k + d as i64) as usize] += scale * (ci * cj * sign);
                }
            }
        }
    }
    out
}

/// Outcome of [`count_circle_roots`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CircleRoots {
    /// The restriction vanishes identically on the circle.
    Vanishes,
    Finite {
        /// Companion-matrix eigenvalues within tolerance of the unit circle,
        /// counted with multiplicity.
        roots: usize,
        /// Sign changes on a uniform [`SIGN_SCAN_POINTS`] grid; a lower
        /// bound on the number of distinct roots.
        sign_changes: usize,
    },
}

impl CircleRoots {
    pub fn roots(&self) -> Option<usize> {
        match self {
            CircleRoots::Vanishes => None,
            CircleRoots::Finite { roots, .. } => Some(*roots),
        }
    }

    /// False when the grid scan saw more crossings than the eigenvalue
    /// method found roots.
    pub fn is_consistent(&self) -> bool {
        match self {
            CircleRoots::Vanishes => true,
            CircleRoots::Finite { roots, sign_changes } => sign_changes <= roots,
        }
    }
}

/// Counts zeros of the restriction on `[0, 2π)`.
///
/// `Σ_{k=−K}^{K} a_k z^k` is multiplied through by `z^K`; roots of the
/// resulting degree-`2K` polynomial on `|z| = 1` are the zeros `z = e^{iθ}`.
pub fn count_circle_roots(restriction: &CircleRestriction, tol: f64) -> Result<CircleRoots> {
    let scale = restriction.max_abs_fourier();
    if scale <= tol {
        return Ok(CircleRoots::Vanishes);
    }
    let d = restriction.degree;
    let coeffs: Vec<Complex64> = restriction.fourier.iter().map(|a| a / scale).collect();
    // Effective degree: the conjugate symmetry a_{−k} = conj(a_k) trims both ends alike.
    let top = (0..=d)
        .rev()
        .find(|&k| coeffs[d + k].norm() > 1e-13)
        .unwrap_or(0);
    let sign_changes = sign_changes(restriction);
    if top == 0 {
        return Ok(CircleRoots::Finite {
            roots: 0,
            sign_changes,
        });
    }
    // Monic polynomial in z of degree 2·top, coefficients low to high.
    let poly: Vec<Complex64> = (0..=2 * top).map(|i| coeffs[d - top + i]).collect();
    let lead = poly[2 * top];
    let m = 2 * top;
    let mut companion = DMatrix::<Complex64>::zeros(m, m);
    for i in 1..m {
        companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..m {
        companion[(i, m - 1)] = -poly[i] / lead;
    }
    let eigenvalues = companion
        .eigenvalues()
        .ok_or_else(|| Error::Numerical("companion eigenvalue solve failed".into()))?;
    let roots = eigenvalues
        .iter()
        .filter(|z| (z.norm() - 1.0).abs() <= tol)
        .count();
    Ok(CircleRoots::Finite {
        roots,
        sign_changes,
    })
}

fn sign_changes(restriction: &CircleRestriction) -> usize {
    let values: Vec<f64> = (0..SIGN_SCAN_POINTS)
        .map(|i| restriction.eval(2.0 * std::f64::consts::PI * i as f64 / SIGN_SCAN_POINTS as f64))
        .collect();
    (0..SIGN_SCAN_POINTS)
        .filter(|&i| {
            let (a, b) = (values[i], values[(i + 1) % SIGN_SCAN_POINTS]);
            (a < 0.0) != (b < 0.0)
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::random_polynomial;
    use crate::sphere::{haar_rotation, sample_uniform_sphere};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn e(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    #[test]
    fn coordinate_restrictions() {
        let n = 3;
        let (u, w) = (e(n, 0), e(n, 1));
        let r = restrict_to_great_circle(&SparsePolynomial::variable(n, 0), &u, &w).unwrap();
        for theta in [0.0, 0.4, 2.0, 5.0] {
            assert!((r.eval(theta) - theta.cos()).abs() < 1e-15);
        }
        assert_eq!(count_circle_roots(&r, 1e-8).unwrap().roots(), Some(2));

        let prod = SparsePolynomial::monomial(n, &[1, 1, 0], 1.0);
        let r = restrict_to_great_circle(&prod, &u, &w).unwrap();
        for theta in [0.3, 1.1, 4.0] {
            assert!((r.eval(theta) - 0.5 * (2.0 * theta).sin()).abs() < 1e-15);
        }
        assert_eq!(count_circle_roots(&r, 1e-8).unwrap().roots(), Some(4));

        let c = restrict_to_great_circle(&SparsePolynomial::constant(n, 2.0), &u, &w).unwrap();
        assert!((c.eval(1.234) - 2.0).abs() < 1e-15);
        assert_eq!(count_circle_roots(&c, 1e-8).unwrap().roots(), Some(0));
    }

    #[test]
    fn vanishing_restriction_is_distinct() {
        let n = 3;
        let x3 = SparsePolynomial::variable(n, 2);
        let r = restrict_to_great_circle(&x3, &e(n, 0), &e(n, 1)).unwrap();
        assert_eq!(count_circle_roots(&r, 1e-8).unwrap(), CircleRoots::Vanishes);
        // x1² + x2² − 1 vanishes on the (1,2) circle.
        let circle = &(&SparsePolynomial::monomial(n, &[2, 0, 0], 1.0)
            + &SparsePolynomial::monomial(n, &[0, 2, 0], 1.0))
            - &SparsePolynomial::constant(n, 1.0);
        let r = restrict_to_great_circle(&circle, &e(n, 0), &e(n, 1)).unwrap();
        assert_eq!(count_circle_roots(&r, 1e-8).unwrap(), CircleRoots::Vanishes);
    }

    #[test]
    fn rejects_bad_frames() {
        let p = SparsePolynomial::variable(3, 0);
        assert!(restrict_to_great_circle(&p, &[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).is_err());
        assert!(restrict_to_great_circle(&p, &[2.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).is_err());
        assert!(restrict_to_great_circle(&p, &[1.0, 0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn forms_agree_with_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for trial in 0..30 {
            let n = 3 + trial % 5;
            let p = random_polynomial(n, 1 + trial % 5, &mut rng);
            let r = haar_rotation(n, &mut rng);
            let u = r.column(0);
            let w = r.column(1);
            let c = restrict_to_great_circle(&p, &u, &w).unwrap();
            for _ in 0..10 {
                let theta = rng.random_range(0.0..std::f64::consts::TAU);
                let direct = p.eval(&c.point(theta)).unwrap();
                assert!((c.eval(theta) - direct).abs() < 1e-10 * (1.0 + direct.abs()));
                assert!((c.eval_cos_sin(theta) - direct).abs() < 1e-10 * (1.0 + direct.abs()));
            }
        }
    }

    #[test]
    fn root_count_bounded_by_twice_degree() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for trial in 0..200 {
            let n = 3 + trial % 8;
            let d = 1 + trial % 5;
            let p = random_polynomial(n, d, &mut rng);
            let u = sample_uniform_sphere(n, &mut rng);
            let g = sample_uniform_sphere(n, &mut rng);
            let dot: f64 = u.iter().zip(&g).map(|(a, b)| a * b).sum();
            let mut w: Vec<f64> = g.iter().zip(&u).map(|(gi, ui)| gi - dot * ui).collect();
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            w.iter_mut().for_each(|v| *v /= norm);
            let c = restrict_to_great_circle(&p, &u, &w).unwrap();
            match count_circle_roots(&c, 1e-8).unwrap() {
                CircleRoots::Vanishes => panic!("random polynomial vanished on a circle"),
                CircleRoots::Finite { roots, sign_changes } => {
                    assert!(roots <= 2 * d);
                    assert!(sign_changes <= 2 * d);
                }
            }
        }
    }
}
