//! Sparse multivariate polynomials over `f64`.
//!
//! A [`SparsePolynomial`] maps exponent vectors to coefficients. Terms with
//! a zero coefficient are never stored. Maps are ordered, so iteration and
//! serialization are deterministic.

mod circle;
mod harmonic;
mod json;

pub use circle::{count_circle_roots, restrict_to_great_circle, CircleRestriction, CircleRoots};
pub use harmonic::{
    harmonic_decompose, sphere_inner, sphere_monomial_moment, sphere_norm_squared,
    HarmonicDecomposition,
};
pub use json::{from_json, to_json};

use rand::Rng;
use rand_distr::StandardNormal;
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use crate::sphere::Rotation;
use crate::{Error, Result};

/// Limit on `C(n+d, d) · n^d` for symbolic rotation.
pub const ROTATION_BUDGET: u128 = 2_000_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SparsePolynomial {
    n: usize,
    terms: BTreeMap<Vec<u32>, f64>,
    degree: u32,
}

impl SparsePolynomial {
    pub fn zero(n: usize) -> Self {
        SparsePolynomial {
            n,
            terms: BTreeMap::new(),
            degree: 0,
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::monomial(n, &vec![0; n], c)
    }

    /// The coordinate function `x_i` (zero-based).
    pub fn variable(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Self::monomial(n, &e, 1.0)
    }

    pub fn monomial(n: usize, exps: &[u32], c: f64) -> Self {
        assert_eq!(exps.len(), n, "exponent vector length must equal n");
        let mut p = Self::zero(n);
        p.add_term(exps.to_vec(), c);
        p
    }

    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (Vec<u32>, f64)>) -> Result<Self> {
        let mut p = Self::zero(n);
        for (e, c) in terms {
            if e.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: e.len(),
                });
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    /// `|x|² = Σ x_i²`.
    pub fn norm_squared_form(n: usize) -> Self {
        let mut p = Self::zero(n);
        for i in 0..n {
            let mut e = vec![0; n];
            e[i] = 2;
            p.add_term(e, 1.0);
        }
        p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree as usize
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, f64> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, exps: &[u32]) -> f64 {
        self.terms.get(exps).copied().unwrap_or(0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Adds `c · x^exps`, dropping the term if it cancels to zero.
    pub fn add_term(&mut self, exps: Vec<u32>, c: f64) {
        debug_assert_eq!(exps.len(), self.n);
        if c == 0.0 {
            return;
        }
        let total: u32 = exps.iter().sum();
        let entry = self.terms.entry(exps).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.retain(|_, v| *v != 0.0);
            self.recompute_degree();
        } else {
            self.degree = self.degree.max(total);
        }
    }

    fn recompute_degree(&mut self) {
        self.degree = self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0);
    }

    /// Drops terms with `|c| ≤ tol · max|c|`.
    pub fn prune(&mut self, rel_tol: f64) {
        let cut = rel_tol * self.max_abs_coeff();
        self.terms.retain(|_, c| c.abs() > cut);
        self.recompute_degree();
    }

    pub fn scale(&self, s: f64) -> Self {
        if s == 0.0 {
            return Self::zero(self.n);
        }
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= s;
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    /// Direct term sum; `x.len()` must equal `n`.
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(x)
                    .filter(|(&k, _)| k > 0)
                    .fold(*c, |acc, (&k, &xi)| acc * xi.powi(k as i32))
            })
            .sum()
    }

    /// Terms of total degree exactly `m`.
    pub fn homogeneous_component(&self, m: usize) -> Self {
        let mut out = Self::zero(self.n);
        for (e, &c) in &self.terms {
            if e.iter().sum::<u32>() as usize == m {
                out.add_term(e.clone(), c);
            }
        }
        out
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degrees = self.terms.keys().map(|e| e.iter().sum::<u32>());
        match degrees.next() {
            None => true,
            Some(first) => degrees.all(|d| d == first),
        }
    }

    /// `∂p/∂x_i`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.n);
        for (e, &c) in &self.terms {
            if e[i] > 0 {
                let mut f = e.clone();
                f[i] -= 1;
                out.add_term(f, c * e[i] as f64);
            }
        }
        out
    }

    /// `Δp = Σ_i ∂²p/∂x_i²`.
    pub fn laplacian(&self) -> Self {
        let mut out = Self::zero(self.n);
        for (e, &c) in &self.terms {
            for i in 0..self.n {
                if e[i] >= 2 {
                    let mut f = e.clone();
                    f[i] -= 2;
                    out.add_term(f, c * (e[i] * (e[i] - 1)) as f64);
                }
            }
        }
        out
    }

    /// Euler operator `Σ_i x_i ∂_i`, which scales each degree-`m` term by `m`.
    pub fn euler(&self) -> Self {
        let mut out = Self::zero(self.n);
        for (e, &c) in &self.terms {
            out.add_term(e.clone(), c * e.iter().sum::<u32>() as f64);
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::constant(self.n, 1.0);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// `Rp(x) = p(Rᵀx)`, by symbolic substitution `x_i ← Σ_j R_{ji} x_j`.
    pub fn rotate(&self, rotation: &Rotation) -> Result<Self> {
        if rotation.n() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: rotation.n(),
            });
        }
        let deviation = rotation.orthogonality_deviation();
        if deviation > 1e-8 {
            return Err(Error::NotOrthogonal { deviation });
        }
        let d = self.degree();
        let cost = (self.len() as u128).saturating_mul((self.n as u128).saturating_pow(d as u32));
        if cost > ROTATION_BUDGET {
            return Err(Error::Budget {
                what: "polynomial rotation",
                needed: cost,
                limit: ROTATION_BUDGET,
            });
        }
        let m = rotation.matrix();
        let linear: Vec<Self> = (0..self.n)
            .map(|i| {
                let mut l = Self::zero(self.n);
                for j in 0..self.n {
                    let mut e = vec![0; self.n];
                    e[j] = 1;
                    l.add_term(e, m[(j, i)]);
                }
                l
            })
            .collect();
        // powers[i][k] = L_i^k
        let powers: Vec<Vec<Self>> = linear
            .iter()
            .map(|l| {
                let mut v = vec![Self::constant(self.n, 1.0)];
                for k in 1..=d {
                    let next = &v[k - 1] * l;
                    v.push(next);
                }
                v
            })
            .collect();
        let mut out = Self::zero(self.n);
        for (e, &c) in &self.terms {
            let mut term = Self::constant(self.n, c);
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    term = &term * &powers[i][k as usize];
                }
            }
            for (e, c) in term.terms {
                out.add_term(e, c);
            }
        }
        Ok(out)
    }

    /// Flattened form for fast repeated evaluation.
    pub fn compile(&self) -> CompiledPolynomial {
        let mut factors = Vec::new();
        let mut terms = Vec::with_capacity(self.terms.len());
        for (e, &c) in &self.terms {
            let start = factors.len();
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    factors.push((i as u32, k));
                }
            }
            terms.push((c, start, factors.len()));
        }
        let max_exp = self.terms.keys().flat_map(|e| e.iter().copied()).max().unwrap_or(0);
        CompiledPolynomial {
            n: self.n,
            max_exp: max_exp as usize,
            terms,
            factors,
        }
    }
}

/// A polynomial laid out for repeated evaluation with a power table.
#[derive(Debug, Clone)]
pub struct CompiledPolynomial {
    n: usize,
    max_exp: usize,
    terms: Vec<(f64, usize, usize)>,
    factors: Vec<(u32, u32)>,
}

impl CompiledPolynomial {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Scratch buffer length needed by [`eval_with`](Self::eval_with).
    pub fn scratch_len(&self) -> usize {
        self.n * (self.max_exp + 1)
    }

    pub fn eval_with(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        let stride = self.max_exp + 1;
        for (i, &xi) in x.iter().enumerate() {
            let row = &mut scratch[i * stride..(i + 1) * stride];
            row[0] = 1.0;
            for k in 1..stride {
                row[k] = row[k - 1] * xi;
            }
        }
        self.terms
            .iter()
            .map(|&(c, a, b)| {
                self.factors[a..b]
                    .iter()
                    .fold(c, |acc, &(i, k)| acc * scratch[i as usize * stride + k as usize])
            })
            .sum()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut scratch = vec![0.0; self.scratch_len()];
        self.eval_with(x, &mut scratch)
    }
}

impl Add for &SparsePolynomial {
    type Output = SparsePolynomial;

    fn add(self, rhs: &SparsePolynomial) -> SparsePolynomial {
        assert_eq!(self.n, rhs.n);
        let mut out = self.clone();
        for (e, &c) in &rhs.terms {
            out.add_term(e.clone(), c);
        }
        out
    }
}

impl Sub for &SparsePolynomial {
    type Output = SparsePolynomial;

    fn sub(self, rhs: &SparsePolynomial) -> SparsePolynomial {
        assert_eq!(self.n, rhs.n);
        let mut out = self.clone();
        for (e, &c) in &rhs.terms {
            out.add_term(e.clone(), -c);
        }
        out
    }
}

impl Mul for &SparsePolynomial {
    type Output = SparsePolynomial;

    fn mul(self, rhs: &SparsePolynomial) -> SparsePolynomial {
        assert_eq!(self.n, rhs.n);
        let mut acc: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &rhs.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                *acc.entry(e).or_insert(0.0) += ca * cb;
            }
        }
        acc.retain(|_, c| *c != 0.0);
        let mut out = SparsePolynomial {
            n: self.n,
            terms: acc,
            degree: 0,
        };
        out.recompute_degree();
        out
    }
}

impl Neg for &SparsePolynomial {
    type Output = SparsePolynomial;

    fn neg(self) -> SparsePolynomial {
        self.scale(-1.0)
    }
}

/// All exponent vectors in `n` variables of total degree exactly `m`.
pub fn monomials_of_degree(n: usize, m: usize) -> Vec<Vec<u32>> {
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i + 1 == cur.len() {
            cur[i] = left;
            out.push(cur.clone());
            return;
        }
        for k in (0..=left).rev() {
            cur[i] = k;
            rec(i + 1, left - k, cur, out);
        }
    }
    if n == 0 {
        return if m == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    rec(0, m as u32, &mut vec![0; n], &mut out);
    out
}

/// Random polynomial with an independent standard normal coefficient on
/// every monomial of total degree `≤ d`.
pub fn random_polynomial<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> SparsePolynomial {
    let mut p = SparsePolynomial::zero(n);
    for m in 0..=d {
        for e in monomials_of_degree(n, m) {
            p.add_term(e, rng.sample(StandardNormal));
        }
    }
    p
}

/// Random homogeneous polynomial of degree `m` with standard normal coefficients.
pub fn random_homogeneous<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> SparsePolynomial {
    let mut p = SparsePolynomial::zero(n);
    for e in monomials_of_degree(n, m) {
        p.add_term(e, rng.sample(StandardNormal));
    }
    p
}
