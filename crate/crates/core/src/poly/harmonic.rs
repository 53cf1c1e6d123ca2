//! Spherical-harmonic decomposition and exact sphere integrals.

use nalgebra::{DMatrix, DVector};
use std::collections::{BTreeMap, HashMap};

use super::{monomials_of_degree, SparsePolynomial};
use crate::special::binomial;
use crate::{Error, Result};

/// Limit on the monomial basis size `C(n+d, d)`.
pub const DECOMPOSE_BUDGET: u128 = 2_000_000;

/// Residual `max|Δf_ℓ| / max|coeff|` above which a solve is reported as failed.
const HARMONIC_RESIDUAL_TOL: f64 = 1e-9;

/// `p = Σ_ℓ f_ℓ` on `S_{n−1}`, each `f_ℓ` a harmonic homogeneous polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicDecomposition {
    pub n: usize,
    /// Non-zero parts `(ℓ, f_ℓ)` in increasing `ℓ`.
    pub parts: Vec<(usize, SparsePolynomial)>,
    /// `‖f_ℓ‖²_S` for `ℓ = 0..=deg p`; zero where the part vanishes.
    pub norms: Vec<f64>,
}

impl HarmonicDecomposition {
    pub fn part(&self, ell: usize) -> Option<&SparsePolynomial> {
        self.parts.iter().find(|(l, _)| *l == ell).map(|(_, p)| p)
    }

    /// `Σ_ℓ f_ℓ` as one polynomial (equal to `p` on the sphere only).
    pub fn sum(&self) -> SparsePolynomial {
        self.parts
            .iter()
            .fold(SparsePolynomial::zero(self.n), |acc, (_, f)| &acc + f)
    }

    pub fn total_norm(&self) -> f64 {
        self.norms.iter().sum()
    }
}

/// Splits `p` into spherical harmonics.
///
/// Each homogeneous component `P_m` is written `h_m + |x|² q` with `h_m`
/// harmonic by solving `Δ(|x|² q) = ΔP_m` over degree-`(m−2)` monomials; `q`
/// is then split the same way. Since `|x|² = 1` on the sphere, the pieces
/// regroup by degree into the `f_ℓ`.
pub fn harmonic_decompose(p: &SparsePolynomial) -> Result<HarmonicDecomposition> {
    let n = p.n();
    let d = p.degree();
    let basis = binomial((n + d) as u64, d as u64).unwrap_or(u128::MAX);
    if basis > DECOMPOSE_BUDGET {
        return Err(Error::Budget {
            what: "harmonic decomposition basis",
            needed: basis,
            limit: DECOMPOSE_BUDGET,
        });
    }
    let mut by_degree: BTreeMap<usize, SparsePolynomial> = BTreeMap::new();
    for m in 0..=d {
        let component = p.homogeneous_component(m);
        if component.is_empty() {
            continue;
        }
        for (ell, h) in split_homogeneous(&component, m)? {
            let slot = by_degree
                .entry(ell)
                .or_insert_with(|| SparsePolynomial::zero(n));
            *slot = &*slot + &h;
        }
    }
    let scale = p.max_abs_coeff().max(f64::MIN_POSITIVE);
    let mut parts = Vec::new();
    let mut norms = vec![0.0; d + 1];
    for (ell, mut f) in by_degree {
        f.prune(1e-14);
        if f.is_empty() || f.max_abs_coeff() <= 1e-13 * scale {
            continue;
        }
        norms[ell] = sphere_norm_squared(&f);
        parts.push((ell, f));
    }
    Ok(HarmonicDecomposition { n, parts, norms })
}

/// Fischer decomposition of a homogeneous degree-`m` polynomial into
/// `(m, h_m), (m−2, h_{m−2}), …` with `P = Σ_j |x|^{2j} h_{m−2j}`.
fn split_homogeneous(component: &SparsePolynomial, m: usize) -> Result<Vec<(usize, SparsePolynomial)>> {
    let n = component.n();
    if m < 2 || component.is_empty() {
        return Ok(vec![(m, component.clone())]);
    }
    let lap = component.laplacian();
    if lap.is_empty() {
        return Ok(vec![(m, component.clone())]);
    }
    let basis = monomials_of_degree(n, m - 2);
    let index: HashMap<&Vec<u32>, usize> = basis.iter().enumerate().map(|(i, e)| (e, i)).collect();
    let r2 = SparsePolynomial::norm_squared_form(n);
    let size = basis.len();
    let mut matrix = DMatrix::zeros(size, size);
    for (col, e) in basis.iter().enumerate() {
        let image = (&r2 * &SparsePolynomial::monomial(n, e, 1.0)).laplacian();
        for (f, &c) in image.terms() {
            matrix[(index[f], col)] = c;
        }
    }
    let mut rhs = DVector::zeros(size);
    for (f, &c) in lap.terms() {
        rhs[index[f]] = c;
    }
    let solution = matrix
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical(format!("singular harmonic system at degree {m}")))?;
    let q = SparsePolynomial::from_terms(
        n,
        basis.iter().cloned().zip(solution.iter().copied()),
    )?;
    let harmonic = component - &(&r2 * &q);
    let residual = harmonic.laplacian().max_abs_coeff();
    if residual > HARMONIC_RESIDUAL_TOL * component.max_abs_coeff().max(1.0) {
        return Err(Error::Numerical(format!(
            "harmonic residual {residual:.3e} at degree {m}"
        )));
    }
    let mut out = vec![(m, harmonic)];
    out.extend(split_homogeneous(&q, m - 2)?);
    Ok(out)
}

/// `E_{x∈S_{n−1}}[x^a] = Π_i (a_i−1)!! / Π_{j<|a|/2} (n+2j)` when every `a_i`
/// is even, zero otherwise.
pub fn sphere_monomial_moment(n: usize, exps: &[u32]) -> f64 {
    if exps.iter().any(|e| e % 2 == 1) {
        return 0.0;
    }
    let mut value = 1.0;
    let mut j = 0u32;
    for &e in exps {
        // (e−1)!! = 1·3·…·(e−1), interleaved with the denominator.
        for k in (1..e).step_by(2) {
            value *= k as f64 / (n as f64 + 2.0 * j as f64);
            j += 1;
        }
    }
    value
}

/// `⟨p, q⟩_S` in closed form from monomial moments.
pub fn sphere_inner(p: &SparsePolynomial, q: &SparsePolynomial) -> f64 {
    assert_eq!(p.n(), q.n());
    let n = p.n();
    // Only pairs with matching exponent parities have an even product.
    let mut groups: HashMap<Vec<u32>, Vec<(&Vec<u32>, f64)>> = HashMap::new();
    for (e, &c) in q.terms() {
        groups.entry(e.iter().map(|x| x % 2).collect()).or_default().push((e, c));
    }
    let mut sum = 0.0;
    let mut buf = vec![0u32; n];
    for (ea, &ca) in p.terms() {
        let parity: Vec<u32> = ea.iter().map(|x| x % 2).collect();
        if let Some(group) = groups.get(&parity) {
            for (eb, cb) in group {
                for i in 0..n {
                    buf[i] = ea[i] + eb[i];
                }
                sum += ca * cb * sphere_monomial_moment(n, &buf);
            }
        }
    }
    sum
}

/// `‖p‖²_S = E_{x∈S_{n−1}}[p(x)²]`.
pub fn sphere_norm_squared(p: &SparsePolynomial) -> f64 {
    sphere_inner(p, p)
}
