//! Fourier analysis on the hypercube `H = {±1/√n}^n`.
//!
//! A point of `H` is addressed by an `n`-bit index: bit `i` clear means
//! coordinate `i` is `+1/√n`, set means `−1/√n`. Index 0 is therefore
//! `(1, …, 1)/√n`. Frequencies `k` use the same bitmask layout and
//! `χ_k(x) = Π_{i∈k} √n x_i = (−1)^{popcount(k & x)}`.

use crate::poly::SparsePolynomial;
use crate::{Error, Result};

/// Largest `n` tabulated exactly (`2^24` entries).
pub const MAX_EXACT_BITS: usize = 24;

fn check_bits(n: usize) -> Result<()> {
    if n > MAX_EXACT_BITS {
        return Err(Error::Dimension {
            n,
            reason: "exact hypercube tables are limited to n <= 24",
        });
    }
    Ok(())
}

/// Values of a function at every point of `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthTable {
    n: usize,
    values: Vec<f64>,
}

impl TruthTable {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        check_bits(n)?;
        if values.len() != 1 << n {
            return Err(Error::LengthMismatch {
                expected: 1 << n,
                got: values.len(),
            });
        }
        Ok(TruthTable { n, values })
    }

    pub fn from_fn(n: usize, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        check_bits(n)?;
        let mut x = vec![0.0; n];
        let values = (0..1usize << n)
            .map(|idx| {
                cube_point_into(n, idx, &mut x);
                f(&x)
            })
            .collect();
        Ok(TruthTable { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_sign_function(&self) -> bool {
        self.values.iter().all(|&v| v == 1.0 || v == -1.0)
    }

    /// Replaces every value by its sign, with `sgn(0) = +1`.
    pub fn threshold(mut self) -> Self {
        for v in &mut self.values {
            *v = sgn(*v);
        }
        self
    }
}

/// `+1` for `z ≥ 0`, `−1` otherwise.
pub fn sgn(z: f64) -> f64 {
    if z >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Writes the coordinates of cube point `idx` into `x`.
pub fn cube_point_into(n: usize, idx: usize, x: &mut [f64]) {
    let s = 1.0 / (n as f64).sqrt();
    for (i, xi) in x.iter_mut().enumerate() {
        *xi = if idx >> i & 1 == 0 { s } else { -s };
    }
}

pub fn cube_point(n: usize, idx: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    cube_point_into(n, idx, &mut x);
    x
}

/// All `2^n` Fourier coefficients `f̂(k) = ⟨f, χ_k⟩_H`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSpectrum {
    n: usize,
    coeffs: Vec<f64>,
    is_sign_function: bool,
}

impl FourierSpectrum {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_sign_function(&self) -> bool {
        self.is_sign_function
    }

    /// `Σ_k f̂(k)²`.
    pub fn total_energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// Energy by Hamming weight of the frequency, indices `0..=n`.
    pub fn energy_by_weight(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n + 1];
        for (k, c) in self.coeffs.iter().enumerate() {
            out[k.count_ones() as usize] += c * c;
        }
        out
    }

    /// Back to values on `H`.
    pub fn inverse(&self) -> TruthTable {
        let mut values = self.coeffs.clone();
        fwht_in_place(&mut values);
        TruthTable { n: self.n, values }
    }
}

/// Unnormalized in-place Walsh–Hadamard butterfly.
pub fn fwht_in_place(data: &mut [f64]) {
    debug_assert!(data.len().is_power_of_two());
    let mut half = 1;
    while half < data.len() {
        for block in data.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        half *= 2;
    }
}

/// Fast Walsh–Hadamard transform, `O(n 2^n)`.
pub fn walsh_hadamard(table: TruthTable) -> FourierSpectrum {
    let is_sign_function = table.is_sign_function();
    let TruthTable { n, mut values } = table;
    fwht_in_place(&mut values);
    let scale = 1.0 / values.len() as f64;
    for v in &mut values {
        *v *= scale;
    }
    FourierSpectrum {
        n,
        coeffs: values,
        is_sign_function,
    }
}

fn check_eps(eps: f64, upper_inclusive: bool) -> Result<()> {
    let ok = eps >= 0.0 && if upper_inclusive { eps <= 0.5 } else { eps < 0.5 };
    if !ok {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            expected: if upper_inclusive {
                "0 <= eps <= 1/2"
            } else {
                "0 <= eps < 1/2"
            },
        });
    }
    Ok(())
}

/// `NS_ε(f) = ½ Σ_k f̂(k)² (1 − (1−2ε)^{|k|})`.
pub fn noise_sensitivity_exact(spec: &FourierSpectrum, eps: f64) -> Result<f64> {
    check_eps(eps, true)?;
    let rho = 1.0 - 2.0 * eps;
    let powers: Vec<f64> = (0..=spec.n as i32).map(|w| rho.powi(w)).collect();
    let sum: f64 = spec
        .coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| c * c * (1.0 - powers[k.count_ones() as usize]))
        .sum();
    Ok(0.5 * sum)
}

/// `AS(f) = Σ_k f̂(k)² |k|`.
pub fn average_sensitivity_exact(spec: &FourierSpectrum) -> f64 {
    spec.coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| c * c * k.count_ones() as f64)
        .sum()
}

/// Cube heat time `ε' = ½ ln(1/(1−2ε))` with `K_ε = e^{ε'L}`.
pub fn eps_prime(eps: f64) -> Result<f64> {
    check_eps(eps, false)?;
    Ok(-0.5 * (-2.0 * eps).ln_1p())
}

/// Sphere heat time `t = (1/n) ln(1/(1−2ε))` matching `ε`-noise on the cube.
pub fn heat_time_from_eps(eps: f64, n: usize) -> Result<f64> {
    check_eps(eps, false)?;
    if n == 0 {
        return Err(Error::Dimension {
            n,
            reason: "heat time needs n >= 1",
        });
    }
    Ok(-(-2.0 * eps).ln_1p() / n as f64)
}

/// Reduces `p` modulo `x_i² = 1/n`, giving the multilinear polynomial that
/// agrees with `p` on `H`.
pub fn multilinearize(p: &SparsePolynomial, n: usize) -> Result<SparsePolynomial> {
    if p.n() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: p.n(),
        });
    }
    let inv_n = 1.0 / n as f64;
    let mut out = SparsePolynomial::zero(n);
    for (exps, &c) in p.terms() {
        let pairs: u32 = exps.iter().map(|e| e / 2).sum();
        let reduced: Vec<u32> = exps.iter().map(|e| e % 2).collect();
        out.add_term(reduced, c * inv_n.powi(pairs as i32));
    }
    Ok(out)
}

/// Tabulates `p` on `H`, optionally thresholding with `sgn(0) = +1`.
pub fn restrict_to_cube(p: &SparsePolynomial, n: usize, threshold: bool) -> Result<TruthTable> {
    if p.n() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: p.n(),
        });
    }
    let table = TruthTable::from_fn(n, |x| p.eval_unchecked(x))?;
    Ok(if threshold { table.threshold() } else { table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn maj3() -> TruthTable {
        TruthTable::from_fn(3, |x| sgn(x.iter().sum())).unwrap()
    }

    /// Exhaustive NS: average over x and flip patterns weighted by
    /// `ε^{|pattern|}(1−ε)^{n−|pattern|}` of `(f(x) − f(x⊕pattern))²/4`.
    fn ns_brute(table: &TruthTable, eps: f64) -> f64 {
        let n = table.n();
        let v = table.values();
        let mut total = 0.0;
        for x in 0..1usize << n {
            for flip in 0..1usize << n {
                let w = flip.count_ones() as i32;
                let pr = eps.powi(w) * (1.0 - eps).powi(n as i32 - w);
                let d = v[x] - v[x ^ flip];
                total += pr * d * d / 4.0;
            }
        }
        total / (1 << n) as f64
    }

    /// Exhaustive AS: n times the fraction of directed edges that disagree.
    fn as_brute(table: &TruthTable) -> f64 {
        let n = table.n();
        let v = table.values();
        let mut disagree = 0usize;
        for x in 0..1usize << n {
            for i in 0..n {
                if v[x] != v[x ^ (1 << i)] {
                    disagree += 1;
                }
            }
        }
        disagree as f64 / (1usize << n) as f64
    }

    #[test]
    fn dictator_and_parity() {
        for n in 1..8 {
            let dictator = walsh_hadamard(TruthTable::from_fn(n, |x| sgn(x[0])).unwrap());
            assert_eq!(dictator.coeffs()[1], 1.0);
            assert!(dictator.coeffs().iter().enumerate().all(|(k, &c)| k == 1 || c == 0.0));
            let parity = walsh_hadamard(
                TruthTable::from_fn(n, |x| x.iter().map(|&v| sgn(v)).product()).unwrap(),
            );
            assert_eq!(parity.coeffs()[(1 << n) - 1], 1.0);
            for eps in [0.0, 0.05, 0.2, 0.5] {
                assert!((noise_sensitivity_exact(&dictator, eps).unwrap() - eps).abs() < 1e-12);
                let expected = (1.0 - (1.0 - 2.0 * eps).powi(n as i32)) / 2.0;
                assert!((noise_sensitivity_exact(&parity, eps).unwrap() - expected).abs() < 1e-12);
            }
            assert!((average_sensitivity_exact(&dictator) - 1.0).abs() < 1e-12);
            assert!((average_sensitivity_exact(&parity) - n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn majority_of_three() {
        let spec = walsh_hadamard(maj3());
        for i in 0..3 {
            assert!((spec.coeffs()[1 << i] - 0.5).abs() < 1e-15);
        }
        assert!((spec.coeffs()[7] + 0.5).abs() < 1e-15);
        assert!((noise_sensitivity_exact(&spec, 0.1).unwrap() - 0.136).abs() < 1e-12);
        assert!((ns_brute(&maj3(), 0.1) - 0.136).abs() < 1e-12);
        assert!((average_sensitivity_exact(&spec) - 1.5).abs() < 1e-12);
        assert!((as_brute(&maj3()) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn sensitivities_match_exhaustive_definitions() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=8 {
            for _ in 0..4 {
                let values = (0..1 << n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
                let table = TruthTable::new(n, values).unwrap();
                let spec = walsh_hadamard(table.clone());
                assert!(spec.is_sign_function());
                for eps in [0.05, 0.1, 0.25] {
                    let exact = noise_sensitivity_exact(&spec, eps).unwrap();
                    assert!((exact - ns_brute(&table, eps)).abs() < 1e-12);
                }
                assert!((average_sensitivity_exact(&spec) - as_brute(&table)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ns_monotone_in_eps() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let values = (0..1 << 6).map(|_| if rng.random_bool(0.3) { 1.0 } else { -1.0 }).collect();
            let spec = walsh_hadamard(TruthTable::new(6, values).unwrap());
            let mut last = 0.0;
            for i in 0..=50 {
                let ns = noise_sensitivity_exact(&spec, i as f64 / 100.0).unwrap();
                assert!(ns >= last - 1e-15);
                last = ns;
            }
        }
    }

    #[test]
    fn eps_dictionary() {
        assert_eq!(eps_prime(0.0).unwrap(), 0.0);
        assert!((eps_prime(0.1).unwrap() - 0.5 * 1.25f64.ln()).abs() < 1e-15);
        assert!((eps_prime(0.1).unwrap() - 0.111_571_775_657_104_9).abs() < 1e-12);
        assert_eq!(heat_time_from_eps(0.0, 8).unwrap(), 0.0);
        assert!((heat_time_from_eps(0.1, 8).unwrap() - 0.027_892_943_914_276_2).abs() < 1e-12);
        for i in 0..50 {
            let eps = i as f64 / 100.0;
            let ep = eps_prime(eps).unwrap();
            assert!(eps <= ep);
            assert!(((-2.0 * ep).exp() - (1.0 - 2.0 * eps)).abs() < 1e-14);
            let t = heat_time_from_eps(eps, 7).unwrap();
            assert!((t * 7.0 - 2.0 * ep).abs() < 1e-14);
        }
        assert!(eps_prime(0.5).is_err());
        assert!(eps_prime(-0.1).is_err());
        assert!(heat_time_from_eps(0.5, 3).is_err());
        assert!(noise_sensitivity_exact(&walsh_hadamard(maj3()), 0.6).is_err());
    }

    #[test]
    fn multilinearize_examples() {
        let n = 4;
        let sq = SparsePolynomial::monomial(n, &[2, 0, 0, 0], 1.0);
        assert_eq!(multilinearize(&sq, n).unwrap(), SparsePolynomial::constant(n, 0.25));
        let x1x2 = SparsePolynomial::monomial(n, &[1, 1, 0, 0], 1.0);
        assert_eq!(multilinearize(&x1x2, n).unwrap(), x1x2);
        let cube = SparsePolynomial::monomial(n, &[3, 1, 0, 0], 1.0);
        assert_eq!(
            multilinearize(&cube, n).unwrap(),
            SparsePolynomial::monomial(n, &[1, 1, 0, 0], 0.25)
        );
    }

    #[test]
    fn restrict_examples() {
        let n = 3;
        let one = restrict_to_cube(&SparsePolynomial::constant(n, 1.0), n, false).unwrap();
        assert!(one.values().iter().all(|&v| v == 1.0));
        let x1 = restrict_to_cube(&SparsePolynomial::variable(n, 0), n, false).unwrap();
        for (idx, &v) in x1.values().iter().enumerate() {
            let expected = if idx & 1 == 0 { 1.0 } else { -1.0 } / 3f64.sqrt();
            assert!((v - expected).abs() < 1e-15);
        }
        let sum = (0..n).fold(SparsePolynomial::zero(n), |acc, i| &acc + &SparsePolynomial::variable(n, i));
        assert_eq!(restrict_to_cube(&sum, n, true).unwrap(), maj3());
        assert!(TruthTable::new(3, vec![1.0; 7]).is_err());
        assert!(TruthTable::new(25, vec![]).is_err());
    }

    proptest! {
        #[test]
        fn parseval_and_round_trip(n in 0usize..=14, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let values: Vec<f64> = (0..1 << n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let mean_sq = values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64;
            let table = TruthTable::new(n, values.clone()).unwrap();
            let spec = walsh_hadamard(table);
            prop_assert!((spec.total_energy() - mean_sq).abs() < 1e-12 * mean_sq.max(1.0));
            let back = spec.inverse();
            for (a, b) in back.values().iter().zip(&values) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn multilinear_form_agrees_on_cube(seed in any::<u64>(), n in 1usize..6, d in 0usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = crate::poly::random_polynomial(n, d, &mut rng);
            let m = multilinearize(&p, n).unwrap();
            prop_assert!(m.terms().keys().all(|e| e.iter().all(|&x| x <= 1)));
            for idx in 0..1usize << n {
                let x = cube_point(n, idx);
                prop_assert!((m.eval(&x).unwrap() - p.eval(&x).unwrap()).abs() < 1e-10);
            }
        }
    }
}
