//! Spherical sensitivity `SS_t`: Monte Carlo for sign functions and the
//! spectral formula for harmonic decompositions.

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use super::heat::HeatSampler;
use super::{sample_tangent, sample_uniform_sphere, trial_rng, Estimate};
use crate::boolean::sgn;
use crate::poly::HarmonicDecomposition;
use crate::{Error, Result};

pub const MIN_SENSITIVITY_TRIALS: usize = 100;

/// Estimates `Pr[sgn f(u) ≠ sgn f(v)]` where `u` is uniform and `v` is the
/// position after Brownian motion for time `t` started at `u`.
///
/// `v = u cos r + w sin r` with `w` a uniform tangent at `u` and `r` drawn
/// from the heat angle law.
pub fn spherical_sensitivity_mc<F>(f: F, n: usize, t: f64, trials: usize, seed: u64) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let sampler = HeatSampler::new(n, t)?;
    spherical_sensitivity_with(&sampler, f, n, trials, seed)
}

/// As [`spherical_sensitivity_mc`] with a prebuilt angle sampler.
pub fn spherical_sensitivity_with<F>(
    sampler: &HeatSampler,
    f: F,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if trials < MIN_SENSITIVITY_TRIALS {
        return Err(Error::OutOfRange {
            name: "trials",
            value: trials as f64,
            expected: "trials >= 100",
        });
    }
    if matches!(sampler, HeatSampler::Still) {
        return Ok(Estimate {
            mean: 0.0,
            std_error: 0.0,
            trials,
            seed,
        });
    }
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            let u = sample_uniform_sphere(n, &mut rng);
            let w = sample_tangent(&u, &mut rng);
            let r = sampler.sample(&mut rng)?;
            let (s, c) = r.sin_cos();
            let v: Vec<f64> = u.iter().zip(&w).map(|(a, b)| a * c + b * s).collect();
            Ok(if sgn(f(&u)) != sgn(f(&v)) { 1.0 } else { 0.0 })
        })
        .collect::<Result<Vec<f64>>>()?;
    Estimate::from_samples(&outcomes, seed)
}

/// `½ Σ_ℓ ‖f_ℓ‖² (1 − e^{−tℓ(n+ℓ−2)})`.
pub fn spherical_sensitivity_exact(dec: &HarmonicDecomposition, t: f64) -> f64 {
    let n = dec.n as f64;
    spectral_sum(dec, |l| t * l * (n + l - 2.0))
}

/// The relaxation `½ Σ_ℓ ‖f_ℓ‖² (1 − e^{−tℓn})`. Term by term it is at most
/// [`spherical_sensitivity_exact`] for every `ℓ ≠ 1`; at `ℓ = 1` it is larger.
pub fn spherical_sensitivity_relaxed(dec: &HarmonicDecomposition, t: f64) -> f64 {
    let n = dec.n as f64;
    spectral_sum(dec, |l| t * l * n)
}

fn spectral_sum(dec: &HarmonicDecomposition, rate: impl Fn(f64) -> f64) -> f64 {
    0.5 * dec
        .norms
        .iter()
        .enumerate()
        .map(|(ell, w)| w * -(-rate(ell as f64)).exp_m1())
        .sum::<f64>()
}

/// Upper bounds on `E[r]`: `√(2(n−1)t)` and `2Γ(n/2)/Γ((n−1)/2)·√t`.
pub fn mean_angle_bounds(n: usize, t: f64) -> Result<(f64, f64)> {
    if n < 3 {
        return Err(Error::Dimension {
            n,
            reason: "angle bounds need n >= 3",
        });
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::OutOfRange {
            name: "t",
            value: t,
            expected: "finite t >= 0",
        });
    }
    let crude = (2.0 * (n - 1) as f64 * t).sqrt();
    let nf = n as f64;
    let chi = 2.0 * (ln_gamma(nf / 2.0) - ln_gamma((nf - 1.0) / 2.0)).exp() * t.sqrt();
    Ok((crude, chi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{harmonic_decompose, random_polynomial, SparsePolynomial};
    use crate::sphere::heat::build_heat_distribution;
    use crate::sphere::HEAT_TOL;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn angle_bound_examples() {
        assert_eq!(mean_angle_bounds(5, 0.0).unwrap(), (0.0, 0.0));
        assert!((mean_angle_bounds(3, 0.01).unwrap().0 - 0.2).abs() < 1e-15);
        for n in 3..40 {
            for t in [1e-4, 0.01, 0.3, 2.0] {
                let (a, b) = mean_angle_bounds(n, t).unwrap();
                assert!(b <= a, "n={n} t={t}");
            }
        }
        assert!(mean_angle_bounds(2, 0.1).is_err());
    }

    #[test]
    fn tabulated_mean_angle_below_bounds() {
        for (n, t) in [(4, 0.005), (8, 0.02), (3, 0.1)] {
            let d = build_heat_distribution(n, t, HEAT_TOL).unwrap();
            let (_, chi) = mean_angle_bounds(n, t).unwrap();
            assert!(d.expectation(|r| r) <= chi + 1e-9);
        }
    }

    #[test]
    fn constant_and_zero_time_are_zero() {
        let e = spherical_sensitivity_mc(|_| 1.0, 5, 0.05, 200, 1).unwrap();
        assert_eq!((e.mean, e.std_error), (0.0, 0.0));
        let e = spherical_sensitivity_mc(|x| x[0], 5, 0.0, 200, 1).unwrap();
        assert_eq!(e.mean, 0.0);
        assert!(spherical_sensitivity_mc(|x| x[0], 5, 0.1, 10, 1).is_err());
    }

    #[test]
    fn hemisphere_below_root_bound() {
        for (n, t) in [(4, 0.01), (8, 0.002), (10, 0.001)] {
            let e = spherical_sensitivity_mc(|x| x[0], n, t, 20_000, 2).unwrap();
            let bound = (2.0 * n as f64 * t).sqrt() / std::f64::consts::PI;
            assert!(e.mean <= bound + 3.0 * e.std_error, "{e:?} vs {bound}");
        }
    }

    #[test]
    fn coordinate_closed_form() {
        let n = 6;
        let dec = harmonic_decompose(&SparsePolynomial::variable(n, 0)).unwrap();
        for t in [0.0, 0.01, 0.5] {
            let want = 0.5 / n as f64 * (1.0 - (-t * (n - 1) as f64).exp());
            assert!((spherical_sensitivity_exact(&dec, t) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn long_time_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = random_polynomial(4, 3, &mut rng);
        let dec = harmonic_decompose(&p).unwrap();
        let want = 0.5 * (dec.total_norm() - dec.norms[0]);
        assert!((spherical_sensitivity_exact(&dec, 1e3) - want).abs() < 1e-12);
    }

    #[test]
    fn parallel_result_is_reproducible() {
        let f = |x: &[f64]| x[0] * x[1] - 0.1;
        let a = spherical_sensitivity_mc(f, 5, 0.02, 500, 77).unwrap();
        let b = spherical_sensitivity_mc(f, 5, 0.02, 500, 77).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }

    #[test]
    fn monotone_in_time() {
        let f = |x: &[f64]| x[0] * x[0] - x[1] * x[2] - 0.2;
        let mut last = Estimate { mean: 0.0, std_error: 0.0, trials: 0, seed: 0 };
        for t in [0.002, 0.01, 0.05] {
            let e = spherical_sensitivity_mc(f, 5, t, 10_000, 3).unwrap();
            let slack = 3.0 * (e.std_error.powi(2) + last.std_error.powi(2)).sqrt();
            assert!(e.mean + slack >= last.mean);
            last = e;
        }
    }

    #[test]
    fn relaxation_reverses_at_degree_one() {
        // ℓ(n+ℓ−2) = n−1 < n at ℓ = 1, so the relaxation exceeds the formula there.
        let n = 8;
        let dec = harmonic_decompose(&SparsePolynomial::variable(n, 0)).unwrap();
        let t = 0.01;
        assert!(spherical_sensitivity_relaxed(&dec, t) > spherical_sensitivity_exact(&dec, t));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn exact_dominates_relaxation_off_degree_one(seed in any::<u64>(), n in 2usize..7, d in 0usize..4, t in 0.0f64..2.0) {
            let p = random_polynomial(n, d, &mut ChaCha8Rng::seed_from_u64(seed));
            let dec = harmonic_decompose(&p).unwrap();
            let nf = n as f64;
            for (ell, w) in dec.norms.iter().enumerate().filter(|(ell, _)| *ell != 1) {
                let l = ell as f64;
                prop_assert!(w * -(-t * l * (nf + l - 2.0)).exp_m1() >= w * -(-t * l * nf).exp_m1());
            }
        }
    }
}
