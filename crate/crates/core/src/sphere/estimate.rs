//! Monte Carlo estimates and reproducible per-trial generators.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// `sample_std / √trials`, with the `trials − 1` denominator.
    pub std_error: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64], seed: u64) -> Result<Self> {
        let trials = samples.len();
        if trials < 2 {
            return Err(Error::OutOfRange {
                name: "trials",
                value: trials as f64,
                expected: "trials >= 2",
            });
        }
        let mean = samples.iter().sum::<f64>() / trials as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        Ok(Estimate {
            mean,
            std_error: (var / trials as f64).sqrt(),
            trials,
            seed,
        })
    }
}

/// Generator for trial `trial` of a run seeded with `seed`.
///
/// Each trial reads its own ChaCha stream, so results do not depend on
/// which thread runs which trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// SplitMix64 mix of `seed` and `tag`, for independent sub-experiments.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Two-sample Kolmogorov–Smirnov statistic. Sorts both inputs in place.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic 1% critical value of the two-sample KS statistic.
pub fn ks_critical_1pct(m: usize, n: usize) -> f64 {
    let (m, n) = (m as f64, n as f64);
    1.628 * ((m + n) / (m * n)).sqrt()
}
