//! Randomness on `S_{n−1}`: Haar rotations, uniform points, the radial law
//! of spherical Brownian motion and Monte Carlo spherical sensitivity.

mod estimate;
mod heat;
mod rotation;
mod sensitivity;

pub use estimate::{derive_seed, ks_critical_1pct, ks_two_sample, trial_rng, Estimate};
pub use heat::{
    build_heat_distribution, heat_t_min, simulate_jacobi_angle, truncation_degree,
    HeatRadialDistribution, HeatSampler, HEAT_MAX_DEGREE, HEAT_TOL,
};
pub use rotation::{haar_rotation, Rotation};
pub use sensitivity::{
    mean_angle_bounds, spherical_sensitivity_exact, spherical_sensitivity_mc,
    spherical_sensitivity_relaxed, spherical_sensitivity_with, MIN_SENSITIVITY_TRIALS,
};

use rand::Rng;
use rand_distr::StandardNormal;

/// Normalized standard Gaussian vector.
pub fn sample_uniform_sphere<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-300 {
            x.iter_mut().for_each(|v| *v /= norm);
            return x;
        }
    }
}

/// Uniform unit vector orthogonal to the unit vector `u`.
pub fn sample_tangent<R: Rng + ?Sized>(u: &[f64], rng: &mut R) -> Vec<f64> {
    loop {
        let mut w: Vec<f64> = (0..u.len()).map(|_| rng.sample(StandardNormal)).collect();
        let proj: f64 = w.iter().zip(u).map(|(a, b)| a * b).sum();
        w.iter_mut().zip(u).for_each(|(a, b)| *a -= proj * b);
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            w.iter_mut().for_each(|v| *v /= norm);
            return w;
        }
    }
}
