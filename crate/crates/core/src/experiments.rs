//! End-to-end bound checks for randomly rotated polynomials.
//!
//! Every check is described by an [`Experiment`] value. Running it yields a
//! [`BoundReport`] whose `params` are the serialized experiment, so any
//! report can be replayed bit for bit with [`replay`].
//!
//! Batch helpers ([`gotsman_linial_sweep`], [`transfer_reports`],
//! [`heat_reports`]) share sampling work between reports, but each report
//! they return is identical to running its own experiment alone.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::boolean::{
    cube_point_into, heat_time_from_eps, sgn, walsh_hadamard, TruthTable, MAX_EXACT_BITS,
};
use crate::poly::{
    count_circle_roots, harmonic_decompose, random_polynomial, restrict_to_great_circle,
    sphere_norm_squared, CompiledPolynomial, SparsePolynomial,
};
use crate::special::{harmonic_dimension, kravchuk, GegenbauerBasis};
use crate::sphere::{
    build_heat_distribution, derive_seed, haar_rotation, ks_critical_1pct, ks_two_sample,
    mean_angle_bounds, sample_tangent, sample_uniform_sphere, spherical_sensitivity_exact,
    spherical_sensitivity_with, trial_rng, Estimate, HeatSampler, Rotation, HEAT_TOL,
};
use crate::{Error, Result};

/// Standard errors of slack for one-sided bounds.
pub const UPPER_SIGMAS: f64 = 3.0;
/// Standard errors of slack for the expected-energy identity.
pub const APPENDIX_SIGMAS: f64 = 4.0;
/// Standard errors of slack for the other two-sided checks.
pub const EQUALITY_SIGMAS: f64 = 3.0;
/// Absolute allowance for rounding when both sides are deterministic.
pub const ABSOLUTE_FLOOR: f64 = 1e-12;
/// `slack_sigmas` is clamped to `±SLACK_CLAMP`, which is also its value
/// when the combined standard error is zero.
pub const SLACK_CLAMP: f64 = 1e6;
pub const MIN_ROTATIONS: usize = 50;
pub const DEFAULT_ROTATIONS: usize = 200;
pub const DEFAULT_APPENDIX_ROTATIONS: usize = 10_000;
pub const DEFAULT_SS_TRIALS: usize = 20_000;
/// Default `C` in the displayed `(1 + Cε)` and `(1 + C/n)` factors.
pub const DEFAULT_INFLATION: f64 = 1.0;
/// Largest `n` for which rotated cube tables are formed.
pub const MAX_CUBE_BITS: usize = 14;
/// Limit on `terms · 2^n` for one rotated cube table.
pub const CUBE_EVAL_BUDGET: u128 = 1 << 32;
/// Root-count tolerance on `||z| − 1|` for companion eigenvalues.
pub const ROOT_TOL: f64 = 1e-6;

const SS_SEED_TAG: u64 = 0x5353;
const EDGE_SEED_TAG: u64 = 0xED9E;
const APPENDIX_SEED_TAG: u64 = 0xA11;
const SERIES_SEED_TAG: u64 = 1;
const SDE_SEED_TAG: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `mean ≤ bound + σ·s`.
    Upper,
    /// `|mean − bound| ≤ σ·s`.
    Equality,
}

/// Raw polynomial values or their signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Raw,
    Sign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Series,
    Sde,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Moment {
    Mean,
    Square,
}

/// Outcome of one check.
///
/// With `σ = √(std_error² + bound_std_error²)`, an upper-bound report passes
/// when `mean ≤ bound + sigmas·σ + ABSOLUTE_FLOOR`, and an equality report
/// when `|mean − bound| ≤ sigmas·σ + ABSOLUTE_FLOOR`. `bound_std_error` is
/// zero unless the bound is itself a Monte Carlo estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub params: BTreeMap<String, Value>,
    pub estimate: Estimate,
    pub bound: f64,
    pub bound_std_error: f64,
    pub comparison: Comparison,
    pub sigmas: f64,
    /// `(bound − mean)/σ` for upper bounds, `−|mean − bound|/σ` for equalities.
    pub slack_sigmas: f64,
    pub pass: bool,
    /// Derived quantities for display, such as uninflated bounds.
    pub details: BTreeMap<String, f64>,
}

/// Column order of [`BoundReport::csv_fields`].
pub const CSV_COLUMNS: [&str; 13] = [
    "name",
    "pass",
    "mean",
    "std_error",
    "trials",
    "seed",
    "bound",
    "bound_std_error",
    "comparison",
    "sigmas",
    "slack_sigmas",
    "details",
    "params",
];

impl BoundReport {
    fn new(
        experiment: &Experiment,
        estimate: Estimate,
        bound: f64,
        bound_std_error: f64,
        comparison: Comparison,
        sigmas: f64,
    ) -> Self {
        let sigma = estimate.std_error.hypot(bound_std_error);
        let diff = estimate.mean - bound;
        let (pass, raw_slack) = match comparison {
            Comparison::Upper => (
                diff <= sigmas * sigma + ABSOLUTE_FLOOR,
                scaled(-diff, sigma),
            ),
            Comparison::Equality => (
                diff.abs() <= sigmas * sigma + ABSOLUTE_FLOOR,
                scaled(-diff.abs(), sigma),
            ),
        };
        let params = match serde_json::to_value(experiment) {
            Ok(Value::Object(map)) => map.into_iter().collect(),
            _ => unreachable!("experiments serialize to objects"),
        };
        BoundReport {
            name: experiment.name().to_string(),
            params,
            estimate,
            bound,
            bound_std_error,
            comparison,
            sigmas,
            slack_sigmas: raw_slack,
            pass,
            details: BTreeMap::new(),
        }
    }

    fn with_detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }

    pub fn combined_std_error(&self) -> f64 {
        self.estimate.std_error.hypot(self.bound_std_error)
    }

    /// The experiment recorded in `params`.
    pub fn experiment(&self) -> Result<Experiment> {
        let map: serde_json::Map<String, Value> = self.params.clone().into_iter().collect();
        serde_json::from_value(Value::Object(map)).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }

    /// Values in [`CSV_COLUMNS`] order; `details` and `params` are compact JSON.
    pub fn csv_fields(&self) -> Vec<String> {
        let comparison = match self.comparison {
            Comparison::Upper => "upper",
            Comparison::Equality => "equality",
        };
        vec![
            self.name.clone(),
            self.pass.to_string(),
            self.estimate.mean.to_string(),
            self.estimate.std_error.to_string(),
            self.estimate.trials.to_string(),
            self.estimate.seed.to_string(),
            self.bound.to_string(),
            self.bound_std_error.to_string(),
            comparison.to_string(),
            self.sigmas.to_string(),
            self.slack_sigmas.to_string(),
            serde_json::to_string(&self.details).expect("details serialize"),
            serde_json::to_string(&self.params).expect("params serialize"),
        ]
    }
}

fn scaled(x: f64, sigma: f64) -> f64 {
    if sigma > 0.0 {
        (x / sigma).clamp(-SLACK_CLAMP, SLACK_CLAMP)
    } else if x > 0.0 {
        SLACK_CLAMP
    } else if x < 0.0 {
        -SLACK_CLAMP
    } else {
        0.0
    }
}

/// A fully specified check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum Experiment {
    /// `E_R NS_ε(sgn(Rp)|_H) ≤ (2/π) d √ε (1 + Cε)`.
    NsBound {
        poly: SparsePolynomial,
        eps: f64,
        rotations: usize,
        inflation: f64,
        seed: u64,
    },
    /// `E_R AS(sgn(Rp)|_H) ≤ (2/π) d √n (1 + C/n)`.
    AsBound {
        poly: SparsePolynomial,
        rotations: usize,
        inflation: f64,
        seed: u64,
    },
    /// `SS_t(sgn p) ≤ (d/π) √(2nt)`.
    SsBound {
        poly: SparsePolynomial,
        t: f64,
        trials: usize,
        seed: u64,
    },
    /// `E_R NS_ε(Rf|_H) ≤ SS_t(f)` with `t = ln(1/(1−2ε))/n`.
    Transfer {
        poly: SparsePolynomial,
        eps: f64,
        rotations: usize,
        mode: Mode,
        ss_trials: usize,
        seed: u64,
    },
    /// `E_R AS(Rf|_H) ≤ 2n/(1 − e^{−α}) · SS_{α/n²}(f)`.
    TransferAs {
        poly: SparsePolynomial,
        alpha: f64,
        rotations: usize,
        mode: Mode,
        ss_trials: usize,
        seed: u64,
    },
    /// `E_R |(Rf)^(k)|²` for a zonal harmonic `f = γ_ℓ(w·x)` against its
    /// Kravchuk closed form.
    AppendixEnergy {
        n: usize,
        ell: usize,
        k_mask: u64,
        rotations: usize,
        seed: u64,
    },
    /// `E_R Σ_k |(Rp)^(k)|² = ‖p‖²_S`.
    TotalEnergy {
        poly: SparsePolynomial,
        rotations: usize,
        seed: u64,
    },
    /// The expected cross term `2 E_R (Rf)^(k)(Rg)^(k)` vanishes for
    /// harmonics of different degrees.
    Separable {
        first: SparsePolynomial,
        second: SparsePolynomial,
        k_mask: u64,
        rotations: usize,
        seed: u64,
    },
    /// Exact-spectrum and edge-sampling estimates of `E_R AS` agree.
    AsEstimators {
        poly: SparsePolynomial,
        rotations: usize,
        edges: usize,
        seed: u64,
    },
    /// `E[cos angle(x, y)] = 1 − 2ε` for an ε-flipped cube pair.
    CosRemark {
        n: usize,
        eps: f64,
        trials: usize,
        seed: u64,
    },
    /// `E[r] ≤ 2Γ(n/2)/Γ((n−1)/2)·√t` or `E[r²] ≤ 2(n−1)t`.
    HeatMoment {
        n: usize,
        t: f64,
        samples: usize,
        sampler: SamplerKind,
        moment: Moment,
        seed: u64,
    },
    /// Two-sample KS distance between the series and SDE samplers.
    HeatAgreement {
        n: usize,
        t: f64,
        samples: usize,
        seed: u64,
    },
    /// Random `(p, great circle)` pairs never show more than `2d` roots.
    RootBound {
        n: usize,
        d: usize,
        cases: usize,
        seed: u64,
    },
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::NsBound { .. } => "ns_bound",
            Experiment::AsBound { .. } => "as_bound",
            Experiment::SsBound { .. } => "ss_bound",
            Experiment::Transfer { .. } => "transfer",
            Experiment::TransferAs { .. } => "transfer_as",
            Experiment::AppendixEnergy { .. } => "appendix_energy",
            Experiment::TotalEnergy { .. } => "total_energy",
            Experiment::Separable { .. } => "separable",
            Experiment::AsEstimators { .. } => "as_estimators",
            Experiment::CosRemark { .. } => "cos_remark",
            Experiment::HeatMoment { .. } => "heat_moment",
            Experiment::HeatAgreement { .. } => "heat_agreement",
            Experiment::RootBound { .. } => "root_bound",
        }
    }

    pub fn run(&self) -> Result<BoundReport> {
        match self {
            Experiment::NsBound {
                poly,
                eps,
                rotations,
                inflation,
                seed,
            } => {
                let stats = rotated_sensitivities(poly, &[*eps], *rotations, Mode::Sign, *seed)?;
                Ok(ns_bound_report(self, poly.degree(), *eps, *inflation, stats.ns[0]))
            }
            Experiment::AsBound {
                poly,
                rotations,
                inflation,
                seed,
            } => {
                let stats = rotated_sensitivities(poly, &[], *rotations, Mode::Sign, *seed)?;
                Ok(as_bound_report(self, poly.degree(), poly.n(), *inflation, stats.avg))
            }
            Experiment::SsBound {
                poly,
                t,
                trials,
                seed,
            } => {
                let sampler = HeatSampler::new(poly.n(), *t)?;
                let est = sign_sensitivity(poly, &sampler, *trials, *seed)?;
                Ok(ss_bound_report(self, poly.degree(), poly.n(), *t, est))
            }
            Experiment::Transfer {
                poly,
                eps,
                rotations,
                mode,
                ss_trials,
                seed,
            } => {
                let lhs = rotated_sensitivities(poly, &[*eps], *rotations, *mode, *seed)?.ns[0];
                let t = heat_time_from_eps(*eps, poly.n())?;
                let rhs = transfer_rhs(poly, t, *mode, *ss_trials, *seed)?;
                Ok(BoundReport::new(self, lhs, rhs.0, rhs.1, Comparison::Upper, UPPER_SIGMAS)
                    .with_detail("t", t))
            }
            Experiment::TransferAs {
                poly,
                alpha,
                rotations,
                mode,
                ss_trials,
                seed,
            } => {
                if !alpha.is_finite() || *alpha <= 0.0 {
                    return Err(Error::OutOfRange {
                        name: "alpha",
                        value: *alpha,
                        expected: "finite alpha > 0",
                    });
                }
                let lhs = rotated_sensitivities(poly, &[], *rotations, *mode, *seed)?.avg;
                let n = poly.n() as f64;
                let t = alpha / (n * n);
                let (ss, ss_se) = transfer_rhs(poly, t, *mode, *ss_trials, *seed)?;
                let factor = 2.0 * n / -(-alpha).exp_m1();
                Ok(BoundReport::new(
                    self,
                    lhs,
                    factor * ss,
                    factor * ss_se,
                    Comparison::Upper,
                    UPPER_SIGMAS,
                )
                .with_detail("t", t)
                .with_detail("ss", ss))
            }
            Experiment::AppendixEnergy {
                n,
                ell,
                k_mask,
                rotations,
                seed,
            } => {
                let est = appendix_energy_mc(*n, *ell, *k_mask, *rotations, *seed)?;
                let closed = appendix_closed_form(*n, *ell, k_mask.count_ones() as usize)?;
                Ok(BoundReport::new(self, est, closed, 0.0, Comparison::Equality, APPENDIX_SIGMAS))
            }
            Experiment::TotalEnergy {
                poly,
                rotations,
                seed,
            } => {
                let est = total_energy_mc(poly, *rotations, *seed)?;
                let norm = sphere_norm_squared(poly);
                Ok(BoundReport::new(self, est, norm, 0.0, Comparison::Equality, EQUALITY_SIGMAS))
            }
            Experiment::Separable {
                first,
                second,
                k_mask,
                rotations,
                seed,
            } => {
                let (cross, joint, parts) = separable_mc(first, second, *k_mask, *rotations, *seed)?;
                Ok(
                    BoundReport::new(self, cross, 0.0, 0.0, Comparison::Equality, EQUALITY_SIGMAS)
                        .with_detail("joint_energy", joint)
                        .with_detail("sum_of_part_energies", parts),
                )
            }
            Experiment::AsEstimators {
                poly,
                rotations,
                edges,
                seed,
            } => {
                let exact = rotated_sensitivities(poly, &[], *rotations, Mode::Sign, *seed)?.avg;
                let edge = as_edge_estimate(poly, *rotations, *edges, *seed)?;
                Ok(BoundReport::new(
                    self,
                    exact,
                    edge.mean,
                    edge.std_error,
                    Comparison::Equality,
                    EQUALITY_SIGMAS,
                ))
            }
            Experiment::CosRemark {
                n,
                eps,
                trials,
                seed,
            } => {
                let est = cos_remark_mc(*n, *eps, *trials, *seed)?;
                Ok(BoundReport::new(
                    self,
                    est,
                    1.0 - 2.0 * eps,
                    0.0,
                    Comparison::Equality,
                    EQUALITY_SIGMAS,
                ))
            }
            Experiment::HeatMoment {
                n,
                t,
                samples,
                sampler,
                moment,
                seed,
            } => {
                let rs = heat_angle_samples(*n, *t, *samples, *sampler, *seed)?;
                heat_moment_report(self, *n, *t, *moment, &rs, *seed)
            }
            Experiment::HeatAgreement {
                n,
                t,
                samples,
                seed,
            } => {
                let series = heat_angle_samples(*n, *t, *samples, SamplerKind::Series, derive_seed(*seed, SERIES_SEED_TAG))?;
                let sde = heat_angle_samples(*n, *t, *samples, SamplerKind::Sde, derive_seed(*seed, SDE_SEED_TAG))?;
                Ok(heat_agreement_report(self, series, sde, *seed))
            }
            Experiment::RootBound { n, d, cases, seed } => root_bound(self, *n, *d, *cases, *seed),
        }
    }
}

/// Reruns the experiment recorded in a report.
pub fn replay(report: &BoundReport) -> Result<BoundReport> {
    report.experiment()?.run()
}

/// Per-rotation sensitivities of `Rp` (or `sgn(Rp)`) on the cube.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedSensitivities {
    /// `E_R NS_ε` for each requested `ε`.
    pub ns: Vec<Estimate>,
    /// `E_R AS`.
    pub avg: Estimate,
}

fn check_rotations(rotations: usize) -> Result<()> {
    if rotations < MIN_ROTATIONS {
        return Err(Error::OutOfRange {
            name: "rotations",
            value: rotations as f64,
            expected: "rotations >= 50",
        });
    }
    Ok(())
}

fn check_cube(p: &SparsePolynomial) -> Result<()> {
    let n = p.n();
    if n == 0 || n > MAX_CUBE_BITS {
        return Err(Error::Dimension {
            n,
            reason: "rotated cube tables need 1 <= n <= 14",
        });
    }
    let needed = (p.len().max(1) as u128) << n;
    if needed > CUBE_EVAL_BUDGET {
        return Err(Error::Budget {
            what: "rotated cube table",
            needed,
            limit: CUBE_EVAL_BUDGET,
        });
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&eps) {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            expected: "0 <= eps <= 1/2",
        });
    }
    Ok(())
}

/// Values of `p(Rᵀx)` at every cube point, optionally thresholded.
pub fn rotated_cube_table(
    compiled: &CompiledPolynomial,
    rotation: &Rotation,
    mode: Mode,
) -> Vec<f64> {
    let n = compiled.n();
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut scratch = vec![0.0; compiled.scratch_len()];
    (0..1usize << n)
        .map(|idx| {
            cube_point_into(n, idx, &mut x);
            rotation.apply_transpose_into(&x, &mut y);
            let v = compiled.eval_with(&y, &mut scratch);
            match mode {
                Mode::Raw => v,
                Mode::Sign => sgn(v),
            }
        })
        .collect()
}

/// `E_R NS_ε(Rp|_H)` for each `ε` and `E_R AS(Rp|_H)`, from one exact
/// Walsh–Hadamard transform per Haar rotation.
pub fn rotated_sensitivities(
    p: &SparsePolynomial,
    eps: &[f64],
    rotations: usize,
    mode: Mode,
    seed: u64,
) -> Result<RotatedSensitivities> {
    check_rotations(rotations)?;
    check_cube(p)?;
    for &e in eps {
        check_eps(e)?;
    }
    let n = p.n();
    let compiled = p.compile();
    let rows = (0..rotations)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            let rotation = haar_rotation(n, &mut rng);
            let table = TruthTable::new(n, rotated_cube_table(&compiled, &rotation, mode))?;
            let by_weight = walsh_hadamard(table).energy_by_weight();
            let mut row: Vec<f64> = eps
                .iter()
                .map(|&e| {
                    let rho = 1.0 - 2.0 * e;
                    0.5 * by_weight
                        .iter()
                        .enumerate()
                        .map(|(w, energy)| energy * (1.0 - rho.powi(w as i32)))
                        .sum::<f64>()
                })
                .collect();
            row.push(
                by_weight
                    .iter()
                    .enumerate()
                    .map(|(w, energy)| energy * w as f64)
                    .sum(),
            );
            Ok(row)
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let column = |j: usize| -> Result<Estimate> {
        let xs: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        Estimate::from_samples(&xs, seed)
    };
    Ok(RotatedSensitivities {
        ns: (0..eps.len()).map(column).collect::<Result<_>>()?,
        avg: column(eps.len())?,
    })
}

/// `E_R NS_ε(sgn(Rp)|_H)`.
pub fn expected_ns_rotated(p: &SparsePolynomial, eps: f64, rotations: usize, seed: u64) -> Result<Estimate> {
    Ok(rotated_sensitivities(p, &[eps], rotations, Mode::Sign, seed)?.ns[0])
}

/// `E_R AS(sgn(Rp)|_H)`.
pub fn expected_as_rotated(p: &SparsePolynomial, rotations: usize, seed: u64) -> Result<Estimate> {
    Ok(rotated_sensitivities(p, &[], rotations, Mode::Sign, seed)?.avg)
}

/// `E_R AS(sgn(Rp)|_H)` as `n` times the rate of sign changes across
/// `edges` uniformly random cube edges per rotation. Rotation `i` is the
/// same as in [`rotated_sensitivities`] with the same seed.
pub fn as_edge_estimate(p: &SparsePolynomial, rotations: usize, edges: usize, seed: u64) -> Result<Estimate> {
    check_rotations(rotations)?;
    check_cube(p)?;
    if edges == 0 {
        return Err(Error::OutOfRange {
            name: "edges",
            value: 0.0,
            expected: "edges >= 1",
        });
    }
    let n = p.n();
    let compiled = p.compile();
    let edge_seed = derive_seed(seed, EDGE_SEED_TAG);
    let values: Vec<f64> = (0..rotations)
        .into_par_iter()
        .map(|i| {
            let rotation = haar_rotation(n, &mut trial_rng(seed, i as u64));
            let mut rng = trial_rng(edge_seed, i as u64);
            let mut x = vec![0.0; n];
            let mut y = vec![0.0; n];
            let mut scratch = vec![0.0; compiled.scratch_len()];
            let mut side = |idx: usize| {
                cube_point_into(n, idx, &mut x);
                rotation.apply_transpose_into(&x, &mut y);
                sgn(compiled.eval_with(&y, &mut scratch))
            };
            let mut changes = 0usize;
            for _ in 0..edges {
                let idx = rng.random_range(0..1usize << n);
                let bit = rng.random_range(0..n);
                if side(idx) != side(idx ^ (1 << bit)) {
                    changes += 1;
                }
            }
            n as f64 * changes as f64 / edges as f64
        })
        .collect();
    Estimate::from_samples(&values, seed)
}

fn sign_sensitivity(p: &SparsePolynomial, sampler: &HeatSampler, trials: usize, seed: u64) -> Result<Estimate> {
    let compiled = p.compile();
    spherical_sensitivity_with(sampler, |x| compiled.eval(x), p.n(), trials, seed)
}

/// Right-hand side `SS_t` of the transfer inequality: the spectral formula
/// for raw polynomials, Monte Carlo for `sgn p`.
fn transfer_rhs(p: &SparsePolynomial, t: f64, mode: Mode, ss_trials: usize, seed: u64) -> Result<(f64, f64)> {
    match mode {
        Mode::Raw => Ok((spherical_sensitivity_exact(&harmonic_decompose(p)?, t), 0.0)),
        Mode::Sign => {
            let sampler = HeatSampler::new(p.n(), t)?;
            let est = sign_sensitivity(p, &sampler, ss_trials, derive_seed(seed, SS_SEED_TAG))?;
            Ok((est.mean, est.std_error))
        }
    }
}

fn ns_bound_report(exp: &Experiment, d: usize, eps: f64, inflation: f64, est: Estimate) -> BoundReport {
    let bare = 2.0 / PI * d as f64 * eps.sqrt();
    BoundReport::new(exp, est, bare * (1.0 + inflation * eps), 0.0, Comparison::Upper, UPPER_SIGMAS)
        .with_detail("bare_bound", bare)
}

fn as_bound_report(exp: &Experiment, d: usize, n: usize, inflation: f64, est: Estimate) -> BoundReport {
    let bare = 2.0 / PI * d as f64 * (n as f64).sqrt();
    BoundReport::new(
        exp,
        est,
        bare * (1.0 + inflation / n as f64),
        0.0,
        Comparison::Upper,
        UPPER_SIGMAS,
    )
    .with_detail("bare_bound", bare)
}

fn ss_bound_report(exp: &Experiment, d: usize, n: usize, t: f64, est: Estimate) -> BoundReport {
    let bound = d as f64 / PI * (2.0 * n as f64 * t).sqrt();
    BoundReport::new(exp, est, bound, 0.0, Comparison::Upper, UPPER_SIGMAS)
}

/// The checks of one Gotsman–Linial sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub degrees: Vec<usize>,
    pub dims: Vec<usize>,
    pub eps: Vec<f64>,
    pub times: Vec<f64>,
    pub rotations: usize,
    pub ss_trials: usize,
    pub inflation: f64,
    pub seed: u64,
}

/// Seed and polynomial used by the sweep for `(d, n)`.
pub fn sweep_polynomial(seed: u64, d: usize, n: usize) -> (u64, SparsePolynomial) {
    let poly_seed = derive_seed(seed, ((d as u64) << 32) | n as u64);
    let p = random_polynomial(n, d, &mut trial_rng(poly_seed, 0));
    (poly_seed, p)
}

/// For each `(d, n)` one random degree-`d` polynomial, with rows for every
/// `ε` (noise sensitivity), one average-sensitivity row and a row for every
/// `t` (spherical sensitivity). Cube rows are skipped for `n > 14`.
pub fn gotsman_linial_sweep(cfg: &SweepConfig) -> Result<Vec<BoundReport>> {
    let mut out = Vec::new();
    for &d in &cfg.degrees {
        for &n in &cfg.dims {
            let (poly_seed, poly) = sweep_polynomial(cfg.seed, d, n);
            let rot_seed = derive_seed(poly_seed, 1);
            if n <= MAX_CUBE_BITS {
                let stats = rotated_sensitivities(&poly, &cfg.eps, cfg.rotations, Mode::Sign, rot_seed)?;
                for (&eps, est) in cfg.eps.iter().zip(&stats.ns) {
                    let exp = Experiment::NsBound {
                        poly: poly.clone(),
                        eps,
                        rotations: cfg.rotations,
                        inflation: cfg.inflation,
                        seed: rot_seed,
                    };
                    out.push(ns_bound_report(&exp, d, eps, cfg.inflation, *est));
                }
                let exp = Experiment::AsBound {
                    poly: poly.clone(),
                    rotations: cfg.rotations,
                    inflation: cfg.inflation,
                    seed: rot_seed,
                };
                out.push(as_bound_report(&exp, d, n, cfg.inflation, stats.avg));
            }
            let ss_seed = derive_seed(poly_seed, 2);
            for &t in &cfg.times {
                let exp = Experiment::SsBound {
                    poly: poly.clone(),
                    t,
                    trials: cfg.ss_trials,
                    seed: ss_seed,
                };
                out.push(exp.run()?);
            }
        }
    }
    Ok(out)
}

/// Transfer reports for every `ε` in both modes, sharing the rotations.
pub fn transfer_reports(
    p: &SparsePolynomial,
    eps: &[f64],
    rotations: usize,
    ss_trials: usize,
    seed: u64,
) -> Result<Vec<BoundReport>> {
    let mut out = Vec::new();
    let dec = harmonic_decompose(p)?;
    for mode in [Mode::Raw, Mode::Sign] {
        let lhs = rotated_sensitivities(p, eps, rotations, mode, seed)?;
        for (&e, est) in eps.iter().zip(&lhs.ns) {
            let t = heat_time_from_eps(e, p.n())?;
            let (rhs, rhs_se) = match mode {
                Mode::Raw => (spherical_sensitivity_exact(&dec, t), 0.0),
                Mode::Sign => transfer_rhs(p, t, mode, ss_trials, seed)?,
            };
            let exp = Experiment::Transfer {
                poly: p.clone(),
                eps: e,
                rotations,
                mode,
                ss_trials,
                seed,
            };
            out.push(
                BoundReport::new(&exp, *est, rhs, rhs_se, Comparison::Upper, UPPER_SIGMAS)
                    .with_detail("t", t),
            );
        }
    }
    Ok(out)
}

/// `(1/√d_ℓ) 2^{−n} Σ_h κ_{|k|}(h) γ_ℓ(1 − 2h/n)`, the expected energy of a
/// rotated unit-norm zonal harmonic of degree `ℓ` at a character of weight `|k|`.
pub fn appendix_closed_form(n: usize, ell: usize, weight: usize) -> Result<f64> {
    let basis = GegenbauerBasis::new(n, ell)?;
    let d = harmonic_dimension(n, ell)? as f64;
    let mut sum = 0.0;
    for h in 0..=n {
        let kappa = kravchuk(n, weight, h)? as f64;
        sum += kappa * basis.eval(ell, 1.0 - 2.0 * h as f64 / n as f64)?;
    }
    Ok(sum / 2f64.powi(n as i32) / d.sqrt())
}

fn check_mask(n: usize, k_mask: u64) -> Result<()> {
    if n < 64 && k_mask >> n != 0 {
        return Err(Error::OutOfRange {
            name: "k_mask",
            value: k_mask as f64,
            expected: "k_mask < 2^n",
        });
    }
    Ok(())
}

fn character(k_mask: u64, idx: usize) -> f64 {
    if (k_mask & idx as u64).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Monte Carlo `E_R |(Rf)^(k)|²` for `f(x) = γ_ℓ(w·x)` with a random unit `w`.
pub fn appendix_energy_mc(n: usize, ell: usize, k_mask: u64, rotations: usize, seed: u64) -> Result<Estimate> {
    check_rotations(rotations)?;
    if !(3..=MAX_CUBE_BITS).contains(&n) {
        return Err(Error::Dimension {
            n,
            reason: "the energy identity check needs 3 <= n <= 14",
        });
    }
    check_mask(n, k_mask)?;
    let basis = GegenbauerBasis::new(n, ell)?;
    let w = sample_uniform_sphere(n, &mut trial_rng(derive_seed(seed, APPENDIX_SEED_TAG), 0));
    let scale = 1.0 / (1u64 << n) as f64;
    let values = (0..rotations)
        .into_par_iter()
        .map(|i| {
            let rotation = haar_rotation(n, &mut trial_rng(seed, i as u64));
            let u = rotation.apply(&w);
            let mut x = vec![0.0; n];
            let mut coeff = 0.0;
            for idx in 0..1usize << n {
                cube_point_into(n, idx, &mut x);
                let z: f64 = u.iter().zip(&x).map(|(a, b)| a * b).sum();
                coeff += character(k_mask, idx) * basis.eval(ell, z.clamp(-1.0, 1.0))?;
            }
            let c = coeff * scale;
            Ok(c * c)
        })
        .collect::<Result<Vec<f64>>>()?;
    Estimate::from_samples(&values, seed)
}

/// Monte Carlo `E_R ‖Rp|_H‖²_H`, which equals `E_R Σ_k |(Rp)^(k)|²`.
pub fn total_energy_mc(p: &SparsePolynomial, rotations: usize, seed: u64) -> Result<Estimate> {
    check_rotations(rotations)?;
    check_cube(p)?;
    let n = p.n();
    let compiled = p.compile();
    let values: Vec<f64> = (0..rotations)
        .into_par_iter()
        .map(|i| {
            let rotation = haar_rotation(n, &mut trial_rng(seed, i as u64));
            let table = rotated_cube_table(&compiled, &rotation, Mode::Raw);
            table.iter().map(|v| v * v).sum::<f64>() / table.len() as f64
        })
        .collect();
    Estimate::from_samples(&values, seed)
}

fn cube_coefficient(table: &[f64], k_mask: u64) -> f64 {
    table
        .iter()
        .enumerate()
        .map(|(idx, v)| character(k_mask, idx) * v)
        .sum::<f64>()
        / table.len() as f64
}

/// Per rotation `|(R(f+g))^(k)|² − |(Rf)^(k)|² − |(Rg)^(k)|²`; also returns
/// the mean joint energy and the mean sum of part energies.
fn separable_mc(
    f: &SparsePolynomial,
    g: &SparsePolynomial,
    k_mask: u64,
    rotations: usize,
    seed: u64,
) -> Result<(Estimate, f64, f64)> {
    check_rotations(rotations)?;
    if f.n() != g.n() {
        return Err(Error::LengthMismatch {
            expected: f.n(),
            got: g.n(),
        });
    }
    check_cube(f)?;
    check_cube(g)?;
    check_mask(f.n(), k_mask)?;
    let n = f.n();
    let (cf, cg) = (f.compile(), g.compile());
    let rows: Vec<[f64; 3]> = (0..rotations)
        .into_par_iter()
        .map(|i| {
            let rotation = haar_rotation(n, &mut trial_rng(seed, i as u64));
            let a = cube_coefficient(&rotated_cube_table(&cf, &rotation, Mode::Raw), k_mask);
            let b = cube_coefficient(&rotated_cube_table(&cg, &rotation, Mode::Raw), k_mask);
            let joint = (a + b) * (a + b);
            let parts = a * a + b * b;
            [joint - parts, joint, parts]
        })
        .collect();
    let cross: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let mean = |j: usize| rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64;
    Ok((Estimate::from_samples(&cross, seed)?, mean(1), mean(2)))
}

/// Monte Carlo `E[cos angle(x, y)]` where `y` flips each bit of a uniform
/// cube point `x` with probability `ε`.
pub fn cos_remark_mc(n: usize, eps: f64, trials: usize, seed: u64) -> Result<Estimate> {
    if n < 3 {
        return Err(Error::Dimension {
            n,
            reason: "the cosine identity check needs n >= 3",
        });
    }
    check_eps(eps)?;
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            let mut dot = 0.0;
            for _ in 0..n {
                let x = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let y = if rng.random_bool(eps) { -x } else { x };
                dot += x * y;
            }
            dot / n as f64
        })
        .collect();
    Estimate::from_samples(&values, seed)
}

/// Heat angles `r` drawn with the chosen sampler; SDE step `t/1000`.
pub fn heat_angle_samples(n: usize, t: f64, samples: usize, kind: SamplerKind, seed: u64) -> Result<Vec<f64>> {
    let sampler = match kind {
        SamplerKind::Series => HeatSampler::Series(build_heat_distribution(n, t, HEAT_TOL)?),
        SamplerKind::Sde => HeatSampler::sde(n, t, t / 1000.0)?,
    };
    (0..samples)
        .into_par_iter()
        .map(|i| sampler.sample(&mut trial_rng(seed, i as u64)))
        .collect()
}

fn heat_moment_report(exp: &Experiment, n: usize, t: f64, moment: Moment, rs: &[f64], seed: u64) -> Result<BoundReport> {
    let (crude, chi) = mean_angle_bounds(n, t)?;
    let (values, bound): (Vec<f64>, f64) = match moment {
        Moment::Mean => (rs.to_vec(), chi),
        Moment::Square => (rs.iter().map(|r| r * r).collect(), crude * crude),
    };
    let est = Estimate::from_samples(&values, seed)?;
    Ok(BoundReport::new(exp, est, bound, 0.0, Comparison::Upper, UPPER_SIGMAS))
}

fn heat_agreement_report(exp: &Experiment, mut series: Vec<f64>, mut sde: Vec<f64>, seed: u64) -> BoundReport {
    let critical = ks_critical_1pct(series.len(), sde.len());
    let d = ks_two_sample(&mut series, &mut sde);
    let est = Estimate {
        mean: d,
        std_error: 0.0,
        trials: series.len(),
        seed,
    };
    BoundReport::new(exp, est, critical, 0.0, Comparison::Upper, 0.0)
}

/// Both moment checks for both samplers plus their KS agreement, sharing
/// samples. Series draws use `derive_seed(seed, 1)`, SDE draws
/// `derive_seed(seed, 2)`.
pub fn heat_reports(n: usize, t: f64, samples: usize, seed: u64) -> Result<Vec<BoundReport>> {
    let mut out = Vec::new();
    let mut draws = Vec::new();
    for (kind, tag) in [(SamplerKind::Series, SERIES_SEED_TAG), (SamplerKind::Sde, SDE_SEED_TAG)] {
        let s = derive_seed(seed, tag);
        let rs = heat_angle_samples(n, t, samples, kind, s)?;
        for moment in [Moment::Mean, Moment::Square] {
            let exp = Experiment::HeatMoment {
                n,
                t,
                samples,
                sampler: kind,
                moment,
                seed: s,
            };
            out.push(heat_moment_report(&exp, n, t, moment, &rs, s)?);
        }
        draws.push(rs);
    }
    let sde = draws.pop().expect("two samplers");
    let series = draws.pop().expect("two samplers");
    let exp = Experiment::HeatAgreement { n, t, samples, seed };
    out.push(heat_agreement_report(&exp, series, sde, seed));
    Ok(out)
}

fn root_bound(exp: &Experiment, n: usize, d: usize, cases: usize, seed: u64) -> Result<BoundReport> {
    if n < 2 {
        return Err(Error::Dimension {
            n,
            reason: "great circles need n >= 2",
        });
    }
    let rows = (0..cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            let p = random_polynomial(n, d, &mut rng);
            let u = sample_uniform_sphere(n, &mut rng);
            let w = sample_tangent(&u, &mut rng);
            let restriction = restrict_to_great_circle(&p, &u, &w)?;
            Ok(match count_circle_roots(&restriction, ROOT_TOL)? {
                crate::poly::CircleRoots::Vanishes => (0, 0, true),
                crate::poly::CircleRoots::Finite { roots, sign_changes } => {
                    (roots, sign_changes, sign_changes <= roots)
                }
            })
        })
        .collect::<Result<Vec<(usize, usize, bool)>>>()?;
    let limit = 2 * d;
    let violations: Vec<f64> = rows
        .iter()
        .map(|&(roots, changes, _)| if roots.max(changes) > limit { 1.0 } else { 0.0 })
        .collect();
    let est = Estimate::from_samples(&violations, seed)?;
    let max_roots = rows.iter().map(|r| r.0).max().unwrap_or(0);
    let max_changes = rows.iter().map(|r| r.1).max().unwrap_or(0);
    let inconsistent = rows.iter().filter(|r| !r.2).count();
    Ok(BoundReport::new(exp, est, 0.0, 0.0, Comparison::Upper, 0.0)
        .with_detail("max_roots", max_roots as f64)
        .with_detail("max_sign_changes", max_changes as f64)
        .with_detail("inconsistent_cases", inconsistent as f64)
        .with_detail("limit", limit as f64))
}

/// Relative energy of `p|_H` at characters of weight above `ell`.
pub fn energy_above_degree(p: &SparsePolynomial, ell: usize) -> Result<f64> {
    let n = p.n();
    if n > MAX_EXACT_BITS {
        return Err(Error::Dimension {
            n,
            reason: "exact cube tables need n <= 24",
        });
    }
    let table = crate::boolean::restrict_to_cube(p, n, false)?;
    let by_weight = walsh_hadamard(table).energy_by_weight();
    let total: f64 = by_weight.iter().sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    Ok(by_weight.iter().skip(ell + 1).sum::<f64>() / total)
}
