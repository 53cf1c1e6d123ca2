//! Acceptance checks. Prints one PASS/FAIL line per criterion.

use std::process::ExitCode;
use std::time::Instant;

use heatnoise::boolean::{
    average_sensitivity_exact, noise_sensitivity_exact, restrict_to_cube,
    walsh_hadamard, TruthTable,
};
use heatnoise::experiments::{
    appendix_closed_form, energy_above_degree, gotsman_linial_sweep, heat_reports, replay,
    transfer_reports, Experiment, SweepConfig, DEFAULT_INFLATION,
};
use heatnoise::poly::{harmonic_decompose, random_homogeneous, random_polynomial};
use heatnoise::special::{
    binomial, gauss_jacobi_rule, harmonic_dimension, harmonic_dimension_forms, GegenbauerBasis,
};
use heatnoise::sphere::{derive_seed, trial_rng};
use heatnoise::BoundReport;
use rand::Rng;

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    summary: String,
}

fn outcome(pass: bool, summary: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        summary: summary.into(),
    }
}

fn failing(reports: &[BoundReport]) -> Vec<&BoundReport> {
    reports.iter().filter(|r| !r.pass).collect()
}

fn describe(r: &BoundReport) -> String {
    format!(
        "{} mean={:.6} se={:.2e} bound={:.6} slack_sigmas={:.2} params={}",
        r.name,
        r.estimate.mean,
        r.combined_std_error(),
        r.bound,
        r.slack_sigmas,
        short_params(r)
    )
}

fn short_params(r: &BoundReport) -> String {
    let shown: Vec<String> = r
        .params
        .iter()
        .filter(|(k, _)| !matches!(k.as_str(), "poly" | "first" | "second"))
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    let degree = r
        .experiment()
        .ok()
        .and_then(|e| match e {
            Experiment::Transfer { poly, .. }
            | Experiment::NsBound { poly, .. }
            | Experiment::AsBound { poly, .. }
            | Experiment::SsBound { poly, .. } => Some(format!(" n={} d={}", poly.n(), poly.degree())),
            _ => None,
        })
        .unwrap_or_default();
    format!("{{{}}}{degree}", shown.join(","))
}

/// Exhaustive NS: average over `x` and every flip pattern.
fn brute_ns(values: &[f64], n: usize, eps: f64) -> f64 {
    let mut total = 0.0;
    for x in 0..1usize << n {
        for flip in 0..1usize << n {
            let k = flip.count_ones() as i32;
            if values[x] != values[x ^ flip] {
                total += eps.powi(k) * (1.0 - eps).powi(n as i32 - k);
            }
        }
    }
    total / (1usize << n) as f64
}

/// `n` times the fraction of boundary edges.
fn brute_as(values: &[f64], n: usize) -> f64 {
    let mut boundary = 0usize;
    for x in 0..1usize << n {
        for i in 0..n {
            if values[x] != values[x ^ (1 << i)] {
                boundary += 1;
            }
        }
    }
    boundary as f64 / (1usize << n) as f64
}

fn criterion_1() -> Outcome {
    let mut worst = 0.0f64;
    let mut tested = 0;
    for i in 0..60u64 {
        let mut rng = trial_rng(derive_seed(SEED, 1), i);
        let n = 2 + (i as usize % 7);
        let d = 1 + (i as usize % 4);
        let p = random_polynomial(n, d, &mut rng);
        let table = restrict_to_cube(&p, n, true).unwrap();
        let values = table.values().to_vec();
        let spec = walsh_hadamard(table);
        for eps in [0.05, 0.1, 0.25] {
            let diff = (noise_sensitivity_exact(&spec, eps).unwrap() - brute_ns(&values, n, eps)).abs();
            worst = worst.max(diff);
        }
        worst = worst.max((average_sensitivity_exact(&spec) - brute_as(&values, n)).abs());
        tested += 1;
    }
    outcome(worst <= 1e-12, format!("{tested} PTFs, n<=8, max deviation {worst:.2e}"))
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    for n in 1..=8 {
        let dictator = walsh_hadamard(TruthTable::from_fn(n, |x| x[0].signum()).unwrap());
        let parity = walsh_hadamard(TruthTable::from_fn(n, |x| x.iter().map(|v| v.signum()).product()).unwrap());
        for eps in [0.0, 0.01, 0.1, 0.3, 0.5] {
            worst = worst.max((noise_sensitivity_exact(&dictator, eps).unwrap() - eps).abs());
            let want = (1.0 - (1.0 - 2.0 * eps).powi(n as i32)) / 2.0;
            worst = worst.max((noise_sensitivity_exact(&parity, eps).unwrap() - want).abs());
        }
    }
    let maj = walsh_hadamard(
        TruthTable::from_fn(3, |x| if x.iter().sum::<f64>() >= 0.0 { 1.0 } else { -1.0 }).unwrap(),
    );
    let ns = noise_sensitivity_exact(&maj, 0.1).unwrap();
    let avg = average_sensitivity_exact(&maj);
    worst = worst.max((ns - 0.136).abs()).max((avg - 1.5).abs());
    outcome(
        worst <= 1e-12,
        format!("Maj3 NS(0.1)={ns:.15} AS={avg:.15}, max deviation {worst:.2e}"),
    )
}

fn criterion_3() -> Outcome {
    let mut gram_dev = 0.0f64;
    for n in [3, 4, 6, 10] {
        let rule = gauss_jacobi_rule(n, 64).unwrap();
        let basis = GegenbauerBasis::new(n, 8).unwrap();
        let mut vals = vec![0.0; 9];
        let mut gram = [[0.0; 9]; 9];
        for (z, w) in rule.nodes.iter().zip(&rule.weights) {
            basis.eval_all(*z, &mut vals).unwrap();
            for a in 0..9 {
                for b in 0..9 {
                    gram[a][b] += w * vals[a] * vals[b];
                }
            }
        }
        for (a, row) in gram.iter().enumerate() {
            for (b, g) in row.iter().enumerate() {
                let want = if a == b { 1.0 } else { 0.0 };
                gram_dev = gram_dev.max((g - want).abs());
            }
        }
    }
    let mut pole_dev = 0.0f64;
    for n in 3..=12 {
        let basis = GegenbauerBasis::new(n, 20).unwrap();
        for ell in 0..=20 {
            let d = harmonic_dimension(n, ell).unwrap() as f64;
            pole_dev = pole_dev.max((basis.eval(ell, 1.0).unwrap() - d.sqrt()).abs() / d.sqrt().max(1.0));
        }
    }
    let mut forms_agree = true;
    for n in 3..=12 {
        for ell in 0..=10 {
            let (a, b) = harmonic_dimension_forms(n, ell).unwrap();
            forms_agree &= a == b;
        }
    }
    outcome(
        gram_dev <= 1e-9 && pole_dev <= 1e-10 && forms_agree,
        format!("Gram deviation {gram_dev:.2e}, pole deviation {pole_dev:.2e}, dimension forms agree: {forms_agree}"),
    )
}

fn criterion_4(all: &mut Vec<BoundReport>) -> Outcome {
    let mut reports = Vec::new();
    let mut sum_dev = 0.0f64;
    for n in [4usize, 6, 8] {
        for ell in 0..4 {
            let total: f64 = (0..=n)
                .map(|w| binomial(n as u64, w as u64).unwrap() as f64 * appendix_closed_form(n, ell, w).unwrap())
                .sum();
            sum_dev = sum_dev.max((total - 1.0).abs());
            for (j, mask) in [0b1u64, 0b11, 0b111].into_iter().enumerate() {
                let exp = Experiment::AppendixEnergy {
                    n,
                    ell,
                    k_mask: mask,
                    rotations: 10_000,
                    seed: derive_seed(SEED, 400 + (n * 10 + ell) as u64 * 4 + j as u64),
                };
                reports.push(exp.run().unwrap());
            }
        }
    }
    let bad = failing(&reports);
    let mut summary = format!(
        "{} MC checks, {} outside 4 SE; closed-form sum deviation {sum_dev:.2e}",
        reports.len(),
        bad.len()
    );
    for r in &bad {
        summary.push_str(&format!("\n      {}", describe(r)));
    }
    let pass = bad.is_empty() && sum_dev <= 1e-9;
    all.extend(reports);
    outcome(pass, summary)
}

fn criterion_5(all: &mut Vec<BoundReport>) -> Outcome {
    let dims = [6usize, 8, 10];
    let mut reports = Vec::new();
    for i in 0..20u64 {
        let d = 1 + (i as usize % 3);
        let n = dims[(i as usize / 3) % 3];
        let p = random_polynomial(n, d, &mut trial_rng(derive_seed(SEED, 5), i));
        let seed = derive_seed(SEED, 500 + i);
        reports.extend(transfer_reports(&p, &[0.02, 0.05, 0.1], 200, 20_000, seed).unwrap());
    }
    let count = |mode: &str| {
        let of_mode: Vec<&BoundReport> = reports.iter().filter(|r| r.params["mode"] == mode).collect();
        (of_mode.iter().filter(|r| !r.pass).count(), of_mode.len())
    };
    let (raw_bad, raw_total) = count("raw");
    let (sign_bad, sign_total) = count("sign");
    let bad = failing(&reports);
    let mut summary = format!(
        "raw mode {raw_bad}/{raw_total} failing, sign mode {sign_bad}/{sign_total} failing"
    );
    for r in bad.iter().take(12) {
        summary.push_str(&format!("\n      {}", describe(r)));
    }
    if bad.len() > 12 {
        summary.push_str(&format!("\n      ... {} more", bad.len() - 12));
    }
    let pass = bad.is_empty();
    all.extend(reports);
    outcome(pass, summary)
}

fn sweep_reports() -> Vec<BoundReport> {
    gotsman_linial_sweep(&SweepConfig {
        degrees: vec![1, 2, 3, 4],
        dims: vec![6, 8, 10, 12],
        eps: vec![0.02, 0.05, 0.1],
        times: vec![0.001, 0.01],
        rotations: 200,
        ss_trials: 20_000,
        inflation: DEFAULT_INFLATION,
        seed: derive_seed(SEED, 6),
    })
    .unwrap()
}

fn summarize(reports: &[BoundReport], label: &str) -> Outcome {
    let bad = failing(reports);
    let tightest = reports
        .iter()
        .map(|r| r.slack_sigmas)
        .fold(f64::INFINITY, f64::min);
    let mut summary = format!(
        "{} {label} rows, {} failing, smallest slack {tightest:.2} SE",
        reports.len(),
        bad.len()
    );
    for r in &bad {
        summary.push_str(&format!("\n      {}", describe(r)));
    }
    outcome(bad.is_empty(), summary)
}

fn criterion_8(all: &mut Vec<BoundReport>) -> Outcome {
    let configs = [(3usize, 2usize), (5, 3), (8, 4), (12, 5)];
    let reports: Vec<BoundReport> = configs
        .iter()
        .enumerate()
        .map(|(j, &(n, d))| {
            Experiment::RootBound {
                n,
                d,
                cases: 250,
                seed: derive_seed(SEED, 800 + j as u64),
            }
            .run()
            .unwrap()
        })
        .collect();
    let violations: f64 = reports.iter().map(|r| r.estimate.mean * r.estimate.trials as f64).sum();
    let inconsistent: f64 = reports.iter().map(|r| r.details["inconsistent_cases"]).sum();
    let pass = reports.iter().all(|r| r.pass);
    all.extend(reports);
    outcome(
        pass,
        format!("1000 cases, {violations} violations of count <= 2d, {inconsistent} scans seeing more crossings than roots"),
    )
}

fn criterion_9(all: &mut Vec<BoundReport>) -> Outcome {
    let mut reports = Vec::new();
    for n in [4usize, 8] {
        for t in [0.005, 0.02] {
            reports.extend(heat_reports(n, t, 100_000, derive_seed(SEED, 900 + n as u64)).unwrap());
        }
    }
    let out = summarize(&reports, "moment/KS");
    all.extend(reports);
    out
}

fn criterion_10() -> Outcome {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in 3..=10usize {
        for ell in 0..=4usize {
            for rep in 0..2u64 {
                let mut rng = trial_rng(derive_seed(SEED, 10), (n * 100 + ell * 10) as u64 + rep);
                let h = random_homogeneous(n, ell, &mut rng);
                let dec = harmonic_decompose(&h).unwrap();
                let Some(part) = dec.part(ell) else { continue };
                worst = worst.max(energy_above_degree(part, ell).unwrap());
                cases += 1;
            }
        }
    }
    outcome(worst <= 1e-10, format!("{cases} harmonics, max relative energy above degree {worst:.2e}"))
}

fn criterion_11(all: &mut Vec<BoundReport>) -> Outcome {
    let reports: Vec<BoundReport> = [(10usize, 0.1), (10, 0.0), (6, 0.5), (20, 0.03)]
        .iter()
        .enumerate()
        .map(|(j, &(n, eps))| {
            Experiment::CosRemark {
                n,
                eps,
                trials: 100_000,
                seed: derive_seed(SEED, 1100 + j as u64),
            }
            .run()
            .unwrap()
        })
        .collect();
    let out = summarize(&reports, "cosine");
    all.extend(reports);
    out
}

fn criterion_12(all: &[BoundReport]) -> Outcome {
    let mut rng = trial_rng(derive_seed(SEED, 12), 0);
    let mut picks: Vec<usize> = Vec::new();
    if let Some(i) = all.iter().position(|r| !r.pass) {
        picks.push(i);
    }
    while picks.len() < 3 && !all.is_empty() {
        picks.push(rng.random_range(0..all.len()));
    }
    let mut identical = 0;
    let mut names = Vec::new();
    for &i in &picks {
        let original = &all[i];
        let again = replay(original).unwrap();
        if again == *original && again.to_json() == original.to_json() {
            identical += 1;
        }
        names.push(format!("{}{}", original.name, if original.pass { "" } else { " (failing)" }));
    }
    outcome(
        identical == picks.len() && picks.len() >= 3,
        format!("{identical}/{} replays bit-identical: {}", picks.len(), names.join(", ")),
    )
}

type Row = (usize, bool);

fn record(results: &mut Vec<Row>, id: usize, title: &str, f: impl FnOnce() -> Outcome) {
    let start = Instant::now();
    let out = f();
    let secs = start.elapsed().as_secs_f64();
    println!(
        "criterion {id:>2} {} {title} ({secs:.1}s): {}",
        if out.pass { "PASS" } else { "FAIL" },
        out.summary
    );
    results.push((id, out.pass));
}

fn main() -> ExitCode {
    let mut all: Vec<BoundReport> = Vec::new();
    let mut results: Vec<Row> = Vec::new();
    record(&mut results, 1, "exact Boolean oracles", criterion_1);
    record(&mut results, 2, "closed-form spot values", criterion_2);
    record(&mut results, 3, "Gegenbauer suite", criterion_3);
    record(&mut results, 4, "expected energy identity", || criterion_4(&mut all));
    record(&mut results, 5, "transfer inequality", || criterion_5(&mut all));
    let start = Instant::now();
    let (ss, cube): (Vec<BoundReport>, Vec<BoundReport>) =
        sweep_reports().into_iter().partition(|r| r.name == "ss_bound");
    println!("   (shared sweep computed in {:.1}s)", start.elapsed().as_secs_f64());
    record(&mut results, 6, "average NS/AS bounds", || summarize(&cube, "NS/AS"));
    record(&mut results, 7, "spherical sensitivity bound", || summarize(&ss, "SS"));
    all.extend(cube);
    all.extend(ss);
    record(&mut results, 8, "great-circle root bound", || criterion_8(&mut all));
    record(&mut results, 9, "heat-kernel moments and sampler agreement", || criterion_9(&mut all));
    record(&mut results, 10, "restriction degree bound", criterion_10);
    record(&mut results, 11, "cosine identity", || criterion_11(&mut all));
    record(&mut results, 12, "deterministic replay", || criterion_12(&all));
    let failed = results.iter().filter(|r| !r.1).count();
    println!("acceptance: {}/{} criteria pass", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
