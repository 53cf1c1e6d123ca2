//! `heatnoise`: run sensitivity experiments and print JSON or CSV reports.
//!
//! Exit status is 0 when every bound report passes, 1 when any fails and 2
//! on malformed input or out-of-range parameters.

mod output;

use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use heatnoise::boolean::{average_sensitivity_exact, noise_sensitivity_exact, restrict_to_cube, walsh_hadamard};
use heatnoise::experiments::{
    gotsman_linial_sweep, heat_angle_samples, heat_reports, transfer_reports, Experiment, Mode, SamplerKind,
    SweepConfig, DEFAULT_APPENDIX_ROTATIONS, DEFAULT_INFLATION, DEFAULT_ROTATIONS, DEFAULT_SS_TRIALS,
};
use heatnoise::poly::from_json;
use heatnoise::sphere::{haar_rotation, trial_rng};
use heatnoise::{BoundReport, SparsePolynomial};
use output::{Body, Header, Output, Table, TOOL, VERSION};
use serde::Serialize;
use serde_json::{json, Map, Value};

#[derive(Debug, Parser)]
#[command(name = "heatnoise", version, about = "Sensitivity experiments for rotated polynomial threshold functions")]
struct Cli {
    /// Output format; `gl-sweep` and `heat-sample` default to csv, the rest to json.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Master seed for every random choice.
    #[arg(long, global = true, env = "HEATNOISE_SEED", default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact noise sensitivity of the polynomial restricted to the cube.
    NsExact(NsExactArgs),
    /// Exact average sensitivity of the polynomial restricted to the cube.
    AsExact(AsExactArgs),
    /// Monte Carlo spherical sensitivity of sgn(p) against its degree bound.
    Ss(SsArgs),
    /// Applies one Haar-random rotation and prints the rotated polynomial.
    Rotate(RotateArgs),
    /// Checks E_R NS_ε(Rf) ≤ SS_t(f) at t = ln(1/(1−2ε))/n.
    VerifyTransfer(TransferArgs),
    /// Checks E_R AS(Rf) ≤ 2n/(1 − e^{−α}) SS_{α/n²}(f).
    VerifyTransferAs(TransferAsArgs),
    /// Expected energy of a rotated zonal harmonic at one character.
    VerifyAppendix(AppendixArgs),
    /// Noise, average and spherical sensitivity bounds for random polynomials.
    GlSweep(SweepArgs),
    /// Heat-kernel geodesic angle samples, or moment and agreement checks.
    HeatSample(HeatArgs),
    /// Root counts of random polynomials on random great circles.
    Roots(RootsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum CubeMode {
    /// sgn(p) on the cube.
    Sign,
    /// p itself on the cube.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum TransferMode {
    Sign,
    Raw,
    Both,
}

impl TransferMode {
    fn modes(self) -> Vec<Mode> {
        match self {
            TransferMode::Raw => vec![Mode::Raw],
            TransferMode::Sign => vec![Mode::Sign],
            TransferMode::Both => vec![Mode::Raw, Mode::Sign],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Sampler {
    Series,
    Sde,
}

#[derive(Debug, Args, Serialize)]
struct PolyArgs {
    /// Polynomial file: a JSON array of {"exponents": [...], "coeff": c}; `-` reads stdin.
    #[arg(long)]
    poly: PathBuf,

    /// Expected dimension; must match the polynomial's exponent length.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct NsExactArgs {
    #[command(flatten)]
    #[serde(flatten)]
    poly: PolyArgs,

    /// Flip probabilities, comma separated.
    #[arg(long, value_delimiter = ',', required = true, value_parser = finite_f64)]
    eps: Vec<f64>,

    #[arg(long, value_enum, default_value = "sign")]
    mode: CubeMode,
}

#[derive(Debug, Args, Serialize)]
struct AsExactArgs {
    #[command(flatten)]
    #[serde(flatten)]
    poly: PolyArgs,

    #[arg(long, value_enum, default_value = "sign")]
    mode: CubeMode,
}

#[derive(Debug, Args, Serialize)]
struct SsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    poly: PolyArgs,

    /// Heat times, comma separated.
    #[arg(long, value_delimiter = ',', required = true, value_parser = finite_f64)]
    t: Vec<f64>,

    #[arg(long, default_value_t = DEFAULT_SS_TRIALS)]
    trials: usize,
}

#[derive(Debug, Args, Serialize)]
struct RotateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    poly: PolyArgs,
}

#[derive(Debug, Args, Serialize)]
struct TransferArgs {
    #[command(flatten)]
    #[serde(flatten)]
    poly: PolyArgs,

    #[arg(long, value_delimiter = ',', required = true, value_parser = finite_f64)]
    eps: Vec<f64>,

    #[arg(long, default_value_t = DEFAULT_ROTATIONS)]
    rotations: usize,

    /// Monte Carlo trials for the sign-mode right-hand side.
    #[arg(long, default_value_t = DEFAULT_SS_TRIALS)]
    ss_trials: usize,

    #[arg(long, value_enum, default_value = "both")]
    mode: TransferMode,
}

#[derive(Debug, Args, Serialize)]
struct TransferAsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    poly: PolyArgs,

    #[arg(long, value_delimiter = ',', required = true, value_parser = finite_f64)]
    alpha: Vec<f64>,

    #[arg(long, default_value_t = DEFAULT_ROTATIONS)]
    rotations: usize,

    #[arg(long, default_value_t = DEFAULT_SS_TRIALS)]
    ss_trials: usize,

    #[arg(long, value_enum, default_value = "both")]
    mode: TransferMode,
}

#[derive(Debug, Args, Serialize)]
struct AppendixArgs {
    #[arg(long)]
    n: usize,

    /// Harmonic degree.
    #[arg(long)]
    ell: usize,

    /// Character as a bit string; character i is coordinate i.
    #[arg(long)]
    k: String,

    #[arg(long, default_value_t = DEFAULT_APPENDIX_ROTATIONS)]
    rotations: usize,
}

#[derive(Debug, Args, Serialize)]
struct SweepArgs {
    /// Degrees, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    d: Vec<usize>,

    /// Dimensions, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,

    #[arg(long, value_delimiter = ',', required = true, value_parser = finite_f64)]
    eps: Vec<f64>,

    #[arg(long, value_delimiter = ',', default_value = "0.001,0.01", value_parser = finite_f64)]
    t: Vec<f64>,

    #[arg(long, default_value_t = DEFAULT_ROTATIONS)]
    rotations: usize,

    #[arg(long, default_value_t = DEFAULT_SS_TRIALS)]
    ss_trials: usize,

    /// Constant C in the (1 + Cε) and (1 + C/n) bound factors.
    #[arg(long, default_value_t = DEFAULT_INFLATION, value_parser = finite_f64)]
    inflation: f64,
}

#[derive(Debug, Args, Serialize)]
struct HeatArgs {
    #[arg(long)]
    n: usize,

    #[arg(long, value_delimiter = ',', required = true, value_parser = finite_f64)]
    t: Vec<f64>,

    #[arg(long, default_value_t = 10_000)]
    samples: usize,

    #[arg(long, value_enum, default_value = "series")]
    sampler: Sampler,

    /// Emit moment and sampler-agreement reports instead of samples.
    #[arg(long)]
    verify: bool,
}

#[derive(Debug, Args, Serialize)]
struct RootsArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,

    #[arg(long, value_delimiter = ',', required = true)]
    d: Vec<usize>,

    /// Random (polynomial, circle) pairs per (n, d).
    #[arg(long, default_value_t = 1000)]
    cases: usize,
}

fn finite_f64(s: &str) -> Result<f64, String> {
    let x: f64 = s.trim().parse().map_err(|e| format!("`{s}` is not a number: {e}"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

/// Input or parameter problem; always exit status 2.
#[derive(Debug)]
struct CliError(String);

impl From<heatnoise::Error> for CliError {
    fn from(e: heatnoise::Error) -> Self {
        CliError(e.to_string())
    }
}

struct Run {
    command: &'static str,
    params: Map<String, Value>,
    body: Body,
    default_format: Format,
}

fn params_of<T: Serialize>(args: &T) -> Map<String, Value> {
    match serde_json::to_value(args) {
        Ok(Value::Object(map)) => map,
        _ => unreachable!("argument structs serialize to objects"),
    }
}

fn load_poly(args: &PolyArgs, params: &mut Map<String, Value>) -> Result<SparsePolynomial, CliError> {
    let label = args.poly.display().to_string();
    let text = if label == "-" {
        let mut buf = String::new();
        io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| CliError(format!("reading stdin: {e}")))?;
        buf
    } else {
        fs::read_to_string(&args.poly).map_err(|e| CliError(format!("reading {label}: {e}")))?
    };
    let p = from_json(&text).map_err(|e| CliError(format!("{label}: {e}")))?;
    if let Some(n) = args.n {
        if n != p.n() {
            return Err(CliError(format!(
                "--n {n} does not match the polynomial in {label}, which has n = {}",
                p.n()
            )));
        }
    }
    params.insert("polynomial".into(), serde_json::to_value(&p).expect("polynomials serialize"));
    Ok(p)
}

fn parse_mask(k: &str, n: usize) -> Result<u64, CliError> {
    if k.len() != n {
        return Err(CliError(format!(
            "--k must have exactly n = {n} characters, got {} in `{k}`",
            k.len()
        )));
    }
    k.chars().enumerate().try_fold(0u64, |mask, (i, c)| match c {
        '0' => Ok(mask),
        '1' => Ok(mask | 1 << i),
        other => Err(CliError(format!("--k character {i} is `{other}`; expected 0 or 1"))),
    })
}

fn cube_mode_name(mode: CubeMode) -> &'static str {
    match mode {
        CubeMode::Sign => "sign",
        CubeMode::Raw => "raw",
    }
}

fn execute(command: Command, seed: u64) -> Result<Run, CliError> {
    let reports = |command, params, reports: Vec<BoundReport>| Run {
        command,
        params,
        body: Body::Reports(reports),
        default_format: Format::Json,
    };
    match command {
        Command::NsExact(args) => {
            let mut params = params_of(&args);
            let p = load_poly(&args.poly, &mut params)?;
            let spec = walsh_hadamard(restrict_to_cube(&p, p.n(), args.mode == CubeMode::Sign)?);
            let mut table = Table::new(&["mode", "n", "eps", "noise_sensitivity"]);
            for &eps in &args.eps {
                let ns = noise_sensitivity_exact(&spec, eps)?;
                table.push(vec![json!(cube_mode_name(args.mode)), json!(p.n()), json!(eps), json!(ns)]);
            }
            Ok(rows_run("ns-exact", params, table, Format::Json))
        }
        Command::AsExact(args) => {
            let mut params = params_of(&args);
            let p = load_poly(&args.poly, &mut params)?;
            let spec = walsh_hadamard(restrict_to_cube(&p, p.n(), args.mode == CubeMode::Sign)?);
            let mut table = Table::new(&["mode", "n", "average_sensitivity"]);
            table.push(vec![
                json!(cube_mode_name(args.mode)),
                json!(p.n()),
                json!(average_sensitivity_exact(&spec)),
            ]);
            Ok(rows_run("as-exact", params, table, Format::Json))
        }
        Command::Ss(args) => {
            let mut params = params_of(&args);
            let p = load_poly(&args.poly, &mut params)?;
            let out = args
                .t
                .iter()
                .map(|&t| {
                    Experiment::SsBound {
                        poly: p.clone(),
                        t,
                        trials: args.trials,
                        seed,
                    }
                    .run()
                })
                .collect::<heatnoise::Result<Vec<_>>>()?;
            Ok(reports("ss", params, out))
        }
        Command::Rotate(args) => {
            let mut params = params_of(&args);
            let p = load_poly(&args.poly, &mut params)?;
            let rotation = haar_rotation(p.n(), &mut trial_rng(seed, 0));
            let rotated = p.rotate(&rotation)?;
            let mut table = Table::new(&["exponents", "coeff"]);
            for (exps, &c) in rotated.terms() {
                table.push(vec![json!(exps), json!(c)]);
            }
            Ok(rows_run("rotate", params, table, Format::Json))
        }
        Command::VerifyTransfer(args) => {
            let mut params = params_of(&args);
            let p = load_poly(&args.poly, &mut params)?;
            let keep = args.mode.modes();
            let out = transfer_reports(&p, &args.eps, args.rotations, args.ss_trials, seed)?
                .into_iter()
                .filter(|r| matches!(r.experiment(), Ok(Experiment::Transfer { mode, .. }) if keep.contains(&mode)))
                .collect();
            Ok(reports("verify-transfer", params, out))
        }
        Command::VerifyTransferAs(args) => {
            let mut params = params_of(&args);
            let p = load_poly(&args.poly, &mut params)?;
            let mut out = Vec::new();
            for mode in args.mode.modes() {
                for &alpha in &args.alpha {
                    let exp = Experiment::TransferAs {
                        poly: p.clone(),
                        alpha,
                        rotations: args.rotations,
                        mode,
                        ss_trials: args.ss_trials,
                        seed,
                    };
                    out.push(exp.run()?);
                }
            }
            Ok(reports("verify-transfer-as", params, out))
        }
        Command::VerifyAppendix(args) => {
            let params = params_of(&args);
            let k_mask = parse_mask(&args.k, args.n)?;
            let exp = Experiment::AppendixEnergy {
                n: args.n,
                ell: args.ell,
                k_mask,
                rotations: args.rotations,
                seed,
            };
            Ok(reports("verify-appendix", params, vec![exp.run()?]))
        }
        Command::GlSweep(args) => {
            let params = params_of(&args);
            let cfg = SweepConfig {
                degrees: args.d,
                dims: args.n,
                eps: args.eps,
                times: args.t,
                rotations: args.rotations,
                ss_trials: args.ss_trials,
                inflation: args.inflation,
                seed,
            };
            let mut run = reports("gl-sweep", params, gotsman_linial_sweep(&cfg)?);
            run.default_format = Format::Csv;
            Ok(run)
        }
        Command::HeatSample(args) => {
            let params = params_of(&args);
            if args.verify {
                let mut out = Vec::new();
                for &t in &args.t {
                    out.extend(heat_reports(args.n, t, args.samples, seed)?);
                }
                let mut run = reports("heat-sample", params, out);
                run.default_format = Format::Csv;
                return Ok(run);
            }
            let kind = match args.sampler {
                Sampler::Series => SamplerKind::Series,
                Sampler::Sde => SamplerKind::Sde,
            };
            let mut table = Table::new(&["n", "t", "sample", "angle"]);
            for &t in &args.t {
                for (i, r) in heat_angle_samples(args.n, t, args.samples, kind, seed)?.into_iter().enumerate() {
                    table.push(vec![json!(args.n), json!(t), json!(i), json!(r)]);
                }
            }
            Ok(rows_run("heat-sample", params, table, Format::Csv))
        }
        Command::Roots(args) => {
            let params = params_of(&args);
            let mut out = Vec::new();
            for &n in &args.n {
                for &d in &args.d {
                    let exp = Experiment::RootBound {
                        n,
                        d,
                        cases: args.cases,
                        seed,
                    };
                    out.push(exp.run()?);
                }
            }
            Ok(reports("roots", params, out))
        }
    }
}

fn rows_run(command: &'static str, params: Map<String, Value>, table: Table, default_format: Format) -> Run {
    Run {
        command,
        params,
        body: Body::Rows(table),
        default_format,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = match execute(cli.command, cli.seed) {
        Ok(run) => run,
        Err(CliError(message)) => {
            eprintln!("heatnoise: error: {message}");
            return ExitCode::from(2);
        }
    };
    let out = Output {
        header: Header {
            tool: TOOL,
            version: VERSION,
            command: run.command,
            seed: cli.seed,
            params: run.params,
        },
        body: run.body,
    };
    let text = match cli.format.unwrap_or(run.default_format) {
        Format::Json => out.to_json(),
        Format::Csv => out.to_csv(),
    };
    let mut stdout = io::stdout().lock();
    if stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).is_err() {
        return ExitCode::from(2);
    }
    if out.pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
