use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use evodyn_core::experiments::{beta_sweep_ratio, classify_cycling, scaling_identity_check};
use evodyn_core::{continuous_integrate, iterate, verify_ess, MatrixLandscape, SimplexPoint, Trajectory64};

use crate::config::{parse_matrix, parse_reals, read_builder, DynamicChoice, Format, RunSpec, SpecBuilder};
use crate::error::{CliError, Result};
use crate::json::write_summary_json;
use crate::svg::write_ternary_svg;
use crate::table::write_trajectory_csv;

#[derive(Debug, Parser)]
#[command(
    name = "evodyn",
    version,
    about = "Replicator and projection dynamics with Polyak/Nesterov momentum",
    long_about = "Replicator and projection dynamics with Polyak/Nesterov momentum.\n\n\
        Exit status: 0 on success, 1 for invalid input, 2 when a run or file write fails."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one configuration and write its trajectory (CSV), summary (JSON) and ternary plot (SVG).
    Simulate(SimulateArgs),
    /// Convergence steps for each beta against beta = 0; writes <out>.json.
    Sweep(SweepArgs),
    /// Classify a zero-sum run as Converging, Diverging or Cycling; writes <out>.json.
    Classify(ClassifyArgs),
    /// Check the (1 - beta) rescaling of the KL time derivative on seeded samples; writes <out>.json.
    VerifyScaling(ScalingArgs),
    /// Sample the ESS inequality around a candidate state; writes <out>.json.
    VerifyEss(EssArgs),
}

/// Settings shared by `simulate`, `sweep` and `classify`. Each flag overrides
/// the same key from `--config`.
#[derive(Debug, Args)]
struct SpecArgs {
    /// Run file of `key = value` lines (`#` comments); flags override its values.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Write the effective settings as a run file and continue.
    #[arg(long, value_name = "PATH")]
    dump_config: Option<PathBuf>,
    /// Cyclic landscape: rows (0,a,b), (b,0,a), (a,b,0). Needs --b.
    #[arg(long, allow_negative_numbers = true)]
    a: Option<String>,
    /// Cyclic landscape off-diagonal entry b. Needs --a.
    #[arg(long, allow_negative_numbers = true)]
    b: Option<String>,
    /// Explicit payoff matrix, rows separated by `;`, e.g. "0,1,-1;-1,0,1;1,-1,0".
    #[arg(long, allow_hyphen_values = true)]
    matrix: Option<String>,
    /// replicator, projection, or continuous (RK4 momentum replicator) [default: replicator].
    #[arg(long)]
    dynamic: Option<String>,
    /// none, polyak or nesterov [default: none].
    #[arg(long)]
    momentum: Option<String>,
    /// Learning rate [default: 0.005].
    #[arg(long)]
    alpha: Option<String>,
    /// Momentum coefficient [default: 0].
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<String>,
    /// Divide the field by the mean fitness (true/false) [default: false].
    #[arg(long)]
    normalize: Option<String>,
    /// Initial state, comma separated.
    #[arg(long)]
    x0: Option<String>,
    /// Lyapunov reference state, comma separated [default: barycenter].
    #[arg(long)]
    reference: Option<String>,
    /// Step limit [default: 10000000].
    #[arg(long)]
    max_steps: Option<String>,
    /// Convergence threshold on the Lyapunov value [default: 1e-6].
    #[arg(long)]
    epsilon: Option<String>,
    /// A coordinate at or below this ends the run as Diverged [default: 1e-9].
    #[arg(long)]
    boundary_delta: Option<String>,
    /// Integration horizon T for --dynamic continuous [default: 10].
    #[arg(long)]
    horizon: Option<String>,
    /// RK4 step size for --dynamic continuous [default: 0.01].
    #[arg(long)]
    step: Option<String>,
    /// Keep every k-th state in the written trajectory [default: 1].
    #[arg(long)]
    record_every: Option<String>,
    /// Seed recorded in the config digest [default: 0].
    #[arg(long)]
    seed: Option<String>,
    /// Output path prefix; extensions are appended [default: run].
    #[arg(long)]
    out: Option<String>,
    /// Comma-separated subset of csv,json,svg [default: all three].
    #[arg(long)]
    formats: Option<String>,
}

impl SpecArgs {
    fn resolve(&self) -> Result<RunSpec> {
        let mut builder = match &self.config {
            Some(path) => read_builder(path)?,
            None => SpecBuilder::new(),
        };
        let flags = [
            ("a", &self.a),
            ("b", &self.b),
            ("matrix", &self.matrix),
            ("dynamic", &self.dynamic),
            ("momentum", &self.momentum),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("normalize", &self.normalize),
            ("x0", &self.x0),
            ("reference", &self.reference),
            ("max_steps", &self.max_steps),
            ("epsilon", &self.epsilon),
            ("boundary_delta", &self.boundary_delta),
            ("horizon", &self.horizon),
            ("step", &self.step),
            ("record_every", &self.record_every),
            ("seed", &self.seed),
            ("out", &self.out),
            ("formats", &self.formats),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                builder.set(key, v)?;
            }
        }
        let spec = builder.finish()?;
        if let Some(path) = &self.dump_config {
            crate::table::write_text(path, &spec.to_config_string())?;
        }
        Ok(spec)
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    spec: SpecArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Momentum coefficients to compare, comma separated (each below 1).
    #[arg(long, required = true, allow_hyphen_values = true)]
    betas: String,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Steps to run unless the state reaches the boundary first.
    #[arg(long, default_value_t = 100_000)]
    total_steps: u64,
    /// Steps per averaging window of the KL series.
    #[arg(long, default_value_t = 1000)]
    window: usize,
}

#[derive(Debug, Args)]
struct LandscapeArgs {
    /// Cyclic landscape entry a. Needs --b.
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    /// Cyclic landscape entry b. Needs --a.
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    /// Explicit payoff matrix, rows separated by `;`.
    #[arg(long, allow_hyphen_values = true)]
    matrix: Option<String>,
}

impl LandscapeArgs {
    fn build(&self) -> Result<(MatrixLandscape<f64>, String)> {
        let landscape = match (self.a, self.b, &self.matrix) {
            (Some(a), Some(b), None) => MatrixLandscape::cyclic(a, b),
            (None, None, Some(m)) => {
                MatrixLandscape::new(parse_matrix(m)?).map_err(|e| CliError::validation("matrix", e.to_string()))?
            }
            _ => return Err(CliError::validation("landscape", "give either --a and --b or --matrix")),
        };
        let desc = format!("matrix={:?};", landscape.rows().collect::<Vec<_>>());
        Ok((landscape, desc))
    }
}

#[derive(Debug, Args)]
struct ScalingArgs {
    #[command(flatten)]
    landscape: LandscapeArgs,
    /// Reference state, comma separated [default: barycenter].
    #[arg(long)]
    reference: Option<String>,
    /// Momentum coefficients to check, comma separated.
    #[arg(long, default_value = "-1,0.5,0.9,1.5", allow_hyphen_values = true)]
    betas: String,
    /// Number of seeded interior sample points.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Sampling seed.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output path prefix.
    #[arg(long, default_value = "scaling")]
    out: String,
}

#[derive(Debug, Args)]
struct EssArgs {
    #[command(flatten)]
    landscape: LandscapeArgs,
    /// Candidate state, comma separated [default: barycenter].
    #[arg(long)]
    candidate: Option<String>,
    /// Euclidean radius of the sampled neighbourhood.
    #[arg(long, default_value_t = 0.2)]
    radius: f64,
    /// Number of quasi-random points tested.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Output path prefix.
    #[arg(long, default_value = "ess")]
    out: String,
}

fn with_extension(prefix: &str, format: Format) -> PathBuf {
    PathBuf::from(format!("{prefix}.{}", format.extension()))
}

fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn point(field: &'static str, text: Option<&str>, n: usize) -> Result<SimplexPoint<f64>> {
    match text {
        None => Ok(SimplexPoint::barycenter(n)),
        Some(t) => {
            let v = parse_reals(field, t)?;
            if v.len() != n {
                return Err(CliError::validation(
                    field,
                    format!("needs {n} entries, got {}", v.len()),
                ));
            }
            SimplexPoint::new(v).map_err(|e| CliError::validation(field, e.to_string()))
        }
    }
}

/// Keeps every `k`-th record plus the last one.
fn thin(mut t: Trajectory64, k: u64) -> Trajectory64 {
    if k > 1 && t.len() > 1 {
        let last = t.records.len() - 1;
        let mut i = 0usize;
        t.records.retain(|_| {
            let keep = (i as u64).is_multiple_of(k) || i == last;
            i += 1;
            keep
        });
    }
    t
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let spec = args.spec.resolve()?;
    let landscape = spec.build_landscape()?;
    let x0 = spec.x0_point()?;
    let reference = spec.reference_point()?;
    let trajectory = match spec.dynamic {
        DynamicChoice::Continuous => {
            let mut t = continuous_integrate(&landscape, &x0, spec.beta, spec.horizon, spec.step)?;
            t.annotate(&reference)?;
            thin(t, spec.record_every)
        }
        _ => iterate(&spec.dynamics_config(), &landscape, &x0, Some(&reference))?,
    };
    let digest = spec.digest("")?;
    for format in &spec.formats {
        let path = with_extension(&spec.output_path, *format);
        match format {
            Format::Csv => write_trajectory_csv(&trajectory, &path)?,
            Format::Json => write_summary_json(&trajectory, &digest, &path)?,
            Format::Svg => {
                let label = format!("{} {} beta={}", spec.dynamic.as_str(), spec.momentum, spec.beta);
                write_ternary_svg(std::slice::from_ref(&trajectory), &[label], &path)?
            }
        }
        println!("wrote {}", path.display());
    }
    let last = trajectory.last().map(|r| r.step).unwrap_or(0);
    println!("status={} final_step={last} digest={digest}", trajectory.status.label());
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let spec = args.spec.resolve()?;
    if spec.dynamic == DynamicChoice::Continuous {
        return Err(CliError::validation("dynamic", "sweeps need a discrete dynamic"));
    }
    let betas = parse_reals("betas", &args.betas)?;
    let result = beta_sweep_ratio(
        &spec.dynamics_config(),
        &spec.build_landscape()?,
        &spec.x0_point()?,
        &spec.reference_point()?,
        &betas,
    )?;
    let path = with_extension(&spec.output_path, Format::Json);
    write_summary_json(&result, &result.config_digest, &path)?;
    println!("{:>8} {:>12} {:>10} {:>10}", "beta", "steps", "ratio", "1-beta");
    for r in &result.rows {
        println!("{:>8} {:>12} {:>10.4} {:>10.4}", r.beta, r.steps, r.ratio, r.predicted);
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn classify(args: &ClassifyArgs) -> Result<()> {
    let spec = args.spec.resolve()?;
    if spec.dynamic != DynamicChoice::Replicator {
        return Err(CliError::validation(
            "dynamic",
            "cycling classification uses the discrete replicator",
        ));
    }
    let verdict = classify_cycling(
        &spec.dynamics_config(),
        &spec.build_landscape()?,
        &spec.x0_point()?,
        args.total_steps,
        args.window,
    )?;
    let digest = spec.digest(&format!("total_steps={};window={};", args.total_steps, args.window))?;
    let path = with_extension(&spec.output_path, Format::Json);
    write_summary_json(&verdict, &digest, &path)?;
    println!(
        "{} (KL {:.6} -> {:.6}, slope {:.3e}/step, {} after {} steps)",
        verdict.classification.as_str(),
        verdict.kl_start,
        verdict.kl_end,
        verdict.kl_trend_slope,
        verdict.status.label(),
        verdict.steps_run
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn verify_scaling(args: &ScalingArgs) -> Result<()> {
    let (landscape, desc) = args.landscape.build()?;
    let reference = point("reference", args.reference.as_deref(), landscape.dim())?;
    let betas = parse_reals("betas", &args.betas)?;
    let check = scaling_identity_check(&landscape, &reference, &betas, args.samples, args.seed)?;
    let digest = sha256_hex(&format!(
        "verify-scaling;{desc}reference={:?};betas={betas:?};samples={};seed={};",
        reference.coords(),
        args.samples,
        args.seed
    ));
    let path = with_extension(&args.out, Format::Json);
    write_summary_json(&check, &digest, &path)?;
    println!(
        "max relative error {:.3e} over {} points",
        check.max_relative_error, check.samples
    );
    for r in &check.rows {
        let sign = if r.reversed_everywhere {
            "reversed"
        } else if r.preserved_everywhere {
            "preserved"
        } else {
            "mixed"
        };
        println!("beta={} sign {sign}", r.beta);
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn verify_ess_cmd(args: &EssArgs) -> Result<()> {
    let (landscape, desc) = args.landscape.build()?;
    let candidate = point("candidate", args.candidate.as_deref(), landscape.dim())?;
    let report = verify_ess(&landscape, &candidate, args.radius, args.samples)?;
    let digest = sha256_hex(&format!(
        "verify-ess;{desc}candidate={:?};radius={:?};samples={};",
        candidate.coords(),
        args.radius,
        args.samples
    ));
    let path = with_extension(&args.out, Format::Json);
    write_summary_json(&report, &digest, &path)?;
    println!(
        "strict ESS: {} (worst margin {:e} over {} points)",
        report.is_strict_ess, report.worst_margin, report.samples_tested
    );
    println!("wrote {}", path.display());
    Ok(())
}

/// The clap command tree, for rendering help or shell completions.
pub fn command() -> clap::Command {
    use clap::CommandFactory;
    Cli::command()
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code. Diagnostics go to standard error.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let outcome = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::Classify(a) => classify(a),
        Command::VerifyScaling(a) => verify_scaling(a),
        Command::VerifyEss(a) => verify_ess_cmd(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
