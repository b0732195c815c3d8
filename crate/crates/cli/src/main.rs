//! `lab`: command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use lab_core::besov::{besov_norm, chemin_lerner_norm, weighted_besov_norm, BesovIndex, NormReport, WeightProfile};
use lab_core::cns::Trajectory;
use lab_core::diagnostics::{diagnostics_records, write_diagnostics_csv, RunClass};
use lab_core::exponent;
use lab_core::io::{read_snapshot, write_snapshot};
use lab_core::littlewood_paley::{build_partition, decompose, verify_bernstein, ShellSample};
use lab_core::paraproduct::harness::{append_csv, verify_estimate};
use lab_core::paraproduct::registry::{lookup, registry_json, EstimateParams};
use lab_core::random::RandomSpectrum;
use lab_core::spectral::{dealias_field, inverse_transform};
use lab_core::scenarios::{analyze_trajectory, epsilon_scan, run_experiment, MonitorConfig, ScenarioConfig, TrajectoryAnalysis};
use lab_core::{Field, Grid, GridSpec, LabError, Result};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 4;

#[derive(Parser)]
#[command(name = "lab", version, about = "Dyadic analysis and compressible flow lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Littlewood-Paley blocks of a field snapshot.
    Decompose(DecomposeArgs),
    /// Besov or Chemin-Lerner norm of a snapshot or trajectory.
    Norm(NormArgs),
    /// Random-trial check of a registered estimate, or `bernstein`, or `list`.
    Verify(VerifyArgs),
    /// Runs a scenario config and writes its trajectory directory.
    Simulate(SimulateArgs),
    /// Smallness norms of the oscillating velocity across ε.
    ScanEps(ScanArgs),
    /// Re-runs the monitors over a stored trajectory directory.
    Report(ReportArgs),
}

/// Where the field comes from: a snapshot stem or a seeded random field.
#[derive(Args)]
struct Source {
    /// Snapshot path (`.bin`, `.json` or the bare stem); `norm` also takes a trajectory directory.
    input: Option<PathBuf>,
    /// Use a seeded random field instead of a snapshot.
    #[arg(long, conflicts_with = "input")]
    random: Option<u64>,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value_t = 32)]
    n: usize,
    /// Restrict to one component.
    #[arg(long)]
    component: Option<usize>,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    source: Source,
    /// Lebesgue exponent of the block norms.
    #[arg(long, default_value = "2")]
    p: String,
    /// Write every block as a snapshot `block_<j>` into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NormArgs {
    // For trajectories `--component` picks a velocity component; the default is `ρ − ρ̄`.
    #[command(flatten)]
    source: Source,
    #[arg(long, allow_hyphen_values = true)]
    s: f64,
    #[arg(long, default_value = "2")]
    p: String,
    #[arg(long, default_value = "1")]
    r: String,
    /// Time exponent; required for trajectories.
    #[arg(long)]
    q: Option<String>,
    /// Weight blocks by `ω_j(T)`.
    #[arg(long)]
    weighted: bool,
    /// Horizon `T` of the weights; trajectories default to their own length.
    #[arg(long)]
    horizon: Option<f64>,
    /// Rate constant `c` of the weights.
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sample {
    RandomPhase,
    Localized,
}

#[derive(Args)]
struct VerifyArgs {
    /// Registry id (for example `Lemma2.2a`), `bernstein`, or `list`.
    estimate_id: String,
    /// JSON object overriding the estimate's default parameters.
    #[arg(long)]
    params: Option<String>,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Append the report to this CSV ledger.
    #[arg(long)]
    ledger: Option<PathBuf>,
    /// Bernstein: shell index.
    #[arg(long, default_value_t = 2, allow_hyphen_values = true)]
    j: i32,
    /// Bernstein: source exponent.
    #[arg(long, default_value = "2")]
    p: String,
    /// Bernstein: target exponent.
    #[arg(long, default_value = "inf")]
    q: String,
    /// Bernstein: derivative order.
    #[arg(long, default_value_t = 1)]
    gamma: u32,
    #[arg(long, value_enum, default_value = "random-phase")]
    sample: Sample,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value_t = 64)]
    n: usize,
}

#[derive(Args)]
struct SimulateArgs {
    config: PathBuf,
    /// Output directory; defaults to `runs/<name>`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    config: PathBuf,
    /// Comma-separated ε values.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.25, 1.0 / 6.0, 0.125, 1.0 / 12.0, 0.0625, 1.0 / 24.0, 0.03125])]
    eps: Vec<f64>,
    /// Write the table here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the table with fitted slopes as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    trajectory_dir: PathBuf,
    /// Monitor settings; defaults to those stored with the run.
    #[arg(long)]
    monitors: Option<PathBuf>,
}

fn parse_exponent(text: &str) -> Result<f64> {
    exponent::deserialize(&Value::String(text.to_string())).map_err(|e| LabError::Config(e.to_string()))
}

fn snapshot_stem(path: &Path) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some("bin" | "json") => path.with_extension(""),
        _ => path.to_path_buf(),
    }
}

fn load_source(input: Option<&Path>, random: Option<u64>, dim: usize, n: usize, component: Option<usize>) -> Result<Field> {
    let f = match (input, random) {
        (_, Some(seed)) => RandomSpectrum::default().field(Grid::new(dim, n, 1.0)?, 1, seed)?,
        (Some(path), None) => read_snapshot(&snapshot_stem(path))?.0,
        (None, None) => return Err(LabError::Config("need a snapshot path or --random <seed>".into())),
    };
    match component {
        Some(c) if c >= f.components() => Err(LabError::ComponentMismatch { expected: f.components(), found: c + 1 }),
        Some(c) => Ok(f.extract(c)),
        None => Ok(f),
    }
}

fn print_json(v: &impl Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

#[derive(Serialize)]
struct BlockNorm {
    j: i32,
    norm: f64,
}

#[derive(Serialize)]
struct Decomposition {
    grid: GridSpec,
    partition_range: (i32, i32),
    #[serde(serialize_with = "exponent::serialize")]
    p: f64,
    mean: Vec<f64>,
    blocks: Vec<BlockNorm>,
    /// `max |Σ_j Δ_j f + mean − f|` against the dealiased input.
    reconstruction_error: f64,
}

fn cmd_decompose(args: &DecomposeArgs) -> Result<u8> {
    let s = &args.source;
    let f = load_source(s.input.as_deref(), s.random, s.dim, s.n, s.component)?;
    let p = parse_exponent(&args.p)?;
    let part = build_partition::<f64>(*f.grid())?;
    let dec = decompose(&f, &part)?;
    let norms = dec.block_norms(p)?;
    let residual = dec.reconstruct().sub(&dealias_field(&f)?)?.max_abs();
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        for (j, b) in &dec.blocks {
            write_snapshot(&dir.join(format!("block_{j}")), &inverse_transform(b)?, 0.0)?;
        }
    }
    print_json(&Decomposition {
        grid: (*f.grid()).into(),
        partition_range: (part.j_min(), part.j_max()),
        p,
        mean: dec.mean,
        blocks: norms.into_iter().map(|(j, norm)| BlockNorm { j, norm }).collect(),
        reconstruction_error: residual,
    })?;
    Ok(0)
}

fn cmd_norm(args: &NormArgs) -> Result<u8> {
    let p = parse_exponent(&args.p)?;
    let r = parse_exponent(&args.r)?;
    let idx = BesovIndex::new(args.s, p, r)?;
    let src = &args.source;
    let report = if let Some(dir) = src.input.as_deref().filter(|p| p.is_dir()) {
        let traj = Trajectory::read_dir(dir)?;
        let q_text = args.q.as_deref().ok_or_else(|| LabError::Config("trajectory norms need --q".into()))?;
        let q = parse_exponent(q_text)?;
        let part = build_partition::<f64>(traj.grid)?;
        let blocks = traj.block_norms(src.component, p, &part)?;
        let horizon = args.horizon.unwrap_or_else(|| blocks.horizon());
        let profile = if args.weighted { Some(WeightProfile::new(args.rate, horizon)?) } else { None };
        NormReport {
            norm_kind: "chemin_lerner".into(),
            value: chemin_lerner_norm(&blocks, idx, q, profile.as_ref())?,
            s: args.s,
            p,
            r,
            q: Some(exponent::display(q)),
            weighted: args.weighted,
            grid: traj.grid.into(),
            partition_range: (part.j_min(), part.j_max()),
            cadence: Some(blocks.cadence()),
        }
    } else {
        if args.q.is_some() {
            return Err(LabError::Config("--q needs a trajectory directory".into()));
        }
        let f = load_source(src.input.as_deref(), src.random, src.dim, src.n, src.component)?;
        let part = build_partition::<f64>(*f.grid())?;
        let value = if args.weighted {
            let profile = WeightProfile::new(args.rate, args.horizon.unwrap_or(f64::INFINITY))?;
            weighted_besov_norm(&f, idx, &part, &profile)?
        } else {
            besov_norm(&f, idx, &part)?
        };
        NormReport {
            norm_kind: if args.weighted { "weighted_besov" } else { "besov" }.into(),
            s: args.s,
            p,
            r,
            q: None,
            weighted: args.weighted,
            value,
            grid: (*f.grid()).into(),
            partition_range: (part.j_min(), part.j_max()),
            cadence: None,
        }
    };
    print_json(&report)?;
    Ok(0)
}

fn merged_params(defaults: &EstimateParams, overrides: Option<&str>) -> Result<EstimateParams> {
    let mut base = serde_json::to_value(defaults)?;
    if let Some(text) = overrides {
        let extra: Value = serde_json::from_str(text).map_err(|e| LabError::Config(format!("--params: {e}")))?;
        let Value::Object(extra) = extra else {
            return Err(LabError::Config("--params must be a JSON object".into()));
        };
        let obj = base.as_object_mut().expect("params serialize to an object");
        for (k, v) in extra {
            if !obj.contains_key(&k) {
                return Err(LabError::Config(format!("unknown parameter {k:?}")));
            }
            obj.insert(k, v);
        }
    }
    serde_json::from_value(base).map_err(|e| LabError::Config(format!("--params: {e}")))
}

fn cmd_verify(args: &VerifyArgs) -> Result<u8> {
    match args.estimate_id.as_str() {
        "list" => {
            println!("{}", registry_json()?);
        }
        "bernstein" => {
            let part = build_partition::<f64>(Grid::new(args.dim, args.n, 1.0)?)?;
            let sample = match args.sample {
                Sample::RandomPhase => ShellSample::RandomPhase,
                Sample::Localized => ShellSample::Localized,
            };
            let (p, q) = (parse_exponent(&args.p)?, parse_exponent(&args.q)?);
            let report = verify_bernstein(&part, args.j, p, q, args.gamma, args.trials, args.seed, sample)?;
            print_json(&report)?;
        }
        id => {
            let spec = lookup(id)?;
            let params = merged_params(&spec.defaults, args.params.as_deref())?;
            let report = verify_estimate(id, &params, args.trials, args.seed)?;
            if let Some(path) = &args.ledger {
                append_csv(path, std::slice::from_ref(&report))?;
            }
            print_json(&report)?;
        }
    }
    Ok(0)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<u8> {
    let config = ScenarioConfig::load(&args.config)?;
    let out = args.out.clone().unwrap_or_else(|| {
        let name = if config.name.is_empty() { "run" } else { &config.name };
        PathBuf::from("runs").join(name)
    });
    let summary = run_experiment(&config, &out)?;
    eprintln!(
        "{}: {:?} at t = {} after {} steps, {} snapshots in {}",
        summary.name,
        summary.class,
        summary.t_final,
        summary.steps,
        summary.snapshots,
        out.display()
    );
    if let Some(f) = &summary.failure {
        eprintln!("solver stopped: {f}");
    }
    print_json(&summary)?;
    Ok(summary.exit_code as u8)
}

fn cmd_scan(args: &ScanArgs) -> Result<u8> {
    let config = ScenarioConfig::load(&args.config)?;
    let scan = epsilon_scan(&config, &args.eps)?;
    match &args.csv {
        Some(path) => std::fs::write(path, scan.to_csv())?,
        None => print!("{}", scan.to_csv()),
    }
    if let Some(path) = &args.json {
        std::fs::write(path, serde_json::to_string_pretty(&scan)?)?;
    }
    eprintln!(
        "slopes: h_minus_delta {:.4} (R² {:.4}), besov {:.4} (R² {:.4}), combined {:.4}; predicted {:.4}",
        scan.h_minus_delta_fit.slope,
        scan.h_minus_delta_fit.r_squared,
        scan.besov_fit.slope,
        scan.besov_fit.r_squared,
        scan.combined_fit.slope,
        scan.predicted_slope
    );
    Ok(0)
}

#[derive(Serialize)]
struct StoredRunReport {
    class: RunClass,
    exit_code: i32,
    t_final: f64,
    snapshots: usize,
    /// The run stopped before its configured end time.
    truncated: bool,
    analysis: TrajectoryAnalysis,
}

fn cmd_report(args: &ReportArgs) -> Result<u8> {
    let traj = Trajectory::read_dir(&args.trajectory_dir)?;
    let stored: Option<ScenarioConfig> = serde_json::from_value(traj.config.clone()).ok();
    let monitors: MonitorConfig = match &args.monitors {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?).map_err(|e| LabError::Config(e.to_string()))?,
        None => stored.as_ref().map(|c| c.monitors.clone()).unwrap_or_default(),
    };
    let analysis = analyze_trajectory(&traj, &monitors)?;
    let records = diagnostics_records(&traj, monitors.q)?;
    write_diagnostics_csv(&args.trajectory_dir.join("diagnostics.csv"), &records)?;
    let t_final = traj.snapshots.last().map_or(0.0, |s| s.t);
    let truncated = stored.as_ref().is_some_and(|c| t_final < c.t_end - 1e-9 * c.t_end.max(1.0));
    // an early stop is not recoverable from the snapshots; summary.json records its cause
    let class = if truncated {
        let stored_class = std::fs::read_to_string(args.trajectory_dir.join("summary.json"))
            .ok()
            .and_then(|text| serde_json::from_str::<Value>(&text).ok())
            .and_then(|v| serde_json::from_value::<RunClass>(v["class"].clone()).ok());
        match stored_class {
            Some(RunClass::VacuumGuard) => RunClass::VacuumGuard,
            _ => RunClass::Alarm,
        }
    } else {
        RunClass::classify(analysis.continuation.alarm.is_some(), None)
    };
    print_json(&StoredRunReport {
        class,
        exit_code: class.exit_code(),
        t_final,
        snapshots: traj.len(),
        truncated,
        analysis,
    })?;
    Ok(class.exit_code() as u8)
}

fn exit_code_for(err: &LabError) -> u8 {
    match err.root() {
        LabError::Config(_) | LabError::Json(_) | LabError::UnknownEstimate(_) | LabError::ConstraintViolated { .. } => {
            EXIT_CONFIG
        }
        _ => EXIT_FAILURE,
    }
}

fn init_threads() -> Result<()> {
    let Ok(text) = std::env::var("LAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| LabError::Config(format!("LAB_THREADS = {text:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| LabError::Config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    let outcome = init_threads().and_then(|()| match &cli.command {
        Command::Decompose(a) => cmd_decompose(a),
        Command::Norm(a) => cmd_norm(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::ScanEps(a) => cmd_scan(a),
        Command::Report(a) => cmd_report(a),
    });
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
