//! Command-line front end: run scenarios, evaluate the mean-field oracle,
//! sweep steady states and compare simulations with the oracle.
//!
//! Exit codes: 0 success, 1 invalid input, 2 numerical failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use carl::analytic::{cubic_chirp, meanfield_at, steady_velocity, Participation};
use carl::dynamics::run_scenario;
use carl::harness::{self, Comparison, SweepSpec, SweepSummary};
use carl::io::{fmt_f64, fmt_opt, read_records, write_atomic, write_records, write_records_with_estimates};
use carl::observables::{DEFAULT_CONTRAST_FLOOR, DEFAULT_WINDOW};
use carl::{Error, Result, ScenarioConfig, SystemParams};

#[derive(Parser)]
#[command(name = "carl", version, about = "Collective atomic recoil laser simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write the dynamics CSV
    Simulate(RunArgs),
    /// Tabulate the mean-field chirp, or the steady state with --steady
    Analytic(AnalyticArgs),
    /// Run a parameter sweep of steady states
    Sweep(SweepArgs),
    /// Run a scenario and report its deviation from the matching oracle
    Compare(RunArgs),
    /// Append both beat-frequency estimates to a dynamics CSV
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    scenario: PathBuf,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the scenario seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct AnalyticArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// End of the time grid, s
    #[arg(long, default_value_t = 1e-3)]
    t_end: f64,
    /// Number of grid intervals
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Fraction of atoms counted by the mean-field model
    #[arg(long, default_value_t = 1.0)]
    participation: f64,
    /// Print the friction-limited steady state instead of a table
    #[arg(long)]
    steady: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep file
    sweep: PathBuf,
    /// Overrides the output directory of the sweep file
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Parameters the series was produced with (sets the contrast floor)
    #[arg(long)]
    params: PathBuf,
    /// Dynamics CSV
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trailing estimator window, s
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: f64,
    /// Zero-crossing contrast floor relative to the bare pump beat level
    #[arg(long, default_value_t = DEFAULT_CONTRAST_FLOOR)]
    contrast_floor: f64,
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, bytes),
        None => Ok(std::io::stdout().lock().write_all(bytes)?),
    }
}

fn load_run(args: &RunArgs) -> Result<(SystemParams, ScenarioConfig)> {
    let p = SystemParams::load(&args.params)?;
    let mut cfg = ScenarioConfig::load(&args.scenario)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.check_params(&p)?;
    Ok((p, cfg))
}

fn simulate(args: &RunArgs) -> Result<()> {
    let (p, cfg) = load_run(args)?;
    let run = run_scenario(&cfg, &p)?;
    let mut bytes = Vec::new();
    write_records(&mut bytes, &run.records)?;
    emit(args.out.as_deref(), &bytes)
}

fn csv_line(fields: &[String]) -> String {
    fields.join(",") + "\n"
}

fn analytic(args: &AnalyticArgs) -> Result<()> {
    let p = SystemParams::load(&args.params)?;
    let part = Participation::new(args.participation)?;
    let mut text = String::new();
    if args.steady {
        let s = steady_velocity(&p, part)?;
        text += "kv_exact_rad_s,kv_asymptotic_rad_s,beat_exact_hz,beat_asymptotic_hz,approximation_error\n";
        text += &csv_line(&[
            fmt_f64(s.exact),
            fmt_f64(s.asymptotic),
            fmt_f64(s.exact / std::f64::consts::PI),
            fmt_f64(s.asymptotic / std::f64::consts::PI),
            fmt_f64(s.approximation_error()),
        ]);
    } else {
        if !(args.t_end > 0.0) || args.samples == 0 {
            return Err(Error::Invalid("need --t-end > 0 and --samples >= 1".into()));
        }
        let times: Vec<f64> = (0..=args.samples)
            .map(|i| args.t_end * i as f64 / args.samples as f64)
            .collect();
        let mf = meanfield_at(&times, 0.0, &p, part);
        text += "t,kv_chirp_rad_s,kv_meanfield_rad_s,beat_meanfield_hz\n";
        for (&t, &kv) in times.iter().zip(&mf) {
            text += &csv_line(&[
                fmt_f64(t),
                fmt_f64(cubic_chirp(t, &p, part)),
                fmt_f64(kv),
                fmt_f64(kv / std::f64::consts::PI),
            ]);
        }
    }
    emit(args.out.as_deref(), text.as_bytes())
}

fn print_sweep(summary: &SweepSummary) {
    println!("{} value, steady beat Hz, exact Hz, asymptotic Hz", summary.parameter.name());
    for pt in &summary.points {
        let state = match (&pt.error, pt.converged()) {
            (Some(e), _) => format!("failed: {e}"),
            (None, true) => "converged".into(),
            (None, false) => "unconverged".into(),
        };
        println!(
            "{:e}, {}, {}, {}  {state}",
            pt.value,
            fmt_opt(pt.steady.map(|s| s.mean)),
            fmt_opt(pt.exact_hz),
            fmt_opt(pt.asymptotic_hz)
        );
    }
    match summary.slope {
        Some(s) => println!("log-log slope: {s:.4}"),
        None => println!("log-log slope: unavailable (fewer than two converged points)"),
    }
    if let Some(s) = summary.exact_slope {
        println!("exact-root slope: {s:.4}");
    }
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let mut spec = SweepSpec::load(&args.sweep)?;
    if let Some(out) = &args.out {
        spec.output = out.clone();
    }
    if let Some(seed) = args.seed {
        spec.scenario.seed = seed;
    }
    let summary = harness::run_sweep(&spec, harness::sweep_threads()?)?;
    print_sweep(&summary);
    log::info!("wrote {}", spec.output.join("summary.csv").display());
    Ok(())
}

fn print_comparison(cmp: &Comparison) {
    let verdict = if cmp.passed { "PASS" } else { "FAIL" };
    let dev = cmp.max_deviation.map_or("n/a".into(), |d| format!("{d:.4e}"));
    eprintln!(
        "{}: max |rel dev| {dev} over {} judged samples, tolerance {}: {verdict}",
        cmp.protocol.name(),
        cmp.judged,
        cmp.tolerance
    );
}

fn compare(args: &RunArgs) -> Result<()> {
    let (p, cfg) = load_run(args)?;
    let cmp = harness::compare(&p, &cfg)?;
    let mut bytes = Vec::new();
    harness::write_comparison(&mut bytes, &cmp)?;
    emit(args.out.as_deref(), &bytes)?;
    print_comparison(&cmp);
    Ok(())
}

fn analyze(args: &AnalyzeArgs) -> Result<()> {
    let p = SystemParams::load(&args.params)?;
    let file = std::fs::File::open(&args.input).map_err(|source| Error::File {
        path: args.input.clone(),
        source,
    })?;
    let records = read_records(file)?;
    let est = harness::estimate(&records, &p, args.window, args.contrast_floor)?;
    let mut bytes = Vec::new();
    write_records_with_estimates(&mut bytes, &records, &est.phase_slope, &est.zero_crossing)?;
    emit(args.out.as_deref(), &bytes)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Analytic(a) => analytic(a),
        Command::Sweep(a) => sweep(a),
        Command::Compare(a) => compare(a),
        Command::Analyze(a) => analyze(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
