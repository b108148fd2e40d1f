//! `cstar-dilate`: run scenarios, emit certificates, generate seeded scenarios.
//!
//! Exit status: 0 when every check passes, 1 when a check fails, 2 for input
//! errors (unreadable or malformed scenarios, failed preconditions).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cstar_dilation::scenario::{
    emit_certificate, generate_scenario, parse_scenario, run, scenario_to_json, Certificate,
    Format, GenParams, GroupSpec, Kind, RunOptions, ScenarioError, DEFAULT_TOLERANCE,
};

#[derive(Parser)]
#[command(
    name = "cstar-dilate",
    version,
    about = "Stinespring dilations of CP maps on Hilbert C*-modules"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimal Stinespring dilation of a module CP map.
    Dilate(RunArgs),
    /// Covariant dilation with the unitary representations on H_Phi and K_Phi.
    DilateCovariant(RunArgs),
    /// Crossed-product checks: integral forms and the induced CP map.
    Crossed(RunArgs),
    /// Recover the unitaries relating the minimal dilation to a seeded conjugate of it.
    Uniqueness(RunArgs),
    /// Check the scenario's inputs, or replay it against a stored certificate.
    Verify(VerifyArgs),
    /// Write a seeded random scenario.
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Table,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file; repeat to run several.
    #[arg(long = "scenario", required = true)]
    scenarios: Vec<PathBuf>,
    /// Residual tolerance [default: the scenario's, else 1e-9].
    #[arg(long)]
    tol: Option<f64>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    /// Scenarios run concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Include the crossed algebra's structure constants in the certificate.
    #[arg(long)]
    dump_structure: bool,
    /// Record wall-clock duration (makes output run-dependent).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Stored certificate; the scenario is rerun with its kind, seed and tolerance and compared.
    #[arg(long)]
    certificate: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_parser = parse_kind)]
    kind: Kind,
    #[arg(long, default_value_t = 2)]
    p: usize,
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// trivial, z2, z4, s3, cyclic:K or symmetric:N.
    #[arg(long, value_parser = parse_group)]
    group: Option<GroupSpec>,
    #[arg(long, default_value_t = 1)]
    amplification: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<Kind, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown kind {s:?}"))
}

fn parse_group(s: &str) -> Result<GroupSpec, String> {
    let num = |v: &str| v.parse::<usize>().map_err(|e| format!("{s:?}: {e}"));
    match s.split_once(':') {
        Some(("cyclic", k)) => Ok(GroupSpec::Cyclic { cyclic: num(k)? }),
        Some(("symmetric", n)) => Ok(GroupSpec::Symmetric { symmetric: num(n)? }),
        Some(_) => Err(format!("unknown group {s:?}")),
        None => Ok(GroupSpec::Named(s.to_string())),
    }
}

struct Outcome {
    cert: Certificate,
}

fn run_one(
    path: &Path,
    kind: Option<Kind>,
    opts: &RunOptions,
    timing: bool,
) -> Result<Outcome, String> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let start = Instant::now();
    let mut s = parse_scenario(&bytes).map_err(|e| format!("{}: {e}", path.display()))?;
    if let Some(k) = kind {
        s.kind = k;
    }
    let mut cert = run(&s, &bytes, &name, opts)
        .map_err(|e: ScenarioError| format!("{}: {e}", path.display()))?;
    if timing {
        cert.duration_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(Outcome { cert })
}

/// Runs every scenario on up to `jobs` threads; results keep input order.
fn run_all(args: &RunArgs, kind: Option<Kind>, opts: &RunOptions) -> Vec<Result<Outcome, String>> {
    let n = args.scenarios.len();
    let results: Vec<Mutex<Option<Result<Outcome, String>>>> =
        (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..args.jobs.clamp(1, n.max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let r = run_one(&args.scenarios[i], kind, opts, args.timing);
                *results[i].lock().unwrap() = Some(r);
            });
        }
    });
    results
        .into_iter()
        .map(|m| m.into_inner().unwrap().unwrap())
        .collect()
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), String> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| e.to_string()),
    }
}

fn render(certs: &[&Certificate], format: FormatArg) -> String {
    match format {
        FormatArg::Table => certs
            .iter()
            .map(|c| emit_certificate(c, Format::Table))
            .collect::<Vec<_>>()
            .join("\n"),
        FormatArg::Json if certs.len() == 1 => emit_certificate(certs[0], Format::Json),
        FormatArg::Json => {
            let mut s = serde_json::to_string_pretty(certs).expect("certificates serialize");
            s.push('\n');
            s
        }
    }
}

fn cmd_run(args: &RunArgs, kind: Option<Kind>) -> ExitCode {
    if let Some(tol) = args.tol {
        if !(tol.is_finite() && tol > 0.0) {
            eprintln!("error: --tol must be positive (default {DEFAULT_TOLERANCE:e})");
            return ExitCode::from(2);
        }
    }
    let opts = RunOptions {
        tol: args.tol,
        seed: args.seed,
        dump_structure: args.dump_structure,
    };
    let results = run_all(args, kind, &opts);
    let mut input_error = false;
    let mut certs = Vec::new();
    for r in &results {
        match r {
            Ok(o) => certs.push(&o.cert),
            Err(e) => {
                eprintln!("error: {e}");
                input_error = true;
            }
        }
    }
    if !certs.is_empty() {
        if let Err(e) = write_output(args.out.as_deref(), &render(&certs, args.format)) {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    for c in &certs {
        for f in c.failures() {
            eprintln!("FAIL {}: {f}", c.provenance.scenario);
        }
    }
    if input_error {
        ExitCode::from(2)
    } else if certs.iter().all(|c| c.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn without_timing(c: &Certificate) -> serde_json::Value {
    let mut c = c.clone();
    c.duration_ms = None;
    serde_json::to_value(&c).expect("certificates serialize")
}

/// Replays the single scenario with the stored certificate's kind, seed and
/// tolerance, and compares the two.
fn cmd_replay(args: &RunArgs, stored: &Path) -> ExitCode {
    if args.scenarios.len() != 1 {
        eprintln!("error: --certificate takes exactly one --scenario");
        return ExitCode::from(2);
    }
    let stored: Certificate = match fs::read(stored)
        .map_err(|e| e.to_string())
        .and_then(|b| serde_json::from_slice(&b).map_err(|e| e.to_string()))
    {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", stored.display());
            return ExitCode::from(2);
        }
    };
    // Replay under the settings recorded in the certificate.
    let opts = RunOptions {
        tol: Some(stored.tolerance),
        seed: Some(stored.provenance.seed),
        dump_structure: stored.structure.is_some(),
    };
    let fresh = match run_all(args, Some(stored.kind), &opts).pop().unwrap() {
        Ok(o) => o.cert,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let same = without_timing(&fresh) == without_timing(&stored);
    let msg = if same {
        format!("certificate matches ({} checks)\n", fresh.checks.len())
    } else {
        "certificate differs from a fresh run\n".to_string()
    };
    if let Err(e) = write_output(args.out.as_deref(), &msg) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    if same && stored.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn cmd_gen(args: &GenArgs) -> ExitCode {
    let params = GenParams {
        kind: args.kind,
        p: args.p,
        n: args.n,
        group: args.group.clone(),
        amplification: args.amplification,
        seed: args.seed,
    };
    match generate_scenario(&params) {
        Ok(s) => match write_output(args.out.as_deref(), &scenario_to_json(&s)) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Dilate(a) => cmd_run(a, Some(Kind::Dilate)),
        Command::DilateCovariant(a) => cmd_run(a, Some(Kind::DilateCovariant)),
        Command::Crossed(a) => cmd_run(a, Some(Kind::Crossed)),
        Command::Uniqueness(a) => cmd_run(a, Some(Kind::Uniqueness)),
        Command::Verify(v) => match &v.certificate {
            Some(c) => cmd_replay(&v.run, c),
            None => cmd_run(&v.run, Some(Kind::Verify)),
        },
        Command::Gen(g) => cmd_gen(g),
    }
}
