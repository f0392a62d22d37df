//! `lab`: runs one scenario file and writes its report.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use qcspectral::lab::{
    emit_report, parse_config_for, render_report, run_scenario, Overrides, ReportFormat, ScenarioKind,
};
use qcspectral::Error;

const EXIT_PASS: u8 = 0;
const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "lab", version, about = "Run a verification scenario and report the results")]
struct Cli {
    /// roundtrip, eig, transfer, isospectral, stability or functionals
    #[arg(value_parser = parse_kind)]
    kind: ScenarioKind,
    /// Scenario file (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Report path; the report goes to standard output when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json
    #[arg(long, value_parser = parse_format)]
    format: Option<ReportFormat>,
    /// Mesh as N_R,N_THETA
    #[arg(long, value_parser = parse_mesh)]
    mesh: Option<[usize; 2]>,
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_kind(s: &str) -> Result<ScenarioKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_mesh(s: &str) -> Result<[usize; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => {
            let n_r = a.parse().map_err(|_| format!("invalid N_R '{a}'"))?;
            let n_theta = b.parse().map_err(|_| format!("invalid N_THETA '{b}'"))?;
            Ok([n_r, n_theta])
        }
        _ => Err(format!("mesh '{s}' must have the form N_R,N_THETA")),
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| format!("LAB_THREADS = '{value}' must be a positive integer"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn infer_format(path: Option<&Path>) -> ReportFormat {
    match path.and_then(Path::extension).and_then(|e| e.to_str()) {
        Some("json") => ReportFormat::Json,
        _ => ReportFormat::Csv,
    }
}

fn is_usage_error(e: &Error) -> bool {
    matches!(e.root(), Error::Parse(_) | Error::Validation(_))
}

/// Failure with the exit code it maps to.
struct Failure {
    error: Error,
    code: u8,
}

impl Failure {
    fn usage(error: Error) -> Self {
        Failure { error, code: EXIT_USAGE }
    }

    fn runtime(error: Error) -> Self {
        let code = if is_usage_error(&error) { EXIT_USAGE } else { EXIT_FAIL };
        Failure { error, code }
    }
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let overrides = Overrides {
        mesh: cli.mesh,
        modes: cli.modes,
        beta: cli.beta,
        seed: cli.seed,
        output: cli.out,
        format: cli.format,
    };
    let scenario = parse_config_for(&cli.config, cli.kind)
        .and_then(|s| s.apply_overrides(&overrides))
        .map_err(Failure::usage)?;
    let report = run_scenario(&scenario).map_err(Failure::runtime)?;
    let format = scenario.format.unwrap_or_else(|| infer_format(scenario.output.as_deref()));
    match &scenario.output {
        Some(path) => {
            emit_report(&report, format, path).map_err(Failure::runtime)?;
            let s = &report.summary;
            eprintln!(
                "{}: all_pass={} max_rel_diff={:?} min_margin={:?} -> {}",
                scenario.kind,
                s.all_pass,
                s.max_rel_diff,
                s.min_margin,
                path.display()
            );
        }
        None => print!("{}", render_report(&report, format)),
    }
    Ok(report.all_pass())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::from(EXIT_PASS),
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_USAGE);
    }
    match run(cli) {
        Ok(true) => ExitCode::from(EXIT_PASS),
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(f) => {
            eprintln!("error: {}", f.error);
            ExitCode::from(f.code)
        }
    }
}
