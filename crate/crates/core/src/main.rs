use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use subharm::pipeline::{self, ExportKind, RunConfig, RunReport};
use subharm::Error;

#[derive(Parser)]
#[command(name = "subharm", version, about = "Self-similar subharmonic function on a perforated strip")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve, verify and write `report.json` and the models.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides `out_dir` of the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run the checks against stored models.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        models: PathBuf,
        /// Report path (default: `<models>/../verify.json`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a field as CSV.
    Export {
        /// upper, lower, glued or annulus
        #[arg(long)]
        which: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Stored models; solved afresh when absent.
        #[arg(long)]
        models: Option<PathBuf>,
    },
}

fn config(path: Option<&PathBuf>) -> Result<RunConfig, Error> {
    match path {
        Some(p) => RunConfig::load(p).map_err(|e| match e {
            Error::Io(io) => Error::Config(format!("cannot read config {}: {io}", p.display())),
            other => other,
        }),
        None => Ok(RunConfig::default()),
    }
}

fn summarize(report: &RunReport) {
    for c in &report.checks {
        let status = serde_json::to_value(c.status).ok();
        let status = status.as_ref().and_then(|v| v.as_str()).unwrap_or("?");
        println!("{:<44} {:<22} margin {:>12.4e}  tol {:.2e}", c.name, status, c.margin, c.tolerance);
    }
    let k = &report.constants;
    println!(
        "M = {:.6e}  M1 = {:.6e}  t = {:.6e}  t1 = {:.6e}  beta = {:.6e}  beta1 = {:.6e}",
        k.upper.m, k.lower.m, k.upper.t, k.lower.t, k.upper.beta, k.lower.beta
    );
    println!("c = {:.6e}  a_out = {:.6e}  lambda = {:.6}", k.c, k.a_out, k.lambda);
    println!("{}", if report.pass { "PASS" } else { "FAIL" });
}

fn execute(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Run { config: path, out } => {
            let mut cfg = config(path.as_ref())?;
            if let Some(out) = out {
                cfg.out_dir = out;
            }
            let report = pipeline::run(&cfg)?;
            summarize(&report);
            Ok(report.exit_code())
        }
        Command::Verify {
            config: path,
            models,
            out,
        } => {
            let cfg = config(path.as_ref())?;
            let report = pipeline::verify_only(&cfg, &models)?;
            let out = out.unwrap_or_else(|| models.join("..").join("verify.json"));
            pipeline::write_report(&report, &out)?;
            summarize(&report);
            Ok(report.exit_code())
        }
        Command::Export {
            which,
            out,
            config: path,
            models,
        } => {
            let cfg = config(path.as_ref())?;
            let kind: ExportKind = which.parse()?;
            let glued = match models {
                Some(dir) => std::sync::Arc::new(pipeline::load_models(&cfg, &dir)?),
                None => pipeline::build(&cfg)?.0,
            };
            let rows = pipeline::export_rows(&glued, &cfg, kind)?;
            pipeline::export_csv(&rows, kind, &out)?;
            println!("{} rows written to {}", rows.len(), out.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
