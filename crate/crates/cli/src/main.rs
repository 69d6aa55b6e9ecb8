use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use flatpencil::catalog;
use flatpencil::output::{to_json, write_tables};
use flatpencil::runner::{run, Overrides};
use flatpencil::scenario::Scenario;

/// Build and verify compatible flat metric pencils.
#[derive(Parser)]
#[command(name = "flatpencil", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its report.
    Run {
        scenario: PathBuf,
        /// Report path; the report goes to stdout when absent.
        #[arg(long, env = "FLATPENCIL_OUT")]
        out: Option<PathBuf>,
        /// Directory for per-node CSV tables.
        #[arg(long, env = "FLATPENCIL_DUMP_CSV")]
        dump_csv: Option<PathBuf>,
        #[arg(long, env = "FLATPENCIL_TOL")]
        tol: Option<f64>,
        #[arg(long, env = "FLATPENCIL_ORDER", value_parser = ["2", "4"])]
        order: Option<String>,
        #[arg(long, env = "FLATPENCIL_SEED")]
        seed: Option<u64>,
    },
    /// List the built-in scenarios.
    Catalog,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Catalog => {
            for e in catalog::entries() {
                println!("{:<24} [{}] {}", e.name, e.expect.as_str(), e.description);
            }
            Ok(true)
        }
        Command::Run {
            scenario,
            out,
            dump_csv,
            tol,
            order,
            seed,
        } => {
            let text =
                std::fs::read_to_string(&scenario).with_context(|| format!("cannot read {}", scenario.display()))?;
            let parsed = Scenario::from_str(&text)?;
            let overrides = Overrides {
                tolerance: tol,
                order: order.map(|o| o.parse().expect("validated by clap")),
                seed,
            };
            let report = run(&parsed, overrides)?;
            let json = to_json(&report)?;
            match out {
                Some(path) => {
                    std::fs::write(&path, json).with_context(|| format!("cannot write {}", path.display()))?
                }
                None => print!("{json}"),
            }
            if let Some(dir) = dump_csv {
                write_tables(&dir, &report.kind, &report.tables)?;
            }
            eprintln!("{}: {}", report.name.as_deref().unwrap_or(&report.kind), report.verdict);
            Ok(report.passed())
        }
    }
}
