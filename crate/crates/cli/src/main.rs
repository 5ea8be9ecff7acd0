//! Command-line runner for scenario files and the bundled example catalog.
//!
//! Exit codes: 0 when every check passes (hypotheses-not-met counts as a
//! pass with a warning), 1 when at least one check fails, 2 for
//! configuration errors (unreadable files, parse or validation errors,
//! checks that cannot run).

use std::io::IsTerminal;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use warpcheck_core::catalog;
use warpcheck_core::scenario::{parse_scenario, Overrides, Report, Scenario};

#[derive(Parser)]
#[command(
    name = "warpcheck",
    version,
    about = "Residual checks for identities on warped-product and static metrics"
)]
struct Cli {
    /// Scenario file to run.
    #[arg(long, value_name = "PATH", global = true)]
    scenario: Option<PathBuf>,

    /// Sampling seed override for every check.
    #[arg(long, value_name = "N", global = true)]
    seed: Option<u64>,

    /// Sample-count override for every check.
    #[arg(long, value_name = "N", global = true)]
    samples: Option<usize>,

    /// Absolute tolerance override.
    #[arg(long = "tol-abs", value_name = "X", global = true)]
    tol_abs: Option<f64>,

    /// Relative tolerance override.
    #[arg(long = "tol-rel", value_name = "X", global = true)]
    tol_rel: Option<f64>,

    /// Emit the report as JSON lines instead of text.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// List the bundled example scenarios.
    ListExamples,
    /// Run one bundled example scenario by name.
    RunExample {
        /// Example name as printed by `list-examples`.
        name: String,
    },
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(run(cli));
}

fn run(cli: Cli) -> i32 {
    let overrides = Overrides {
        seed: cli.seed,
        samples: cli.samples,
        atol: cli.tol_abs,
        rtol: cli.tol_rel,
    };
    match &cli.command {
        Some(Command::ListExamples) => {
            for entry in catalog::examples() {
                println!("{:28} {}", entry.name, entry.description);
            }
            0
        }
        Some(Command::RunExample { name }) => match catalog::example(name) {
            Some(entry) => match load(entry.source) {
                Ok(scenario) => execute(&scenario, &overrides, cli.json),
                Err(message) => config_error(&message),
            },
            None => {
                let names: Vec<&str> = catalog::examples().iter().map(|e| e.name).collect();
                config_error(&format!(
                    "unknown example `{name}`; available: {}",
                    names.join(", ")
                ))
            }
        },
        None => {
            let Some(path) = &cli.scenario else {
                return config_error(
                    "nothing to do: pass --scenario PATH, or use list-examples / run-example",
                );
            };
            let text = match std::fs::read_to_string(path) {
                Ok(text) => text,
                Err(e) => return config_error(&format!("cannot read {}: {e}", path.display())),
            };
            match load(&text) {
                Ok(scenario) => execute(&scenario, &overrides, cli.json),
                Err(message) => config_error(&message),
            }
        }
    }
}

fn load(text: &str) -> Result<Scenario, String> {
    parse_scenario(text).map_err(|e| e.to_string())
}

fn config_error(message: &str) -> i32 {
    eprintln!("error: {message}");
    2
}

fn execute(scenario: &Scenario, overrides: &Overrides, json: bool) -> i32 {
    let start = Instant::now();
    let report = match scenario.run(overrides) {
        Ok(report) => report,
        Err(e) => return config_error(&e.to_string()),
    };
    let elapsed = start.elapsed();
    emit(&report, json);
    eprintln!("completed {} checks in {elapsed:.2?}", report.results.len());
    if report.has_warnings() {
        eprintln!("warning: some checks reported hypotheses-not-met");
    }
    if report.all_passed() {
        0
    } else {
        1
    }
}

fn emit(report: &Report, json: bool) {
    if json {
        print!("{}", report.to_json_lines());
    } else {
        let color = std::io::stdout().is_terminal() && std::env::var_os("NO_COLOR").is_none();
        print!("{}", report.to_text(color));
    }
}
