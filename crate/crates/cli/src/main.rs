//! `gvfsim`: scenario-driven simulator for swarm navigation on parametric
//! manifolds, with verification commands for the decoupled guiding field.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gvf_cli::commands::{self, exit_codes, SimulateArgs, VerifyArgs};

#[derive(Parser)]
#[command(
    name = "gvfsim",
    about = "Simulate ordering-flexible swarm navigation on m-dimensional manifolds",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (or a bundled scenario by name), write the CSV
    /// trace and JSON summary, and report the terminal conditions.
    Simulate {
        /// Path to a scenario JSON file, or a bundled scenario name.
        scenario: String,
        /// Dotted-path overrides applied before validation,
        /// e.g. --set integrator.dt=5e-4 (repeatable).
        #[arg(long = "set", value_name = "PATH=VALUE")]
        set: Vec<String>,
        /// Trace CSV path (overrides the scenario's `outputs.csv`).
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Summary JSON path (overrides the scenario's `outputs.json`).
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Check that the brute-force generalized cross product with the
    /// decoupling auxiliary vectors equals the closed form, over random
    /// partial-derivative matrices for every (n, m) pair.
    #[command(name = "verify-lemma1")]
    VerifyLemma1 {
        #[arg(long = "n-max", default_value_t = 4)]
        n_max: usize,
        #[arg(long = "m-max", default_value_t = 4)]
        m_max: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Show how arbitrary auxiliary vectors couple the trailing entries of
    /// the propagation term to the manifold's partial derivatives, while
    /// the decoupling choice pins them to the constant (-1)^n.
    CouplingDemo,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = std::io::stdout();
    let code = match cli.command {
        Command::Simulate {
            scenario,
            set,
            csv,
            json,
        } => {
            let args = SimulateArgs {
                scenario,
                overrides: set,
                csv,
                json,
            };
            match commands::cmd_simulate(&args, &mut out) {
                Ok(outcome) if outcome.report.all_pass() => exit_codes::OK,
                Ok(_) => exit_codes::CONDITIONS_NOT_MET,
                Err(e) => {
                    eprintln!("error: {e}");
                    commands::exit_code_for(&e)
                }
            }
        }
        Command::VerifyLemma1 {
            n_max,
            m_max,
            trials,
            seed,
        } => {
            let args = VerifyArgs {
                n_max,
                m_max,
                trials,
                seed,
            };
            match commands::cmd_verify_lemma1(&args, &mut out) {
                Ok(report) if report.mismatch.is_none() => exit_codes::OK,
                Ok(_) => exit_codes::VERIFY_MISMATCH,
                Err(e) => {
                    eprintln!("error: {e}");
                    commands::exit_code_for(&e)
                }
            }
        }
        Command::CouplingDemo => match commands::cmd_coupling_demo(&mut out) {
            Ok(_) => exit_codes::OK,
            Err(e) => {
                eprintln!("error: {e}");
                commands::exit_code_for(&e)
            }
        },
    };
    ExitCode::from(code as u8)
}
