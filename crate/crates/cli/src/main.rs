//! `prguess`: guessing probabilities of noisy PR-box copies against
//! no-signaling adversaries, with exact certificates.

mod commands;
mod grid;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use prguess::guessprob::Formulation;
use prguess::nosig::ScenarioKind;
use prguess::numeric::Mode;

#[derive(Parser, Debug)]
#[command(name = "prguess", version, about = "No-signaling guessing probabilities for noisy PR boxes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one guessing LP and write its certificate.
    Solve(SolveArgs),
    /// Solve over a grid of noise values and write CSV.
    Sweep(SweepArgs),
    /// Check a certificate file (optionally paired with a dual-side certificate).
    Verify(VerifyArgs),
    /// Decide whether a behavior is a vertex of a scenario polytope.
    Vertex(VertexArgs),
    /// Solve n = 2, 3 at built-in points and compare with the closed forms.
    Table1(Table1Args),
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    scenario: ScenarioKind,
    /// Noise value, as `p/q` or a decimal.
    #[arg(long)]
    v: String,
    /// Defaults to exact for n <= 3 and float above.
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long, default_value = "reduced")]
    formulation: Formulation,
    /// Input string of Alice guessed at, one bit per round (full formulation only).
    #[arg(long)]
    x_star: Option<String>,
    #[arg(long)]
    y_star: Option<String>,
    /// Certificate path.
    #[arg(long, default_value = "certificate.json")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Number(s) of rounds, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Scenario(s), comma separated; defaults to all four.
    #[arg(long, value_delimiter = ',')]
    scenario: Vec<ScenarioKind>,
    /// Explicit noise values, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "v_grid", required_unless_present = "v_grid")]
    v: Vec<String>,
    /// `start:stop:steps`, both ends included.
    #[arg(long)]
    v_grid: Option<String>,
    #[arg(long)]
    mode: Option<Mode>,
    /// CSV path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Parallel solves; defaults to the grid size capped at the core count.
    #[arg(long, env = "PRGUESS_JOBS")]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    certificate: PathBuf,
    /// Second certificate whose dual side must close the gap of the first one's primal.
    #[arg(long)]
    sandwich: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VertexArgs {
    #[arg(long)]
    scenario: ScenarioKind,
    /// Behavior JSON file in exact mode; without it the PR-box product below is used.
    #[arg(long, conflicts_with_all = ["n", "v"])]
    behavior: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value = "1")]
    v: String,
}

#[derive(Args, Debug)]
struct Table1Args {
    /// Exit with status 1 on any mismatch.
    #[arg(long)]
    check: bool,
    #[arg(long, value_delimiter = ',', default_values_t = [2, 3])]
    n: Vec<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { commands::EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Verify(a) => commands::verify(a),
        Command::Vertex(a) => commands::vertex(a),
        Command::Table1(a) => commands::table1(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
