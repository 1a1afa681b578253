//! Command-line front end: simulate, fit, cross-validate, evaluate and
//! report, plus the CSV/JSON formats they exchange.

pub mod args;
pub mod commands;
pub mod error;
pub mod formats;

pub use args::{Cli, Command};
pub use error::{CliError, Result};

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Fit(a) => commands::fit(a),
        Command::Cv(a) => commands::cv(a),
        Command::Evaluate(a) => commands::evaluate_cmd(a),
        Command::Report(a) => commands::report(a),
    }
}
