//! Command-line pipelines over the `blbf` toolkit.
//!
//! `generate -> train-logger -> convert -> train -> evaluate` reproduces the
//! supervised-to-bandit workflow step by step; `simulate` runs the whole
//! cross-validated study and `gradcheck` verifies the analytic gradients.
//! Every command is deterministic given its configuration and inputs.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod gradcheck;
pub mod supervised_io;

pub use args::{Cli, Command};
pub use error::{CliError, CliResult};

/// What a command prints. `stdout` carries results, `stderr` warnings;
/// `status` is the exit code of a command that completed its work.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Output {
    pub stdout: String,
    pub stderr: String,
    pub status: i32,
}

impl Output {
    pub fn line(&mut self, text: impl AsRef<str>) {
        self.stdout.push_str(text.as_ref());
        self.stdout.push('\n');
    }

    pub fn warn(&mut self, text: impl AsRef<str>) {
        self.stderr.push_str("warning: ");
        self.stderr.push_str(text.as_ref());
        self.stderr.push('\n');
    }
}

pub fn run(cli: Cli) -> CliResult<Output> {
    match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::TrainLogger(a) => commands::train_logger(a),
        Command::Convert(a) => commands::convert(a),
        Command::Train(a) => commands::train(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Gradcheck(a) => commands::gradcheck(a),
        Command::Simulate(a) => commands::simulate(a),
    }
}
