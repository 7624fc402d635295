//! Command-line front end: synthetic cohorts, feature extraction, training,
//! warm-start fine-tuning, evaluation and model inspection, plus the
//! multi-patient transfer experiment used by the acceptance suite.

pub mod args;
pub mod commands;
pub mod error;
pub mod experiment;
pub mod manifest;

use std::io::Write;

pub use args::{Cli, Command};
pub use error::{CliError, CliResult};
pub use manifest::RunManifest;

/// Runs one parsed invocation, writing the human-readable summary to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    let mut buf = Vec::new();
    let result = pool.install(|| match &cli.command {
        Command::Synth(a) => commands::synth(a, &mut buf),
        Command::Extract(a) => commands::extract(a, &mut buf),
        Command::Train(a) => commands::train(a, &mut buf),
        Command::Finetune(a) => commands::finetune(a, &mut buf),
        Command::Evaluate(a) => commands::evaluate(a, &mut buf),
        Command::Inspect(a) => commands::inspect(a, &mut buf),
    });
    out.write_all(&buf)?;
    result
}
