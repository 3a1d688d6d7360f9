//! Command-line experiments for noisy boson sampling: numerical studies of
//! the truncated interference-order expansion, written as plot-ready CSV or
//! JSON with a metadata header.

pub mod config;
pub mod error;
pub mod record;
pub mod stats;
pub mod studies;

pub use config::{Cli, Command, ExperimentConfig, Format};
pub use error::{CliError, Result};
pub use record::StudyRecord;

use std::fs::File;
use std::io::{self, BufWriter, Write};

/// Runs a parsed command line and writes its output.
pub fn execute(cli: &Cli) -> Result<()> {
    let cfg = ExperimentConfig::from_cli(cli.command, &cli.opts);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.opts.threads).build()?;
    let record = pool.install(|| studies::run(&cfg))?;
    match &cli.opts.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            record.write(cfg.format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            record.write(cfg.format, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}
