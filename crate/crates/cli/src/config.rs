use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use noisy_bs::sampler::Proposal;

#[derive(Parser, Debug)]
#[command(name = "noisy-bs", version, about = "Noisy boson sampling experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub opts: Options,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Variances of the interference-order coefficients over Haar unitaries
    VarianceStudy,
    /// Distribution of the trace distance between exact and truncated output laws
    MarkovStudy,
    /// Largest simulable truncation order against transmission
    KEtaFrontier,
    /// Figure of merit and truncation order for tabulated photon sources
    TradeoffTable,
    /// Photon-loss margin for post-selected experiments
    Postselect,
    /// Draw samples from the truncated distribution
    Sample,
    /// Exact post-selected output distribution
    Exact,
    /// Evaluate the closed-form bounds
    Bounds,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VarianceStudy => "variance-study",
            Command::MarkovStudy => "markov-study",
            Command::KEtaFrontier => "k-eta-frontier",
            Command::TradeoffTable => "tradeoff-table",
            Command::Postselect => "postselect",
            Command::Sample => "sample",
            Command::Exact => "exact",
            Command::Bounds => "bounds",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitaryKind {
    #[default]
    Haar,
    Beamsplitter,
}

#[derive(ValueEnum, Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProposalArg {
    #[default]
    Uniform,
    Swap,
}

impl From<ProposalArg> for Proposal {
    fn from(p: ProposalArg) -> Self {
        match p {
            ProposalArg::Uniform => Proposal::UniformIndependent,
            ProposalArg::Swap => Proposal::SingleModeSwap,
        }
    }
}

/// Options shared by all commands. Unset values take per-command defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct Options {
    /// Number of modes
    #[arg(long = "N", global = true)]
    pub modes: Option<usize>,
    /// Input photons
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Detected photons
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// Pairwise overlap of the photons' internal states
    #[arg(long, global = true, conflicts_with = "x_squared")]
    pub x: Option<f64>,
    /// Squared overlap (Hong-Ou-Mandel visibility); alternative to --x
    #[arg(long = "x-squared", global = true)]
    pub x_squared: Option<f64>,
    /// Per-photon transmission
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    /// Truncation order
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Target expected trace distance
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Failure probability
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Photon-number window parameter C
    #[arg(long = "window-c", global = true)]
    pub window_c: Option<f64>,
    /// Monte Carlo trials
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Samples to draw
    #[arg(long, global = true)]
    pub count: Option<usize>,
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Output file (stdout when omitted)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads (0 = all cores)
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, global = true, value_enum, default_value_t = UnitaryKind::Haar)]
    pub unitary: UnitaryKind,
    #[arg(long, global = true, value_enum, default_value_t = ProposalArg::Uniform)]
    pub proposal: ProposalArg,
    #[arg(long = "burn-in", global = true)]
    pub burn_in: Option<u64>,
    #[arg(long, global = true)]
    pub thinning: Option<u64>,
    /// Sample input subsets together with output patterns
    #[arg(long, global = true)]
    pub joint: bool,
}

impl Options {
    /// Overlap from `--x` or `--x-squared`.
    pub fn overlap(&self) -> Option<f64> {
        self.x.or(self.x_squared.map(f64::sqrt))
    }
}

/// Fully resolved settings of one run, echoed into every output file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(rename = "N")]
    pub modes: Option<usize>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub x: Option<f64>,
    pub eta: Option<f64>,
    pub k: Option<usize>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub window_c: Option<f64>,
    pub trials: Option<usize>,
    pub count: Option<usize>,
    pub seed: u64,
    pub format: Format,
    pub unitary: UnitaryKind,
    pub proposal: ProposalArg,
    pub burn_in: Option<u64>,
    pub thinning: Option<u64>,
    pub joint: bool,
}

impl ExperimentConfig {
    pub fn from_cli(command: Command, o: &Options) -> Self {
        Self {
            command,
            modes: o.modes,
            n: o.n,
            m: o.m,
            x: o.overlap(),
            eta: o.eta,
            k: o.k,
            epsilon: o.epsilon,
            delta: o.delta,
            window_c: o.window_c,
            trials: o.trials,
            count: o.count,
            seed: o.seed,
            format: o.format,
            unitary: o.unitary,
            proposal: o.proposal,
            burn_in: o.burn_in,
            thinning: o.thinning,
            joint: o.joint,
        }
    }

    /// Settings with every field unset, for programmatic use.
    pub fn new(command: Command) -> Self {
        Self::from_cli(command, &Options {
            seed: 42,
            ..Default::default()
        })
    }
}
