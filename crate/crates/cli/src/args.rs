use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "adfm", version, about = "Decentralized fixed mode analysis for partitioned LTI models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Clone, clap::Args, Serialize)]
pub struct GlobalArgs {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    /// Seed for the randomized feedback oracle.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Measure at or above which a mode is flagged as an approximate fixed mode.
    #[arg(long, global = true, default_value_t = 1e3)]
    pub threshold: f64,

    /// Largest station count for subset enumeration.
    #[arg(long, global = true, default_value_t = 20)]
    pub subset_cap: usize,

    /// Oracle trials per verdict.
    #[arg(long, global = true, default_value_t = 100)]
    pub trials: usize,

    /// Mode selector tolerance, relative to max(1, ||A||_F).
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub mode_tol: f64,

    /// Output file. For `rdfm`, the perturbed model (plus a
    /// `.perturbation.json` sidecar); otherwise the report.
    #[arg(short = 'o', long = "output", global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mode table with measures, classification and PBH warnings.
    Analyze {
        model: PathBuf,
    },
    /// The M matrix of one mode.
    Mmatrix {
        model: PathBuf,
        /// Mode selector, e.g. `1`, `-0.2+3.1i`.
        #[arg(long, allow_hyphen_values = true)]
        mode: String,
    },
    /// Perturb an approximate fixed mode into an exact one.
    Rdfm {
        model: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        mode: String,
        #[arg(long, required_unless_present = "scan")]
        epsilon: Option<f64>,
        /// Zero every admissible bipartition instead of the cheapest.
        #[arg(long)]
        all_candidates: bool,
        /// List every bipartition with the smallest epsilon admitting it.
        #[arg(long, conflicts_with_all = ["epsilon", "all_candidates"])]
        scan: bool,
    },
    /// Find and rank overlapping link sets that free the given modes.
    Select {
        model: PathBuf,
        #[arg(long, required = true, value_delimiter = ',', allow_hyphen_values = true)]
        modes: Vec<String>,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
        max_links: u64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Analyze { .. } => "analyze",
            Command::Mmatrix { .. } => "mmatrix",
            Command::Rdfm { .. } => "rdfm",
            Command::Select { .. } => "select",
        }
    }
}
