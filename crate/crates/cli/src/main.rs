//! `catdiff`: simulate, fit, summarize and check group-difference tests for
//! multivariate categorical data.
//!
//! Exit codes: 0 success, 2 usage or invalid settings, 3 input ingestion
//! failure, 4 numerical degeneracy, 5 output I/O failure.

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::code;

/// Environment variable naming the default output root.
pub const OUT_DIR_ENV: &str = "CATDIFF_OUT_DIR";
pub const DEFAULT_OUT_ROOT: &str = "catdiff-out";

#[derive(Debug, Parser)]
#[command(name = "catdiff", version, about = "Bayesian testing of group differences in multivariate categorical data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a dataset from a reference scenario or a model document.
    Simulate(SimulateArgs),
    /// Run the Gibbs sampler on a dataset and write the chain.
    Fit(Box<FitArgs>),
    /// Compute the global test, Cramér's V summaries and marginal differences.
    Summarize(SummarizeArgs),
    /// Print effective sample sizes and component occupancy.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Reference scenario (1: no group effect, 2: marginal effects, 3: dependence-only effects).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3), required_unless_present = "model", conflicts_with = "model")]
    scenario: Option<u8>,
    /// Model document (JSON) to sample from instead of a scenario.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Units per group.
    #[arg(long, default_value_t = catdiff_core::data::SCENARIO_DEFAULT_GROUP_SIZE)]
    n_per_group: usize,
    #[arg(long, default_value_t = catdiff_core::config::DEFAULT_SEED)]
    seed: u64,
    /// Output directory [default: $CATDIFF_OUT_DIR/data or catdiff-out/data].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Dataset CSV: header row, 1-based integer codes, one group column.
    #[arg(long)]
    data: PathBuf,
    /// Name of the group column.
    #[arg(long, default_value = catdiff_core::data::DEFAULT_GROUP_COLUMN)]
    group_column: String,
    /// Declared number of levels per outcome, comma-separated. Inferred when absent.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
    /// Declared number of groups. Inferred when absent.
    #[arg(long)]
    groups: Option<usize>,
    /// TOML config file; flags given here override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: SettingArgs,
    /// Independent chains, run in parallel and merged in chain order.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    chains: u64,
    /// Output chain directory [default: $CATDIFF_OUT_DIR/chain or catdiff-out/chain].
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Flags mirroring the config-file keys.
#[derive(Debug, Args)]
struct SettingArgs {
    /// Dirichlet concentration for the group marginal, one value for every group.
    #[arg(long)]
    alpha: Option<f64>,
    /// Profile concentration: "auto" (1/d_j) or a number.
    #[arg(long)]
    gamma: Option<String>,
    /// Prior probability of a group effect.
    #[arg(long)]
    pr_h1: Option<f64>,
    /// Truncation level.
    #[arg(long)]
    h_bar: Option<usize>,
    /// Mixing-weight concentration: "auto" (1/h_bar) or a number.
    #[arg(long)]
    nu_concentration: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_iter: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
}

#[derive(Debug, Args)]
struct SummarizeArgs {
    /// Chain directory written by `fit`.
    #[arg(long)]
    chain: PathBuf,
    /// Exceedance threshold for Cramér's V.
    #[arg(long, default_value_t = catdiff_core::posterior::DEFAULT_EXCEEDANCE_THRESHOLD)]
    threshold: f64,
    /// Credible level for marginal-difference intervals.
    #[arg(long, default_value_t = catdiff_core::posterior::DEFAULT_CREDIBLE_LEVEL)]
    level: f64,
    /// Marginal differences for every group pair, not only groups 1 and 2.
    #[arg(long)]
    all_group_pairs: bool,
    /// Skip the CSV exports.
    #[arg(long)]
    no_csv: bool,
    /// Output directory [default: <chain>/summary].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// Chain directory written by `fit`.
    #[arg(long)]
    chain: PathBuf,
}

fn default_out(leaf: &str) -> PathBuf {
    let root = std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT));
    root.join(leaf)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { code::USAGE } else { code::OK });
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Fit(a) => commands::fit(*a),
        Command::Summarize(a) => commands::summarize(a),
        Command::Check(a) => commands::check(a),
    };
    match result {
        Ok(()) => ExitCode::from(code::OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
