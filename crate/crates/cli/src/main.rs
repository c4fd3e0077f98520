mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hctlab::ThresholdKind;
use serde::Serialize;

/// Higher Criticism thresholding, its competitors and the rare/weak phase
/// diagram.
///
/// With `--out DIR` every command writes its files plus `manifest.json`
/// (parameters, seed, version, SHA-256 of each file) into DIR. Without it,
/// the main output goes to stdout. Set HCTLAB_THREADS to cap parallelism.
#[derive(Debug, Parser)]
#[command(name = "hctlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Empirical HC threshold of a z-score file.
    ///
    /// Writes hct.json {threshold, argmax_index, objective_max, n, alpha0}
    /// and hct_trace.csv with columns i,i_over_p,p_value,hc_value.
    Hct(commands::HctArgs),
    /// Ideal threshold and proxy quantities for one model.
    ///
    /// Writes ideal.json: the ideal threshold summary {threshold, sep, err,
    /// fdr, lfdr, tpr, fpr, idr}, the ideal HC threshold, the Bonferroni
    /// threshold and, with --alpha, the FDR threshold.
    Ideal(commands::IdealArgs),
    /// Phase diagram over a (beta, r) grid.
    ///
    /// Writes phase.csv with columns beta,r,region,q_star,fdr_limit,
    /// lfdr_limit,sep_exponent_ideal,sep_exponent_fdrt,sep_exponent_bonf.
    Phase(commands::PhaseArgs),
    /// Finite-p classification boundaries at fixed proxy error levels.
    ///
    /// Writes boundary.csv with columns p,n,beta,level,r,rho_star; r is empty
    /// when no strength reaches the level.
    Boundary(commands::BoundaryArgs),
    /// Monte Carlo simulation of threshold classifiers.
    ///
    /// Writes simulate_records.csv with columns index,threshold_used,
    /// n_selected,n_true_selected,realized_fdr,realized_mdr,test_error,
    /// plugin_error,failure and simulate.json with means and standard errors.
    Simulate(commands::SimulateArgs),
    /// Separation exponents of each method against r for one beta.
    ///
    /// Writes exponents.csv with columns r,ideal,hct,fdrt,bonferroni and
    /// exponents.json with each method's success boundary.
    Exponents(commands::ExponentsArgs),
    /// Z-scores of one simulated replicate, one per line (zscores.txt).
    Zscores(commands::ZscoresArgs),
}

/// Model given either as (p, n, epsilon, tau) or as (p, beta, r).
#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Number of features.
    #[arg(long)]
    pub p: u64,
    /// Training-set size; defaults to max(2, round(log(p) / 2)).
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long, conflicts_with_all = ["beta", "r"], requires = "tau")]
    pub epsilon: Option<f64>,
    #[arg(long, conflicts_with_all = ["beta", "r"], requires = "epsilon")]
    pub tau: Option<f64>,
    /// Rarity exponent: epsilon = p^-beta.
    #[arg(long, requires = "r")]
    pub beta: Option<f64>,
    /// Strength exponent: tau = sqrt(2 r log p).
    #[arg(long, requires = "beta")]
    pub r: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Clip,
    Hard,
    Soft,
}

impl From<KindArg> for ThresholdKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Clip => ThresholdKind::Clip,
            KindArg::Hard => ThresholdKind::Hard,
            KindArg::Soft => ThresholdKind::Soft,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("HCTLAB_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| anyhow::anyhow!("HCTLAB_THREADS must be a positive integer, got `{v}`"))?;
        anyhow::ensure!(
            n > 0,
            "HCTLAB_THREADS must be a positive integer, got `{v}`"
        );
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Hct(a) => commands::hct(a),
        Command::Ideal(a) => commands::ideal(a),
        Command::Phase(a) => commands::phase(a),
        Command::Boundary(a) => commands::boundary(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Exponents(a) => commands::exponents(a),
        Command::Zscores(a) => commands::zscores(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
