use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod manifest;

/// Default directory for outputs when `--out` is not given.
pub const OUT_DIR_ENV: &str = "ROUGHSPT_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "roughspt", version, about = "Pathwise portfolio experiments on sampled market paths")]
struct Cli {
    /// Overrides every seed in the command's configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Riemann-sum lift of a path with a level-by-level convergence report.
    Lift(LiftArgs),
    /// Relative wealth of a portfolio against the market.
    Wealth(WealthArgs),
    /// Cover's universal portfolio against the best member of a family.
    Universal(UniversalArgs),
    /// Log-optimal against alpha-optimal expected log wealth.
    Figure1(Figure1Args),
}

#[derive(Args, Debug)]
pub struct LiftArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Number of dyadic levels, finest being the input grid itself.
    #[arg(long, default_value_t = 5)]
    pub levels: u32,
    #[arg(long, default_value_t = roughspt::rough::DEFAULT_P)]
    pub p: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputKind {
    Prices,
    Weights,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LiftChoice {
    LeftPoint,
    Geometric,
}

#[derive(Args, Debug)]
pub struct MarketArgs {
    /// Path CSV of prices, or of weights with `--market-kind weights`.
    #[arg(long)]
    pub market: PathBuf,
    #[arg(long, value_enum, default_value_t = InputKind::Prices)]
    pub market_kind: InputKind,
    #[arg(long, value_enum, default_value_t = LiftChoice::LeftPoint)]
    pub lift: LiftChoice,
}

#[derive(Args, Debug)]
pub struct WealthArgs {
    #[command(flatten)]
    pub market: MarketArgs,
    /// Portfolio description (JSON).
    #[arg(long)]
    pub portfolio: PathBuf,
    /// Horizon; defaults to the last time in the market file.
    #[arg(long = "T")]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    Uniform,
}

#[derive(Args, Debug)]
pub struct UniversalArgs {
    #[command(flatten)]
    pub market: MarketArgs,
    /// Function family (JSON).
    #[arg(long)]
    pub family: PathBuf,
    #[arg(long, value_enum, default_value_t = Measure::Uniform)]
    pub measure: Measure,
    /// Comma-separated horizons, each a node of the market grid.
    #[arg(long = "T-grid", value_delimiter = ',')]
    pub t_grid: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct Figure1Args {
    /// Experiment configuration (JSON); the built-in polynomial setup when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Lift(a) => commands::lift(a, cli.seed),
        Command::Wealth(a) => commands::wealth(a, cli.seed),
        Command::Universal(a) => commands::universal(a, cli.seed),
        Command::Figure1(a) => commands::figure1(a, cli.seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
