//! `worldprice` — cost-preserving world prices for multi-campus price panels.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 input error,
//! 3 infeasible cost target, 4 identification failure.

mod cmds;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cmds::{
    cmd_blend, cmd_diagnose, cmd_select, cmd_simulate, cmd_sweep, BlendArgs, DiagnoseArgs,
    ScenarioArgs, SelectArgs, SimulateArgs, SweepArgs,
};

#[derive(Parser)]
#[command(name = "worldprice", version, about = "Cost-preserving world prices across campuses")]
struct Cli {
    /// Seed for any randomized scenario work (deterministic per seed).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioFlags {
    /// Scenario kind: minimal-simpson, dominance, aidc, mix-extremity,
    /// interaction, sparsity.
    #[arg(long)]
    kind: Option<String>,
    /// Flat key=value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dominance preset: scenario_a or scenario_b.
    #[arg(long)]
    preset: Option<String>,
    /// Mix extremity in [0, 1].
    #[arg(long)]
    eta: Option<f64>,
    /// Interaction strength.
    #[arg(long)]
    gamma: Option<f64>,
    /// Fraction of cells to mask in sparsity scenarios.
    #[arg(long)]
    rho_mask: Option<f64>,
    #[arg(long)]
    n_products: Option<usize>,
    #[arg(long)]
    n_campuses: Option<usize>,
    /// Quantity-mix tilt strength.
    #[arg(long)]
    mix_skew: Option<f64>,
}

impl ScenarioFlags {
    fn into_args(self) -> ScenarioArgs {
        ScenarioArgs {
            kind: self.kind,
            config: self.config,
            preset: self.preset,
            eta: self.eta,
            gamma: self.gamma,
            rho_mask: self.rho_mask,
            n_products: self.n_products,
            n_campuses: self.n_campuses,
            mix_skew: self.mix_skew,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute world prices for a panel with a chosen operator.
    Blend {
        /// Panel file (.csv or .json).
        #[arg(long)]
        input: PathBuf,
        /// Operator: naive, fe, or convex.
        #[arg(long, default_value = "fe")]
        operator: String,
        /// Baseline campus weights CSV for the convex operator
        /// (defaults to global quantity shares).
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Infeasible-cost handling for the convex operator:
        /// error, slack, or boundary.
        #[arg(long, default_value = "error")]
        fallback: String,
        /// Relative cost tolerance for the slack fallback.
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
        /// World-price CSV output; a .json report is written alongside.
        #[arg(long)]
        output: PathBuf,
    },
    /// Score world prices against a panel (reversal and cost diagnostics).
    Diagnose {
        #[arg(long)]
        input: PathBuf,
        /// World-price CSV, as written by `blend`.
        #[arg(long)]
        world_prices: PathBuf,
        /// JSON report path.
        #[arg(long)]
        output: PathBuf,
    },
    /// Recommend an operator for a panel.
    Select {
        #[arg(long)]
        input: PathBuf,
        /// Maximum acceptable order-violation rate for the FE operator.
        #[arg(long)]
        ovr_max: Option<f64>,
        /// Maximum acceptable relative additive-fit residual.
        #[arg(long)]
        rms_max: Option<f64>,
        /// JSON report path.
        #[arg(long)]
        output: PathBuf,
    },
    /// Generate a synthetic panel (panel.csv + summary.json).
    Simulate {
        #[command(flatten)]
        scenario: ScenarioFlags,
        #[arg(long)]
        output_dir: PathBuf,
    },
    /// Stress-sweep a scenario parameter (sweep.csv + sweep.json).
    Sweep {
        #[command(flatten)]
        scenario: ScenarioFlags,
        /// Comma list (`0,0.1,0.2`) or inclusive range (`start:stop:step`).
        #[arg(long)]
        grid: String,
        #[arg(long, default_value_t = 1)]
        replicates: usize,
        #[arg(long)]
        output_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = cli.seed;
    let result = match cli.command {
        Command::Blend {
            input,
            operator,
            baseline,
            fallback,
            epsilon,
            output,
        } => cmd_blend(
            &BlendArgs {
                input,
                operator,
                baseline,
                fallback,
                epsilon,
                output,
            },
            seed,
        ),
        Command::Diagnose {
            input,
            world_prices,
            output,
        } => cmd_diagnose(
            &DiagnoseArgs {
                input,
                world_prices,
                output,
            },
            seed,
        ),
        Command::Select {
            input,
            ovr_max,
            rms_max,
            output,
        } => cmd_select(
            &SelectArgs {
                input,
                ovr_max,
                rms_max,
                output,
            },
            seed,
        ),
        Command::Simulate {
            scenario,
            output_dir,
        } => cmd_simulate(
            &SimulateArgs {
                scenario: scenario.into_args(),
                output_dir,
            },
            seed,
        ),
        Command::Sweep {
            scenario,
            grid,
            replicates,
            output_dir,
        } => cmd_sweep(
            &SweepArgs {
                scenario: scenario.into_args(),
                grid,
                replicates,
                output_dir,
            },
            seed,
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}
