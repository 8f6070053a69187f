//! `qcb`: kinematical bounds, controllability and pulse optimization for
//! finite-level quantum systems described by a JSON model file.

mod commands;
mod error;
mod model;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qcb_core::{Direction, InitialPulse, OptimizationConfig};

use crate::commands::{Inputs, OptimizeArgs};
use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "qcb",
    version,
    about = "Kinematical bounds and dynamical realizability for quantum control"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lower and upper bounds of <A> over all unitaries, and where rho0 sits.
    Bounds {
        #[command(flatten)]
        common: Common,
        /// Also emit the unitaries attaining each bound.
        #[arg(long)]
        emit_unitary: bool,
    },
    /// Dimension of the dynamical Lie algebra and the controllability verdict.
    Controllability {
        #[command(flatten)]
        common: Common,
        /// Also report the ideal generated by the controls.
        #[arg(long)]
        ideal: bool,
    },
    /// Non-interacting subspaces and the tightened bounds they imply.
    Decompose {
        #[command(flatten)]
        common: Common,
    },
    /// Gradient search for pulses that drive <A(tF)> toward a bound.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: OptimizeOpts,
    },
    /// Expectation time series under a pulse schedule.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Pulse schedule file, as written by `optimize --out`.
        #[arg(long, value_name = "PATH")]
        pulses: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct Common {
    /// Model file (JSON).
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    /// h0, control:<m>, identity, projector:<k>, or an inline/file JSON matrix.
    #[arg(long, value_name = "SPEC")]
    observable: Option<String>,
    /// Initial state: path or inline JSON (matrix or diagonal weights).
    #[arg(long, value_name = "PATH|JSON")]
    rho0: Option<String>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct OptimizeOpts {
    #[arg(long, default_value_t = OptimizationConfig::default().target_time)]
    target_time: f64,
    /// Number of piecewise-constant intervals.
    #[arg(long, default_value_t = OptimizationConfig::default().steps)]
    steps: usize,
    #[arg(long, default_value_t = OptimizationConfig::default().iterations)]
    iterations: usize,
    #[arg(long, env = "QCB_SEED", default_value_t = 0)]
    seed: u64,
    /// max or min.
    #[arg(long, default_value = "max")]
    direction: String,
    /// Initial trial step of the line search.
    #[arg(long, default_value_t = OptimizationConfig::default().learning_rate)]
    learning_rate: f64,
    /// zeros, constant:<c> or random:<a>.
    #[arg(long, value_name = "INIT")]
    init: Option<String>,
    #[arg(long, default_value_t = OptimizationConfig::default().convergence_tol)]
    convergence_tol: f64,
    /// Independent starts with seeds seed, seed+1, ...; the best is reported.
    #[arg(long, default_value_t = 1)]
    starts: usize,
    /// Where to write the best pulse schedule.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

impl OptimizeOpts {
    fn to_args(&self) -> Result<OptimizeArgs, CliError> {
        let direction: Direction = self.direction.parse()?;
        let initial_pulse: InitialPulse = match &self.init {
            Some(s) => s.parse()?,
            None => commands::default_initial_pulse(),
        };
        Ok(OptimizeArgs {
            config: OptimizationConfig {
                target_time: self.target_time,
                steps: self.steps,
                iterations: self.iterations,
                learning_rate: self.learning_rate,
                initial_pulse,
                seed: self.seed,
                direction,
                convergence_tol: self.convergence_tol,
            },
            starts: self.starts,
            out: self.out.clone(),
        })
    }
}

fn inputs(common: &Common) -> Result<Inputs, CliError> {
    Ok(Inputs {
        file: model::load_model(&common.model)?,
        observable_arg: common.observable.clone(),
        rho0_arg: common.rho0.clone(),
    })
}

fn run(cli: Cli) -> Result<(serde_json::Value, Format), CliError> {
    match cli.command {
        Command::Bounds { common, emit_unitary } => {
            Ok((commands::bounds(&inputs(&common)?, emit_unitary)?, common.format))
        }
        Command::Controllability { common, ideal } => {
            Ok((commands::controllability(&inputs(&common)?, ideal)?, common.format))
        }
        Command::Decompose { common } => Ok((commands::decompose(&inputs(&common)?)?, common.format)),
        Command::Optimize { common, opts } => {
            let args = opts.to_args()?;
            Ok((commands::optimize(&inputs(&common)?, &args)?, common.format))
        }
        Command::Simulate { common, pulses } => Ok((commands::simulate(&inputs(&common)?, &pulses)?, common.format)),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok((report, Format::Json)) => {
            println!("{}", serde_json::to_string_pretty(&report).expect("reports serialize"));
            ExitCode::SUCCESS
        }
        Ok((report, Format::Text)) => {
            print!("{}", render::text(&report));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
