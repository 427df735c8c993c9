//! `threatfair`: fairness analysis of context-aware privacy threat models.
//!
//! Exit codes: 0 success or fair, 1 unfair verdict, 2 invalid model or
//! refused edit, 3 I/O failure, 64 usage error.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use threatfair_core::RankKind;

use output::Format;

#[derive(Debug, Parser)]
#[command(
    name = "threatfair",
    version,
    about = "Fairness errors, checks and what-if analysis for privacy threat models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Model file (JSON, schema version 1).
    model: PathBuf,
    /// Output format.
    #[arg(long, value_enum, env = "THREATFAIR_FORMAT", default_value = "table")]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a model file against the schema and model invariants.
    Validate(ModelArgs),
    /// Fairness errors per cause and per context, and both bounds.
    Analyze(ModelArgs),
    /// Order causes or contexts from most to least unfair.
    Rank {
        #[command(flatten)]
        args: ModelArgs,
        #[arg(long, value_enum, default_value = "cause")]
        by: RankBy,
    },
    /// Test λ-causal and/or γ-contextual fairness.
    #[command(group(ArgGroup::new("thresholds").required(true).multiple(true).args(["lambda", "gamma"])))]
    Check {
        #[command(flatten)]
        args: ModelArgs,
        #[arg(long, allow_negative_numbers = true)]
        lambda: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        gamma: Option<f64>,
    },
    /// Recompute the report with one cause removed or added.
    #[command(group(ArgGroup::new("edit").required(true).args(["remove", "add"])))]
    Whatif {
        #[command(flatten)]
        args: ModelArgs,
        #[arg(long, value_name = "CAUSE")]
        remove: Option<String>,
        #[arg(long, value_name = "CAUSE", requires = "weights")]
        add: Option<String>,
        /// Weights of the added cause per context: `office=0.2,cafe=0.5`.
        #[arg(long, value_name = "CONTEXT=WEIGHT,...")]
        weights: Option<String>,
        /// Write the edited model to this new path.
        #[arg(long, value_name = "PATH")]
        save: Option<PathBuf>,
    },
    /// Greedy cause removals towards the λ and γ targets.
    Mitigate {
        #[command(flatten)]
        args: ModelArgs,
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long, allow_negative_numbers = true)]
        gamma: f64,
        #[arg(long, default_value_t = 3)]
        max_steps: usize,
    },
    /// Context-conditioned risk: threat frequency × harm magnitude.
    Risk(ModelArgs),
    /// Serve the model over HTTP for the what-if explorer.
    Serve {
        model: PathBuf,
        #[arg(long, default_value = threatfair_service::DEFAULT_BIND)]
        bind: String,
        #[arg(long, default_value_t = threatfair_service::DEFAULT_PORT)]
        port: u16,
        /// Allow cross-origin requests from this origin.
        #[arg(long, value_name = "ORIGIN")]
        cors: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum RankBy {
    Cause,
    Context,
}

impl From<RankBy> for RankKind {
    fn from(by: RankBy) -> Self {
        match by {
            RankBy::Cause => RankKind::Cause,
            RankBy::Context => RankKind::Context,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(commands::EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };

    let code = match cli.command {
        Command::Validate(a) => commands::validate(&a.model, a.format),
        Command::Analyze(a) => commands::analyze(&a.model, a.format),
        Command::Rank { args, by } => commands::rank(&args.model, args.format, by.into()),
        Command::Check {
            args,
            lambda,
            gamma,
        } => commands::check(&args.model, args.format, lambda, gamma),
        Command::Whatif {
            args,
            remove,
            add,
            weights,
            save,
        } => commands::whatif(&args.model, args.format, remove, add, weights, save),
        Command::Mitigate {
            args,
            lambda,
            gamma,
            max_steps,
        } => commands::mitigate(&args.model, args.format, lambda, gamma, max_steps),
        Command::Risk(a) => commands::risk(&a.model, a.format),
        Command::Serve {
            model,
            bind,
            port,
            cors,
        } => commands::serve(&model, &bind, port, cors),
    };
    ExitCode::from(code)
}
