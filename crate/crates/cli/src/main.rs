//! `soa`: Shapley-Owen attribution audits from the command line.

mod commands;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Variance-based Shapley and Shapley-Owen attributions for fairness audits.
#[derive(Parser)]
#[command(name = "soa", version)]
struct Cli {
    /// Seed for any Monte Carlo step (recorded in reports).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Exit with status 4 when an expansion misses its accuracy target.
    #[arg(long, global = true)]
    strict: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Record wall-clock timings (makes reports non-reproducible).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Precompute the elementary Shapley-Owen table.
    Table {
        #[arg(long)]
        d: usize,
        /// Largest support size tabulated (default: min(d, 6)).
        #[arg(long)]
        max_order: Option<usize>,
        /// JSON output; a binary companion is written next to it with `.bin` appended.
        #[arg(long)]
        out: std::path::PathBuf,
        /// Overwrite an existing table that fails verification.
        #[arg(long)]
        force: bool,
    },
    /// Build a sparse polynomial chaos expansion of a continuous model.
    Pce {
        #[arg(long)]
        model: std::path::PathBuf,
        #[command(flatten)]
        opts: PceOpts,
        #[arg(long)]
        out: std::path::PathBuf,
    },
    /// Compute attributions and optional fairness verdicts.
    Analyze {
        #[arg(long, conflicts_with = "pce", required_unless_present = "pce")]
        model: Option<std::path::PathBuf>,
        #[arg(long)]
        pce: Option<std::path::PathBuf>,
        /// Elementary table (required for continuous inputs).
        #[arg(long)]
        table: Option<std::path::PathBuf>,
        /// Append missing supports to the table instead of failing.
        #[arg(long)]
        extend_table: bool,
        /// Semicolon-separated subsets of comma-joined 1-based indices, e.g. "1;2;1,3".
        #[arg(long)]
        subsets: String,
        #[arg(long)]
        constraints: Option<std::path::PathBuf>,
        #[command(flatten)]
        opts: PceOpts,
        /// Report path (default: standard output).
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
    /// Dump the exactly enumerated variance game of a discrete model.
    Game {
        #[arg(long)]
        model: std::path::PathBuf,
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
}

#[derive(Args, Clone, Debug)]
pub struct PceOpts {
    /// Hyperbolic truncation exponent, as a decimal or "a/b".
    #[arg(long, default_value = "1")]
    q: String,
    /// Target truncation error.
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,
    #[arg(long, default_value_t = 10)]
    p_max: u32,
    /// Extra quadrature degree (default: the model's degree when it is a polynomial in
    /// uniform inputs, else 10).
    #[arg(long)]
    degree_hint: Option<u32>,
    /// Coefficient admission threshold (default: 1e-8·σ̂).
    #[arg(long)]
    kappa: Option<f64>,
    /// Stop on the Chebyshev tail bound instead of the variance gap.
    #[arg(long)]
    chebyshev: bool,
    #[arg(long, default_value_t = 1e-2)]
    chebyshev_t: f64,
    #[arg(long, default_value_t = 100_000)]
    mc_samples: usize,
}

pub struct Globals {
    pub seed: u64,
    pub strict: bool,
    pub timing: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let g = Globals {
        seed: cli.seed,
        strict: cli.strict,
        timing: cli.timing,
    };
    let result = match cli.command {
        Command::Table {
            d,
            max_order,
            out,
            force,
        } => commands::table(&g, d, max_order, &out, force),
        Command::Pce { model, opts, out } => commands::pce(&g, &model, &opts, &out),
        Command::Analyze {
            model,
            pce,
            table,
            extend_table,
            subsets,
            constraints,
            opts,
            out,
        } => commands::analyze(
            &g,
            &commands::AnalyzeArgs {
                model,
                pce,
                table,
                extend_table,
                subsets,
                constraints,
                opts,
                out,
            },
        ),
        Command::Game { model, out } => commands::game(&model, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
