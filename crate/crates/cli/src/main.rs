mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Context, Failure, EXIT_INPUT};
use config::{RunConfig, TauGrid};

/// Delay Lyapunov matrices for linear systems with a constant and an
/// exponential-kernel distributed delay.
#[derive(Parser, Debug)]
#[command(name = "dlyap", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Number of equally spaced τ points on [0, h].
    #[arg(long, global = true)]
    tau_points: Option<usize>,

    /// Tolerance override, e.g. `--tolerance oracle=1e-4`. Repeatable.
    #[arg(long = "tolerance", global = true, value_name = "NAME=VALUE")]
    tolerances: Vec<String>,

    /// Suppress the report on stdout.
    #[arg(short, long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for P(τ) and write the report, P_tau.csv and summary.json.
    Solve,
    /// Report whether a unique delay Lyapunov matrix exists.
    Check,
    /// Cross-check the solution against simulation.
    Validate,
    /// Print P at the given τ values (or the configured grid) as CSV.
    Sample {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        tau: Vec<f64>,
    },
    /// Print the effective configuration (the built-in two-state example
    /// without --config).
    DumpConfig,
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let mut config = match (&cli.config, &cli.command) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Command::DumpConfig) => RunConfig::example1(),
        (None, _) => {
            return Err(Failure {
                code: EXIT_INPUT,
                message: "--config is required".into(),
            })
        }
    };
    if let Some(k) = cli.tau_points {
        config.tau_grid = TauGrid::Count(k);
    }
    for spec in &cli.tolerances {
        config.tolerances.set(spec)?;
    }
    if let Some(out) = &cli.out {
        config.output.dir = out.clone();
    }
    let ctx = Context {
        out_dir: config.output.dir.clone(),
        config,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Solve => commands::solve(&ctx),
        Command::Check => commands::check(&ctx),
        Command::Validate => commands::validate(&ctx),
        Command::Sample { tau } => commands::sample(&ctx, &tau, cli.out.is_some()),
        Command::DumpConfig => {
            println!("{}", ctx.config.to_json());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("dlyap: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
