//! gcsim: run, compare, and sweep carbon-aware VM packing simulations.

mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "gcsim",
    about = "Trace-driven simulator for renewables-driven cores and carbon-aware VM packing",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Simulation config file (flat TOML). Flags override file values.
    #[arg(long)]
    config: Option<std::path::PathBuf>,
    /// VM arrival trace CSV (vm_id,arrival_s,lifetime_s,cores,criticality).
    #[arg(long)]
    vm_trace: std::path::PathBuf,
    /// Supply trace CSV (time_s,value raw or time_s,fraction normalized).
    #[arg(long)]
    supply_trace: std::path::PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: std::path::PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Placement policy: proposed, best-fit, or crit-aware.
    #[arg(long)]
    policy: Option<String>,
    /// Critical-VM ideal point as "d_rnw,d_sq".
    #[arg(long)]
    tau_critical: Option<String>,
    /// Best-effort ideal point as "d_rnw,d_sq".
    #[arg(long)]
    tau_best_effort: Option<String>,
    /// Fleet size override.
    #[arg(long)]
    servers: Option<u32>,
    /// Simulation horizon override, seconds.
    #[arg(long)]
    duration_s: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one simulation and write report.json plus timeseries.csv.
    Simulate(CommonArgs),
    /// Run several policies on identical traces and write compare.json/.csv.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated policy list, at least two.
        #[arg(long, value_delimiter = ',', required = true)]
        policies: Vec<String>,
    },
    /// Reposition the critical ideal point over a list of inter-point
    /// distances and write sweep.csv.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated raw Euclidean distances.
        #[arg(long, value_delimiter = ',', required = true)]
        distances: Vec<f64>,
    },
    /// Generate synthetic VM and supply traces.
    GenTrace {
        /// Synthetic-spec file (flat TOML mirroring the generator knobs).
        #[arg(long)]
        spec: Option<std::path::PathBuf>,
        #[arg(long, default_value = "out")]
        out: std::path::PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        servers: Option<u32>,
        #[arg(long)]
        duration_s: Option<u64>,
        /// Mean VM arrivals per second.
        #[arg(long)]
        arrival_rate: Option<f64>,
        /// Share of best-effort VMs in [0, 1].
        #[arg(long)]
        best_effort_share: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(common) => commands::simulate(&common),
        Command::Compare { common, policies } => commands::compare(&common, &policies),
        Command::Sweep { common, distances } => commands::sweep(&common, &distances),
        Command::GenTrace {
            spec,
            out,
            seed,
            servers,
            duration_s,
            arrival_rate,
            best_effort_share,
        } => commands::gen_trace(
            spec.as_deref(),
            &out,
            seed,
            servers,
            duration_s,
            arrival_rate,
            best_effort_share,
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(commands::exit_code_for(&err))
        }
    }
}
