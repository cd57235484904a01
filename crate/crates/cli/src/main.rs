use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gqbm_cli::{Overrides, Pipeline, RunConfig};

/// Exact non-Markovian dynamics of generalized quantum Brownian motion.
///
/// Every flag can also be set through the environment variable shown in its
/// help text; flags win over the environment, which wins over the file.
#[derive(Debug, Parser)]
#[command(name = "gqbm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate the dissipation and noise kernels g_V(t), g̃_V(t).
    Kernels,
    /// Solve for the retarded function U(t) and the correlation V(t, t).
    Greens,
    /// Exact master-equation coefficients (plus the HPZ form for α = 1).
    Coeffs,
    /// Propagate the Gaussian moments of the configured initial state.
    Evolve,
    /// Coefficients and short-time estimates for every α in `[sweep] alphas`.
    JoltSweep,
    /// Compare U and V against the exact finite-bath propagation.
    OracleCompare,
    /// The initial-jolt study for α ∈ {0, 0.25, 0.5, 0.75, 1}.
    ReproduceFig2,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long, global = true, env = "GQBM_CONFIG")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "GQBM_OUT")]
    out: Option<PathBuf>,
    /// Coupling ratio α = |W_k / V_k|.
    #[arg(long, global = true, env = "GQBM_ALPHA")]
    alpha: Option<f64>,
    /// Ohmic coupling strength γ0 (units of Λ).
    #[arg(long, global = true, env = "GQBM_GAMMA0")]
    gamma0: Option<f64>,
    /// Bath temperature (units of Λ).
    #[arg(long, global = true, env = "GQBM_TEMPERATURE")]
    temperature: Option<f64>,
    /// Final time (units of 1/Λ).
    #[arg(long, global = true, env = "GQBM_T_END")]
    t_end: Option<f64>,
    /// Number of time steps.
    #[arg(long, global = true, env = "GQBM_STEPS")]
    steps: Option<usize>,
    /// Number of bath modes for the oracle.
    #[arg(long, global = true, env = "GQBM_ORACLE_MODES")]
    oracle_modes: Option<usize>,
    /// Run the independent second routes and report deviations.
    #[arg(long, global = true, env = "GQBM_CROSSCHECK")]
    crosscheck: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let pipeline = match cli.command {
        Command::Kernels => Pipeline::Kernels,
        Command::Greens => Pipeline::Greens,
        Command::Coeffs => Pipeline::Coeffs,
        Command::Evolve => Pipeline::Evolve,
        Command::JoltSweep => Pipeline::JoltSweep,
        Command::OracleCompare => Pipeline::OracleCompare,
        Command::ReproduceFig2 => Pipeline::ReproduceFig2,
    };
    let c = cli.common;
    let result = (|| {
        let mut config = match &c.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        config.apply(&Overrides {
            out: c.out,
            alpha: c.alpha,
            gamma0: c.gamma0,
            temperature: c.temperature,
            t_end: c.t_end,
            steps: c.steps,
            oracle_modes: c.oracle_modes,
            crosscheck: c.crosscheck,
        });
        gqbm_cli::run(pipeline, &config).map(|s| (config, s))
    })();
    match result {
        Ok((config, summary)) => {
            println!("{}: wrote {} files to {}", pipeline.name(), summary.files.len() + 1, config.output.dir.display());
            for (k, v) in &summary.results {
                println!("  {k} = {v}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
