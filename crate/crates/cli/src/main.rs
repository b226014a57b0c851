use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stochreach_cli::pipeline;
use stochreach_cli::{CliError, ExperimentConfig, Method, Overrides};

#[derive(Parser)]
#[command(name = "stochreach", version, about = "Probabilistic reachable sets for stochastic control systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find or check a contraction certificate and write certificate.json.
    Certify(Common),
    /// Compute probabilistic reachable sets (JSON plus polygon CSV per method and time).
    Reach(Common),
    /// Compute the sets and check their coverage by Monte Carlo simulation.
    Validate(Common),
    /// Run the built-in inverted pendulum experiment end to end.
    DemoPendulum(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<String>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    #[arg(long, value_name = "X")]
    delta: Option<f64>,
    /// Number of Monte Carlo paths.
    #[arg(long, value_name = "N")]
    paths: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides { out: self.out.clone(), seed: self.seed, method: self.method, delta: self.delta, paths: self.paths }
    }

    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let path = self.config.as_ref().ok_or_else(|| CliError::Usage("--config PATH is required".into()))?;
        let mut cfg = ExperimentConfig::load(path)?;
        cfg.apply(&self.overrides());
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Certify(c) => pipeline::cmd_certify(c.load()?),
        Command::Reach(c) => pipeline::cmd_reach(c.load()?),
        Command::Validate(c) => pipeline::cmd_validate(c.load()?),
        Command::DemoPendulum(c) => {
            if c.config.is_some() {
                return Err(CliError::Usage("demo-pendulum uses its built-in configuration; drop --config".into()));
            }
            let mut cfg = ExperimentConfig::pendulum_demo();
            cfg.apply(&c.overrides());
            pipeline::cmd_demo_pendulum(cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
