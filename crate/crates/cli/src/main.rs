//! `eamac`: rate regions, covert budgets and plans, parameter sweeps and
//! oracle validation runs for the entanglement-assisted bosonic MAC.

mod commands;
mod error;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eamac::io::RunConfig;

use commands::Command;
use error::{CliError, CliResult};
use report::{encode, Format, Header};

#[derive(Parser)]
#[command(
    name = "eamac",
    version,
    about = "Entanglement-assisted bosonic MAC: regions, covert planning and validation"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Achievable rate region with phase modulation and heterodyne side information.
    Region(Common),
    /// Small-signal rectangle the region converges to.
    CovertRect(Common),
    /// Covert power budget and, optionally, the load of one operating point.
    Budget(Common),
    /// Two-layer covert code: all throughput terms, pair counts and covertness bounds.
    Plan(Common),
    /// Evaluate one quantity over a parameter grid.
    Sweep(Common),
    /// Cross-check closed forms against their numerical oracles.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output encoding; `csv` for sweeps and `record` otherwise by default.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Seed for stochastic commands, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Report information quantities in bits instead of nats.
    #[arg(long)]
    bits: bool,
    /// Worker threads; all outputs are independent of this value.
    #[arg(long)]
    workers: Option<usize>,
}

impl Sub {
    fn split(self) -> (Command, Common) {
        match self {
            Sub::Region(c) => (Command::Region, c),
            Sub::CovertRect(c) => (Command::CovertRect, c),
            Sub::Budget(c) => (Command::Budget, c),
            Sub::Plan(c) => (Command::Plan, c),
            Sub::Sweep(c) => (Command::Sweep, c),
            Sub::Validate(c) => (Command::Validate, c),
        }
    }
}

fn load(args: &Common) -> CliResult<RunConfig> {
    let text =
        std::fs::read_to_string(&args.config).map_err(|source| CliError::Read { path: args.config.clone(), source })?;
    let mut cfg = RunConfig::from_toml_str(&text)?;
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    cfg.output.bits |= args.bits;
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cmd: Command, args: &Common) -> CliResult<()> {
    if let Some(n) = args.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Numerical(format!("worker pool: {e}")))?;
    }
    let cfg = load(args)?;
    let format = args.format.unwrap_or(if cmd == Command::Sweep { Format::Csv } else { Format::Record });
    let outcome = commands::run(cmd, &cfg)?;
    let config = cfg.flatten()?;
    let header = Header { version: eamac::VERSION, config: &config, bits: cfg.output.bits };
    let text = encode(&outcome.report, format, &header)?;
    match &args.out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Write { path: path.clone(), source })?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Write { path: "<stdout>".into(), source })?;
        }
    }
    outcome.failure.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let (cmd, args) = Cli::parse().command.split();
    match execute(cmd, &args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("eamac {}: {e}", cmd.name());
            ExitCode::from(e.exit_code())
        }
    }
}
