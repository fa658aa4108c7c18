use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use slhnet_cli::commands::{
    cmd_check, cmd_filter, cmd_heisenberg, cmd_reduce, cmd_simulate, CliError, CommandOptions,
    OutputFormat,
};

/// Reduce and simulate open quantum networks described by netlists.
#[derive(Parser)]
#[command(name = "slhnet", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        }
    }
}

#[derive(clap::Args, Clone, Default)]
struct CommonFlags {
    /// Integration step.
    #[arg(long)]
    dt: Option<f64>,
    /// Time horizon.
    #[arg(long = "T")]
    t_final: Option<f64>,
    /// Observable expression (repeatable), e.g. `--obs "a(c1)"`.
    #[arg(long = "obs")]
    obs: Vec<String>,
    /// Measured output channel (0-based).
    #[arg(long)]
    channel: Option<usize>,
    /// Base RNG seed; run `k` uses `seed + k`.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of independent filter runs to average.
    #[arg(long)]
    runs: Option<usize>,
    /// Validation tolerance for unitarity/self-adjointness checks.
    #[arg(long)]
    tol: Option<f64>,
    /// Write the output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format (commands default to their natural format).
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce the network to a single (S, L, H) triple as JSON.
    Reduce {
        file: PathBuf,
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Heisenberg-equation coefficients of an observable as JSON.
    Heisenberg {
        file: PathBuf,
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Integrate the master equation and emit a trajectory CSV.
    Simulate {
        file: PathBuf,
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Simulate homodyne records and run the unnormalized quantum filter.
    Filter {
        file: PathBuf,
        #[command(flatten)]
        flags: CommonFlags,
        /// Filter against an existing record CSV instead of simulating one.
        #[arg(long)]
        record: Option<PathBuf>,
        /// Write the (first) simulated record CSV here.
        #[arg(long)]
        record_out: Option<PathBuf>,
    },
    /// Parse, reduce and verify invariants; report PASS/FAIL.
    Check {
        file: PathBuf,
        #[command(flatten)]
        flags: CommonFlags,
    },
}

fn options(flags: &CommonFlags) -> CommandOptions {
    CommandOptions {
        dt: flags.dt,
        t_final: flags.t_final,
        seed: flags.seed,
        channel: flags.channel,
        runs: flags.runs,
        tol: flags.tol,
        obs: flags.obs.clone(),
        format: flags.format.map(Into::into),
        record_in: None,
        record_out: None,
    }
}

fn read_file(path: &PathBuf) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

fn write_output(out: &Option<PathBuf>, payload: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, payload)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{payload}");
            Ok(())
        }
    }
}

fn run() -> Result<ExitCode, CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Reduce { file, flags } => {
            let payload = cmd_reduce(&read_file(&file)?, &options(&flags))?;
            write_output(&flags.out, &(payload + "\n"))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Heisenberg { file, flags } => {
            let payload = cmd_heisenberg(&read_file(&file)?, &options(&flags))?;
            write_output(&flags.out, &(payload + "\n"))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate { file, flags } => {
            let payload = cmd_simulate(&read_file(&file)?, &options(&flags))?;
            write_output(&flags.out, &payload)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Filter {
            file,
            flags,
            record,
            record_out,
        } => {
            let mut opts = options(&flags);
            if let Some(path) = &record {
                opts.record_in = Some(read_file(path)?);
            }
            opts.record_out = record_out.as_ref().map(|p| p.display().to_string());
            let output = cmd_filter(&read_file(&file)?, &opts)?;
            if let (Some(path), Some(csv)) = (&record_out, &output.record_csv) {
                fs::write(path, csv).map_err(|e| {
                    CliError::usage(format!("cannot write {}: {e}", path.display()))
                })?;
            }
            write_output(&flags.out, &output.payload)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { file, flags } => {
            let (report, ok) = cmd_check(&read_file(&file)?, &options(&flags))?;
            write_output(&flags.out, &report)?;
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            match &err {
                CliError::Diagnostics(diags) => {
                    for d in diags {
                        eprintln!("{d}");
                    }
                }
                CliError::Numerical(msg) => eprintln!("numerical failure: {msg}"),
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
