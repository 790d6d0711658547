mod commands;
mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use splitlab_core::rational::{fmt_q, parse_q, Q};
use splitlab_core::Error;

use report::Format;

#[derive(Parser)]
#[command(
    name = "splitlab",
    version,
    about = "Exact experiments with splitting sets, partitions and relational systems"
)]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value = "json", global = true)]
    output: Format,

    /// Largest prefix any set may materialize.
    #[arg(long, global = true, env = "SPLITLAB_HORIZON_CAP")]
    horizon_cap: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Checkpointed density of S inside X and a splitting verdict.
    Density(commands::DensityArgs),
    /// Build a set that defeats a candidate splitter and certify it.
    Adversary(commands::AdversaryArgs),
    /// Witnesses and escapes for the interval relation.
    Preserve(commands::PreserveArgs),
    /// Trade a 1/2 splitter for a rho splitter or back.
    Transform(commands::TransformArgs),
    /// Finite relational systems.
    Relsys(commands::RelsysArgs),
    /// Build an interval partition and check its growth law.
    Partition(commands::PartitionArgs),
    /// Re-check certificates emitted by `adversary`.
    VerifyCert(commands::VerifyArgs),
}

/// Partition options shared by several subcommands.
#[derive(Args, Clone, Debug)]
pub struct PartitionOpts {
    /// `minimal`, `factor:<f>` or `boundaries:<b0,b1,...>`.
    #[arg(long, default_value = "minimal")]
    partition: String,

    /// Intervals materialized up front.
    #[arg(long, default_value_t = 12)]
    intervals: usize,

    /// Round every interval size up to an even number.
    #[arg(long)]
    even_sizes: bool,
}

/// Parses a rational given as `p/q`, an integer or a decimal.
pub fn rational(s: &str) -> Result<Q, String> {
    parse_q(s).map_err(|e| e.to_string())
}

/// Rational strictly inside `(0, 1/2)`.
pub fn small_rational(s: &str) -> Result<Q, String> {
    let x = rational(s)?;
    if x <= Q::from_integer(0.into()) || x >= Q::new(1.into(), 2.into()) {
        return Err(format!("{} must lie in (0, 1/2)", fmt_q(&x)));
    }
    Ok(x)
}

/// Rational strictly inside `(0, 1)`.
pub fn unit_rational(s: &str) -> Result<Q, String> {
    let x = rational(s)?;
    if x <= Q::from_integer(0.into()) || x >= Q::from_integer(1.into()) {
        return Err(format!("{} must lie in (0, 1)", fmt_q(&x)));
    }
    Ok(x)
}

/// Exit status for an error: 1 when a checked property failed, 2 for bad input.
fn exit_status(e: &Error) -> u8 {
    match e {
        Error::Certificate(_)
        | Error::Residual { .. }
        | Error::OracleExhausted { .. }
        | Error::NoEscape(_)
        | Error::SearchExhausted(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(cap) = cli.horizon_cap {
        // Read once by the set engine on first use.
        std::env::set_var("SPLITLAB_HORIZON_CAP", cap.to_string());
    }
    let result = match &cli.command {
        Command::Density(a) => commands::density(a),
        Command::Adversary(a) => commands::adversary(a),
        Command::Preserve(a) => commands::preserve(a),
        Command::Transform(a) => commands::transform(a),
        Command::Relsys(a) => commands::relsys(a),
        Command::Partition(a) => commands::partition(a),
        Command::VerifyCert(a) => commands::verify_cert(a),
    };
    match result {
        Ok(report) => {
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            if let Err(e) = report.write(cli.output, &mut out).and_then(|_| out.flush()) {
                if e.kind() == std::io::ErrorKind::BrokenPipe {
                    return ExitCode::SUCCESS;
                }
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            ExitCode::from(if report.ok { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_status(&e))
        }
    }
}
