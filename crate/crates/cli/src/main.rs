//! `cmfb`: design, verify and run IIR cosine-modulated filter banks.
//!
//! Exit codes: 0 success, 1 I/O or format error, 2 infeasible design,
//! 3 verification failure (or a coefficient file that breaks an invariant),
//! 64 usage error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cmfb::io::SignalFormat;
use cmfb::Error;

pub const EXIT_IO: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_VERIFY: u8 = 3;
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "cmfb",
    version,
    about = "IIR cosine-modulated filter banks with perfect reconstruction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Design a prototype and write its coefficient file.
    Design(DesignArgs),
    /// Check perfect reconstruction and report gains and frame bounds.
    Verify(VerifyArgs),
    /// Per-channel magnitude responses as CSV.
    Response(ResponseArgs),
    /// Stream a signal through the analysis and/or synthesis bank.
    Process(ProcessArgs),
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// Number of channels M.
    #[arg(long, short = 'm')]
    pub channels: usize,
    /// Denominator order N.
    #[arg(long, short = 'n', default_value_t = 3)]
    pub poles: usize,
    /// Peak-to-peak passband ripple in dB.
    #[arg(long, default_value_t = 0.05)]
    pub ripple_db: f64,
    /// Passband edge relative to Nyquist [default: 1/(4M)].
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Stopband edge in rad/sample [default: 3*pi/(2M)].
    #[arg(long)]
    pub stopband_edge: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 60_000)]
    pub max_iterations: usize,
    /// Coefficient file to write.
    #[arg(long, short = 'o')]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Coefficient file.
    pub coefficients: PathBuf,
    /// Frequency points on [0, pi] for the frame bounds.
    #[arg(long, env = "CMFB_GRID", default_value_t = cmfb::frame::DEFAULT_GRID)]
    pub grid: usize,
    /// Largest accepted reconstruction residual.
    #[arg(long, default_value_t = cmfb::engine::PR_TOLERANCE)]
    pub tolerance: f64,
    /// Stopband edge in rad/sample for the attenuation figure [default: 3*pi/(2M)].
    #[arg(long)]
    pub stopband_edge: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ResponseArgs {
    /// Coefficient file.
    pub coefficients: PathBuf,
    #[arg(long, env = "CMFB_GRID", default_value_t = cmfb::frame::DEFAULT_GRID)]
    pub grid: usize,
    /// Append the prototype magnitude as a last column.
    #[arg(long)]
    pub prototype: bool,
    /// CSV destination; standard output when absent.
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Signal in, interleaved subband file out.
    Analyze,
    /// Subband file in, signal out.
    Synthesize,
    /// Signal in, reconstructed signal out.
    Roundtrip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Binary,
}

impl From<Format> for SignalFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => SignalFormat::Text,
            Format::Binary => SignalFormat::Binary,
        }
    }
}

#[derive(Debug, Args)]
pub struct ProcessArgs {
    pub mode: Mode,
    /// Coefficient file.
    pub coefficients: PathBuf,
    #[arg(long, short = 'i')]
    pub input: PathBuf,
    #[arg(long, short = 'o')]
    pub output: PathBuf,
    /// Encoding of plain signal files (subband files are always binary).
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Largest accepted relative error for `roundtrip`.
    #[arg(long, default_value_t = cmfb::engine::PR_TOLERANCE)]
    pub tolerance: f64,
}

/// Failure of a command, carrying the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_)
            | Error::Parse(_)
            | Error::BlockSize { .. }
            | Error::ShapeMismatch(_)
            | Error::LengthTooShort { .. } => EXIT_IO,
            Error::InfeasibleSpec { .. } => EXIT_INFEASIBLE,
            Error::InvalidSpec(_) => EXIT_USAGE,
            _ => EXIT_VERIFY,
        };
        Failure::new(code, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Design(args) => commands::design(&args),
        Command::Verify(args) => commands::verify(&args),
        Command::Response(args) => commands::response(&args),
        Command::Process(args) => commands::process(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("cmfb: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
