//! Command-line surface of the secop workbench: JSON reports, SVG output and
//! the one-shot verification command.

pub mod config;
pub mod report;
pub mod svg;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use report::run;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] secop::Error),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("unknown subdivision id {0} (there are {1})")]
    UnknownId(usize, usize),
    #[error("{0}")]
    Property(String),
    #[error("cannot write {0}: {1}")]
    Io(PathBuf, String),
}

pub mod exit {
    pub const OK: i32 = 0;
    pub const PROPERTY: i32 = 1;
    pub const INVALID: i32 = 2;
    pub const MALFORMED: i32 = 3;
    pub const NON_GENERIC: i32 = 4;
    pub const BUDGET: i32 = 5;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use secop::Error as E;
        match self {
            CliError::Core(E::BudgetExceeded(_)) => exit::BUDGET,
            CliError::Core(E::NonGenericPerturbation { .. }) => exit::NON_GENERIC,
            CliError::Core(E::Parse(_)) => exit::MALFORMED,
            CliError::Core(E::DSquaredNonzero) => exit::PROPERTY,
            CliError::Core(_) => exit::INVALID,
            CliError::Malformed(_) | CliError::UnknownId(..) | CliError::Io(..) => exit::MALFORMED,
            CliError::Property(_) => exit::PROPERTY,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "secop", version, about = "Subdivisions, regularity and the secondary operad of planar point configurations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Configuration file (JSON).
    pub path: PathBuf,
    /// Region boundary as comma-separated labels, counterclockwise.
    #[arg(long, value_delimiter = ',')]
    pub region: Option<Vec<usize>>,
    /// Node budget for subdivision enumeration.
    #[arg(long)]
    pub budget: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that the points form a valid configuration.
    Validate {
        path: PathBuf,
    },
    /// List every subdivision of the region.
    Enumerate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        max_codim: Option<i64>,
    },
    /// Classify subdivisions as regular, perturbedly regular or neither.
    Classify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_codim: Option<i64>,
    },
    /// Differential of one subdivision, or the whole chain complex.
    Differential {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        subdivision: Option<usize>,
    },
    /// Run every consistency check and print the full report.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        /// Negate one entry of the sign table (fault injection).
        #[arg(long)]
        flip_sign: Option<usize>,
    },
    /// Secondary cone of a subdivision of the convex hull.
    SecondaryCone {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        subdivision: usize,
    },
    /// Draw a subdivision or its affine fan as SVG.
    Render {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with = "fan", required_unless_present = "fan")]
        subdivision: Option<usize>,
        #[arg(long)]
        fan: Option<usize>,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
}

/// What a command produced: text for standard output and an exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Outcome {
    pub fn ok(stdout: String) -> Self {
        Outcome { stdout, stderr: String::new(), code: exit::OK }
    }

    pub fn error(e: &CliError) -> Self {
        Outcome { stdout: String::new(), stderr: format!("error: {e}\n"), code: e.exit_code() }
    }
}

/// Parses arguments and runs; clap usage errors count as malformed input.
pub fn main_with_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli.command),
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => exit::OK,
                _ => exit::MALFORMED,
            };
            let text = e.render().to_string();
            if code == exit::OK {
                Outcome::ok(text)
            } else {
                Outcome { stdout: String::new(), stderr: text, code }
            }
        }
    }
}
