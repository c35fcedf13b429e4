//! `cookiesync`: stage-by-stage pipeline from captured traffic to sync
//! graphs, trend regressions and SAR metrics.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or unreadable/invalid input files (exit 1).
    Input(String),
    /// Failure writing outputs or an unexpected internal state (exit 2).
    Internal(String),
}

impl From<cookiesync::Error> for CliError {
    fn from(e: cookiesync::Error) -> Self {
        match e {
            cookiesync::Error::Io(io) => CliError::Internal(io.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "cookiesync",
    about = "Cookie-syncing detection and third-party relation graphs"
)]
#[command(arg_required_else_help = true, propagate_version = true)]
pub struct Cli {
    /// JSON file with pipeline settings; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Directory for all outputs.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert HAR captures and/or native JSONL files into one corpus.
    Ingest(IngestArgs),
    /// Detect user IDs in a corpus.
    Ids(IdsArgs),
    /// Detect cookie-sync events.
    Sync(SyncArgs),
    /// Build one relation graph per measurement.
    Graph(GraphArgs),
    /// Compute graph statistics.
    Stats(StatsArgs),
    /// Classify companies as central, outer, balanced or isolated.
    Classify(ClassifyArgs),
    /// Trend regressions with and without the pre-GDPR measurement.
    Compare(CompareArgs),
    /// Subject-access-request metrics.
    Sar(SarArgs),
    /// Generate a synthetic corpus with ground truth.
    Simulate(SimulateArgs),
    /// Collate per-measurement statistics into the summary tables.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// HAR capture; the profile ID is the file stem unless --profile-id is given.
    #[arg(long = "har")]
    pub har: Vec<PathBuf>,
    /// Native JSONL corpus file.
    #[arg(long = "jsonl")]
    pub jsonl: Vec<PathBuf>,
    /// Profile ID for a single HAR file.
    #[arg(long)]
    pub profile_id: Option<String>,
    #[arg(long, default_value = "M1")]
    pub measurement_id: String,
    #[arg(long, default_value_t = 1)]
    pub ordinal: u32,
    #[arg(long, default_value = "")]
    pub week: String,
    #[arg(long)]
    pub pre_gdpr: bool,
    #[arg(long, default_value = "")]
    pub country: String,
    /// Skip malformed JSONL lines instead of failing.
    #[arg(long)]
    pub lenient: bool,
    #[arg(long)]
    pub max_post_body: Option<usize>,
}

#[derive(Debug, Args)]
pub struct IdsArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub similarity_threshold: Option<f64>,
    #[arg(long)]
    pub min_id_length: Option<usize>,
    /// Characters separating key=value pairs, e.g. "&;,|".
    #[arg(long)]
    pub delimiters: Option<String>,
}

#[derive(Debug, Args)]
pub struct SyncArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub ids: Option<PathBuf>,
    #[arg(long)]
    pub company_db: Option<PathBuf>,
    #[arg(long)]
    pub max_decode_depth: Option<usize>,
    #[arg(long)]
    pub max_inflate_bytes: Option<usize>,
    #[arg(long)]
    pub delimiters: Option<String>,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[arg(long)]
    pub company_db: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EdgeArg {
    Sync,
    Embed,
    Both,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Graph JSON files written by `graph`.
    #[arg(long = "graph", required = true)]
    pub graphs: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub edges: Option<EdgeArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub dense_limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long = "graph", required = true)]
    pub graphs: Vec<PathBuf>,
    #[arg(long)]
    pub damping: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AxisArg {
    Ordinal,
    CalendarWeek,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// stats.json written by `stats`.
    #[arg(long, conflicts_with = "series")]
    pub stats: Option<PathBuf>,
    /// CSV with columns metric,ordinal,value[,pre_gdpr][,calendar_week].
    #[arg(long)]
    pub series: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub x_axis: Option<AxisArg>,
}

#[derive(Debug, Args)]
pub struct SarArgs {
    #[command(subcommand)]
    pub command: SarCommand,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Calendar,
    Business,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum HolidayArg {
    Germany,
    None,
}

#[derive(Debug, Subcommand)]
pub enum SarCommand {
    /// Workload score per case.
    Score {
        #[arg(long)]
        inputs: PathBuf,
    },
    /// Print the deadline for an inquiry date.
    Deadline {
        #[arg(long)]
        sent: chrono::NaiveDate,
        #[arg(long, value_enum, default_value = "calendar")]
        mode: ModeArg,
        #[arg(long, value_enum)]
        holidays: Option<HolidayArg>,
    },
    /// Per-case summary and outcome counts at both deadlines.
    Outcomes {
        #[arg(long)]
        inputs: PathBuf,
        #[arg(long, value_enum)]
        holidays: Option<HolidayArg>,
    },
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario JSON.
    #[arg(long)]
    pub spec: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// stats.json files (one or more).
    #[arg(long = "stats", required = true)]
    pub stats: Vec<PathBuf>,
}

fn version() -> String {
    format!("{} (format {})", env!("CARGO_PKG_VERSION"), cookiesync::FORMAT_VERSION)
}

fn main() -> ExitCode {
    let command = Cli::command().version(version());
    let matches = match command.try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(2)
        }
    }
}
