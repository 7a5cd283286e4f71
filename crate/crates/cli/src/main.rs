mod commands;
mod inputs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use personlink::eval::{Average, ReportFormat};
use personlink::linker::DEFAULT_LENGTH_LIMIT;

#[derive(Parser, Debug)]
#[command(
    name = "personlink",
    version,
    about = "Person mention detection and linking for biographical pages"
)]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Detect person mentions and write them per document.
    Detect(DetectArgs),
    /// Detect, resolve pronouns, link and score against gold.
    Run(RunArgs),
    /// Score prediction TSVs against gold TSVs.
    Eval(EvalArgs),
    /// Inter-annotator agreement between two gold directories.
    Iaa(IaaArgs),
    /// Inspect or clear the response cache.
    Cache(CacheArgs),
}

#[derive(Args, Debug, Clone)]
struct InputArgs {
    /// Directory of <Title>.txt pages and <Title>.tsv gold files.
    #[arg(long)]
    corpus: PathBuf,
    /// Directory of <Title>.xml profiles.
    #[arg(long)]
    profiles: PathBuf,
    /// Directory of <Title>.json standoff annotations. Without it the
    /// built-in heuristic annotator is used.
    #[arg(long)]
    standoff: Option<PathBuf>,
    /// Title list override, one title per line.
    #[arg(long)]
    titles: Option<PathBuf>,
    /// Pronoun lexicon override, `set:word` per line.
    #[arg(long)]
    pronouns: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DetectArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Output directory for <Title>.mentions.json; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum LinkerArg {
    Wikisearch,
    Tagme,
    Baseline,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ModeArg {
    Online,
    Offline,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum AverageArg {
    Macro,
    Micro,
    Both,
}

impl AverageArg {
    fn modes(self) -> Vec<Average> {
        match self {
            AverageArg::Macro => vec![Average::Macro],
            AverageArg::Micro => vec![Average::Micro],
            AverageArg::Both => vec![Average::Micro, Average::Macro],
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ReportArg {
    Text,
    Json,
    Tsv,
}

impl From<ReportArg> for ReportFormat {
    fn from(r: ReportArg) -> Self {
        match r {
            ReportArg::Text => ReportFormat::Text,
            ReportArg::Json => ReportFormat::Json,
            ReportArg::Tsv => ReportFormat::Tsv,
        }
    }
}

#[derive(Args, Debug, Clone, Copy)]
struct ReportArgs {
    #[arg(long, value_enum, default_value = "both")]
    average: AverageArg,
    #[arg(long, value_enum, default_value = "text")]
    report: ReportArg,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value = "wikisearch")]
    linker: LinkerArg,
    #[arg(long, value_enum, default_value = "offline")]
    mode: ModeArg,
    /// Directory holding wikisearch.json and tagme.json (offline mode).
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Documents longer than this many characters go to TagMe per sentence.
    #[arg(long, default_value_t = DEFAULT_LENGTH_LIMIT as u64, value_parser = clap::value_parser!(u64).range(1..))]
    length_limit: u64,
    #[command(flatten)]
    report: ReportArgs,
    /// Response cache for online mode.
    #[arg(long, env = "PERSONLINK_CACHE", default_value = ".personlink-cache")]
    cache: PathBuf,
    /// Output directory for predictions/<Title>.tsv and the report file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = personlink::linker::WikiSearchHttpClient::DEFAULT_API)]
    wikisearch_url: String,
    #[arg(long, default_value = personlink::linker::TagmeHttpClient::DEFAULT_ENDPOINT)]
    tagme_url: String,
    /// Request rate limit for online clients.
    #[arg(long, default_value_t = 5.0)]
    rps: f64,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Directory of gold <Title>.tsv files.
    #[arg(long)]
    gold: PathBuf,
    /// Directory of predicted <Title>.tsv files.
    #[arg(long)]
    pred: PathBuf,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args, Debug)]
struct IaaArgs {
    /// Reference annotator directory.
    #[arg(long)]
    gold_a: PathBuf,
    #[arg(long)]
    gold_b: PathBuf,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum CacheAction {
    List,
    Clear,
    Stats,
}

#[derive(Args, Debug)]
struct CacheArgs {
    action: CacheAction,
    #[arg(long, env = "PERSONLINK_CACHE", default_value = ".personlink-cache")]
    cache: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let result = match cli.command {
        Command::Detect(a) => commands::detect(&a, workers),
        Command::Run(a) => commands::run(&a, workers),
        Command::Eval(a) => commands::eval(&a, workers),
        Command::Iaa(a) => commands::iaa(&a, workers),
        Command::Cache(a) => commands::cache(&a),
    };
    match result {
        Ok(diagnostics) if diagnostics.is_empty() => ExitCode::SUCCESS,
        Ok(diagnostics) => {
            for d in diagnostics {
                eprintln!("{d}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
