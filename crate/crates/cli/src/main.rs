use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use wsbtrace::pipeline::{run_pipeline, Overrides, PipelineConfig, PipelineError, Stage};
use wsbtrace::synthetic::{generate, write_fixture, SyntheticConfig};
use wsbtrace::DateRange;

/// Ticker mentions and buy/sell signals from forum submissions, backtested against prices.
#[derive(Parser)]
#[command(name = "wsbtrace", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Crawl the submission archive into the configured JSON-lines file.
    Fetch(RunArgs),
    /// Parse, filter and lex the corpus into daily activity counts.
    Ingest(RunArgs),
    /// Select the portfolio and join activity with prices into daily summaries.
    Aggregate(RunArgs),
    /// Evaluate the configured strategies.
    Backtest(RunArgs),
    /// Render the summary tables.
    Report(RunArgs),
    /// Run every stage.
    All(RunArgs),
    /// Write a seeded synthetic project (inputs plus config.json) into a directory.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured date range, e.g. 2019-01-01..2021-04-30.
    #[arg(long)]
    range: Option<DateRange>,
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "AAA,BBB,CCC,DDD,EEE")]
    tickers: Vec<String>,
    #[arg(long, default_value = "2020-01-01..2021-03-31")]
    range: DateRange,
    /// Earlier sub-range for the period comparison tables.
    #[arg(long, default_value = "2020-01-01..2020-12-31")]
    pre_hype: DateRange,
    #[arg(long, default_value_t = 5000)]
    submissions: usize,
}

fn run(stage: Stage, args: &RunArgs) -> Result<(), PipelineError> {
    let mut config = PipelineConfig::load(&args.config)?;
    config.apply(&Overrides {
        range: args.range,
        seed: args.seed,
        out: args.out.clone(),
    });
    let summary = run_pipeline(&config, stage)?;
    for s in &summary.cached {
        println!("{s}: cached");
    }
    for s in &summary.executed {
        println!("{s}: done");
    }
    for p in &summary.written {
        println!("  wrote {}", p.display());
    }
    Ok(())
}

fn synth(args: &SynthArgs) -> std::io::Result<()> {
    let tickers: Vec<&str> = args.tickers.iter().map(String::as_str).collect();
    let data = generate(&SyntheticConfig::new(args.seed, &tickers, args.range, args.submissions));
    fs::create_dir_all(&args.out)?;
    let paths = write_fixture(&data, &args.out)?;
    let pre = args.range.contains_range(&args.pre_hype).then_some(args.pre_hype);
    let config = PipelineConfig::for_fixture(&paths, &args.out, args.range, pre);
    let config_path = args.out.join("config.json");
    fs::write(&config_path, config.to_json())?;
    println!("wrote {}", config_path.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (stage, args) = match &cli.command {
        Command::Fetch(a) => (Stage::Fetch, a),
        Command::Ingest(a) => (Stage::Ingest, a),
        Command::Aggregate(a) => (Stage::Aggregate, a),
        Command::Backtest(a) => (Stage::Backtest, a),
        Command::Report(a) => (Stage::Report, a),
        Command::All(a) => (Stage::All, a),
        Command::Synth(a) => {
            return match synth(a) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    error!("synth: {e}");
                    ExitCode::FAILURE
                }
            };
        }
    };
    match run(stage, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{stage}: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
