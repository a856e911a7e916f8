use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use medialean::pipeline::{run_stage, PipelineConfig, RunOptions, Stage};
use medialean::synth::{generate, SharedFixtures};
use medialean::Error;

/// Retweet-network leaning estimation and media audience profiling.
#[derive(Debug, Parser)]
#[command(name = "medialean", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Filter, partition and deduplicate the raw corpus.
    Ingest(StageArgs),
    /// Resolve users to countries.
    Geolocate(StageArgs),
    /// Build per-country retweet networks and their backbones.
    Graph(StageArgs),
    /// Score users by label spreading.
    Spread(StageArgs),
    /// Score bridging users in pairs of countries.
    Bridge(StageArgs),
    /// Map shared URLs to domains and build audience profiles.
    Media(StageArgs),
    /// Assemble the report bundle.
    Report(StageArgs),
    /// Run every stage in order.
    All(StageArgs),
    /// Write the synthetic corpus and fixtures.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct StageArgs {
    /// Pipeline config (TOML, or JSON with a .json extension).
    #[arg(long)]
    config: PathBuf,
    /// Process only this country.
    #[arg(long)]
    country: Option<String>,
    /// Threads for per-country work.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Follow redirects of general-purpose URL shorteners.
    #[arg(long)]
    allow_network: bool,
    /// Overrides the config's rng_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output_dir.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Destination directory.
    #[arg(long)]
    out: PathBuf,
    /// Directory holding substreams.json, the hashtag lexicons and the
    /// public suffix list.
    #[arg(long, default_value = "fixtures")]
    fixtures: PathBuf,
    #[arg(long, default_value_t = medialean::leaning::CV_SHUFFLE_SEED)]
    seed: u64,
}

fn run_pipeline(stage: Stage, args: StageArgs) -> Result<(), Error> {
    let mut cfg = PipelineConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.rng_seed = seed;
    }
    if let Some(out) = args.output_dir {
        cfg.output_dir = out;
    }
    if let Some(c) = &args.country {
        cfg.restrict_to(c)?;
    }
    if args.workers == 0 {
        return Err(Error::Config("--workers must be at least 1".into()));
    }
    let opts = RunOptions {
        workers: args.workers,
        allow_network: args.allow_network,
    };
    run_stage(stage, &cfg, &opts)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Ingest(a) => run_pipeline(Stage::Ingest, a),
        Command::Geolocate(a) => run_pipeline(Stage::Geolocate, a),
        Command::Graph(a) => run_pipeline(Stage::Graph, a),
        Command::Spread(a) => run_pipeline(Stage::Spread, a),
        Command::Bridge(a) => run_pipeline(Stage::Bridge, a),
        Command::Media(a) => run_pipeline(Stage::Media, a),
        Command::Report(a) => run_pipeline(Stage::Report, a),
        Command::All(a) => run_pipeline(Stage::All, a),
        Command::Synth(a) => generate(&a.out, &SharedFixtures::in_dir(&a.fixtures), a.seed).map(|t| {
            log::info!("wrote {} records to {}", t.records_written, a.out.display());
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
