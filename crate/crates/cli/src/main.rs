//! `affekt`: ingest, classify, aggregate and serve Bengali news emotion data.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use affekt_api::mock_server::{mock_serve, MockServerConfig};
use affekt_core::ingest::{ingest, read_corpus, write_corpus, InputFormat};
use affekt_core::metrics::{compute_metrics, write_artifacts, MetricsConfig};
use affekt_core::orchestrator::{
    parse_endpoints, read_annotations, read_manifest, resume, run_batch, MockFault, RunConfig, RunControl,
    RunOutcome, TransportConfig,
};
use affekt_core::store::{Store, METRICS_DIR};
use affekt_core::synthetic::{populate_store, synthetic_corpus};
use affekt_core::{Exec, IngestConfig, Taxonomy};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "affekt", version, about = "Emotion analytics for Bengali news headlines")]
struct Cli {
    /// Run data-parallel stages on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean a raw JSONL or CSV export into a corpus directory.
    Ingest(IngestArgs),
    /// Annotate a corpus against one or more model endpoints.
    Classify(ClassifyArgs),
    /// Compute aggregate artifacts for a run.
    Metrics(MetricsArgs),
    /// Serve the /v1 API over a store.
    Serve(ServeArgs),
    /// Run an offline mock of the generate endpoint.
    MockServe(MockServeArgs),
    /// Build a store from a synthetic corpus classified by mocks.
    Demo(DemoArgs),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    /// `jsonl` or `csv`; guessed from the extension when omitted.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.7)]
    min_language_ratio: f64,
    #[arg(long)]
    no_language_filter: bool,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long, required_unless_present = "resume")]
    corpus: Option<PathBuf>,
    /// Comma-separated `http://host:port` or `mock://name?latency_ms=..` URLs.
    #[arg(long, env = "AFFEKT_ENDPOINTS")]
    endpoints: Option<String>,
    /// Use this many in-process mock endpoints instead.
    #[arg(long, conflicts_with = "endpoints")]
    mock: Option<usize>,
    #[arg(long, default_value_t = 6)]
    workers: usize,
    /// Directory that holds run directories.
    #[arg(long, default_value = "runs")]
    run_dir: PathBuf,
    /// Continue an existing run directory.
    #[arg(long)]
    resume: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    checkpoint_every: u64,
    #[arg(long, default_value = "gemma3:4b")]
    model: String,
    #[arg(long, default_value_t = 30)]
    timeout_secs: u64,
    #[arg(long, default_value = "/api/generate")]
    route: String,
}

#[derive(Args)]
struct MetricsArgs {
    /// A run directory.
    #[arg(long)]
    run: PathBuf,
    /// Defaults to the corpus recorded in the run manifest.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Defaults to `<run>/metrics`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = ".")]
    store: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
}

#[derive(Args)]
struct MockServeArgs {
    #[arg(long, default_value = "127.0.0.1:11434")]
    bind: SocketAddr,
    #[arg(long, default_value_t = 0)]
    latency_ms: u64,
    /// none, timeout, malformed or drop.
    #[arg(long, default_value = "none")]
    fault: String,
    /// Handle one request at a time.
    #[arg(long)]
    serial: bool,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long)]
    store: PathBuf,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

fn exec(sequential: bool) -> Exec {
    if sequential {
        Exec::Sequential
    } else {
        Exec::default()
    }
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("output serializes"));
}

fn run_ingest(args: IngestArgs, exec: Exec) -> Result<()> {
    let format = match &args.format {
        Some(f) => f.parse::<InputFormat>()?,
        None => {
            let ext = args.input.extension().and_then(|e| e.to_str()).unwrap_or("jsonl");
            ext.parse::<InputFormat>()?
        }
    };
    let config = IngestConfig {
        min_language_ratio: (!args.no_language_filter).then_some(args.min_language_ratio),
        exec,
        ..IngestConfig::default()
    };
    let (corpus, report) = ingest(&args.input, format, &config)?;
    let path = write_corpus(&args.out, &corpus, &report)?;
    tracing::info!(corpus = %path.display(), kept = report.kept_count, "ingest done");
    print_json(&report);
    Ok(())
}

fn run_classify(args: ClassifyArgs) -> Result<RunOutcome> {
    let transport = TransportConfig {
        route: args.route.clone(),
        timeout: Duration::from_secs(args.timeout_secs),
    };
    let list = match (args.mock, &args.endpoints) {
        (Some(n), _) => (1..=n).map(|i| format!("mock://mock{i}")).collect::<Vec<_>>().join(","),
        (None, Some(list)) => list.clone(),
        (None, None) => bail!("no endpoints: pass --endpoints, set AFFEKT_ENDPOINTS or use --mock"),
    };
    let endpoints = parse_endpoints(&list, &transport)?;
    let config = RunConfig {
        workers: args.workers,
        checkpoint_every: args.checkpoint_every,
        model_id: args.model,
        ..RunConfig::default()
    };
    let control = RunControl::new();
    let outcome = match (&args.resume, &args.corpus) {
        (Some(dir), _) => resume(dir, endpoints, &config, &control)?,
        (None, Some(corpus)) => run_batch(corpus, &args.run_dir, endpoints, &config, &control)?,
        (None, None) => unreachable!("clap requires --corpus without --resume"),
    };
    Ok(outcome)
}

fn run_metrics(args: MetricsArgs, exec: Exec) -> Result<PathBuf> {
    let manifest = read_manifest(&args.run)?;
    let corpus_path = args.corpus.unwrap_or(manifest.corpus_path);
    let corpus = read_corpus(&corpus_path).with_context(|| format!("reading {}", corpus_path.display()))?;
    let annotations = read_annotations(&args.run)?;
    let config = MetricsConfig {
        exec,
        matching: affekt_core::metrics::MatchConfig {
            exec,
            ..Default::default()
        },
        ..MetricsConfig::default()
    };
    let artifacts = compute_metrics(&corpus, &annotations, &Taxonomy::default(), &config)?;
    let out = args.out.unwrap_or_else(|| args.run.join(METRICS_DIR));
    write_artifacts(&out, &artifacts)?;
    Ok(out)
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    Ok(tokio::runtime::Builder::new_multi_thread().enable_all().build()?)
}

fn run_serve(args: ServeArgs) -> Result<()> {
    let store = Store::open(&args.store)?;
    for run in store.runs() {
        tracing::info!(run = %run.run_id, status = ?run.status, problem = ?run.problem, "run");
    }
    if store.current().is_none() {
        tracing::warn!(store = %args.store.display(), "no complete run; data routes will answer 404");
    }
    runtime()?.block_on(affekt_api::serve(Arc::new(store), args.bind))?;
    Ok(())
}

fn run_mock_serve(args: MockServeArgs) -> Result<()> {
    let fault: MockFault = args.fault.parse().map_err(anyhow::Error::msg)?;
    let config = MockServerConfig {
        latency: Duration::from_millis(args.latency_ms),
        fault,
        serial: args.serial,
        ..MockServerConfig::default()
    };
    runtime()?.block_on(mock_serve(args.bind, config, |addr| println!("listening on http://{addr}")))?;
    Ok(())
}

fn run_demo(args: DemoArgs) -> Result<()> {
    let run_dir = populate_store(&args.store, &synthetic_corpus(args.n, args.seed)).map_err(|e| anyhow::anyhow!(e))?;
    println!("{}", run_dir.display());
    Ok(())
}

fn report_outcome(outcome: &RunOutcome) {
    print_json(&outcome.report);
    eprintln!("run directory: {}", outcome.run_dir.display());
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let exec = exec(cli.sequential);
    match cli.command {
        Command::Ingest(args) => run_ingest(args, exec),
        Command::Classify(args) => {
            let outcome = run_classify(args)?;
            report_outcome(&outcome);
            if !outcome.complete {
                std::process::exit(2);
            }
            Ok(())
        }
        Command::Metrics(args) => {
            let out = run_metrics(args, exec)?;
            println!("{}", out.display());
            Ok(())
        }
        Command::Serve(args) => run_serve(args),
        Command::MockServe(args) => run_mock_serve(args),
        Command::Demo(args) => run_demo(args),
    }
}
