use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{anyhow, Context};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use txparallax::analysis::{CliqueSearch, DEFAULT_CLIQUE_BUDGET};
use txparallax::ingest::{
    day_ranges_from_blocks, emit_trace_file, fetch_blocks, parse_day_ranges_csv, parse_price_csv, plan_samples,
    read_trace_file, RpcClient, RpcConfig, RpcError, SamplePlan, RPC_URL_ENV,
};
use txparallax::par::Execution;
use txparallax::report::{
    emit_report, join_prices, price_correlation, read_records_csv, write_price_days_csv, write_records_csv, Metric,
    MetricSeries, ReportFormat, Window,
};
use txparallax::synth::{generate_blocks, WorkloadProfile};
use txparallax::{
    analyze_blocks, AnalysisOptions, BlockTrace, ConflictMode, DisentangleConfig, PipelineOptions, ScheduleMode,
};

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_RPC: u8 = 3;

/// Conflict graphs and parallelizability bounds for EVM blocks.
#[derive(Debug, Parser)]
#[command(name = "txparallax", version)]
struct Cli {
    /// Worker threads for analysis (default: available processors).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build graphs, compute bounds per block or batch and aggregate them.
    Analyze(AnalyzeArgs),
    /// Pick block numbers to analyse, a fixed number per day.
    Sample(SampleArgs),
    /// Download block traces from an archive node into a trace file.
    Fetch(FetchArgs),
    /// Write synthetic blocks to a trace file.
    Synth(SynthArgs),
    /// Aggregate a per-block metrics CSV, optionally joined with prices.
    Aggregate(AggregateArgs),
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false)]
struct Source {
    /// Trace file (newline-delimited JSON).
    #[arg(long, group = "source")]
    traces: Option<PathBuf>,

    /// Synthetic preset: pre-defi, defi or recent.
    #[arg(long, group = "source")]
    synth: Option<String>,

    /// Blocks to fetch over RPC, e.g. `100,200-210` or `@numbers.txt`.
    #[arg(long, group = "source")]
    rpc_blocks: Option<String>,
}

#[derive(Debug, Args)]
struct SynthOptions {
    /// Number of synthetic blocks.
    #[arg(long, default_value_t = 100)]
    blocks: u64,

    /// First synthetic block number (default: the preset's anchor block).
    #[arg(long)]
    first_block: Option<u64>,

    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct RpcOptions {
    /// JSON-RPC endpoint.
    #[arg(long = "rpc", env = RPC_URL_ENV)]
    rpc_url: Option<String>,

    /// Requests in flight.
    #[arg(long, default_value_t = 8)]
    concurrency: usize,
}

#[derive(Debug, Args)]
struct ReportOptions {
    /// Aggregation window: daily or monthly.
    #[arg(long, default_value = "daily")]
    window: String,

    /// Aggregate report format: csv or json.
    #[arg(long, default_value = "csv")]
    format: String,

    /// Percentiles reported per window.
    #[arg(long, value_delimiter = ',', default_value = "90,99")]
    percentiles: Vec<f64>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    source: Source,

    #[command(flatten)]
    synth: SynthOptions,

    #[command(flatten)]
    rpc: RpcOptions,

    /// write-aware or any-touch.
    #[arg(long, default_value = "write-aware")]
    conflict_mode: String,

    /// Disentangle config JSON, or `default` for the bundled one.
    #[arg(long)]
    disentangle: Option<String>,

    /// Consecutive blocks analysed as one.
    #[arg(long, default_value_t = 1)]
    batch_size: usize,

    /// Seconds allowed for each exact clique search; 0 means unlimited.
    #[arg(long, default_value_t = DEFAULT_CLIQUE_BUDGET.as_secs_f64())]
    clique_budget: f64,

    /// Use the schedule as the upper bound instead of searching for cliques.
    #[arg(long)]
    skip_clique: bool,

    /// earliest-start or barrier-rounds.
    #[arg(long, default_value = "earliest-start")]
    schedule_mode: String,

    /// Per-block (or per-batch) metrics CSV; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Aggregate report.
    #[arg(long)]
    out_aggregate: Option<PathBuf>,

    #[command(flatten)]
    report: ReportOptions,
}

#[derive(Debug, Args)]
#[group(id = "ranges", required = true, multiple = false)]
struct RangeSource {
    /// CSV with `date,first_block,last_block` rows.
    #[arg(long, group = "ranges")]
    day_ranges: Option<PathBuf>,

    /// Trace file whose block timestamps define the days.
    #[arg(long, group = "ranges")]
    traces: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[command(flatten)]
    ranges: RangeSource,

    /// First day, YYYY-MM-DD (default: first known day).
    #[arg(long)]
    from: Option<NaiveDate>,

    /// Last day, YYYY-MM-DD (default: last known day).
    #[arg(long)]
    to: Option<NaiveDate>,

    #[arg(long, default_value_t = txparallax::ingest::sample::DEFAULT_PER_DAY)]
    per_day: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// One block number per line; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FetchArgs {
    /// Block numbers, e.g. `100,200-210` or `@numbers.txt`.
    #[arg(long)]
    blocks: String,

    #[command(flatten)]
    rpc: RpcOptions,

    /// Trace file; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// pre-defi, defi or recent.
    #[arg(long, default_value = "defi")]
    preset: String,

    #[command(flatten)]
    synth: SynthOptions,

    /// Trace file; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AggregateArgs {
    /// Per-block metrics CSV written by `analyze`.
    #[arg(long)]
    records: PathBuf,

    #[command(flatten)]
    report: ReportOptions,

    /// Aggregate report; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Daily price CSV (`date,open,high,low,close`) to join with.
    #[arg(long)]
    prices: Option<PathBuf>,

    /// Metric whose daily mean is joined with prices.
    #[arg(long, default_value = "tx_count", requires = "prices")]
    price_metric: String,

    /// Joined per-day CSV.
    #[arg(long, requires = "prices")]
    out_prices: Option<PathBuf>,
}

/// Failure with the exit status it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        error: error.into(),
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Failure {
        let rpc = error.chain().any(|e| {
            e.downcast_ref::<RpcError>().is_some()
                || matches!(e.downcast_ref::<txparallax::Error>(), Some(txparallax::Error::Rpc(_)))
        });
        Failure {
            code: if rpc { EXIT_RPC } else { EXIT_INPUT },
            error,
        }
    }
}

impl From<txparallax::Error> for Failure {
    fn from(error: txparallax::Error) -> Failure {
        anyhow::Error::from(error).into()
    }
}

type CliResult<T = ()> = Result<T, Failure>;

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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> CliResult {
    configure_workers(cli.workers)?;
    match cli.command {
        Command::Analyze(args) => analyze(args),
        Command::Sample(args) => sample(args),
        Command::Fetch(args) => fetch(args),
        Command::Synth(args) => synth(args),
        Command::Aggregate(args) => aggregate(args),
    }
}

#[cfg(feature = "parallel")]
fn configure_workers(workers: Option<usize>) -> CliResult {
    if let Some(n) = workers {
        if n == 0 {
            return Err(usage(anyhow!("--workers must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(anyhow!("cannot size worker pool: {e}")))?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_workers(workers: Option<usize>) -> CliResult {
    if workers.is_some_and(|n| n > 1) {
        eprintln!("note: built without the `parallel` feature; running on one thread");
    }
    Ok(())
}

fn parse_flag<T>(flag: &str, value: &str) -> CliResult<T>
where
    T: std::str::FromStr<Err = txparallax::Error>,
{
    value.parse().map_err(|e| usage(anyhow!("--{flag}: {e}")))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

/// Writes through `f` to `path`, or to standard output.
fn write_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> txparallax::Result<()>) -> anyhow::Result<()> {
    match path {
        Some(path) => {
            let mut w = create(path)?;
            f(&mut w).with_context(|| format!("writing {}", path.display()))?;
            w.flush().with_context(|| format!("writing {}", path.display()))?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            f(&mut w).context("writing to standard output")?;
            w.flush()?;
        }
    }
    Ok(())
}

/// `100,200-210` or `@file` with one number or range per line.
fn parse_block_list(list: &str) -> CliResult<Vec<u64>> {
    let text = match list.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path)
            .with_context(|| format!("cannot read block list {path}"))
            .map_err(Failure::from)?,
        None => list.to_string(),
    };
    let mut out = Vec::new();
    for item in text.split([',', '\n']).map(str::trim).filter(|s| !s.is_empty()) {
        let bad = || usage(anyhow!("bad block number or range {item:?}"));
        match item.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (
                    a.trim().parse().map_err(|_| bad())?,
                    b.trim().parse().map_err(|_| bad())?,
                );
                if b < a {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(item.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(usage(anyhow!("empty block list")));
    }
    Ok(out)
}

fn rpc_client(opts: &RpcOptions) -> CliResult<RpcClient> {
    let url = opts
        .rpc_url
        .clone()
        .ok_or_else(|| usage(anyhow!("no RPC endpoint: pass --rpc or set {RPC_URL_ENV}")))?;
    Ok(RpcClient::new(url, RpcConfig::default()))
}

fn fetch_all(opts: &RpcOptions, numbers: &[u64]) -> CliResult<Vec<BlockTrace>> {
    let client = rpc_client(opts)?;
    let mut sorted = numbers.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    eprintln!("fetching {} blocks from {}", sorted.len(), client.endpoint());
    let mut blocks = Vec::with_capacity(sorted.len());
    for (number, result) in sorted.iter().zip(fetch_blocks(&client, &sorted, opts.concurrency)) {
        blocks.push(result.with_context(|| format!("fetching block {number}"))?);
    }
    Ok(blocks)
}

fn synth_blocks(preset: &str, opts: &SynthOptions) -> CliResult<Vec<BlockTrace>> {
    let profile = parse_flag::<WorkloadProfile>("synth", preset)?.with_seed(opts.seed);
    let first = opts.first_block.unwrap_or(profile.anchor_block);
    let numbers: Vec<u64> = (first..first.saturating_add(opts.blocks)).collect();
    eprintln!("generating {} {preset} blocks from {first}", numbers.len());
    generate_blocks(&profile, &numbers, Execution::Parallel).map_err(|e| usage(anyhow!(e)))
}

fn load_blocks(args: &AnalyzeArgs) -> CliResult<Vec<BlockTrace>> {
    let s = &args.source;
    if let Some(path) = &s.traces {
        let blocks = read_trace_file(path).with_context(|| format!("reading {}", path.display()))?;
        eprintln!("read {} blocks from {}", blocks.len(), path.display());
        Ok(blocks)
    } else if let Some(preset) = &s.synth {
        synth_blocks(preset, &args.synth)
    } else if let Some(list) = &s.rpc_blocks {
        fetch_all(&args.rpc, &parse_block_list(list)?)
    } else {
        Err(usage(anyhow!("no input source")))
    }
}

struct Report {
    window: Window,
    format: ReportFormat,
    percentiles: Vec<f64>,
}

fn report_options(opts: &ReportOptions) -> CliResult<Report> {
    if let Some(p) = opts.percentiles.iter().find(|p| !(0.0..=100.0).contains(*p)) {
        return Err(usage(anyhow!("--percentiles: {p} is outside 0-100")));
    }
    Ok(Report {
        window: parse_flag("window", &opts.window)?,
        format: parse_flag("format", &opts.format)?,
        percentiles: opts.percentiles.clone(),
    })
}

fn analyze(args: AnalyzeArgs) -> CliResult {
    if args.batch_size == 0 {
        return Err(usage(anyhow!("--batch-size must be at least 1")));
    }
    if !(args.clique_budget >= 0.0 && args.clique_budget.is_finite()) {
        return Err(usage(anyhow!(
            "--clique-budget must be a non-negative number of seconds"
        )));
    }
    let report = report_options(&args.report)?;
    let disentangle = match args.disentangle.as_deref() {
        None => None,
        Some("default") => Some(DisentangleConfig::default()),
        Some(path) => Some(
            DisentangleConfig::load(Path::new(path)).with_context(|| format!("loading disentangle config {path}"))?,
        ),
    };
    let clique = if args.skip_clique {
        CliqueSearch::Skip
    } else {
        CliqueSearch::Exact {
            budget: (args.clique_budget > 0.0).then(|| Duration::from_secs_f64(args.clique_budget)),
        }
    };
    let opts = PipelineOptions {
        conflict_mode: parse_flag::<ConflictMode>("conflict-mode", &args.conflict_mode)?,
        disentangle,
        analysis: AnalysisOptions {
            clique,
            schedule: parse_flag::<ScheduleMode>("schedule-mode", &args.schedule_mode)?,
        },
        execution: Execution::Parallel,
    };

    let blocks = load_blocks(&args)?;
    let started = Instant::now();
    let records = analyze_blocks(&blocks, args.batch_size, &opts).context("analysing blocks")?;
    let inexact = records
        .iter()
        .filter(|r| r.metrics.heaviest_clique_gas.is_none())
        .count();
    eprintln!(
        "analysed {} records in {:.2}s{}",
        records.len(),
        started.elapsed().as_secs_f64(),
        if inexact > 0 && !args.skip_clique {
            format!(" ({inexact} with the schedule as clique proxy)")
        } else {
            String::new()
        }
    );

    write_output(args.out.as_deref(), |w| write_records_csv(&records, w))?;
    if let Some(path) = &args.out_aggregate {
        let series = MetricSeries::new(records, report.window);
        write_output(Some(path), |w| {
            emit_report(&series, report.format, &report.percentiles, w)
        })?;
    }
    Ok(())
}

fn sample(args: SampleArgs) -> CliResult {
    let ranges = if let Some(path) = &args.ranges.day_ranges {
        let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        parse_day_ranges_csv(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?
    } else if let Some(path) = &args.ranges.traces {
        let blocks = read_trace_file(path).with_context(|| format!("reading {}", path.display()))?;
        day_ranges_from_blocks(blocks.iter().map(|b| (b.number, b.timestamp)))
    } else {
        return Err(usage(anyhow!("no day ranges")));
    };
    let (Some(first), Some(last)) = (ranges.keys().next(), ranges.keys().next_back()) else {
        return Err(anyhow!("no days in input").into());
    };
    let plan = SamplePlan {
        seed: args.seed,
        per_day: args.per_day,
        first_day: args.from.unwrap_or(*first),
        last_day: args.to.unwrap_or(*last),
    };
    let numbers = plan_samples(&plan, &ranges).context("planning samples")?;
    eprintln!("sampled {} blocks over {} days", numbers.len(), plan.days().count());
    write_output(args.out.as_deref(), |w| {
        for n in &numbers {
            writeln!(w, "{n}")?;
        }
        Ok(())
    })?;
    Ok(())
}

fn fetch(args: FetchArgs) -> CliResult {
    let numbers = parse_block_list(&args.blocks)?;
    let blocks = fetch_all(&args.rpc, &numbers)?;
    write_output(args.out.as_deref(), |w| emit_trace_file(w, &blocks))?;
    Ok(())
}

fn synth(args: SynthArgs) -> CliResult {
    let blocks = synth_blocks(&args.preset, &args.synth)?;
    write_output(args.out.as_deref(), |w| emit_trace_file(w, &blocks))?;
    Ok(())
}

fn aggregate(args: AggregateArgs) -> CliResult {
    let report = report_options(&args.report)?;
    let metric: Metric = parse_flag("price-metric", &args.price_metric)?;
    let path = &args.records;
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let records = read_records_csv(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
    let series = MetricSeries::new(records, report.window);
    write_output(args.out.as_deref(), |w| {
        emit_report(&series, report.format, &report.percentiles, w)
    })?;

    if let Some(path) = &args.prices {
        let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        let bars = parse_price_csv(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
        let days = join_prices(&series, &bars, metric)?;
        if days.is_empty() {
            return Err(anyhow!("no day in {} overlaps the metrics", path.display()).into());
        }
        match price_correlation(&days) {
            Ok(Some(r)) => eprintln!("pearson({}, close) over {} days: {r:.4}", metric.name(), days.len()),
            _ => eprintln!("pearson({}, close): undefined", metric.name()),
        }
        if let Some(out) = &args.out_prices {
            write_output(Some(out), |w| write_price_days_csv(&days, metric, w))?;
        }
    }
    Ok(())
}
