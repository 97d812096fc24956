//! `bkmodes`: ingest categorical data, generate planted data, and benchmark
//! K-Modes initializers.
//!
//! Exit status: 0 when every run completed, 2 when a run or the command
//! failed, 64 on a usage error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

use anyhow::Context;
use bkmodes_core::codec::is_encoded;
use bkmodes_core::harness::{parse_json_report, run_matrix_with, Aggregate};
use bkmodes_core::ingest::IngestOptions;
use bkmodes_core::{
    emit_report, ingest_csv, load_encoded, save_encoded, synth_generate, BenchmarkReport,
    CategoricalDataset, EngineConfig, MatrixSpec, MethodKind, ProfileName, RecodeMap, ReportFormat,
    ReportOptions, SynthParams,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

const EXIT_FAILED: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "bkmodes",
    version,
    about = "K-Modes clustering benchmark harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a delimited text file into the binary dataset format.
    Ingest(IngestArgs),
    /// Generate planted-mode synthetic data.
    Synth(SynthArgs),
    /// Run one initializer and K-Modes for one K, once per seed.
    Run(RunArgs),
    /// Run every method for every K and seed.
    Matrix(MatrixArgs),
    /// Re-render a JSON report.
    Report(ReportArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Delimited text file or encoded dataset (detected by its magic bytes).
    #[arg(long)]
    input: PathBuf,
    /// Column handling for text input: us-census, kdd99, puf or generic.
    #[arg(long, default_value = "generic", value_parser = parse_profile)]
    profile: ProfileName,
    /// Field delimiter for text input.
    #[arg(long, default_value_t = ',', value_parser = parse_delimiter)]
    delimiter: char,
    /// Treat the first line as a header (overrides the profile).
    #[arg(long, conflicts_with = "no_header")]
    header: bool,
    /// Treat the first line as data (overrides the profile).
    #[arg(long)]
    no_header: bool,
}

impl InputArgs {
    fn options(&self) -> IngestOptions {
        IngestOptions {
            delimiter: self.delimiter as u8,
            has_header: match (self.header, self.no_header) {
                (true, _) => Some(true),
                (_, true) => Some(false),
                _ => None,
            },
        }
    }

    fn load(&self) -> anyhow::Result<CategoricalDataset> {
        if is_encoded(&self.input) {
            let (ds, _) = load_encoded(&self.input)
                .with_context(|| format!("loading {}", self.input.display()))?;
            return Ok(ds);
        }
        let ing = ingest_csv(&self.input, &self.profile.profile(), &self.options())
            .with_context(|| format!("reading {}", self.input.display()))?;
        Ok(ing.dataset)
    }
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Encoded dataset to write; a `.recode.json` sidecar is written next to it.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthFormat {
    Encoded,
    Csv,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 8)]
    k_true: usize,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 32)]
    m: usize,
    #[arg(long, default_value_t = 4)]
    cardinality: usize,
    /// Per-cell probability of replacing the planted value.
    #[arg(long, default_value_t = 0.2)]
    flip: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "encoded")]
    format: SynthFormat,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct EngineArgs {
    /// K-Modes iteration cap.
    #[arg(long, default_value_t = bkmodes_core::engine::DEFAULT_MAX_ITERATIONS)]
    max_iter: usize,
    /// Threads for assignment passes (default: $BKMODES_THREADS, else 1).
    #[arg(long)]
    threads: Option<usize>,
}

impl EngineArgs {
    fn config(&self) -> EngineConfig {
        EngineConfig {
            max_iterations: self.max_iter,
            threads: self.threads,
            ..EngineConfig::default()
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// csv, json or plot.
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    format: ReportFormat,
    /// none, mean or min: collapse seed rows per (method, K).
    #[arg(long, default_value = "none", value_parser = parse_aggregate)]
    aggregate: Aggregate,
    /// Leave out the timing columns.
    #[arg(long)]
    no_timing: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl OutputArgs {
    fn write(&self, report: &BenchmarkReport) -> anyhow::Result<()> {
        let opts = ReportOptions {
            timing: !self.no_timing,
            aggregate: self.aggregate,
        };
        let bytes = emit_report(report, self.format, &opts);
        match &self.out {
            Some(path) => {
                std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
            }
            None => io::stdout().write_all(&bytes).context("writing report"),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Number of clusters.
    #[arg(long)]
    k: usize,
    /// random, farthest, cao or bkmodes.
    #[arg(long, default_value = "bkmodes", value_parser = parse_method)]
    method: MethodKind,
    /// Seed for the random method.
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Comma-separated seeds for the random method.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Write each final model as a JSON line.
    #[arg(long)]
    dump_model: Option<PathBuf>,
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct MatrixArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Comma-separated K values.
    #[arg(long, value_delimiter = ',', required = true)]
    ks: Vec<usize>,
    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',', default_value = "random,cao,bkmodes", value_parser = parse_method)]
    methods: Vec<MethodKind>,
    /// Comma-separated seeds for the random method.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    seeds: Vec<u64>,
    /// Independent runs to execute concurrently.
    #[arg(long, default_value_t = 1)]
    parallel_runs: usize,
    /// Write each final model as a JSON line.
    #[arg(long)]
    dump_model: Option<PathBuf>,
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// JSON report written by `run` or `matrix`.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

fn parse_profile(s: &str) -> Result<ProfileName, String> {
    s.parse().map_err(|e: bkmodes_core::Error| e.to_string())
}

fn parse_method(s: &str) -> Result<MethodKind, String> {
    s.parse().map_err(|e: bkmodes_core::Error| e.to_string())
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse().map_err(|e: bkmodes_core::Error| e.to_string())
}

fn parse_aggregate(s: &str) -> Result<Aggregate, String> {
    s.parse().map_err(|e: bkmodes_core::Error| e.to_string())
}

fn parse_delimiter(s: &str) -> Result<char, String> {
    let c = match s {
        "\\t" | "tab" => '\t',
        _ => {
            let mut chars = s.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => c,
                _ => return Err("delimiter must be a single character".into()),
            }
        }
    };
    if c.is_ascii() {
        Ok(c)
    } else {
        Err("delimiter must be ASCII".into())
    }
}

/// A bad argument combination that clap cannot express.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn check_engine(engine: &EngineArgs) -> anyhow::Result<()> {
    if engine.max_iter == 0 {
        return Err(usage("--max-iter must be at least 1"));
    }
    if engine.threads == Some(0) {
        return Err(usage("--threads must be at least 1"));
    }
    Ok(())
}

fn ingest(args: &IngestArgs) -> anyhow::Result<bool> {
    let ing = ingest_csv(
        &args.input.input,
        &args.input.profile.profile(),
        &args.input.options(),
    )
    .with_context(|| format!("reading {}", args.input.input.display()))?;
    save_encoded(&ing.dataset, &ing.recode, &args.output)
        .with_context(|| format!("writing {}", args.output.display()))?;
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &ing.report)?;
    writeln!(out)?;
    Ok(false)
}

fn synth(args: &SynthArgs) -> anyhow::Result<bool> {
    let data = synth_generate(&SynthParams {
        k_true: args.k_true,
        n: args.n,
        m: args.m,
        cardinality: args.cardinality,
        flip_prob: args.flip,
        seed: args.seed,
    })
    .map_err(|e| usage(e.to_string()))?;
    let ds = &data.dataset;
    match args.format {
        SynthFormat::Encoded => {
            save_encoded(ds, &RecodeMap::numeric(ds.cardinalities()), &args.output)
                .with_context(|| format!("writing {}", args.output.display()))?;
        }
        SynthFormat::Csv => {
            let file = File::create(&args.output)
                .with_context(|| format!("creating {}", args.output.display()))?;
            let mut w = BufWriter::new(file);
            writeln!(w, "{}", ds.attribute_names().join(","))?;
            for row in ds.rows() {
                let cells: Vec<String> = row.iter().map(u8::to_string).collect();
                writeln!(w, "{}", cells.join(","))?;
            }
            w.flush()?;
        }
    }
    Ok(false)
}

fn execute(
    input: &InputArgs,
    spec: &MatrixSpec,
    parallel_runs: usize,
    dump_model: Option<&Path>,
    output: &OutputArgs,
) -> anyhow::Result<bool> {
    if parallel_runs == 0 {
        return Err(usage("--parallel-runs must be at least 1"));
    }
    let specs = spec.expand().map_err(|e| usage(e.to_string()))?;
    let ds = input.load()?;
    // Lines are buffered per spec index so the file order matches the report.
    let dumps: Mutex<Vec<Option<String>>> = Mutex::new(vec![None; specs.len()]);
    let report = run_matrix_with(&ds, &specs, parallel_runs, &|i, rec, model| {
        if dump_model.is_some() {
            let line = serde_json::json!({
                "method": rec.method,
                "k": rec.k,
                "seed": rec.seed,
                "model": model,
            });
            dumps.lock().unwrap()[i] = Some(line.to_string());
        }
    });
    if let Some(path) = dump_model {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        for line in dumps.into_inner().unwrap().into_iter().flatten() {
            writeln!(w, "{line}")?;
        }
        w.flush()?;
    }
    output.write(&report)?;
    for r in report.records.iter().filter(|r| r.failed()) {
        let seed = r.seed.map(|s| format!(" seed {s}")).unwrap_or_default();
        eprintln!(
            "run {} k={}{seed} failed: {}",
            r.method,
            r.k,
            r.error.as_deref().unwrap_or("")
        );
    }
    Ok(report.any_failed())
}

fn run(args: &RunArgs) -> anyhow::Result<bool> {
    check_engine(&args.engine)?;
    if args.k == 0 {
        return Err(usage("--k must be at least 1"));
    }
    let seeds: Vec<u64> = args
        .seed
        .map(|s| vec![s])
        .unwrap_or_else(|| args.seeds.clone());
    if args.method == MethodKind::Random && seeds.is_empty() {
        return Err(usage("the random method needs --seed or --seeds"));
    }
    let spec = MatrixSpec {
        methods: vec![args.method],
        ks: vec![args.k],
        seeds,
        engine: args.engine.config(),
    };
    execute(
        &args.input,
        &spec,
        1,
        args.dump_model.as_deref(),
        &args.output,
    )
}

fn matrix(args: &MatrixArgs) -> anyhow::Result<bool> {
    check_engine(&args.engine)?;
    let spec = MatrixSpec {
        methods: args.methods.clone(),
        ks: args.ks.clone(),
        seeds: args.seeds.clone(),
        engine: args.engine.config(),
    };
    execute(
        &args.input,
        &spec,
        args.parallel_runs,
        args.dump_model.as_deref(),
        &args.output,
    )
}

fn report(args: &ReportArgs) -> anyhow::Result<bool> {
    let bytes =
        std::fs::read(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let report =
        parse_json_report(&bytes).with_context(|| format!("parsing {}", args.input.display()))?;
    args.output.write(&report)?;
    Ok(false)
}

/// Joins the error chain, skipping causes already spelled out by their parent.
fn render(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if out.contains(&msg) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&msg);
    }
    out
}

fn dispatch(cli: &Cli) -> anyhow::Result<bool> {
    match &cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Synth(a) => synth(a),
        Command::Run(a) => run(a),
        Command::Matrix(a) => matrix(a),
        Command::Report(a) => report(a),
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
    match dispatch(&cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(EXIT_FAILED),
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(e) => {
            eprintln!("error: {}", render(&e));
            ExitCode::from(EXIT_FAILED)
        }
    }
}
