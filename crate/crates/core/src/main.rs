use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use langforge::dataset::{emit_training_config, SubsetName};
use langforge::eval::{load_benchmark, run_eval, Benchmark, EvalSettings, EvalTask, FewShotTemplate};
use langforge::pipeline::{Pipeline, PipelineConfig, PlannedAction, RunManifest, RunOptions, Stage, MOCK_ENDPOINT};
use langforge::prompts::Templates;
use langforge::teacher::mock::MockTeacher;
use langforge::teacher::TeacherClient;

const EXIT_USAGE: u8 = 2;
const EXIT_STAGE: u8 = 3;

#[derive(Parser)]
#[command(name = "langforge", version, about = "Synthetic training data for a language, from its name")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Every stage: generation, assembly, export and training configs.
    Run(RunArgs),
    /// Data creation only (topics through translation).
    Generate(RunArgs),
    /// Build and export subsets from existing generation checkpoints.
    Assemble(AssembleArgs),
    /// Few-shot evaluation of a model endpoint on one benchmark.
    Eval(EvalArgs),
    /// Write a training config for an exported dataset.
    EmitTrainConfig(EmitArgs),
    /// Print a run manifest and verify its bookkeeping identities.
    Report(ReportArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Flat TOML config; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    language: Option<String>,
    #[arg(long)]
    language_code: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Base URL of an OpenAI-compatible API, or "mock".
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Replay teacher responses from the cache only.
    #[arg(long)]
    cache_only: bool,
    #[arg(long)]
    max_in_flight: Option<usize>,
    #[arg(long)]
    context_corpus: Option<PathBuf>,
    #[arg(long)]
    translation_corpus: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Print the stage plan and exit without calling the teacher.
    #[arg(long)]
    dry_run: bool,
    /// Stop after this stage; a later invocation resumes from there.
    #[arg(long, hide = true)]
    stop_after: Option<Stage>,
    /// Training config override `key=value`, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct AssembleArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Subsets to build, repeatable; all by default.
    #[arg(long = "subset", value_delimiter = ',')]
    subsets: Vec<SubsetName>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    benchmark: Benchmark,
    /// Benchmark rows as JSON lines in the dataset's own column schema.
    #[arg(long)]
    data: PathBuf,
    /// Report path; defaults to `{out}/eval/{benchmark}.json`.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Leave failed requests out of the denominator instead of scoring them wrong.
    #[arg(long)]
    exclude_failed: bool,
}

#[derive(Args)]
struct EmitArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directory or manifest file.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Stage(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Stage(e.to_string())
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn resolve(common: &CommonArgs) -> Result<PipelineConfig, Failure> {
    let mut c = match &common.config {
        Some(path) => PipelineConfig::load(path).map_err(usage)?,
        None => PipelineConfig::default(),
    };
    macro_rules! set {
        ($field:ident, $value:expr) => {
            if let Some(v) = $value.clone() {
                c.$field = v;
            }
        };
    }
    set!(language_name, common.language);
    set!(language_code, common.language_code);
    set!(rng_seed, common.seed);
    set!(endpoint, common.endpoint);
    set!(model, common.model);
    set!(max_in_flight, common.max_in_flight);
    set!(out_dir, common.out);
    if common.cache_dir.is_some() {
        c.cache_dir = common.cache_dir.clone();
    }
    if common.context_corpus.is_some() {
        c.context_corpus = common.context_corpus.clone();
    }
    if common.translation_corpus.is_some() {
        c.translation_corpus = common.translation_corpus.clone();
    }
    c.cache_only |= common.cache_only;
    c.validate().map_err(usage)?;
    Ok(c)
}

fn parse_overrides(raw: &[String]) -> Result<Vec<(String, String)>, Failure> {
    raw.iter()
        .map(|kv| match kv.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
            _ => Err(usage(format!("override {kv:?} is not KEY=VALUE"))),
        })
        .collect()
}

fn print_plan(plan: &[(Stage, PlannedAction)]) {
    for (stage, action) in plan {
        let what = match action {
            PlannedAction::Run => "run".to_string(),
            PlannedAction::Resume => "resume from checkpoint".to_string(),
            PlannedAction::Skip(reason) => format!("skip ({reason})"),
        };
        println!("{:<13} {what}", stage.as_str());
    }
}

fn print_manifest(m: &RunManifest) -> bool {
    println!("language      {} ({})", m.language_name, m.language_code);
    println!("seed          {}", m.rng_seed);
    println!("config hash   {}", m.config_hash);
    println!("token counter {}", m.token_counter);
    for d in &m.deviations {
        println!("deviation     {} = {} (default {})", d.key, d.value, d.default);
    }
    println!(
        "cache         {} hits, {} misses, hit rate {:.3}, {} network calls",
        m.cache.hits, m.cache.misses, m.cache_hit_rate, m.cache.network_calls
    );
    for r in &m.stages {
        let status = match &r.status {
            langforge::pipeline::StageStatus::Completed => "done".to_string(),
            langforge::pipeline::StageStatus::Skipped(why) => format!("skipped: {why}"),
        };
        println!(
            "stage {:<13} in {:>7} out {:>7} dropped {:>6}  {:>8.2}s  {status}",
            r.stage.as_str(),
            r.input,
            r.output,
            r.dropped,
            r.seconds
        );
    }
    if let Some(cap) = m.token_budget {
        println!("token budget  {cap}");
    }
    for (name, s) in &m.subsets {
        println!("subset {:<20} {:>7} examples {:>10} tokens  {}", name, s.examples, s.tokens, s.content_hash);
    }
    let checks = m.checks();
    for c in &checks {
        println!("{c}");
    }
    checks.iter().all(|c| c.holds())
}

fn pipeline_run(args: RunArgs, stages: &[Stage]) -> Result<(), Failure> {
    let config = resolve(&args.common)?;
    let overrides = parse_overrides(&args.overrides)?;
    if args.dry_run {
        // The planner only inspects checkpoints; this client is never called.
        let client = TeacherClient::new(Arc::new(MockTeacher::new()));
        let pipeline = Pipeline::with_client(config, client)?;
        print_plan(&pipeline.plan(stages)?);
        println!("network calls: {}", pipeline.client().network_calls());
        return Ok(());
    }
    let mut pipeline = Pipeline::new(config)?;
    let options = RunOptions { stop_after: args.stop_after, subsets: None, train_overrides: overrides };
    let manifest = pipeline.run_stages(stages, &options)?;
    print_manifest(&manifest);
    Ok(())
}

fn assemble(args: AssembleArgs) -> Result<(), Failure> {
    let config = resolve(&args.common)?;
    let options = RunOptions {
        stop_after: None,
        subsets: (!args.subsets.is_empty()).then_some(args.subsets),
        train_overrides: parse_overrides(&args.overrides)?,
    };
    let manifest =
        Pipeline::new(config)?.run_stages(&[Stage::Assembly, Stage::Export, Stage::TrainConfig], &options)?;
    print_manifest(&manifest);
    Ok(())
}

fn eval(args: EvalArgs) -> Result<(), Failure> {
    let config = resolve(&args.common)?;
    if config.language_code.is_empty() {
        return Err(usage("--language-code is required for eval (e.g. jav_Latn)"));
    }
    let items = load_benchmark(args.benchmark, &config.language_code, &args.data)?;
    let templates = match &config.templates_dir {
        Some(dir) => Templates::load_dir(dir)?,
        None => Templates::default(),
    };
    let task = EvalTask::new(args.benchmark, &config.language_code);
    let mut settings = EvalSettings::new(&config.model, templates.response_system(&config.language_name));
    settings.max_in_flight = config.max_in_flight;
    settings.exclude_failed = args.exclude_failed;
    settings.template = match args.benchmark {
        Benchmark::FloresXxEn => FewShotTemplate::default().with_direction(&config.language_name, "English"),
        Benchmark::FloresEnXx => FewShotTemplate::default().with_direction("English", &config.language_name),
        _ => FewShotTemplate::default(),
    };
    let report_path =
        args.report.unwrap_or_else(|| config.out_dir.join("eval").join(format!("{}.json", args.benchmark)));
    if config.endpoint == MOCK_ENDPOINT {
        tracing::warn!("evaluating the built-in mock endpoint");
    }
    let pipeline = Pipeline::new(config)?;
    let report = run_eval(pipeline.client(), &task, &items, &settings)?;
    let json = serde_json::to_string_pretty(&report)? + "\n";
    langforge::pipeline::write_atomic(&report_path, json.as_bytes())?;
    match (report.accuracy, report.chrf) {
        (Some(acc), _) => println!("{} accuracy {:.4} ({}/{})", args.benchmark, acc, report.correct, report.scored),
        (_, Some(chrf)) => println!("{} chrF++ {:.2} over {} items", args.benchmark, chrf, report.scored),
        _ => {}
    }
    println!("report written to {}", report_path.display());
    Ok(())
}

fn emit(args: EmitArgs) -> Result<(), Failure> {
    let overrides = parse_overrides(&args.overrides)?;
    let config = emit_training_config(&args.dataset, &overrides, &args.out)?;
    println!("wrote {}", args.out.display());
    for (key, default, value) in config.diff_from_defaults() {
        let show = |v: Option<String>| v.unwrap_or_else(|| "(unset)".into());
        println!("{key}: {} -> {}", show(default), show(value));
    }
    Ok(())
}

fn report(args: ReportArgs) -> Result<(), Failure> {
    let path = if args.out.is_dir() { args.out.join("manifest.json") } else { args.out };
    let manifest = RunManifest::load(Path::new(&path)).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    if print_manifest(&manifest) {
        Ok(())
    } else {
        Err(Failure::Stage("manifest identities violated".into()))
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => pipeline_run(args, &Stage::ALL),
        Command::Generate(args) => pipeline_run(args, &Stage::GENERATION),
        Command::Assemble(args) => assemble(args),
        Command::Eval(args) => eval(args),
        Command::EmitTrainConfig(args) => emit(args),
        Command::Report(args) => report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Stage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_STAGE)
        }
    }
}
