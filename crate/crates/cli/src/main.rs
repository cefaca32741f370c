use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use netcurriculum::curriculum::scripted_curriculum;
use netcurriculum::experiment::{
    cmd_train, compare_runs, evaluate_model, load_run, write_compare, write_eval, EvalOptions,
    ExperimentError, Mode, ProviderKind, RunConfig, COMPARE_WINDOW, DEFAULT_BIN_STEPS,
};
use netcurriculum::sim::EnvConfig;

#[derive(Parser)]
#[command(name = "netcurriculum", version, about = "Curriculum-driven PPO for user association")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one run per seed and write its artifacts.
    Train(TrainArgs),
    /// Evaluate a saved model on larger UE counts.
    Eval(EvalArgs),
    /// Compare run directories: aligned curves and steps to threshold.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Curriculum,
    Baseline,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProviderArg {
    Scripted,
    Llm,
    Record,
    Replay,
}

#[derive(Args)]
struct TrainArgs {
    /// Run configuration JSON, or a manifest.json from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    provider: Option<ProviderArg>,
    /// May be repeated.
    #[arg(long)]
    seed: Vec<u64>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Output root; each run goes to `<out>/<mode>-seed<seed>/`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base URL of a chat-completions API.
    #[arg(long)]
    llm_endpoint: Option<String>,
    #[arg(long)]
    cassette: Option<PathBuf>,
    /// Total env steps per run.
    #[arg(long)]
    budget: Option<u64>,
    /// Pass mark for the final curriculum stage.
    #[arg(long, allow_hyphen_values = true)]
    threshold: Option<f64>,
}

#[derive(Args)]
struct EvalArgs {
    /// A model.json written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Run configuration, manifest or scenario JSON supplying the environment.
    #[arg(long)]
    config: Option<PathBuf>,
    /// UE counts to evaluate, e.g. 6..10 (inclusive).
    #[arg(long, default_value = "6..10", value_parser = parse_range)]
    ues: (usize, usize),
    #[arg(long, default_value_t = 10)]
    episodes: usize,
    /// Seeds the shuffled BS layout and the UE placement.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep the configured BS layout.
    #[arg(long)]
    no_shuffle: bool,
    /// Directory for eval.csv.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Run directories written by `train`.
    #[arg(required = true, num_args = 2..)]
    runs: Vec<PathBuf>,
    /// Target-task mean QoE to reach. Defaults to the scripted target stage's.
    #[arg(long, allow_hyphen_values = true)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = COMPARE_WINDOW)]
    window: usize,
    #[arg(long, default_value_t = DEFAULT_BIN_STEPS)]
    bin: u64,
    /// Directory for compare.csv and summary.csv.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected LO..HI, got `{s}`"))?;
    let lo = lo.trim().parse().map_err(|e| format!("bad lower bound: {e}"))?;
    let hi = hi.trim().trim_start_matches('=').parse().map_err(|e| format!("bad upper bound: {e}"))?;
    Ok((lo, hi))
}

fn read(path: &Path) -> Result<String, ExperimentError> {
    fs::read_to_string(path)
        .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))
}

fn train(args: TrainArgs) -> Result<(), ExperimentError> {
    let mut config = match &args.config {
        Some(path) => RunConfig::from_json(&read(path)?)?,
        None => RunConfig::default(),
    };
    if let Some(m) = args.mode {
        config.mode = match m {
            ModeArg::Curriculum => Mode::Curriculum,
            ModeArg::Baseline => Mode::Baseline,
        };
    }
    if let Some(p) = args.provider {
        config.provider = match p {
            ProviderArg::Scripted => ProviderKind::Scripted,
            ProviderArg::Llm => ProviderKind::Llm,
            ProviderArg::Record => ProviderKind::Record,
            ProviderArg::Replay => ProviderKind::Replay,
        };
    }
    let seeds: Vec<u64> = args.seed.iter().chain(&args.seeds).copied().collect();
    if !seeds.is_empty() {
        config.seeds = seeds;
    }
    if let Some(out) = args.out {
        config.output_dir = out;
    }
    if args.llm_endpoint.is_some() {
        config.llm_endpoint = args.llm_endpoint;
    }
    if args.cassette.is_some() {
        config.cassette = args.cassette;
    }
    if args.budget.is_some() {
        config.total_step_budget = args.budget;
    }
    if args.threshold.is_some() {
        config.target_threshold = args.threshold;
    }
    for dir in cmd_train(&config)? {
        println!("{}", dir.display());
    }
    Ok(())
}

/// The environment from a run config, a manifest or a bare scenario file.
fn eval_env(path: Option<&Path>) -> Result<EnvConfig, ExperimentError> {
    let Some(path) = path else {
        return Ok(EnvConfig::default());
    };
    let text = read(path)?;
    RunConfig::from_json(&text)
        .map(|c| c.env)
        .or_else(|_| EnvConfig::from_json(&text))
        .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))
}

fn eval(args: EvalArgs) -> Result<(), ExperimentError> {
    let env = eval_env(args.config.as_deref())?;
    let options = EvalOptions {
        min_ues: args.ues.0,
        max_ues: args.ues.1,
        episodes: args.episodes,
        seed: args.seed,
        shuffle_bs: !args.no_shuffle,
        label: args.model.display().to_string(),
    };
    let rows = evaluate_model(&args.model, &env, &options)?;
    fs::create_dir_all(&args.out).map_err(|e| ExperimentError::Config(format!("{}: {e}", args.out.display())))?;
    let path = args.out.join("eval.csv");
    write_eval(&path, &rows)?;
    println!("{:>4} {:>10} {:>10} {:>9}", "ues", "mean_qoe", "connected", "dropouts");
    for r in &rows {
        println!(
            "{:>4} {:>10.4} {:>10.4} {:>9}",
            r.num_ues, r.mean_qoe, r.connected_fraction, r.dropouts
        );
    }
    println!("{}", path.display());
    Ok(())
}

fn compare(args: CompareArgs) -> Result<(), ExperimentError> {
    let mut runs = Vec::new();
    let mut broken = Vec::new();
    for dir in &args.runs {
        match load_run(dir) {
            Ok(r) => runs.push(r),
            Err(e) => broken.push(e.to_string()),
        }
    }
    if !broken.is_empty() {
        return Err(ExperimentError::Data(format!("unusable runs:\n  {}", broken.join("\n  "))));
    }
    let threshold = match args.threshold {
        Some(t) => t,
        None => {
            let target = &runs[0].manifest.config;
            scripted_curriculum(&target.env, &target.encoding)
                .map_err(|e| ExperimentError::Config(format!("pass --threshold: {e}")))?
                .stages
                .last()
                .map_or(0.0, |s| s.threshold)
        }
    };
    let out = compare_runs(&runs, threshold, args.window, args.bin)?;
    write_compare(&args.out, &out)?;
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.0}"));
    println!("threshold {threshold}, window {}", args.window);
    println!("{:>6} {:>12} {:>12} {:>10}", "seed", "curriculum", "baseline", "delta");
    for r in &out.summary {
        println!(
            "{:>6} {:>12} {:>12} {:>10}",
            r.seed,
            fmt(r.curriculum_steps),
            fmt(r.baseline_steps),
            fmt(r.delta)
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Compare(a) => compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
