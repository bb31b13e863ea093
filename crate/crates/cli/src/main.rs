mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use config::FileConfig;
use tracecot::dataset::{
    self, generate, generate_to_file, read_jsonl, write_atomic, DatasetError, DatasetSpec, Mode, SampleRecord,
    TOOL_VERSION,
};
use tracecot::eval::{
    build_prompts, score, write_curve_csv, ChatClient, CurveRow, EndpointConfig, EvalError, Prediction, PromptBundle,
};
use tracecot::noise::{FlipMode, NoiseConfig, NoiseKind};
use tracecot::sampling::{SamplerSpec, TaskInputSpec};
use tracecot::TaskKind;

/// Marks an error as a configuration problem (exit code 1).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Parser)]
#[command(name = "tracecot", version, about = "Traced chain-of-thought datasets, noise and few-shot evaluation")]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for generation.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset file and its manifest.
    Generate {
        #[command(flatten)]
        data: DataArgs,
        /// Output JSONL path.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Summarize a dataset file.
    Stats {
        dataset: PathBuf,
        /// Report path (default: <dataset>.stats.json).
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Build few-shot prompts from a demo pool and a test set.
    PromptBuild {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        tests: PathBuf,
        #[arg(long, default_value_t = 6)]
        k: usize,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Prompt an endpoint on generated test problems and score the answers.
    Evaluate {
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Score a predictions file against reference records.
    Score {
        predictions: PathBuf,
        references: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Expand a grid of dataset levels and intensities into per-cell runs.
    Sweep {
        #[command(flatten)]
        data: DataArgs,
        /// Comma-separated dataset noise levels.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
        /// Comma-separated noise intensities.
        #[arg(long, value_delimiter = ',')]
        intensities: Option<Vec<f64>>,
        /// Also run a few-shot evaluation per cell.
        #[arg(long)]
        evaluate: bool,
        #[command(flatten)]
        endpoint: EndpointArgs,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        dry_run: bool,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseName {
    None,
    Char,
    Line,
    Dynamic,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlipName {
    DifferentDigit,
    UniformDigit,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeName {
    Cot,
    Direct,
}

#[derive(Args, Clone, Default)]
struct NoiseArgs {
    #[arg(long, value_enum)]
    noise: Option<NoiseName>,
    /// Fraction of samples that receive noise.
    #[arg(long)]
    nd: Option<f64>,
    /// Per-sample intensity; `--nc`, `--nl` and `--ndl` are aliases.
    #[arg(long, visible_aliases = ["nc", "nl", "ndl"])]
    intensity: Option<f64>,
    #[arg(long, value_enum)]
    flip_mode: Option<FlipName>,
}

impl NoiseArgs {
    fn apply(&self, mut cfg: NoiseConfig) -> Result<NoiseConfig> {
        let intensity = self.intensity.unwrap_or(cfg.kind.intensity());
        if let Some(name) = self.noise {
            cfg.kind = match name {
                NoiseName::None => NoiseKind::None,
                NoiseName::Char => NoiseKind::Char { intensity },
                NoiseName::Line => NoiseKind::Line { intensity },
                NoiseName::Dynamic => NoiseKind::Dynamic { intensity },
            };
        } else if self.intensity.is_some() {
            if matches!(cfg.kind, NoiseKind::None) {
                return Err(config_err("--intensity needs a noise kind"));
            }
            cfg.kind = cfg.kind.with_intensity(intensity);
        }
        if let Some(nd) = self.nd {
            cfg.dataset_level = nd;
        }
        if let Some(f) = self.flip_mode {
            cfg.flip_mode = match f {
                FlipName::DifferentDigit => FlipMode::DifferentDigit,
                FlipName::UniformDigit => FlipMode::UniformDigit,
            };
        }
        cfg.validate().map_err(|e| config_err(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Args, Clone, Default)]
struct DataArgs {
    #[arg(long)]
    task: Option<TaskKind>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Length sampling: shortest operand in digits.
    #[arg(long)]
    min_len: Option<u32>,
    /// Length sampling: longest operand in digits.
    #[arg(long)]
    max_len: Option<u32>,
    /// Magnitude sampling: smallest operand.
    #[arg(long, conflicts_with_all = ["min_len", "max_len"])]
    lower: Option<u64>,
    /// Magnitude sampling: largest operand.
    #[arg(long, conflicts_with_all = ["min_len", "max_len"])]
    upper: Option<u64>,
    #[arg(long)]
    list_min: Option<u32>,
    #[arg(long)]
    list_max: Option<u32>,
    #[arg(long)]
    start_index: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<ModeName>,
    /// Keep code lines (`ds = digx + digy + carry`) in the CoT.
    #[arg(long)]
    keep_code_lines: bool,
    #[command(flatten)]
    noise: NoiseArgs,
}

impl DataArgs {
    /// Config-file spec (or defaults) with every given flag applied.
    fn spec(&self, file: &FileConfig) -> Result<DatasetSpec> {
        let mut spec = file
            .dataset
            .clone()
            .unwrap_or_else(|| DatasetSpec::new(TaskInputSpec::new(TaskKind::Add), 1000, 0));
        if let Some(t) = self.task {
            spec.inputs.task = t;
        }
        if let Some(c) = self.count {
            spec.count = c;
        }
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if self.min_len.is_some() || self.max_len.is_some() {
            let (min0, max0) = match spec.inputs.operands {
                Some(SamplerSpec::Length { min_len, max_len }) => (min_len, max_len),
                _ => (1, 10),
            };
            spec.inputs.operands = Some(SamplerSpec::Length {
                min_len: self.min_len.unwrap_or(min0),
                max_len: self.max_len.unwrap_or(max0),
            });
        }
        if self.lower.is_some() || self.upper.is_some() {
            let (lo0, hi0) = match spec.inputs.operands {
                Some(SamplerSpec::Magnitude { lower, upper }) => (lower, upper),
                _ => (0, 9_999_999_999),
            };
            spec.inputs.operands = Some(SamplerSpec::Magnitude {
                lower: self.lower.unwrap_or(lo0),
                upper: self.upper.unwrap_or(hi0),
            });
        }
        if let Some(v) = self.list_min {
            spec.inputs.list_min = v;
        }
        if let Some(v) = self.list_max {
            spec.inputs.list_max = v;
        }
        if let Some(v) = self.start_index {
            spec.start_index = v;
        }
        if let Some(m) = self.mode {
            spec.mode = match m {
                ModeName::Cot => Mode::Cot,
                ModeName::Direct => Mode::Direct,
            };
        }
        spec.keep_code_lines |= self.keep_code_lines;
        spec.noise = self.noise.apply(spec.noise)?;
        spec.validate().map_err(|e| config_err(e.to_string()))?;
        Ok(spec)
    }
}

#[derive(Args, Clone, Default)]
struct EndpointArgs {
    /// Chat-completion base URL; `/chat/completions` is appended if missing.
    #[arg(long, env = "TRACECOT_BASE_URL")]
    base_url: Option<String>,
    #[arg(long, env = "TRACECOT_MODEL")]
    model: Option<String>,
    #[arg(long)]
    max_in_flight: Option<usize>,
    #[arg(long)]
    timeout_secs: Option<u64>,
    #[arg(long)]
    max_attempts: Option<u32>,
}

impl EndpointArgs {
    fn endpoint(&self, file: &FileConfig) -> Result<EndpointConfig> {
        let mut cfg = file.endpoint.clone().unwrap_or_else(|| EndpointConfig::new("", ""));
        if let Some(v) = &self.base_url {
            cfg.base_url = v.clone();
        }
        if let Some(v) = &self.model {
            cfg.model = v.clone();
        }
        if let Some(v) = self.max_in_flight {
            cfg.max_in_flight = v;
        }
        if let Some(v) = self.timeout_secs {
            cfg.timeout_secs = v;
        }
        if let Some(v) = self.max_attempts {
            cfg.retry.max_attempts = v;
        }
        let cfg = cfg.with_env_key();
        cfg.validate().map_err(|e| config_err(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Args, Clone, Default)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    endpoint: EndpointArgs,
    /// Demonstrations per prompt.
    #[arg(long)]
    k: Option<usize>,
    /// Number of test problems.
    #[arg(long)]
    n: Option<usize>,
    /// Demo pool size; test problems come from the indices after it.
    #[arg(long)]
    pool: Option<usize>,
    /// Write prompts only, without calling the endpoint.
    #[arg(long)]
    dry_run: bool,
    #[arg(long, default_value = "eval-out")]
    out_dir: PathBuf,
}

/// The resolved parameters of one evaluation run, echoed into its manifest.
#[derive(Debug, Clone, Serialize)]
struct EvalPlan {
    tool_version: &'static str,
    task: TaskKind,
    seed: u64,
    k: usize,
    n: usize,
    pool: usize,
    /// Noise applied to demonstrations.
    noise: NoiseConfig,
    inputs: TaskInputSpec,
    endpoint: Option<EndpointConfig>,
    dry_run: bool,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        std::io::Write::write_all(w, b"\n").map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })
    })?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, |w| {
        std::io::Write::write_all(w, text.as_bytes()).map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })
    })?;
    Ok(())
}

fn write_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    write_atomic(path, |w| {
        for item in items {
            serde_json::to_writer(&mut *w, item)?;
            std::io::Write::write_all(w, b"\n").map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })?;
        }
        Ok(())
    })?;
    Ok(())
}

fn read_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{}: line {}", path.display(), i + 1)))
        .collect()
}

fn workers(cli: &Cli, file: &FileConfig) -> usize {
    cli.workers
        .or(file.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn write_prompts(dir: &Path, bundles: &[PromptBundle]) -> Result<()> {
    let prompts = dir.join("prompts");
    for b in bundles {
        write_text(&prompts.join(format!("{}.txt", b.test_id)), &b.render())?;
    }
    write_lines(&dir.join("bundles.jsonl"), bundles)
}

struct EvalOutcome {
    accuracy: Option<f64>,
    n: usize,
}

fn evaluate(
    file: &FileConfig,
    args: &EvalArgs,
    workers: usize,
    demo_noise_override: Option<NoiseConfig>,
) -> Result<EvalOutcome> {
    let sect = file.eval.clone().unwrap_or_default();
    let k = args.k.or(sect.k).unwrap_or(6);
    let n = args.n.or(sect.n).unwrap_or(100);
    let pool_n = args.pool.or(sect.pool).unwrap_or(100.max(k));
    if n == 0 {
        return Err(config_err("--n must be positive"));
    }
    let base = args.data.spec(file)?;
    let noise = demo_noise_override.unwrap_or(base.noise);
    let clean = DatasetSpec { noise: NoiseConfig::none(), mode: Mode::Cot, keep_code_lines: false, ..base.clone() };
    let pool_spec = DatasetSpec { count: pool_n.max(1), ..clean.clone() };
    let test_spec = DatasetSpec { count: n, start_index: clean.start_index + pool_n as u64, ..clean.clone() };
    let pool = if pool_n == 0 { Vec::new() } else { generate(&pool_spec, workers)? };
    let tests = generate(&test_spec, workers)?;
    let bundles = build_prompts(base.seed, &pool, &tests, k, &noise).map_err(|e| match e {
        EvalError::PoolTooSmall { .. } | EvalError::Config(_) => config_err(e.to_string()),
        other => other.into(),
    })?;

    let endpoint = if args.dry_run { None } else { Some(args.endpoint.endpoint(file)?) };
    let plan = EvalPlan {
        tool_version: TOOL_VERSION,
        task: base.inputs.task,
        seed: base.seed,
        k,
        n,
        pool: pool_n,
        noise,
        inputs: base.inputs,
        endpoint: endpoint.clone(),
        dry_run: args.dry_run,
    };
    let dir = &args.out_dir;
    write_prompts(dir, &bundles)?;
    dataset::write_jsonl(&dir.join("references.jsonl"), &tests)?;
    write_json(&dir.join("run.manifest.json"), &plan)?;
    let Some(endpoint) = endpoint else {
        eprintln!("wrote {} prompts to {}", bundles.len(), dir.join("prompts").display());
        return Ok(EvalOutcome { accuracy: None, n });
    };

    let client = ChatClient::new(endpoint)?;
    let prompts: Vec<_> = bundles.iter().map(|b| (b.test_id.clone(), b.render())).collect();
    let rt = tokio::runtime::Runtime::new().context("starting async runtime")?;
    let preds = rt.block_on(client.complete_all(&prompts));
    write_lines(&dir.join("predictions.jsonl"), &preds)?;
    let report = score(&preds, &tests)?;
    write_json(&dir.join("report.json"), &report)?;
    let rows: Vec<CurveRow> = std::iter::once(("all".to_string(), &report.overall))
        .chain(report.per_task.iter().map(|(op, s)| (op.name().to_string(), s)))
        .map(|(task, s)| CurveRow {
            noise: noise.kind.name().to_string(),
            dataset_level: noise.dataset_level,
            intensity: noise.kind.intensity(),
            task,
            k,
            n: s.total,
            accuracy: s.accuracy,
        })
        .collect();
    write_curve_csv(&dir.join("curve.csv"), &rows)?;
    let failed = report.overall.transport_failures;
    println!("accuracy {:.4} ({} / {})", report.overall.accuracy, report.overall.correct, report.overall.total);
    if failed > 0 {
        eprintln!("incomplete: {failed} requests failed, see predictions.jsonl");
        if failed == report.overall.total {
            bail!("every request failed");
        }
    }
    Ok(EvalOutcome { accuracy: Some(report.overall.accuracy), n })
}

fn run(cli: Cli) -> Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let workers = workers(&cli, &file);
    if workers == 0 {
        return Err(config_err("--workers must be at least 1"));
    }
    match &cli.cmd {
        Command::Generate { data, out } => {
            let spec = data.spec(&file)?;
            let out = out
                .clone()
                .or_else(|| spec.output.clone())
                .ok_or_else(|| config_err("an output path is required (--out or dataset.output)"))?;
            let spec = DatasetSpec { output: Some(out.clone()), ..spec };
            let m = generate_to_file(&spec, &out, workers)?;
            println!("{} records -> {} (sha256 {})", m.records, out.display(), m.sha256);
        }
        Command::Stats { dataset, out } => {
            let records = read_jsonl(dataset)?;
            let s = dataset::stats(&records);
            let out = out.clone().unwrap_or_else(|| {
                let mut p = dataset.as_os_str().to_os_string();
                p.push(".stats.json");
                PathBuf::from(p)
            });
            write_json(&out, &s)?;
            println!("{}", serde_json::to_string_pretty(&s)?);
        }
        Command::PromptBuild { pool, tests, k, noise, seed, out_dir } => {
            let noise = noise.apply(NoiseConfig::none())?;
            let pool: Vec<SampleRecord> = read_jsonl(pool)?;
            let tests = read_jsonl(tests)?;
            let bundles = build_prompts(*seed, &pool, &tests, *k, &noise).map_err(|e| match e {
                EvalError::PoolTooSmall { .. } | EvalError::TestInPool(_) | EvalError::Config(_) => {
                    config_err(e.to_string())
                }
                other => other.into(),
            })?;
            write_prompts(out_dir, &bundles)?;
            println!("{} prompts -> {}", bundles.len(), out_dir.display());
        }
        Command::Evaluate { eval } => {
            evaluate(&file, eval, workers, None)?;
        }
        Command::Score { predictions, references, out } => {
            let preds = read_predictions(predictions)?;
            let refs = read_jsonl(references)?;
            let report = score(&preds, &refs).map_err(|e| match e {
                EvalError::IdMismatch(_) => config_err(e.to_string()),
                other => other.into(),
            })?;
            if let Some(out) = out {
                write_json(out, &report)?;
            }
            println!("{}", report.overall.accuracy);
        }
        Command::Sweep { data, levels, intensities, evaluate: eval, endpoint, k, n, dry_run, out_dir } => {
            let sect = file.sweep.clone().unwrap_or_default();
            let levels = levels.clone().or(sect.levels).unwrap_or_else(|| vec![0.25, 0.5, 0.75, 1.0]);
            let intensities = intensities.clone().or(sect.intensities).unwrap_or_else(|| vec![0.25, 0.5, 0.75, 1.0]);
            let base = data.spec(&file)?;
            if matches!(base.noise.kind, NoiseKind::None) {
                return Err(config_err("sweep needs a noise kind (--noise)"));
            }
            let mut rows = Vec::new();
            let mut curve = Vec::new();
            for &nd in &levels {
                for &intensity in &intensities {
                    let noise = NoiseConfig { dataset_level: nd, kind: base.noise.kind.with_intensity(intensity), ..base.noise };
                    noise.validate().map_err(|e| config_err(e.to_string()))?;
                    let cell = out_dir.join(format!("nd{nd}_i{intensity}"));
                    let path = cell.join("data.jsonl");
                    let spec = DatasetSpec { noise, output: Some(path.clone()), ..base.clone() };
                    let m = generate_to_file(&spec, &path, workers)?;
                    let rate = m
                        .stats
                        .digit_flip
                        .as_ref()
                        .or(m.stats.line_deletion.as_ref())
                        .or(m.stats.dynamic_corruption.as_ref())
                        .map(|r| r.rate);
                    rows.push(SweepRow {
                        noise: noise.kind.name(),
                        dataset_level: nd,
                        intensity,
                        records: m.records,
                        noised_fraction: m.stats.noised_fraction,
                        measured_rate: rate,
                        mean_cot_lines: m.stats.mean_cot_lines,
                    });
                    if *eval {
                        let args = EvalArgs {
                            data: data.clone(),
                            endpoint: endpoint.clone(),
                            k: *k,
                            n: *n,
                            pool: None,
                            dry_run: *dry_run,
                            out_dir: cell.join("eval"),
                        };
                        let outcome = evaluate(&file, &args, workers, Some(noise))?;
                        if let Some(accuracy) = outcome.accuracy {
                            curve.push(CurveRow {
                                noise: noise.kind.name().into(),
                                dataset_level: nd,
                                intensity,
                                task: base.inputs.task.name().into(),
                                k: k.or(file.eval.as_ref().and_then(|e| e.k)).unwrap_or(6),
                                n: outcome.n,
                                accuracy,
                            });
                        }
                    }
                }
            }
            write_sweep_csv(&out_dir.join("sweep.csv"), &rows)?;
            if !curve.is_empty() {
                write_curve_csv(&out_dir.join("curve.csv"), &curve)?;
            }
            write_json(&out_dir.join("sweep.manifest.json"), &json!({
                "tool_version": TOOL_VERSION,
                "spec": base,
                "levels": levels,
                "intensities": intensities,
                "evaluate": eval,
            }))?;
            println!("{} cells -> {}", rows.len(), out_dir.display());
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    noise: &'static str,
    dataset_level: f64,
    intensity: f64,
    records: usize,
    noised_fraction: f64,
    measured_rate: Option<f64>,
    mean_cot_lines: f64,
}

fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    write_atomic(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        for r in rows {
            csv.serialize(r).map_err(|e| DatasetError::InvalidSpec(e.to_string()))?;
        }
        csv.flush().map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })
    })?;
    Ok(())
}

fn is_config_error(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.is::<ConfigError>()
            || matches!(
                e.downcast_ref::<DatasetError>(),
                Some(DatasetError::InvalidSpec(_) | DatasetError::Sampling(_) | DatasetError::Noise(_))
            )
            || matches!(
                e.downcast_ref::<EvalError>(),
                Some(EvalError::Config(_) | EvalError::PoolTooSmall { .. } | EvalError::IdMismatch(_))
            )
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_config_error(&e) { 1 } else { 2 })
        }
    }
}
