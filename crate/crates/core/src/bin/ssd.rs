use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use deinterleave::classical::{toas_from_dtoa, Baseline, ClassMapper};
use deinterleave::dataset::{builtin_config, generate_dataset, read_jsonl, write_jsonl, write_predictions_jsonl, Sample, Split};
use deinterleave::harness::{
    evaluate, gradcheck_suite, predict_all, prediction_records, rho_grid, sweep, train, write_sweep_csv, Condition,
    TrainConfig, TrainedModel,
};
use deinterleave::models::{ModelKind, ModelSpec, Preset};

#[derive(Parser)]
#[command(name = "ssd", version, about = "Per-pulse radar deinterleaving: simulate, train, evaluate, compare")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled dataset as JSONL (gzip when the path ends in .gz).
    Simulate(SimulateArgs),
    /// Train a model and write a checkpoint.
    Train(TrainArgs),
    /// Score a checkpoint on a dataset.
    Eval(EvalArgs),
    /// Accuracy of a checkpoint over a grid of fixed loss/noise rates.
    Sweep(SweepArgs),
    /// Run a classical deinterleaver on a dataset.
    Baseline(BaselineArgs),
    /// Finite-difference check of every tape op and model kind.
    Gradcheck(GradcheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Test,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    experiment: u32,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "train")]
    split: SplitArg,
    /// Pulses per sample (default: the experiment's own length).
    #[arg(long)]
    seq_len: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    experiment: u32,
    /// blstm | bgru | dcn
    #[arg(long, default_value = "blstm")]
    model: String,
    /// desk | 611k | 211k
    #[arg(long, default_value = "desk")]
    preset: String,
    /// Hidden size (recurrent) or channel count (DCN); overrides the preset.
    #[arg(long)]
    width: Option<usize>,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// Train on consecutive windows of this many pulses.
    #[arg(long)]
    crop: Option<usize>,
    /// Cap on the global gradient norm of each batch.
    #[arg(long)]
    clip_norm: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Training data; generated from --count and --seed when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    count: usize,
    #[arg(long)]
    seq_len: Option<usize>,
    /// Dataset scored after every epoch.
    #[arg(long)]
    holdout: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Metrics JSON; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-sample predicted labels as JSONL.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Unused by evaluation, accepted for a uniform interface.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConditionArg {
    A,
    B,
    C,
}

impl From<ConditionArg> for Condition {
    fn from(c: ConditionArg) -> Self {
        match c {
            ConditionArg::A => Condition::A,
            ConditionArg::B => Condition::B,
            ConditionArg::C => Condition::C,
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, value_enum)]
    condition: ConditionArg,
    /// Explicit comma-separated rho values; overrides --max/--step.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.5)]
    max: f64,
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    /// Test samples per grid point.
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long)]
    seq_len: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Sdif,
    Pritran,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(value_enum)]
    method: Method,
    #[arg(long)]
    data: PathBuf,
    /// JSON configuration (same shape as the method's config struct, with a
    /// "method" tag); defaults are sized to the dataset's experiment.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Threshold values to try: threshold_x for sdif, peak_threshold for pritran.
    #[arg(long, value_delimiter = ',')]
    tune: Option<Vec<f64>>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    seeds: usize,
}

const GRADCHECK_TOLERANCE: f64 = 1e-4;

type CliResult<T> = Result<T, String>;

fn ctx<T, E: std::fmt::Display>(r: Result<T, E>, what: impl FnOnce() -> String) -> CliResult<T> {
    r.map_err(|e| format!("{}: {e}", what()))
}

fn load_data(path: &Path) -> CliResult<Vec<Sample>> {
    ctx(read_jsonl(path), || format!("reading dataset {}", path.display()))
}

fn dataset_experiment(samples: &[Sample], path: &Path) -> CliResult<u32> {
    let first = samples.first().ok_or_else(|| format!("dataset {} is empty", path.display()))?;
    let id = first.meta.experiment;
    if samples.iter().any(|s| s.meta.experiment != id) {
        return Err(format!("dataset {} mixes experiments", path.display()));
    }
    Ok(id)
}

fn simulate(a: SimulateArgs) -> CliResult<()> {
    let mut config = ctx(builtin_config(a.experiment), || "simulate".into())?;
    if let Some(len) = a.seq_len {
        config = config.with_seq_len(len);
    }
    let split = match a.split {
        SplitArg::Train => Split::Train,
        SplitArg::Test => Split::Test,
    };
    let samples = ctx(generate_dataset(&config, a.count, a.seed, split), || "simulate".into())?;
    ctx(write_jsonl(&samples, &a.out), || format!("writing {}", a.out.display()))?;
    eprintln!("wrote {} samples to {}", samples.len(), a.out.display());
    Ok(())
}

fn train_cmd(a: TrainArgs) -> CliResult<()> {
    let kind: ModelKind = ctx(a.model.parse(), || "--model".into())?;
    let preset: Preset = ctx(a.preset.parse(), || "--preset".into())?;
    let mut config = ctx(builtin_config(a.experiment), || "train".into())?;
    if let Some(len) = a.seq_len {
        config = config.with_seq_len(len);
    }
    let data = match &a.data {
        Some(p) => load_data(p)?,
        None => ctx(generate_dataset(&config, a.count, a.seed, Split::Train), || "generating training data".into())?,
    };
    let holdout = a.holdout.as_deref().map(load_data).transpose()?;
    let c = config.num_classes();
    let spec = match (a.width, kind) {
        (Some(w), ModelKind::Blstm) => ModelSpec::blstm(w, c),
        (Some(w), ModelKind::Bgru) => ModelSpec::bgru(w, c),
        (Some(w), ModelKind::Dcn) => ModelSpec::dcn(w, c),
        (None, _) => ModelSpec::from_preset(kind, preset, c),
    };
    let cfg = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch_size,
        learning_rate: a.lr,
        seed: a.seed,
        preset,
        crop: a.crop,
        clip_norm: a.clip_norm,
        ..TrainConfig::new(a.experiment, kind)
    };
    eprintln!("{} with {} parameters on {} samples", kind.name(), spec.param_count(), data.len());
    let trained = ctx(
        train(spec, &data, holdout.as_deref(), &cfg, |s| match s.holdout_accuracy {
            Some(acc) => eprintln!("epoch {:>3}  loss {:.4}  holdout {:.4}", s.epoch, s.train_loss, acc),
            None => eprintln!("epoch {:>3}  loss {:.4}", s.epoch, s.train_loss),
        }),
        || "training".into(),
    )?;
    ctx(trained.save(&a.out), || format!("writing {}", a.out.display()))
}

fn eval_cmd(a: EvalArgs) -> CliResult<()> {
    let trained = ctx(TrainedModel::load(&a.checkpoint), || "loading checkpoint".into())?;
    let data = load_data(&a.data)?;
    let model_classes = trained.model.spec.num_classes;
    let exp = dataset_experiment(&data, &a.data)?;
    let data_classes = ctx(builtin_config(exp), || "dataset experiment".into())?.num_classes();
    let max_label = data.iter().flat_map(|s| s.labels.iter().copied()).max().unwrap_or(0);
    if data_classes != model_classes || max_label >= model_classes {
        return Err(format!(
            "class count mismatch: checkpoint {} has {model_classes} classes but dataset {} (experiment {exp}) has {data_classes}",
            a.checkpoint.display(),
            a.data.display()
        ));
    }
    let predictions = ctx(predict_all(&trained.model, &data), || "prediction".into())?;
    let metrics = ctx(evaluate(&predictions, &data, model_classes), || "scoring".into())?;
    if let Some(p) = &a.predictions {
        let records = prediction_records(&data, &predictions);
        ctx(write_predictions_jsonl(&records, p), || format!("writing {}", p.display()))?;
    }
    match &a.out {
        Some(p) => ctx(metrics.write_json(p), || format!("writing {}", p.display()))?,
        None => println!("{}", ctx(serde_json::to_string_pretty(&metrics), || "metrics".into())?),
    }
    eprintln!("accuracy {:.4} over {} pulses", metrics.accuracy, metrics.pulses);
    Ok(())
}

fn sweep_cmd(a: SweepArgs) -> CliResult<()> {
    let trained = ctx(TrainedModel::load(&a.checkpoint), || "loading checkpoint".into())?;
    let mut config = ctx(builtin_config(trained.meta.config.experiment), || "sweep".into())?;
    if let Some(len) = a.seq_len {
        config = config.with_seq_len(len);
    }
    let grid = a.grid.unwrap_or_else(|| rho_grid(a.max, a.step));
    let model = &trained.model;
    let rows = ctx(
        sweep(model.spec.kind.name(), &config, a.condition.into(), &grid, a.count, a.seed, |d| model.predict_labels(d)),
        || "sweep".into(),
    )?;
    ctx(write_sweep_csv(&rows, &a.out), || format!("writing {}", a.out.display()))
}

const BASELINE_HEADER: &str = "method,experiment,threshold,sample,rho_l,rho_n,accuracy,n_pulses";

fn baseline_cmd(a: BaselineArgs) -> CliResult<()> {
    let data = load_data(&a.data)?;
    let exp = dataset_experiment(&data, &a.data)?;
    let config = ctx(builtin_config(exp), || "baseline".into())?;
    let method = match a.method {
        Method::Sdif => "sdif",
        Method::Pritran => "pritran",
    };
    let base = match &a.config {
        Some(p) => {
            let text = ctx(fs::read_to_string(p), || format!("reading {}", p.display()))?;
            let b: Baseline = ctx(serde_json::from_str(&text), || format!("parsing {}", p.display()))?;
            if b.name() != method {
                return Err(format!("{} configures `{}`, not `{method}`", p.display(), b.name()));
            }
            b
        }
        None => ctx(Baseline::for_experiment(method, &config), || "baseline".into())?,
    };
    let current = match &base {
        Baseline::Sdif(c) => c.threshold_x,
        Baseline::Pritran(c) => c.peak_threshold,
    };
    let thresholds = a.tune.unwrap_or_else(|| vec![current]);
    let mapper = ClassMapper::new(&config);
    let mut csv = format!("{BASELINE_HEADER}\n");
    for &t in &thresholds {
        let mut b = base.clone();
        match &mut b {
            Baseline::Sdif(c) => c.threshold_x = t,
            Baseline::Pritran(c) => c.peak_threshold = t,
        }
        let mut preds = Vec::with_capacity(data.len());
        for (i, s) in data.iter().enumerate() {
            let result = ctx(b.run(&toas_from_dtoa(&s.dtoa)), || format!("sample {i}"))?;
            let labels = mapper.labels(&result);
            let m = ctx(evaluate(std::slice::from_ref(&labels), std::slice::from_ref(s), config.num_classes()), || {
                format!("sample {i}")
            })?;
            csv.push_str(&format!(
                "{method},{exp},{t},{i},{},{},{},{}\n",
                s.meta.rho_l, s.meta.rho_n, m.accuracy, m.pulses
            ));
            preds.push(labels);
        }
        let pooled = ctx(evaluate(&preds, &data, config.num_classes()), || "scoring".into())?;
        eprintln!("{method} threshold {t}: accuracy {:.4} over {} pulses", pooled.accuracy, pooled.pulses);
    }
    ctx(fs::write(&a.out, csv), || format!("writing {}", a.out.display()))
}

fn gradcheck_cmd(a: GradcheckArgs) -> CliResult<bool> {
    let report = ctx(gradcheck_suite(a.seed, a.seeds), || "gradcheck".into())?;
    let mut ok = true;
    for e in &report {
        let pass = e.max_rel_error < GRADCHECK_TOLERANCE;
        ok &= pass;
        println!("{:<24} {:.3e}  {}", e.name, e.max_rel_error, if pass { "ok" } else { "FAIL" });
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a).map(|_| true),
        Command::Train(a) => train_cmd(a).map(|_| true),
        Command::Eval(a) => eval_cmd(a).map(|_| true),
        Command::Sweep(a) => sweep_cmd(a).map(|_| true),
        Command::Baseline(a) => baseline_cmd(a).map(|_| true),
        Command::Gradcheck(a) => gradcheck_cmd(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
