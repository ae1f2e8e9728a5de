use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use dfr::dataset::{self, Dataset, SynthSpec};
use dfr::masking::{default_init, parse_bits, MaskMatrix, PrimitivePolynomial};
use dfr::pipeline::{self, ExperimentConfig, Validation, DEFAULT_GRID, DEFAULT_SPLIT_SEED};
use dfr::reproduce;

/// Digital delayed feedback reservoir classifier for multivariate time series.
///
/// Machine-readable results go to stdout as JSON; diagnostics go to stderr.
#[derive(Parser)]
#[command(name = "dfr", version)]
struct Cli {
    /// Worker threads (default: all cores). Never changes results.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the input mask matrix.
    Mask(MaskArgs),
    /// Fit a model on the training split and save it.
    Train(TrainArgs),
    /// Predict labels for one split of a dataset.
    Predict(PredictArgs),
    /// Evaluate a saved model on one split of a dataset.
    Eval(EvalArgs),
    /// Grid search gamma and eta on validation folds of the training split.
    Grid(GridArgs),
    /// Convert a CSV directory tree into an RCTS-v1 file.
    Convert(ConvertArgs),
    /// Write a synthetic sinusoid dataset.
    Synth(SynthArgs),
    /// Run the bundled presets and compare with published accuracies.
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct MaskArgs {
    #[arg(long, default_value_t = 5)]
    m: usize,
    /// Polynomial taps below the leading term, e.g. "1,0" for x^3+x+1.
    #[arg(long, value_delimiter = ',')]
    poly: Option<Vec<usize>>,
    /// LFSR seed bits, e.g. "001".
    #[arg(long)]
    init: Option<String>,
    #[arg(long, default_value_t = 1)]
    vars: usize,
}

#[derive(Args)]
#[group(id = "source", required = true, multiple = false)]
struct ConfigSource {
    /// Experiment config JSON file.
    #[arg(long, group = "source")]
    config: Option<PathBuf>,
    /// Bundled preset name, e.g. "arab_dprr" or "compare_oms".
    #[arg(long, group = "source")]
    preset: Option<String>,
}

impl ConfigSource {
    fn load(&self) -> anyhow::Result<ExperimentConfig> {
        match (&self.config, &self.preset) {
            (Some(path), _) => Ok(ExperimentConfig::load(path)?),
            (None, Some(name)) => Ok(reproduce::preset(name)?),
            (None, None) => unreachable!("clap enforces one source"),
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    dataset: PathBuf,
    #[command(flatten)]
    source: ConfigSource,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Test,
}

impl SplitArg {
    fn pick(self, ds: &Dataset) -> &[dataset::TimeSeriesInstance] {
        match self {
            SplitArg::Train => &ds.train,
            SplitArg::Test => &ds.test,
        }
    }
}

#[derive(Args)]
struct PredictArgs {
    model: PathBuf,
    dataset: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    split: SplitArg,
}

#[derive(Args)]
struct EvalArgs {
    model: PathBuf,
    dataset: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    split: SplitArg,
    /// Also write the report JSON here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the confusion matrix as CSV.
    #[arg(long)]
    confusion_csv: Option<PathBuf>,
    /// Include per-instance predictions in the report.
    #[arg(long)]
    predictions: bool,
    /// Include wall time in the report (makes it run-dependent).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct GridArgs {
    dataset: PathBuf,
    #[command(flatten)]
    source: ConfigSource,
    #[arg(long, value_delimiter = ',')]
    gammas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    etas: Option<Vec<f64>>,
    /// Stratified k-fold instead of the default 80/20 holdout.
    #[arg(long, conflicts_with = "holdout")]
    folds: Option<usize>,
    /// Holdout fraction of the training split.
    #[arg(long)]
    holdout: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SPLIT_SEED)]
    seed: u64,
    /// Write the best config here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConvertArgs {
    dir: PathBuf,
    #[arg(long)]
    name: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = SynthSpec::default().n_classes)]
    classes: usize,
    #[arg(long, default_value_t = SynthSpec::default().n_vars)]
    vars: usize,
    #[arg(long, default_value_t = SynthSpec::default().n_train)]
    train: usize,
    #[arg(long, default_value_t = SynthSpec::default().n_test)]
    test: usize,
    #[arg(long, default_value_t = SynthSpec::default().t_min)]
    t_min: usize,
    #[arg(long, default_value_t = SynthSpec::default().t_max)]
    t_max: usize,
    #[arg(long, default_value_t = SynthSpec::default().seed)]
    seed: u64,
    #[arg(long, default_value_t = SynthSpec::default().noise)]
    noise: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReproduceArgs {
    /// 3: representation comparison on ARAB; 6: DFR accuracy per dataset.
    #[arg(long, value_parser = ["3", "6"])]
    table: String,
    /// Dataset code(s); all twelve for the per-dataset table when omitted.
    #[arg(long, value_delimiter = ',')]
    dataset: Vec<String>,
    /// Directory holding `<code>.rcts.jsonl` files.
    #[arg(long, default_value = "data")]
    data_dir: PathBuf,
    /// Mask degrees for the representation table.
    #[arg(long, value_delimiter = ',', default_value = "3,4,5,6")]
    m: Vec<usize>,
}

fn print_json(value: &impl Serialize) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn load_dataset(path: &Path) -> anyhow::Result<Dataset> {
    dataset::load(path).with_context(|| format!("cannot load dataset {}", path.display()))
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn cmd_mask(a: &MaskArgs) -> anyhow::Result<()> {
    let poly = match &a.poly {
        Some(taps) => PrimitivePolynomial::new(a.m, taps)?,
        None => PrimitivePolynomial::default_for(a.m)?,
    };
    let init = match &a.init {
        Some(s) => parse_bits(s)?,
        None => default_init(a.m),
    };
    let mask = MaskMatrix::new(&poly, &init, a.vars)?;
    eprintln!("mask {}x{}", mask.n_nodes(), mask.n_vars());
    print_json(&mask)
}

fn cmd_train(a: &TrainArgs, jobs: Option<usize>) -> anyhow::Result<()> {
    let cfg = a.source.load()?;
    let ds = load_dataset(&a.dataset)?;
    let start = Instant::now();
    let (model, report) = pipeline::with_jobs(jobs.or(cfg.jobs), || -> dfr::Result<_> {
        let model = pipeline::fit_dataset(&ds, &cfg)?;
        let report = pipeline::evaluate(&model, &ds.train, false)?;
        Ok((model, report))
    })??;
    pipeline::save_model(&model, &a.out)?;
    eprintln!(
        "trained {} on {} ({} instances) in {:.2}s, train accuracy {:.4}",
        cfg.representation,
        ds.name,
        ds.train.len(),
        start.elapsed().as_secs_f64(),
        report.accuracy
    );
    print_json(&json!({
        "model": a.out,
        "dataset": ds.name,
        "representation": model.kind(),
        "n_train": report.n,
        "train_accuracy": report.accuracy,
    }))
}

fn cmd_predict(a: &PredictArgs, jobs: Option<usize>) -> anyhow::Result<()> {
    let model = pipeline::load_model(&a.model)?;
    let ds = load_dataset(&a.dataset)?;
    let report = pipeline::with_jobs(jobs, || pipeline::evaluate(&model, a.split.pick(&ds), true))??;
    print_json(&report.predictions.unwrap_or_default())
}

fn cmd_eval(a: &EvalArgs, jobs: Option<usize>) -> anyhow::Result<()> {
    let model = pipeline::load_model(&a.model)?;
    let ds = load_dataset(&a.dataset)?;
    let start = Instant::now();
    let mut report = pipeline::with_jobs(jobs, || pipeline::evaluate(&model, a.split.pick(&ds), a.predictions))??;
    let elapsed = start.elapsed().as_secs_f64();
    if a.timing {
        report.wall_time_s = Some(elapsed);
    }
    eprintln!(
        "{}: accuracy {:.4} ({}/{}) in {:.2}s",
        ds.name, report.accuracy, report.correct, report.n, elapsed
    );
    if let Some(path) = &a.report {
        write_file(path, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    }
    if let Some(path) = &a.confusion_csv {
        write_file(path, &report.confusion_csv())?;
    }
    print_json(&report)
}

fn cmd_grid(a: &GridArgs, jobs: Option<usize>) -> anyhow::Result<()> {
    let base = a.source.load()?;
    let ds = load_dataset(&a.dataset)?;
    let gammas = a.gammas.clone().unwrap_or_else(|| DEFAULT_GRID.to_vec());
    let etas = a.etas.clone().unwrap_or_else(|| DEFAULT_GRID.to_vec());
    let validation = match (a.folds, a.holdout) {
        (Some(folds), _) => Validation::KFold { folds },
        (None, Some(fraction)) => Validation::Holdout { fraction },
        (None, None) => Validation::default(),
    };
    let result = pipeline::with_jobs(jobs.or(base.jobs), || pipeline::grid_search(&ds, &base, &gammas, &etas, validation, a.seed))??;
    for row in &result.table {
        eprintln!("gamma {:<8} eta {:<8} score {:.4}", row.gamma, row.eta, row.score);
    }
    eprintln!("best gamma {} eta {} ({:.4})", result.best.gamma, result.best.eta, result.best_score);
    if let Some(path) = &a.out {
        write_file(path, &(serde_json::to_string_pretty(&result.best)? + "\n"))?;
    }
    print_json(&result)
}

fn cmd_convert(a: &ConvertArgs) -> anyhow::Result<()> {
    let ds = dataset::convert_csv_dir(&a.dir, &a.name)?;
    dataset::save(&ds, &a.out)?;
    eprintln!("wrote {} ({} train, {} test)", a.out.display(), ds.train.len(), ds.test.len());
    print_json(&summary(&ds, &a.out))
}

fn summary(ds: &Dataset, path: &Path) -> serde_json::Value {
    json!({
        "path": path,
        "name": ds.name,
        "n_vars": ds.n_vars,
        "classes": ds.classes,
        "n_train": ds.train.len(),
        "n_test": ds.test.len(),
        "t_min": ds.t_min(),
        "t_max": ds.t_max(),
    })
}

fn cmd_synth(a: &SynthArgs) -> anyhow::Result<()> {
    let spec = SynthSpec {
        n_classes: a.classes,
        n_vars: a.vars,
        n_train: a.train,
        n_test: a.test,
        t_min: a.t_min,
        t_max: a.t_max,
        seed: a.seed,
        noise: a.noise,
    };
    let ds = dataset::synth(&spec)?;
    dataset::save(&ds, &a.out)?;
    eprintln!("wrote {}", a.out.display());
    print_json(&summary(&ds, &a.out))
}

fn cmd_reproduce(a: &ReproduceArgs, jobs: Option<usize>) -> anyhow::Result<()> {
    let load = |code: &str| -> anyhow::Result<Option<Dataset>> {
        let path = a.data_dir.join(reproduce::dataset_file_name(code));
        if !path.exists() {
            eprintln!("SKIP {code}: {} not found, reporting published numbers only", path.display());
            return Ok(None);
        }
        load_dataset(&path).map(Some)
    };
    let report = if a.table == "3" {
        if a.dataset.iter().any(|d| !d.eq_ignore_ascii_case("arab")) {
            bail!("the representation comparison is defined on ARAB only");
        }
        let ds = load("ARAB")?;
        pipeline::with_jobs(jobs, || reproduce::run_representation_comparison(ds.as_ref(), &a.m))??
    } else {
        let codes: Vec<String> = if a.dataset.is_empty() {
            reproduce::DATASETS.iter().map(|d| d.code.to_string()).collect()
        } else {
            a.dataset.clone()
        };
        let mut loaded = Vec::new();
        for code in &codes {
            if reproduce::dataset_info(code).is_none() {
                bail!("unknown dataset {code:?}");
            }
            loaded.push((code.to_ascii_uppercase(), load(code)?));
        }
        let refs: Vec<&str> = codes.iter().map(String::as_str).collect();
        pipeline::with_jobs(jobs, || {
            reproduce::run_dataset_comparison(&refs, |name| {
                Ok(loaded.iter().find(|(c, _)| c == name).and_then(|(_, d)| d.as_ref()))
            })
        })??
    };
    eprint!("{}", report.markdown());
    print_json(&report)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let jobs = cli.jobs.map(|j| j as usize);
    match &cli.command {
        Command::Mask(a) => cmd_mask(a),
        Command::Train(a) => cmd_train(a, jobs),
        Command::Predict(a) => cmd_predict(a, jobs),
        Command::Eval(a) => cmd_eval(a, jobs),
        Command::Grid(a) => cmd_grid(a, jobs),
        Command::Convert(a) => cmd_convert(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Reproduce(a) => cmd_reproduce(a, jobs),
    }
}

/// Error chain joined with ": ", skipping causes already spelled out by an
/// outer message.
fn describe(e: &anyhow::Error) -> String {
    let mut msg = e.to_string();
    for cause in e.chain().skip(1) {
        let text = cause.to_string();
        if !msg.contains(&text) {
            msg = format!("{msg}: {text}");
        }
    }
    msg
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(1)
        }
    }
}
