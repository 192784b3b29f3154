use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use tsl_lsr::classifier::{predict_argmax_tsl_batch, predict_nn_batch, transform};
use tsl_lsr::data::load_csv;
use tsl_lsr::eval::{self, Algorithm, EvalConfig, Summary, DEFAULT_GRID};
use tsl_lsr::model_io::{load_model, save_model};
use tsl_lsr::{solver, Dataset, Hyperparams};

/// Transition subspace learning least squares regression.
#[derive(Debug, Parser)]
#[command(name = "tsl-lsr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model on every sample of a CSV file.
    Train(TrainArgs),
    /// Classify the samples of a CSV file with a saved model.
    Predict(PredictArgs),
    /// Repeated random-split evaluation, optionally against standard LSR.
    Eval(EvalArgs),
    /// Accuracy over an alpha x beta grid.
    Grid(GridArgs),
    /// Accuracy as a function of the transition dimension p.
    SweepP(SweepArgs),
    /// Write the two-stage features QWx of every sample.
    Features(FeaturesArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Row-per-sample CSV with a trailing integer label column.
    #[arg(long)]
    data: PathBuf,
    /// The first CSV row is a header.
    #[arg(long)]
    header: bool,
}

#[derive(Debug, Args)]
struct HyperArgs {
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    #[arg(long, default_value_t = 0.01)]
    lambda1: f64,
    #[arg(long, default_value_t = 0.01)]
    lambda2: f64,
    /// Transition dimension; defaults to the number of classes.
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
}

impl HyperArgs {
    fn build(&self) -> tsl_lsr::Result<Hyperparams> {
        Hyperparams::builder()
            .alpha(self.alpha)
            .beta(self.beta)
            .lambda1(self.lambda1)
            .lambda2(self.lambda2)
            .p(self.p)
            .tol(self.tol)
            .max_iters(self.max_iters)
            .build()
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Where to write the model.
    #[arg(long)]
    out: PathBuf,
    /// Optional per-iteration trace CSV (iter,objective,residual,mu).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Rule {
    /// Nearest stored training feature.
    Nn,
    /// Largest entry of QWx.
    Argmax,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value_t = Rule::Nn)]
    rule: Rule,
    /// Optional CSV of predicted labels, one per sample.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SplitArgs {
    /// Training samples drawn from each class per repeat.
    #[arg(long)]
    per_class_train: usize,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    split: SplitArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Also evaluate standard ridge LSR with argmax decisions.
    #[arg(long)]
    baseline: bool,
    /// Ridge weight of the baseline.
    #[arg(long, default_value_t = 0.01)]
    baseline_lambda: f64,
    /// Optional CSV (algorithm,repeat,accuracy).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    split: SplitArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Comma-separated alpha values.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_GRID)]
    alphas: Vec<f64>,
    /// Comma-separated beta values.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_GRID)]
    betas: Vec<f64>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    split: SplitArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Comma-separated transition dimensions.
    #[arg(long, value_delimiter = ',', required = true)]
    p_values: Vec<usize>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FeaturesArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Feature CSV: one row per sample, label last.
    #[arg(long)]
    out: PathBuf,
}

type CmdResult = Result<(), Box<dyn std::error::Error>>;

fn load(args: &DataArgs) -> tsl_lsr::Result<Dataset> {
    let ds = load_csv(&args.data, args.header)?;
    info!(
        "loaded {}: {} samples, {} features, {} classes",
        args.data.display(),
        ds.len(),
        ds.dim(),
        ds.num_classes()
    );
    Ok(ds)
}

fn emit(out: Option<&Path>, text: &str) -> std::io::Result<()> {
    match out {
        Some(path) => fs::write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn eval_config(split: &SplitArgs, hyper: &HyperArgs, baseline: Option<f64>) -> tsl_lsr::Result<EvalConfig> {
    Ok(EvalConfig {
        per_class_train: split.per_class_train,
        repeats: split.repeats,
        seed: split.seed,
        hyperparams: hyper.build()?,
        baseline_lambda: baseline,
    })
}

fn cmd_train(args: TrainArgs) -> CmdResult {
    let hp = args.hyper.build()?;
    let ds = load(&args.data)?.normalized();
    let (model, report) = solver::fit(&ds, &hp)?;
    save_model(&model, &args.out)?;

    if let Some(path) = &args.trace {
        let mut csv = String::from("iter,objective,residual,mu\n");
        for (k, ((obj, res), mu)) in report
            .objective_trace
            .iter()
            .zip(&report.residual_trace)
            .zip(&report.mu_trace)
            .enumerate()
        {
            let _ = writeln!(csv, "{},{obj:e},{res:e},{mu:e}", k + 1);
        }
        fs::write(path, csv)?;
    }

    let (d, p, c) = model.dims();
    println!("trained on {} samples (d = {d}, p = {p}, c = {c})", ds.len());
    println!(
        "{} after {} iterations; objective {:.6e}, residual {:.3e}",
        report.stop_reason,
        report.iterations_run,
        report.objective_trace.last().copied().unwrap_or(f64::NAN),
        report.residual_trace.last().copied().unwrap_or(f64::NAN),
    );
    println!("model written to {}", args.out.display());
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> CmdResult {
    let model = load_model(&args.model)?;
    let ds = load(&args.data)?.normalized();
    let predicted = match args.rule {
        Rule::Nn => predict_nn_batch(&model, ds.samples())?,
        Rule::Argmax => predict_argmax_tsl_batch(&model, ds.samples())?,
    };
    let names = model.class_names();
    let truth = ds.labels().iter().map(|&l| ds.class_names()[l]);
    let hits = predicted
        .iter()
        .zip(truth)
        .filter(|(&p, t)| names[p] == *t)
        .count();
    println!(
        "accuracy {:.2}% ({hits}/{})",
        100.0 * hits as f64 / ds.len() as f64,
        ds.len()
    );
    if let Some(path) = &args.out {
        let mut csv = String::from("label\n");
        for &p in &predicted {
            let _ = writeln!(csv, "{}", names[p]);
        }
        fs::write(path, csv)?;
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> CmdResult {
    let ds = load(&args.data)?;
    let baseline = args.baseline.then_some(args.baseline_lambda);
    let config = eval_config(&args.split, &args.hyper, baseline)?;
    let report = eval::evaluate(&ds, &config)?;

    let mut table = format!("{:<10} {:>8} {:>12}\n", "algorithm", "repeat", "accuracy(%)");
    let mut csv = String::from("algorithm,repeat,accuracy\n");
    for algorithm in [Algorithm::TslLsr, Algorithm::StandardLsr] {
        let Some(accs) = report.accuracies(algorithm) else {
            continue;
        };
        for (r, acc) in accs.iter().enumerate() {
            let _ = writeln!(table, "{algorithm:<10} {r:>8} {acc:>12.2}");
            let _ = writeln!(csv, "{algorithm},{r},{acc}");
        }
        let Summary { mean, std } = Summary::of(accs);
        let _ = writeln!(table, "{algorithm:<10} {:>8} {:>12}", "mean", format!("{mean:.2} ± {std:.2}"));
        let _ = writeln!(csv, "{algorithm},mean,{mean}");
    }
    print!("{table}");
    if let Some(path) = &args.out {
        fs::write(path, csv)?;
    }
    Ok(())
}

fn cmd_grid(args: GridArgs) -> CmdResult {
    let ds = load(&args.data)?;
    let config = eval_config(&args.split, &args.hyper, None)?;
    let cells = eval::grid_search(&ds, &config, &args.alphas, &args.betas)?;
    let mut csv = String::from("alpha,beta,mean_acc,std\n");
    for cell in &cells {
        let _ = writeln!(csv, "{},{},{},{}", cell.alpha, cell.beta, cell.summary.mean, cell.summary.std);
    }
    emit(args.out.as_deref(), &csv)?;
    let (lo, hi) = cells.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
        (lo.min(c.summary.mean), hi.max(c.summary.mean))
    });
    eprintln!("accuracy spread over the grid: {:.2} points ({lo:.2} to {hi:.2})", hi - lo);
    Ok(())
}

fn cmd_sweep_p(args: SweepArgs) -> CmdResult {
    let ds = load(&args.data)?;
    let config = eval_config(&args.split, &args.hyper, None)?;
    let points = eval::sweep_p(&ds, &config, &args.p_values)?;
    let mut csv = String::from("p,mean_acc,std\n");
    for pt in &points {
        let _ = writeln!(csv, "{},{},{}", pt.p, pt.summary.mean, pt.summary.std);
    }
    emit(args.out.as_deref(), &csv)?;
    Ok(())
}

fn cmd_features(args: FeaturesArgs) -> CmdResult {
    let model = load_model(&args.model)?;
    let ds = load(&args.data)?.normalized();
    let features = transform(&model, ds.samples())?;
    let mut csv = String::new();
    for (col, &label) in features.column_iter().zip(ds.labels()) {
        for v in col.iter() {
            let _ = write!(csv, "{v:?},");
        }
        let _ = writeln!(csv, "{}", ds.class_names()[label]);
    }
    fs::write(&args.out, csv)?;
    println!("wrote {} feature rows to {}", ds.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Grid(a) => cmd_grid(a),
        Command::SweepP(a) => cmd_sweep_p(a),
        Command::Features(a) => cmd_features(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
