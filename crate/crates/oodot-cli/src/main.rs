//! Command-line front end: parse prediction/marginal files, run the
//! estimators, and drive the synthetic generators.
//!
//! Exit codes: 0 on success, 2 for usage problems or missing inputs, 3 for
//! malformed data files.

mod io;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use oodot::{
    ac_mc, atc, atc_fit, batched, cot, cott, cott_fit, dirichlet_shift, fit_temperature, gde,
    im, sweep, synth_classifier, tightness_family, true_error, w_inf, BatchPlan,
    ConfidenceScore, Estimate, LabelMarginal, Method, PredictionSet, ScoreKind, SweepConfig,
    SweepRow,
};

use io::{
    format_marginal, format_predictions, parse_marginal, parse_predictions, CalibrateReport,
    EstimateReport, EvaluateSummary,
};

#[derive(Debug)]
pub enum CliError {
    /// Flag problems and missing inputs; exit code 2.
    Usage(String),
    /// Malformed data files; exit code 3.
    Data(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl From<oodot::Error> for CliError {
    fn from(e: oodot::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "oodot",
    about = "Predict a classifier's error on unlabeled, shifted test sets from its confidence outputs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a softmax temperature on labeled validation logits.
    Calibrate(CalibrateArgs),
    /// Estimate the error of a target prediction file.
    Estimate(EstimateArgs),
    /// Per-sample optimal-transport costs against a source marginal.
    Costs(CostsArgs),
    /// Run one method over many labeled target files and report the MAE.
    Evaluate(EvaluateArgs),
    /// Generate synthetic marginals, prediction files, and sweep tables.
    #[command(subcommand)]
    Synth(SynthCommand),
}

/// Score interpretation; exactly one must be given (no sniffing).
#[derive(Args)]
#[group(required = true, multiple = false)]
struct KindFlag {
    /// Score columns hold probability rows.
    #[arg(long)]
    probs: bool,
    /// Score columns hold raw logits.
    #[arg(long)]
    logits: bool,
}

impl KindFlag {
    fn kind(&self) -> ScoreKind {
        if self.logits {
            ScoreKind::Logits
        } else {
            ScoreKind::Probabilities
        }
    }
}

#[derive(Args)]
struct CalibrateArgs {
    /// Labeled validation predictions.
    #[arg(long)]
    val: PathBuf,
    #[command(flatten)]
    kind: KindFlag,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

#[derive(Args)]
struct EstimateArgs {
    /// One of: ac, doc, im, gde, atc-mc, atc-ne, cot, cott.
    #[arg(long, value_parser = parse_method)]
    method: Method,
    /// Target predictions (unlabeled is fine).
    #[arg(long)]
    target: PathBuf,
    #[command(flatten)]
    kind: KindFlag,
    /// Labeled validation predictions (doc, im, atc-*, cott; also derives
    /// the source marginal for cot/cott when --source-marginal is absent).
    #[arg(long)]
    val: Option<PathBuf>,
    /// Predictions of a second independently trained model (gde).
    #[arg(long)]
    second: Option<PathBuf>,
    /// Source label marginal CSV (cot, cott).
    #[arg(long)]
    source_marginal: Option<PathBuf>,
    /// Softmax temperature applied to logit inputs.
    #[arg(long)]
    temperature: Option<f64>,
    /// Maximum batch size for the transport-based estimators.
    #[arg(long, default_value_t = BatchPlan::DEFAULT_BATCH_MAX)]
    batch_max: usize,
    /// Seed for batched sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Confidence bins for im.
    #[arg(long, default_value_t = 10)]
    bins: usize,
}

#[derive(Args)]
struct CostsArgs {
    #[arg(long)]
    target: PathBuf,
    #[command(flatten)]
    kind: KindFlag,
    #[arg(long)]
    source_marginal: PathBuf,
    #[arg(long)]
    temperature: Option<f64>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long, value_parser = parse_method)]
    method: Method,
    /// Glob over labeled target prediction files.
    #[arg(long)]
    targets: String,
    #[command(flatten)]
    kind: KindFlag,
    /// Labels are always required on evaluate targets; flag kept for
    /// explicit pipelines.
    #[arg(long, action = clap::ArgAction::SetTrue)]
    labels_required: bool,
    #[arg(long)]
    val: Option<PathBuf>,
    #[arg(long)]
    second: Option<PathBuf>,
    #[arg(long)]
    source_marginal: Option<PathBuf>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long, default_value_t = BatchPlan::DEFAULT_BATCH_MAX)]
    batch_max: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    bins: usize,
    /// Write the per-file CSV here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Draw a shifted marginal from Dirichlet(alpha * base).
    Dirichlet {
        /// Base marginal CSV; uniform over --k classes when absent.
        #[arg(long)]
        base: Option<PathBuf>,
        /// Class count for the uniform base.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 50.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output marginal CSV (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Labeled predictions of a parametric synthetic classifier.
    Classifier {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        /// Fraction of predictions flipped to a wrong class.
        #[arg(long)]
        error: f64,
        /// Mass placed on the predicted class.
        #[arg(long)]
        confidence: f64,
        /// Label marginal CSV; uniform when absent.
        #[arg(long)]
        marginal: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output prediction CSV (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-hot family realizing the COT lower-bound bracket.
    Tightness {
        /// Pseudo-label marginal CSV.
        #[arg(long)]
        pseudo: PathBuf,
        /// Target label marginal CSV.
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid sweep over target error x confidence x marginal shift.
    Sweep {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        /// Comma-separated target errors.
        #[arg(long, value_delimiter = ',')]
        errors: Option<Vec<f64>>,
        /// Comma-separated confidences.
        #[arg(long, value_delimiter = ',')]
        confidences: Option<Vec<f64>>,
        /// Comma-separated marginal shifts.
        #[arg(long, value_delimiter = ',')]
        shifts: Option<Vec<f64>>,
        #[arg(long)]
        val_error: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Costs(args) => cmd_costs(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Synth(args) => cmd_synth(args),
    }
}

fn check_temperature(temperature: Option<f64>) -> CliResult<()> {
    if let Some(t) = temperature {
        if t <= 0.0 || !t.is_finite() {
            return Err(CliError::Usage(format!(
                "--temperature must be a positive number, got {t}"
            )));
        }
    }
    Ok(())
}

/// Parse a prediction file and bring it to probability rows, applying the
/// temperature to logit inputs.
fn prepare(path: &Path, kind: ScoreKind, temperature: Option<f64>) -> CliResult<PredictionSet> {
    let p = parse_predictions(path, kind)?;
    match kind {
        ScoreKind::Logits => Ok(p.to_probabilities(temperature.unwrap_or(1.0))?),
        ScoreKind::Probabilities => {
            if temperature.is_some_and(|t| t != 1.0) {
                return Err(CliError::Usage(
                    "--temperature cannot be applied to --probs input; temperature scaling needs logits"
                        .into(),
                ));
            }
            Ok(p)
        }
    }
}

/// (file, true_error, estimate, abs_err) as written to the evaluate CSV.
type EvaluateRow = (String, f64, f64, f64);

struct MethodInputs {
    val: Option<PredictionSet>,
    second: Option<PredictionSet>,
    source_marginal: Option<LabelMarginal>,
    bins: usize,
    batch_max: usize,
    seed: u64,
}

impl MethodInputs {
    fn labeled_val(&self, method: Method) -> CliResult<&PredictionSet> {
        let val = self.val.as_ref().ok_or_else(|| {
            CliError::Usage(format!("--method {method} requires --val FILE with labels"))
        })?;
        if val.labels().is_none() {
            return Err(CliError::Usage(format!(
                "--method {method} requires a label column in --val"
            )));
        }
        Ok(val)
    }

    fn source_marginal(&self, method: Method) -> CliResult<LabelMarginal> {
        if let Some(m) = &self.source_marginal {
            return Ok(m.clone());
        }
        if let Some(val) = &self.val {
            if let Some(labels) = val.labels() {
                return Ok(LabelMarginal::from_labels(labels, val.k())?);
            }
        }
        Err(CliError::Usage(format!(
            "--method {method} requires --source-marginal FILE or --val FILE with labels"
        )))
    }
}

/// Dispatch one estimator; returns the estimate and the fitted threshold
/// when the method has one.
fn run_method(
    method: Method,
    target: &PredictionSet,
    inputs: &MethodInputs,
) -> CliResult<(Estimate, Option<f64>)> {
    let estimate = match method {
        Method::Ac => (ac_mc(target)?, None),
        Method::Doc => (oodot::doc(target, inputs.labeled_val(method)?)?, None),
        Method::Im => (im(target, inputs.labeled_val(method)?, inputs.bins)?, None),
        Method::Gde => {
            let second = inputs.second.as_ref().ok_or_else(|| {
                CliError::Usage("--method gde requires --second FILE".into())
            })?;
            (gde(target, second)?, None)
        }
        Method::AtcMc | Method::AtcNe => {
            let score = if method == Method::AtcMc {
                ConfidenceScore::MaxConfidence
            } else {
                ConfidenceScore::NegativeEntropy
            };
            let threshold = atc_fit(inputs.labeled_val(method)?, score)?;
            (atc(target, &threshold, score)?, Some(threshold.value))
        }
        Method::Cot => {
            let marginal = inputs.source_marginal(method)?;
            let plan = BatchPlan::for_n(target.n(), inputs.batch_max, inputs.seed)?;
            (batched(|p| cot(p, &marginal), target, &plan)?, None)
        }
        Method::Cott => {
            let marginal = inputs.source_marginal(method)?;
            let threshold = cott_fit(inputs.labeled_val(method)?, &marginal)?;
            let plan = BatchPlan::for_n(target.n(), inputs.batch_max, inputs.seed)?;
            (
                batched(|p| cott(p, &threshold, &marginal), target, &plan)?,
                Some(threshold.value),
            )
        }
    };
    Ok(estimate)
}

fn cmd_calibrate(args: CalibrateArgs) -> CliResult<()> {
    if args.kind.kind() != ScoreKind::Logits {
        return Err(CliError::Usage(
            "calibrate fits a temperature on raw scores; pass --logits".into(),
        ));
    }
    let val = parse_predictions(&args.val, ScoreKind::Logits)?;
    if val.labels().is_none() {
        return Err(CliError::Usage(
            "calibrate requires a label column in --val".into(),
        ));
    }
    let fit = fit_temperature(&val)?;
    let report = CalibrateReport {
        temperature: fit.temperature,
        nll: fit.nll,
        clamped: fit.clamped,
    };
    println!("{}", to_json(&report)?);
    Ok(())
}

fn cmd_estimate(args: EstimateArgs) -> CliResult<()> {
    let start = Instant::now();
    check_temperature(args.temperature)?;
    let kind = args.kind.kind();
    let target = prepare(&args.target, kind, args.temperature)?;
    let inputs = MethodInputs {
        val: args
            .val
            .as_deref()
            .map(|p| prepare(p, kind, args.temperature))
            .transpose()?,
        second: args
            .second
            .as_deref()
            .map(|p| prepare(p, kind, args.temperature))
            .transpose()?,
        source_marginal: args
            .source_marginal
            .as_deref()
            .map(parse_marginal)
            .transpose()?,
        bins: args.bins,
        batch_max: args.batch_max,
        seed: args.seed,
    };
    let (estimate, threshold) = run_method(args.method, &target, &inputs)?;
    let report = EstimateReport {
        method: estimate.method.to_string(),
        value: estimate.value,
        n: estimate.meta.n,
        k: estimate.meta.k,
        batch_count: estimate.meta.batch_count,
        seed: estimate.meta.seed,
        temperature: (kind == ScoreKind::Logits).then(|| args.temperature.unwrap_or(1.0)),
        threshold,
        elapsed_ms: start.elapsed().as_millis() as u64,
    };
    println!("{}", to_json(&report)?);
    Ok(())
}

fn cmd_costs(args: CostsArgs) -> CliResult<()> {
    check_temperature(args.temperature)?;
    let target = prepare(&args.target, args.kind.kind(), args.temperature)?;
    let marginal = parse_marginal(&args.source_marginal)?;
    let result = w_inf(&target, &marginal)?;
    let mut out = String::from("row_index,cost,assigned_class\n");
    for (i, (cost, class)) in result
        .per_sample_costs
        .iter()
        .zip(&result.assignment)
        .enumerate()
    {
        let _ = writeln!(out, "{i},{cost},{class}");
    }
    print!("{out}");
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> CliResult<()> {
    check_temperature(args.temperature)?;
    let kind = args.kind.kind();
    let mut paths: Vec<PathBuf> = glob::glob(&args.targets)
        .map_err(|e| CliError::Usage(format!("--targets: invalid glob pattern: {e}")))?
        .filter_map(|entry| entry.ok())
        .filter(|p| p.is_file())
        .collect();
    if paths.is_empty() {
        return Err(CliError::Usage(format!(
            "--targets '{}' matched no files",
            args.targets
        )));
    }
    paths.sort();

    let inputs = MethodInputs {
        val: args
            .val
            .as_deref()
            .map(|p| prepare(p, kind, args.temperature))
            .transpose()?,
        second: args
            .second
            .as_deref()
            .map(|p| prepare(p, kind, args.temperature))
            .transpose()?,
        source_marginal: args
            .source_marginal
            .as_deref()
            .map(parse_marginal)
            .transpose()?,
        bins: args.bins,
        batch_max: args.batch_max,
        seed: args.seed,
    };

    let evaluate_one = |path: &PathBuf| -> CliResult<EvaluateRow> {
        let target = prepare(path, kind, args.temperature)?;
        if target.labels().is_none() {
            return Err(CliError::Usage(format!(
                "{}: evaluate requires a label column in every target file",
                path.display()
            )));
        }
        let truth = true_error(&target)?;
        let (estimate, _) = run_method(args.method, &target, &inputs)?;
        Ok((
            path.display().to_string(),
            truth,
            estimate.value,
            (truth - estimate.value).abs(),
        ))
    };

    // Files are independent; OODOT_THREADS caps the worker pool. Output
    // rows stay sorted by filename regardless of scheduling.
    let results: Vec<CliResult<EvaluateRow>> = {
        use rayon::prelude::*;
        match thread_pool()? {
            Some(pool) => pool.install(|| paths.par_iter().map(evaluate_one).collect()),
            None => paths.par_iter().map(evaluate_one).collect(),
        }
    };
    let rows: Vec<EvaluateRow> = results.into_iter().collect::<CliResult<_>>()?;

    let mut csv = String::from("file,true_error,estimate,abs_err\n");
    for (file, truth, estimate, abs_err) in &rows {
        let _ = writeln!(csv, "{file},{truth},{estimate},{abs_err}");
    }
    let mae = rows.iter().map(|r| r.3).sum::<f64>() / rows.len() as f64;
    match &args.csv {
        Some(path) => fs::write(path, &csv)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?,
        None => print!("{csv}"),
    }
    let summary = EvaluateSummary {
        method: args.method.to_string(),
        mae,
        files: rows.len(),
    };
    println!("{}", to_json(&summary)?);
    Ok(())
}

fn cmd_synth(command: SynthCommand) -> CliResult<()> {
    match command {
        SynthCommand::Dirichlet {
            base,
            k,
            alpha,
            seed,
            out,
        } => {
            let base = match (base, k) {
                (Some(path), _) => parse_marginal(&path)?,
                (None, Some(k)) if k >= 2 => LabelMarginal::uniform(k),
                _ => {
                    return Err(CliError::Usage(
                        "synth dirichlet requires --base FILE or --k K (k >= 2)".into(),
                    ))
                }
            };
            let drawn = dirichlet_shift(&base, alpha, seed)?;
            emit(out.as_deref(), &format_marginal(&drawn))
        }
        SynthCommand::Classifier {
            k,
            n,
            error,
            confidence,
            marginal,
            seed,
            out,
        } => {
            let marginal = match marginal {
                Some(path) => parse_marginal(&path)?,
                None => LabelMarginal::uniform(k),
            };
            let scenario = synth_classifier(k, n, error, confidence, &marginal, seed)?;
            emit(out.as_deref(), &format_predictions(&scenario.predictions))
        }
        SynthCommand::Tightness {
            pseudo,
            target,
            delta,
            n,
            out,
        } => {
            let pseudo = parse_marginal(&pseudo)?;
            let target = parse_marginal(&target)?;
            let family = tightness_family(&pseudo, &target, delta, n)?;
            emit(out.as_deref(), &format_predictions(&family))
        }
        SynthCommand::Sweep {
            k,
            n,
            errors,
            confidences,
            shifts,
            val_error,
            seed,
            out,
        } => {
            let mut config = SweepConfig::default();
            if let Some(k) = k {
                config.k = k;
            }
            if let Some(n) = n {
                config.n = n;
            }
            if let Some(errors) = errors {
                config.target_errors = errors;
            }
            if let Some(confidences) = confidences {
                config.confidences = confidences;
            }
            if let Some(shifts) = shifts {
                config.marginal_shifts = shifts;
            }
            if let Some(val_error) = val_error {
                config.val_error = val_error;
            }
            let rows = sweep(&config, seed)?;
            let mut csv = String::from(SweepRow::CSV_HEADER);
            csv.push('\n');
            for row in &rows {
                csv.push_str(&row.to_csv());
                csv.push('\n');
            }
            emit(out.as_deref(), &csv)
        }
    }
}

fn emit(out: Option<&Path>, content: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string(value).map_err(|e| CliError::Data(format!("serialization: {e}")))
}

fn thread_pool() -> CliResult<Option<rayon::ThreadPool>> {
    match std::env::var("OODOT_THREADS") {
        Ok(value) => {
            let n: usize = value
                .trim()
                .parse()
                .ok()
                .filter(|&n| n >= 1)
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "OODOT_THREADS must be a positive integer, got '{value}'"
                    ))
                })?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("OODOT_THREADS: {e}")))?;
            Ok(Some(pool))
        }
        Err(_) => Ok(None),
    }
}
