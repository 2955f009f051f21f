//! Command-line surface.
//!
//! Exit codes: 0 success, 1 usage error (bad flags, out-of-range
//! parameters), 2 data error (unreadable or invalid input), 3 shift detected
//! by `detect`. Code 3 is a signal for scripts, not a failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use labelshift::detect::{assumption_check_mmd, detect_label_shift, DEFAULT_BOOTSTRAP_REPS};
use labelshift::estimate::{estimate_weights, validate_delta};
use labelshift::experiment::{DataSource, ExperimentConfig, ExperimentKind, MixtureSpec};
use labelshift::model::{gen_gaussian_mixture, spread_means};
use labelshift::pipeline::{bbsc_correct, CorrectionConfig, RetrainOn};
use labelshift::shiftsim::resample_by_label;
use labelshift::{
    Dataset, Features, LabelSpace, PredictionMode, Predictions, SeededRng, ShiftSpec, SolveConfig,
    Solver, SourceEval, TargetEval, TestMethod, TrainConfig,
};

use crate::dataset::{load_table, write_dataset, TableData};
use crate::error::{CliError, Result};
use crate::idx::load_idx;
use crate::predictions::{load_predictions, LoadedPredictions};
use crate::report::{
    table_json, write_table_csv, CorrectionSection, MetaSection, ModelDocument, ReportDocument,
    TableRow, WeightsSection,
};
use crate::runner::run_parallel;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_SHIFT: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "labelshift", version, about = "Black-box label-shift estimation, detection and correction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Estimate importance weights from source and target predictions
    Estimate(EstimateArgs),
    /// Test whether the label distribution moved (exit 3 when it did)
    Detect(DetectArgs),
    /// Retrain a classifier with estimated importance weights
    Correct(CorrectArgs),
    /// Draw a dataset under a shifted label distribution
    Simulate(SimulateArgs),
    /// Run a seeded Monte-Carlo sweep
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Hard,
    Soft,
}

impl From<ModeArg> for PredictionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Hard => PredictionMode::Hard,
            ModeArg::Soft => PredictionMode::Soft,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Ks,
    Chi2,
    /// Weighted MMD check of the label-shift assumption on the predictor's
    /// scores; always tested at level 0.05
    Mmd,
}

impl From<MethodArg> for TestMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Ks => TestMethod::Ks,
            MethodArg::Chi2 => TestMethod::Chi2,
            MethodArg::Mmd => TestMethod::Mmd,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Lu,
    Pinv,
}

impl From<SolverArg> for Solver {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Lu => Solver::Lu,
            SolverArg::Pinv => Solver::PseudoInverse,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RetrainArg {
    Split,
    Full,
}

impl From<RetrainArg> for RetrainOn {
    fn from(r: RetrainArg) -> Self {
        match r {
            RetrainArg::Split => RetrainOn::Split,
            RetrainArg::Full => RetrainOn::Full,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Estimation,
    Detection,
    Correction,
}

impl From<KindArg> for ExperimentKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Estimation => ExperimentKind::Estimation,
            KindArg::Detection => ExperimentKind::Detection,
            KindArg::Correction => ExperimentKind::Correction,
        }
    }
}

/// `knockout:CLASS:DELTA`, `tweak-one:CLASS:RHO` or `dirichlet:ALPHA`.
pub fn parse_shift(s: &str) -> std::result::Result<ShiftSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let class = |t: &str| t.parse::<usize>().map_err(|_| format!("bad class `{t}`"));
    let real = |t: &str| t.parse::<f64>().map_err(|_| format!("bad number `{t}`"));
    match parts.as_slice() {
        ["knockout", c, d] => Ok(ShiftSpec::Knockout { class: class(c)?, delta: real(d)? }),
        ["tweak-one" | "tweak_one", c, r] => Ok(ShiftSpec::TweakOne { class: class(c)?, rho: real(r)? }),
        ["dirichlet", a] => Ok(ShiftSpec::Dirichlet { alpha: real(a)? }),
        _ => Err(format!(
            "`{s}`: expected knockout:CLASS:DELTA, tweak-one:CLASS:RHO or dirichlet:ALPHA"
        )),
    }
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    /// Source predictions with a `y_true` column
    #[arg(long)]
    pub source: PathBuf,
    /// Target predictions
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub k: usize,
    /// Fallback threshold on the smallest singular value, in (0, 1/k); default 1/(10k)
    #[arg(long)]
    pub delta: Option<f64>,
    /// Reduce soft predictions to hard ones with `hard`; default follows the files
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum, default_value = "lu")]
    pub solver: SolverArg,
    /// Report `mu_y` rescaled onto the simplex; `w` is unchanged
    #[arg(long)]
    pub normalize: bool,
    /// Recorded in the report
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct DetectArgs {
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "chi2")]
    pub method: MethodArg,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Threshold for the weight estimate used by `--method mmd`
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_BOOTSTRAP_REPS)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct CorrectArgs {
    /// Labeled training table (`y,x0,...`)
    #[arg(long, required_unless_present = "train_idx")]
    pub train: Option<PathBuf>,
    /// Training data as IDX images and labels
    #[arg(long, num_args = 2, value_names = ["IMAGES", "LABELS"], conflicts_with = "train")]
    pub train_idx: Option<Vec<PathBuf>>,
    /// Target features (`x0,...`; a `y` column is ignored)
    #[arg(long, required_unless_present = "target_idx")]
    pub target: Option<PathBuf>,
    #[arg(long, num_args = 2, value_names = ["IMAGES", "LABELS"], conflicts_with = "target")]
    pub target_idx: Option<Vec<PathBuf>>,
    /// Labeled target-domain table used only to report accuracies
    #[arg(long)]
    pub eval: Option<PathBuf>,
    #[arg(long, num_args = 2, value_names = ["IMAGES", "LABELS"], conflicts_with = "eval")]
    pub eval_idx: Option<Vec<PathBuf>>,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, value_enum, default_value = "hard")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "lu")]
    pub solver: SolverArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0.5)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub l2: f64,
    /// Fraction of the training set used to fit the predictor
    #[arg(long, default_value_t = 0.5)]
    pub split: f64,
    #[arg(long, value_enum, default_value = "full")]
    pub retrain_on: RetrainArg,
    /// Estimate the confusion matrix on the predictor's own training half
    #[arg(long)]
    pub reuse_split: bool,
    /// Reweight only when a shift is detected
    #[arg(long)]
    pub detect_first: bool,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "chi2")]
    pub method: MethodArg,
    /// Corrected model (JSON)
    #[arg(long)]
    pub out: PathBuf,
    /// Report destination; stdout when absent
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_parser = parse_shift)]
    pub shift: ShiftSpec,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Resample from this labeled table instead of the Gaussian mixture
    #[arg(long)]
    pub pool: Option<PathBuf>,
    #[arg(long, num_args = 2, value_names = ["IMAGES", "LABELS"], conflicts_with = "pool")]
    pub pool_idx: Option<Vec<PathBuf>>,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 3.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Repeatable
    #[arg(long, value_parser = parse_shift, required = true)]
    pub shift: Vec<ShiftSpec>,
    /// Source sizes, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    /// Target size; defaults to each source size
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub replications: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 3.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Source-side pool (labeled table); needs `--test`
    #[arg(long, requires = "test")]
    pub train: Option<PathBuf>,
    /// Target-side pool (labeled table); needs `--train`
    #[arg(long, requires = "train")]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, value_enum, default_value = "hard")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "lu")]
    pub solver: SolverArg,
    #[arg(long, value_enum, default_value = "chi2")]
    pub method: MethodArg,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "full")]
    pub retrain_on: RetrainArg,
    #[arg(long, default_value_t = 0.5)]
    pub split: f64,
    #[arg(long, default_value_t = 200)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0.5)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub l2: f64,
    /// Worker threads; 0 uses one per core. The table does not depend on it.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(&cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cmd: &Command, stdout: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Estimate(a) => estimate(a, stdout),
        Command::Detect(a) => detect(a, stdout),
        Command::Correct(a) => correct(a, stdout),
        Command::Simulate(a) => simulate(a, stdout),
        Command::Experiment(a) => experiment(a, stdout),
    }
}

fn label_space(k: usize) -> Result<LabelSpace> {
    LabelSpace::new(k).map_err(|_| CliError::Usage(format!("--k must be at least 2, got {k}")))
}

fn checked_delta(delta: Option<f64>, space: LabelSpace) -> Result<f64> {
    let d = delta.unwrap_or_else(|| space.default_delta());
    validate_delta(d, space).map_err(|_| {
        CliError::Usage(format!("--delta must lie in (0, 1/k) = (0, {}), got {d}", 1.0 / space.k() as f64))
    })?;
    Ok(d)
}

fn emit(path: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::io(p, e)),
        None => stdout.write_all(bytes).map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn emit_report(doc: &ReportDocument, format: Format, path: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    let text = match format {
        Format::Json => doc.to_json(),
        Format::Csv => doc.to_csv(),
    };
    emit(path, text.as_bytes(), stdout)
}

fn resolve_mode(p: &Predictions, mode: Option<ModeArg>, space: LabelSpace, what: &str) -> Result<Predictions> {
    match (mode.map(PredictionMode::from), p.mode()) {
        (Some(PredictionMode::Hard), PredictionMode::Soft) => Ok(Predictions::hard(p.to_hard(), space)?),
        (Some(PredictionMode::Soft), PredictionMode::Hard) => Err(CliError::Usage(format!(
            "--mode soft needs probability columns in the {what} file"
        ))),
        _ => Ok(p.clone()),
    }
}

fn eval_pair(
    source: &LoadedPredictions,
    target: &LoadedPredictions,
    mode: Option<ModeArg>,
    space: LabelSpace,
    source_path: &Path,
) -> Result<(SourceEval, TargetEval)> {
    let labels = source
        .labels()
        .ok_or_else(|| CliError::Data(format!("{}: source predictions need a `y_true` column", source_path.display())))?;
    let sp = resolve_mode(source.preds(), mode, space, "source")?;
    let tp = resolve_mode(target.preds(), mode, space, "target")?;
    if sp.mode() != tp.mode() {
        return Err(CliError::Usage(
            "source and target files use different schemas; pass --mode hard".into(),
        ));
    }
    Ok((SourceEval::new(sp, labels.to_vec(), space)?, TargetEval::new(tp, space)?))
}

fn estimate(a: &EstimateArgs, stdout: &mut dyn Write) -> Result<i32> {
    let space = label_space(a.k)?;
    let delta = checked_delta(a.delta, space)?;
    let source = load_predictions(&a.source, space)?;
    let target = load_predictions(&a.target, space)?;
    let (src, tgt) = eval_pair(&source, &target, a.mode, space, &a.source)?;
    let est = estimate_weights(&src, &tgt, space, &SolveConfig::new(delta, a.solver.into()))?;
    let mut doc = ReportDocument::new(MetaSection::new("estimate", space, a.seed));
    let mut weights = WeightsSection::from(&est);
    if a.normalize {
        weights.mu_y = est.mu_y_normalized()?.into_vec();
    }
    doc.weights = Some(weights);
    emit_report(&doc, a.format, a.out.as_deref(), stdout)?;
    Ok(EXIT_OK)
}

fn scores(p: &Predictions, space: LabelSpace) -> Result<Features> {
    let k = space.k();
    let data = match p {
        Predictions::Soft { probs, .. } => probs.clone(),
        Predictions::Hard(labels) => {
            let mut d = vec![0.0; labels.len() * k];
            for (i, &l) in labels.iter().enumerate() {
                d[i * k + l] = 1.0;
            }
            d
        }
    };
    Ok(Features::new(p.len(), k, data)?)
}

fn detect(a: &DetectArgs, stdout: &mut dyn Write) -> Result<i32> {
    let space = label_space(a.k)?;
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(CliError::Usage(format!("--alpha must lie in (0, 1), got {}", a.alpha)));
    }
    let delta = checked_delta(a.delta, space)?;
    let source = load_predictions(&a.source, space)?;
    let target = load_predictions(&a.target, space)?;
    let mut doc = ReportDocument::new(MetaSection::new("detect", space, Some(a.seed)));
    let report = match a.method {
        MethodArg::Ks | MethodArg::Chi2 => {
            let sp = resolve_mode(source.preds(), a.mode, space, "source")?;
            let tp = resolve_mode(target.preds(), a.mode, space, "target")?;
            detect_label_shift(&sp, &tp, space, a.alpha, a.method.into())?
        }
        MethodArg::Mmd => {
            let (src, tgt) = eval_pair(&source, &target, a.mode, space, &a.source)?;
            let est = estimate_weights(&src, &tgt, space, &SolveConfig::new(delta, Solver::Lu))?;
            let mut rng = SeededRng::new(a.seed);
            let r = assumption_check_mmd(
                &scores(src.preds(), space)?,
                src.labels(),
                &est.w,
                &scores(tgt.preds(), space)?,
                a.bootstrap,
                &mut rng,
            )?;
            doc.weights = Some((&est).into());
            r
        }
    };
    doc.detection = Some((&report).into());
    emit_report(&doc, a.format, a.out.as_deref(), stdout)?;
    Ok(if report.reject { EXIT_SHIFT } else { EXIT_OK })
}

fn idx_pair(paths: &[PathBuf]) -> (&Path, &Path) {
    (&paths[0], &paths[1])
}

fn load_labeled(csv: Option<&Path>, idx: Option<&[PathBuf]>, space: LabelSpace) -> Result<Option<Dataset>> {
    match (csv, idx) {
        (Some(p), _) => Ok(Some(load_table(p, space)?.labeled(p)?)),
        (None, Some(i)) => {
            let (img, lab) = idx_pair(i);
            Ok(Some(load_idx(img, lab, space)?))
        }
        (None, None) => Ok(None),
    }
}

fn correct(a: &CorrectArgs, stdout: &mut dyn Write) -> Result<i32> {
    let space = label_space(a.k)?;
    let delta = checked_delta(a.delta, space)?;
    let train = load_labeled(a.train.as_deref(), a.train_idx.as_deref(), space)?
        .ok_or_else(|| CliError::Usage("--train or --train-idx is required".into()))?;
    let target: Features = match (&a.target, &a.target_idx) {
        (Some(p), _) => match load_table(p, space)? {
            TableData::Labeled(d) => d.features().clone(),
            TableData::Unlabeled(f) => f,
        },
        (None, Some(i)) => {
            let (img, lab) = idx_pair(i);
            load_idx(img, lab, space)?.features().clone()
        }
        (None, None) => return Err(CliError::Usage("--target or --target-idx is required".into())),
    };
    let eval = load_labeled(a.eval.as_deref(), a.eval_idx.as_deref(), space)?;
    let method: TestMethod = a.method.into();
    if method == TestMethod::Mmd {
        return Err(CliError::Usage("--method for --detect-first must be ks or chi2".into()));
    }
    let cfg = CorrectionConfig {
        delta: Some(delta),
        solver: a.solver.into(),
        mode: a.mode.into(),
        train_cfg: TrainConfig {
            learning_rate: a.learning_rate,
            iterations: a.iterations,
            l2: a.l2,
            seed: a.seed,
        },
        split_fraction: a.split,
        retrain_on: a.retrain_on.into(),
        reuse_split: a.reuse_split,
        detect_first: a.detect_first,
        detect_alpha: a.alpha,
        detect_method: method,
        seed: a.seed,
    };
    let mut res = bbsc_correct(&train, &target, &cfg)?;
    if let Some(e) = &eval {
        res.evaluate(e)?;
    }
    emit(Some(&a.out), ModelDocument::from_model(&res.model).to_json().as_bytes(), stdout)?;
    let mut doc = ReportDocument::new(MetaSection::new("correct", space, Some(a.seed)));
    doc.weights = Some((&res.weights).into());
    doc.detection = res.detection.as_ref().map(Into::into);
    doc.correction = Some(CorrectionSection {
        reweighted: res.reweighted,
        baseline_accuracy: res.baseline_accuracy,
        target_accuracy: res.target_accuracy,
    });
    emit_report(&doc, a.format, a.report.as_deref(), stdout)?;
    Ok(EXIT_OK)
}

fn simulate(a: &SimulateArgs, stdout: &mut dyn Write) -> Result<i32> {
    let space = label_space(a.k)?;
    a.shift.validate(space)?;
    let root = SeededRng::new(a.seed);
    let q = a.shift.label_distribution(space, &mut root.substream(0))?;
    let mut draw = root.substream(1);
    let data = match load_labeled(a.pool.as_deref(), a.pool_idx.as_deref(), space)? {
        Some(pool) => resample_by_label(&pool, &q, a.n, &mut draw)?,
        None => {
            let means = spread_means(space, a.dim, a.separation)?;
            gen_gaussian_mixture(space, a.dim, &means, a.scale, &q, a.n, &mut draw)?
        }
    };
    let mut buf = Vec::new();
    write_dataset(&mut buf, &data)?;
    emit(a.out.as_deref(), &buf, stdout)?;
    Ok(EXIT_OK)
}

fn experiment(a: &ExperimentArgs, stdout: &mut dyn Write) -> Result<i32> {
    let space = label_space(a.k)?;
    if let Some(d) = a.delta {
        checked_delta(Some(d), space)?;
    }
    let data = match (&a.train, &a.test) {
        (Some(tr), Some(te)) => DataSource::Pool {
            train: load_table(tr, space)?.labeled(tr)?,
            test: load_table(te, space)?.labeled(te)?,
        },
        _ => DataSource::Mixture(MixtureSpec {
            space,
            dim: a.dim,
            separation: a.separation,
            scale: a.scale,
        }),
    };
    let kind: ExperimentKind = a.kind.into();
    let method: TestMethod = a.method.into();
    if method == TestMethod::Mmd {
        return Err(CliError::Usage("experiment --method must be ks or chi2".into()));
    }
    let mut cfg = ExperimentConfig::new(kind, data);
    cfg.shifts = a.shift.clone();
    cfg.sizes = a.sizes.clone();
    cfg.target_size = a.m;
    cfg.replications = a.replications;
    cfg.base_seed = a.seed;
    cfg.train_cfg = TrainConfig {
        learning_rate: a.learning_rate,
        iterations: a.iterations,
        l2: a.l2,
        seed: a.seed,
    };
    cfg.delta = a.delta;
    cfg.solver = a.solver.into();
    cfg.mode = a.mode.into();
    cfg.alpha = a.alpha;
    cfg.method = method;
    cfg.retrain_on = a.retrain_on.into();
    cfg.split_fraction = a.split;

    let rows: Vec<TableRow> = run_parallel(&cfg, a.threads)?.iter().map(|r| TableRow::new(kind, r)).collect();
    let bytes = match a.format {
        Format::Json => table_json(&rows).into_bytes(),
        Format::Csv => {
            let mut buf = Vec::new();
            write_table_csv(&mut buf, &rows)?;
            buf
        }
    };
    emit(a.out.as_deref(), &bytes, stdout)?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_strings() {
        assert_eq!(parse_shift("knockout:1:0.5"), Ok(ShiftSpec::Knockout { class: 1, delta: 0.5 }));
        assert_eq!(parse_shift("tweak-one:0:0.8"), Ok(ShiftSpec::TweakOne { class: 0, rho: 0.8 }));
        assert_eq!(parse_shift("dirichlet:0.1"), Ok(ShiftSpec::Dirichlet { alpha: 0.1 }));
        assert!(parse_shift("dirichlet").is_err());
        assert!(parse_shift("knockout:x:0.5").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn help_exits_zero_and_bad_flags_exit_one() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["labelshift", "--help"], &mut out, &mut err), EXIT_OK);
        assert!(String::from_utf8_lossy(&out).contains("estimate"));
        assert_eq!(run(["labelshift", "estimate"], &mut out, &mut err), EXIT_USAGE);
        assert_eq!(run(["labelshift", "nope"], &mut out, &mut err), EXIT_USAGE);
    }
}
