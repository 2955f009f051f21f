//! Seeded Monte-Carlo harness for estimation, detection and correction
//! studies.
//!
//! A sweep point is one (shift, size) pair; rows come out ordered by sweep
//! point, then replication. Replication `r` of sweep point `s` draws all of
//! its randomness from `SeededRng::new(base_seed).substream(r).substream(s)`,
//! split further per phase, so any row can be recomputed on its own and the
//! table does not depend on execution order.

use alloc::vec::Vec;

use crate::detect::{detect_label_shift, TestMethod};
use crate::error::{Error, Result};
use crate::estimate::{
    estimate_confusion, estimate_weights, smallest_singular_value, validate_delta,
    LabelDistribution, LabelSpace, PredictionMode, SolveConfig, Solver, SourceEval, TargetEval,
};
use crate::model::{gen_gaussian_mixture, spread_means, train_softmax, Dataset, TrainConfig};
use crate::pipeline::{bbsc_correct, CorrectionConfig, RetrainOn};
use crate::rng::SeededRng;
use crate::shiftsim::{resample_by_label, ShiftSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Estimation,
    Detection,
    Correction,
}

/// Isotropic Gaussian classes laid out by [`spread_means`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureSpec {
    pub space: LabelSpace,
    pub dim: usize,
    /// Distance between neighbouring class means.
    pub separation: f64,
    pub scale: f64,
}

impl MixtureSpec {
    pub fn means(&self) -> Result<Vec<f64>> {
        spread_means(self.space, self.dim, self.separation)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Mixture(MixtureSpec),
    /// Resample with replacement from fixed splits: source-side sets from
    /// `train`, target-side sets from `test`.
    Pool { train: Dataset, test: Dataset },
}

impl DataSource {
    pub fn space(&self) -> LabelSpace {
        match self {
            DataSource::Mixture(m) => m.space,
            DataSource::Pool { train, .. } => train.space(),
        }
    }

    fn draw(&self, dist: &LabelDistribution, size: usize, target_side: bool, rng: &mut SeededRng) -> Result<Dataset> {
        match self {
            DataSource::Mixture(m) => {
                gen_gaussian_mixture(m.space, m.dim, &m.means()?, m.scale, dist, size, rng)
            }
            DataSource::Pool { train, test } => {
                let pool = if target_side { test } else { train };
                resample_by_label(pool, dist, size, rng)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub shifts: Vec<ShiftSpec>,
    /// Source sizes `n`.
    pub sizes: Vec<usize>,
    /// Target size; `None` uses `m = n`.
    pub target_size: Option<usize>,
    pub replications: usize,
    pub base_seed: u64,
    pub data: DataSource,
    pub train_cfg: TrainConfig,
    pub delta: Option<f64>,
    pub solver: Solver,
    pub mode: PredictionMode,
    pub alpha: f64,
    pub method: TestMethod,
    pub retrain_on: RetrainOn,
    pub split_fraction: f64,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, data: DataSource) -> Self {
        ExperimentConfig {
            kind,
            shifts: Vec::new(),
            sizes: Vec::new(),
            target_size: None,
            replications: 1,
            base_seed: 0,
            data,
            train_cfg: TrainConfig::default(),
            delta: None,
            solver: Solver::Lu,
            mode: PredictionMode::Hard,
            alpha: 0.05,
            method: TestMethod::Chi2,
            retrain_on: RetrainOn::Full,
            split_fraction: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Parameter {
                name: "replications",
            });
        }
        if self.shifts.is_empty() || self.sizes.is_empty() {
            return Err(Error::Empty("experiment sweep"));
        }
        let space = self.data.space();
        for s in &self.shifts {
            s.validate(space)?;
        }
        if let Some(d) = self.delta {
            validate_delta(d, space)?;
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Parameter { name: "alpha" });
        }
        self.train_cfg.validate()
    }

    /// `(shift, n)` for every sweep point, shift-major.
    pub fn sweep_points(&self) -> Vec<(ShiftSpec, usize)> {
        self.shifts
            .iter()
            .flat_map(|&s| self.sizes.iter().map(move |&n| (s, n)))
            .collect()
    }

    fn delta_for(&self) -> f64 {
        self.delta.unwrap_or_else(|| self.data.space().default_delta())
    }
}

/// One replication at one sweep point. Fields that do not apply to the
/// experiment kind are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub shift: ShiftSpec,
    pub point: usize,
    pub replication: usize,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub mse_w: Option<f64>,
    pub mse_mu: Option<f64>,
    pub sigma_min: Option<f64>,
    pub p_value: Option<f64>,
    pub reject: Option<bool>,
    /// Predictor accuracy on the labeled source holdout.
    pub acc_source: Option<f64>,
    pub acc_baseline: Option<f64>,
    pub acc_corrected: Option<f64>,
}

impl ResultRow {
    fn empty(shift: ShiftSpec, point: usize, replication: usize, n: usize, m: usize, seed: u64) -> Self {
        ResultRow {
            shift,
            point,
            replication,
            n,
            m,
            seed,
            mse_w: None,
            mse_mu: None,
            sigma_min: None,
            p_value: None,
            reject: None,
            acc_source: None,
            acc_baseline: None,
            acc_corrected: None,
        }
    }
}

fn sq_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Phase substreams within a row.
mod phase {
    pub const SHIFT: u64 = 0;
    pub const TRAIN: u64 = 1;
    pub const SOURCE: u64 = 2;
    pub const TARGET: u64 = 3;
    pub const EVAL: u64 = 4;
    pub const SPLIT: u64 = 5;
}

/// Computes a single row; `run_experiment` is the ordered map of this over
/// every `(point, replication)`.
pub fn experiment_row(cfg: &ExperimentConfig, point: usize, replication: usize) -> Result<ResultRow> {
    let points = cfg.sweep_points();
    let &(shift, n) = points.get(point).ok_or(Error::Parameter { name: "point" })?;
    let m = cfg.target_size.unwrap_or(n);
    let space = cfg.data.space();
    let root = SeededRng::new(cfg.base_seed)
        .substream(replication as u64)
        .substream(point as u64);
    let mut row = ResultRow::empty(shift, point, replication, n, m, root.seed());

    let pair = shift.distributions(space, &mut root.substream(phase::SHIFT))?;
    let w_true = pair.true_weights()?;
    let solve = SolveConfig::new(cfg.delta_for(), cfg.solver);

    match cfg.kind {
        ExperimentKind::Estimation | ExperimentKind::Detection => {
            let train = cfg.data.draw(&pair.source, n, false, &mut root.substream(phase::TRAIN))?;
            let holdout = cfg.data.draw(&pair.source, n, false, &mut root.substream(phase::SOURCE))?;
            let target = cfg.data.draw(&pair.target, m, true, &mut root.substream(phase::TARGET))?;
            let f = train_softmax(&train, None, &cfg.train_cfg)?;
            let source = SourceEval::new(f.predict(holdout.features(), cfg.mode)?, holdout.labels().to_vec(), space)?;
            let target_eval = TargetEval::new(f.predict(target.features(), cfg.mode)?, space)?;
            row.acc_source = Some(f.accuracy(&holdout)?);
            if cfg.kind == ExperimentKind::Estimation {
                let est = estimate_weights(&source, &target_eval, space, &solve)?;
                row.mse_w = Some(sq_err(&est.w, &w_true));
                row.mse_mu = Some(sq_err(&est.mu_y, pair.target.probs()));
                row.sigma_min = Some(est.sigma_min);
            } else {
                row.sigma_min = Some(smallest_singular_value(&estimate_confusion(&source, space)?));
                let rep = detect_label_shift(source.preds(), target_eval.preds(), space, cfg.alpha, cfg.method)?;
                row.p_value = Some(rep.p_value);
                row.reject = Some(rep.reject);
            }
        }
        ExperimentKind::Correction => {
            let train = cfg.data.draw(&pair.source, n, false, &mut root.substream(phase::TRAIN))?;
            let target = cfg.data.draw(&pair.target, m, true, &mut root.substream(phase::TARGET))?;
            let eval = cfg.data.draw(&pair.target, m, true, &mut root.substream(phase::EVAL))?;
            let ccfg = CorrectionConfig {
                delta: Some(solve.delta),
                solver: cfg.solver,
                mode: cfg.mode,
                train_cfg: cfg.train_cfg,
                split_fraction: cfg.split_fraction,
                retrain_on: cfg.retrain_on,
                seed: root.substream(phase::SPLIT).seed(),
                ..CorrectionConfig::default()
            };
            let mut res = bbsc_correct(&train, target.features(), &ccfg)?;
            res.evaluate(&eval)?;
            row.mse_w = Some(sq_err(&res.weights.w, &w_true));
            row.mse_mu = Some(sq_err(&res.weights.mu_y, pair.target.probs()));
            row.sigma_min = Some(res.weights.sigma_min);
            row.acc_baseline = res.baseline_accuracy;
            row.acc_corrected = res.target_accuracy;
        }
    }
    Ok(row)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let points = cfg.sweep_points().len();
    let mut rows = Vec::with_capacity(points * cfg.replications);
    for p in 0..points {
        for r in 0..cfg.replications {
            rows.push(experiment_row(cfg, p, r)?);
        }
    }
    Ok(rows)
}

/// Median of a nonempty slice (mean of the middle pair for even lengths).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    })
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}
