//! Black-box shift correction: split the labeled data, fit a predictor on
//! one half, estimate importance weights from its confusion matrix on the
//! other half, and retrain with the clipped weights.

use alloc::vec::Vec;
use rand::seq::SliceRandom;

use crate::detect::{detect_label_shift, ShiftReport, TestMethod};
use crate::error::{Error, Result};
use crate::estimate::{
    estimate_weights, validate_delta, PredictionMode, SolveConfig, Solver, SourceEval, TargetEval,
    WeightEstimate,
};
use crate::model::{train_softmax, Dataset, Features, SoftmaxModel, TrainConfig};
use crate::rng::SeededRng;

/// Which examples the weighted ERM step is run on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RetrainOn {
    /// The half used to fit the black-box predictor.
    Split,
    /// The whole labeled set.
    #[default]
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionConfig {
    /// Fallback threshold; `None` selects `1 / (10 k)`.
    pub delta: Option<f64>,
    pub solver: Solver,
    pub mode: PredictionMode,
    pub train_cfg: TrainConfig,
    /// Fraction of the labeled data used to fit the predictor.
    pub split_fraction: f64,
    pub retrain_on: RetrainOn,
    /// Fit the predictor and estimate the confusion matrix on the same data.
    pub reuse_split: bool,
    /// Only reweight when a shift is detected at `detect_alpha`.
    pub detect_first: bool,
    pub detect_alpha: f64,
    pub detect_method: TestMethod,
    pub seed: u64,
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        CorrectionConfig {
            delta: None,
            solver: Solver::Lu,
            mode: PredictionMode::Hard,
            train_cfg: TrainConfig::default(),
            split_fraction: 0.5,
            retrain_on: RetrainOn::Full,
            reuse_split: false,
            detect_first: false,
            detect_alpha: 0.05,
            detect_method: TestMethod::Chi2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionResult {
    /// The reweighted classifier.
    pub model: SoftmaxModel,
    /// Unweighted classifier on the same examples.
    pub baseline: SoftmaxModel,
    /// The black-box predictor used for estimation.
    pub predictor: SoftmaxModel,
    pub weights: WeightEstimate,
    pub detection: Option<ShiftReport>,
    /// False when the estimate was not applied (fallback or no detection).
    pub reweighted: bool,
    pub target_accuracy: Option<f64>,
    pub baseline_accuracy: Option<f64>,
}

impl CorrectionResult {
    /// Records accuracies on labeled target data held out from estimation.
    pub fn evaluate(&mut self, eval: &Dataset) -> Result<()> {
        self.target_accuracy = Some(self.model.accuracy(eval)?);
        self.baseline_accuracy = Some(self.baseline.accuracy(eval)?);
        Ok(())
    }
}

/// Index partition of `0..n` into a fitting half and a holdout half, each
/// sorted.
pub fn split_indices(n: usize, fraction: f64, rng: &mut SeededRng) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Parameter {
            name: "split_fraction",
        });
    }
    if n < 2 {
        return Err(Error::Empty("not enough examples to split"));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let cut = ((n as f64 * fraction).round() as usize).clamp(1, n - 1);
    let mut first = idx[..cut].to_vec();
    let mut second = idx[cut..].to_vec();
    first.sort_unstable();
    second.sort_unstable();
    Ok((first, second))
}

fn require_all_classes(data: &Dataset) -> Result<()> {
    for (c, pool) in data.class_pools().iter().enumerate() {
        if pool.is_empty() {
            return Err(Error::Support { class: c });
        }
    }
    Ok(())
}

pub fn bbsc_correct(
    train: &Dataset,
    target_features: &Features,
    cfg: &CorrectionConfig,
) -> Result<CorrectionResult> {
    let space = train.space();
    let delta = cfg.delta.unwrap_or_else(|| space.default_delta());
    validate_delta(delta, space)?;
    if target_features.rows() == 0 {
        return Err(Error::Empty("target features"));
    }
    if target_features.cols() != train.d() {
        return Err(Error::Dimension {
            expected: train.d(),
            got: target_features.cols(),
        });
    }

    let mut rng = SeededRng::new(cfg.seed);
    let (fit, holdout) = if cfg.reuse_split {
        require_all_classes(train)?;
        (train.clone(), train.clone())
    } else {
        let (a, b) = split_indices(train.n(), cfg.split_fraction, &mut rng)?;
        let (fit, holdout) = (train.select(&a), train.select(&b));
        require_all_classes(&fit)?;
        require_all_classes(&holdout)?;
        (fit, holdout)
    };

    let predictor = train_softmax(&fit, None, &cfg.train_cfg)?;
    let source_preds = predictor.predict(holdout.features(), cfg.mode)?;
    let target_preds = predictor.predict(target_features, cfg.mode)?;
    let source = SourceEval::new(source_preds, holdout.labels().to_vec(), space)?;
    let target = TargetEval::new(target_preds, space)?;
    let weights = estimate_weights(&source, &target, space, &SolveConfig::new(delta, cfg.solver))?;

    let detection = if cfg.detect_first {
        Some(detect_label_shift(
            source.preds(),
            target.preds(),
            space,
            cfg.detect_alpha,
            cfg.detect_method,
        )?)
    } else {
        None
    };

    let retrain = match cfg.retrain_on {
        RetrainOn::Split => &fit,
        RetrainOn::Full => train,
    };
    let baseline = train_softmax(retrain, None, &cfg.train_cfg)?;
    let apply = !weights.fallback
        && detection.as_ref().map_or(true, |d| d.reject)
        && weights.w.iter().any(|&w| w != 1.0);
    let model = if apply {
        let ex = weights.example_weights(retrain.labels());
        train_softmax(retrain, Some(&ex), &cfg.train_cfg)?
    } else {
        baseline.clone()
    };

    Ok(CorrectionResult {
        model,
        baseline,
        predictor,
        weights,
        detection,
        reweighted: apply,
        target_accuracy: None,
        baseline_accuracy: None,
    })
}
