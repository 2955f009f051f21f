//! Black-box shift estimation.
//!
//! A fixed predictor `f` is evaluated on labeled source data and on unlabeled
//! target data. Under label shift the joint confusion matrix of `f` on the
//! source relates the two prediction marginals linearly,
//!
//! ```text
//! C[ŷ, y] · w = μ[ŷ]      with  w[y] = q(y) / p(y),
//! ```
//!
//! so the importance weights are recovered by a k×k solve. Confusion matrices
//! are oriented rows = predicted label, columns = true label. Labels are
//! `0..k`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg;

/// Tolerance for soft prediction rows on ingestion.
pub const SOFT_ROW_TOL: f64 = 1e-9;
/// Tolerance for a `LabelDistribution` to count as a point on the simplex.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// The label set `{0, .., k-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LabelSpace(usize);

impl LabelSpace {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::LabelSpace(k));
        }
        Ok(LabelSpace(k))
    }

    #[inline]
    pub fn k(self) -> usize {
        self.0
    }

    pub fn check(self, label: usize) -> Result<()> {
        if label < self.0 {
            Ok(())
        } else {
            Err(Error::LabelOutOfRange { label, k: self.0 })
        }
    }

    /// The default fallback threshold `1 / (10 k)`.
    pub fn default_delta(self) -> f64 {
        1.0 / (10.0 * self.0 as f64)
    }
}

/// A point on the k-simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelDistribution {
    probs: Vec<f64>,
}

impl LabelDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::LabelSpace(probs.len()));
        }
        if probs.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("label distribution"));
        }
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::OffSimplex { row: 0 });
        }
        Ok(LabelDistribution { probs })
    }

    /// Rescales nonnegative masses onto the simplex.
    pub fn normalized(masses: &[f64]) -> Result<Self> {
        if masses.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::Parameter { name: "masses" });
        }
        let sum: f64 = masses.iter().sum();
        if sum <= 0.0 {
            return Err(Error::Degenerate("all masses are zero"));
        }
        LabelDistribution::new(masses.iter().map(|p| p / sum).collect())
    }

    pub fn uniform(space: LabelSpace) -> Self {
        let k = space.k();
        LabelDistribution {
            probs: vec![1.0 / k as f64; k],
        }
    }

    pub fn one_hot(space: LabelSpace, class: usize) -> Result<Self> {
        space.check(class)?;
        let mut probs = vec![0.0; space.k()];
        probs[class] = 1.0;
        Ok(LabelDistribution { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }

    pub fn space(&self) -> LabelSpace {
        LabelSpace(self.probs.len())
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

/// Hard or soft output of the black-box predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredictionMode {
    Hard,
    Soft,
}

/// One prediction, as produced by an arbitrary predictor.
#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Label(usize),
    Probs(Vec<f64>),
}

/// A homogeneous batch of predictions over a fixed label space.
///
/// Soft rows are validated to lie on the simplex within [`SOFT_ROW_TOL`] and
/// then rescaled to sum to one, so downstream identities hold to rounding.
#[derive(Debug, Clone, PartialEq)]
pub enum Predictions {
    Hard(Vec<usize>),
    /// Row-major `len × k` probabilities.
    Soft { k: usize, probs: Vec<f64> },
}

impl Predictions {
    pub fn hard(labels: Vec<usize>, space: LabelSpace) -> Result<Self> {
        for &l in &labels {
            space.check(l)?;
        }
        Ok(Predictions::Hard(labels))
    }

    pub fn soft(rows: &[Vec<f64>], space: LabelSpace) -> Result<Self> {
        let k = space.k();
        let mut probs = Vec::with_capacity(rows.len() * k);
        for (row, p) in rows.iter().enumerate() {
            push_soft_row(&mut probs, p, k, row)?;
        }
        Ok(Predictions::Soft { k, probs })
    }

    /// Soft predictions from a flat row-major buffer.
    pub fn soft_flat(probs: Vec<f64>, space: LabelSpace) -> Result<Self> {
        let k = space.k();
        if probs.len() % k != 0 {
            return Err(Error::Dimension {
                expected: k,
                got: probs.len() % k,
            });
        }
        let mut out = Vec::with_capacity(probs.len());
        for (row, p) in probs.chunks(k).enumerate() {
            push_soft_row(&mut out, p, k, row)?;
        }
        Ok(Predictions::Soft { k, probs: out })
    }

    /// Builds a batch from individually typed predictions; mixing kinds is a
    /// format error.
    pub fn from_rows(rows: Vec<Prediction>, space: LabelSpace) -> Result<Self> {
        match rows.first() {
            None => Err(Error::Empty("predictions")),
            Some(Prediction::Label(_)) => {
                let mut labels = Vec::with_capacity(rows.len());
                for r in rows {
                    match r {
                        Prediction::Label(l) => labels.push(l),
                        Prediction::Probs(_) => {
                            return Err(Error::Format("mixed hard and soft predictions"))
                        }
                    }
                }
                Predictions::hard(labels, space)
            }
            Some(Prediction::Probs(_)) => {
                let mut soft = Vec::with_capacity(rows.len());
                for r in rows {
                    match r {
                        Prediction::Probs(p) => soft.push(p),
                        Prediction::Label(_) => {
                            return Err(Error::Format("mixed hard and soft predictions"))
                        }
                    }
                }
                Predictions::soft(&soft, space)
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Predictions::Hard(l) => l.len(),
            Predictions::Soft { k, probs } => probs.len() / k,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mode(&self) -> PredictionMode {
        match self {
            Predictions::Hard(_) => PredictionMode::Hard,
            Predictions::Soft { .. } => PredictionMode::Soft,
        }
    }

    /// Hard labels; soft rows are reduced by argmax with ties going to the
    /// lowest class index.
    pub fn to_hard(&self) -> Vec<usize> {
        match self {
            Predictions::Hard(l) => l.clone(),
            Predictions::Soft { k, probs } => probs.chunks(*k).map(argmax).collect(),
        }
    }

    fn check_space(&self, space: LabelSpace) -> Result<()> {
        match self {
            Predictions::Hard(l) => l.iter().try_for_each(|&x| space.check(x)),
            Predictions::Soft { k, .. } if *k != space.k() => Err(Error::Dimension {
                expected: space.k(),
                got: *k,
            }),
            Predictions::Soft { .. } => Ok(()),
        }
    }
}

fn push_soft_row(out: &mut Vec<f64>, p: &[f64], k: usize, row: usize) -> Result<()> {
    if p.len() != k {
        return Err(Error::Dimension {
            expected: k,
            got: p.len(),
        });
    }
    if p.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("soft prediction"));
    }
    let sum: f64 = p.iter().sum();
    if p.iter().any(|&x| x < 0.0) || (sum - 1.0).abs() > SOFT_ROW_TOL {
        return Err(Error::OffSimplex { row });
    }
    out.extend(p.iter().map(|x| x / sum));
    Ok(())
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Predictor outputs on labeled source data.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceEval {
    preds: Predictions,
    labels: Vec<usize>,
}

impl SourceEval {
    pub fn new(preds: Predictions, labels: Vec<usize>, space: LabelSpace) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Empty("source evaluation"));
        }
        if preds.len() != labels.len() {
            return Err(Error::Dimension {
                expected: labels.len(),
                got: preds.len(),
            });
        }
        preds.check_space(space)?;
        for &l in &labels {
            space.check(l)?;
        }
        Ok(SourceEval { preds, labels })
    }

    pub fn preds(&self) -> &Predictions {
        &self.preds
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }
}

/// Predictor outputs on unlabeled target data.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetEval {
    preds: Predictions,
}

impl TargetEval {
    pub fn new(preds: Predictions, space: LabelSpace) -> Result<Self> {
        if preds.is_empty() {
            return Err(Error::Empty("target evaluation"));
        }
        preds.check_space(space)?;
        Ok(TargetEval { preds })
    }

    pub fn preds(&self) -> &Predictions {
        &self.preds
    }

    pub fn m(&self) -> usize {
        self.preds.len()
    }
}

/// Empirical joint distribution of (predicted label, true label).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    k: usize,
    entries: Vec<f64>,
    mode: PredictionMode,
    n: usize,
}

impl ConfusionMatrix {
    /// Wraps a precomputed joint matrix (row-major, rows = predicted).
    pub fn from_entries(
        space: LabelSpace,
        entries: Vec<f64>,
        mode: PredictionMode,
        n: usize,
    ) -> Result<Self> {
        let k = space.k();
        if entries.len() != k * k {
            return Err(Error::Dimension {
                expected: k * k,
                got: entries.len(),
            });
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("confusion matrix"));
        }
        Ok(ConfusionMatrix {
            k,
            entries,
            mode,
            n,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn space(&self) -> LabelSpace {
        LabelSpace(self.k)
    }

    pub fn mode(&self) -> PredictionMode {
        self.mode
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Estimate of `p(f(x) = predicted, y = actual)`.
    pub fn get(&self, predicted: usize, actual: usize) -> f64 {
        self.entries[predicted * self.k + actual]
    }

    /// Marginal of the true label.
    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.k)
            .map(|j| (0..self.k).map(|i| self.get(i, j)).sum())
            .collect()
    }

    /// Marginal of the predicted label.
    pub fn row_sums(&self) -> Vec<f64> {
        self.entries.chunks(self.k).map(|r| r.iter().sum()).collect()
    }

    /// The conditional `p(ŷ | y)`; columns with no mass are left at zero.
    pub fn column_normalized(&self) -> Vec<f64> {
        let cols = self.column_sums();
        let mut out = self.entries.clone();
        for i in 0..self.k {
            for j in 0..self.k {
                out[i * self.k + j] = if cols[j] > 0.0 {
                    self.get(i, j) / cols[j]
                } else {
                    0.0
                };
            }
        }
        out
    }
}

pub fn estimate_confusion(eval: &SourceEval, space: LabelSpace) -> Result<ConfusionMatrix> {
    let k = space.k();
    eval.preds.check_space(space)?;
    let mut acc = vec![0.0; k * k];
    match &eval.preds {
        Predictions::Hard(preds) => {
            for (&p, &y) in preds.iter().zip(&eval.labels) {
                space.check(y)?;
                acc[p * k + y] += 1.0;
            }
        }
        Predictions::Soft { probs, .. } => {
            for (row, &y) in probs.chunks(k).zip(&eval.labels) {
                space.check(y)?;
                for (i, &p) in row.iter().enumerate() {
                    acc[i * k + y] += p;
                }
            }
        }
    }
    let n = eval.n() as f64;
    for v in &mut acc {
        *v /= n;
    }
    Ok(ConfusionMatrix {
        k,
        entries: acc,
        mode: eval.preds.mode(),
        n: eval.n(),
    })
}

/// Marginal distribution of the predictor's output (mean probability vector
/// in soft mode).
pub fn estimate_pred_marginal(preds: &Predictions, space: LabelSpace) -> Result<LabelDistribution> {
    if preds.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    preds.check_space(space)?;
    let k = space.k();
    let mut acc = vec![0.0; k];
    match preds {
        Predictions::Hard(l) => {
            for &p in l {
                acc[p] += 1.0;
            }
        }
        Predictions::Soft { probs, .. } => {
            for row in probs.chunks(k) {
                for (a, &p) in acc.iter_mut().zip(row) {
                    *a += p;
                }
            }
        }
    }
    let m = preds.len() as f64;
    finish_marginal(acc.into_iter().map(|c| c / m).collect())
}

/// Empirical class frequencies.
pub fn estimate_label_marginal(labels: &[usize], space: LabelSpace) -> Result<LabelDistribution> {
    if labels.is_empty() {
        return Err(Error::Empty("labels"));
    }
    let mut counts = vec![0usize; space.k()];
    for &l in labels {
        space.check(l)?;
        counts[l] += 1;
    }
    let n = labels.len() as f64;
    finish_marginal(counts.into_iter().map(|c| c as f64 / n).collect())
}

fn finish_marginal(probs: Vec<f64>) -> Result<LabelDistribution> {
    // The sum of k quotients can drift by a few ulps from one.
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::OffSimplex { row: 0 });
    }
    Ok(LabelDistribution { probs })
}

/// Linear solver used for `C w = μ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Solver {
    #[default]
    Lu,
    PseudoInverse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    /// Fallback threshold on the smallest singular value; `0 < delta < 1/k`.
    pub delta: f64,
    pub solver: Solver,
}

impl SolveConfig {
    pub fn new(delta: f64, solver: Solver) -> Self {
        SolveConfig { delta, solver }
    }

    pub fn default_for(space: LabelSpace) -> Self {
        SolveConfig {
            delta: space.default_delta(),
            solver: Solver::Lu,
        }
    }

    pub fn validate(&self, space: LabelSpace) -> Result<()> {
        validate_delta(self.delta, space)
    }
}

pub fn validate_delta(delta: f64, space: LabelSpace) -> Result<()> {
    if delta > 0.0 && delta < 1.0 / space.k() as f64 {
        Ok(())
    } else {
        Err(Error::Parameter { name: "delta" })
    }
}

/// Estimated importance weights and diagnostics for the solve.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightEstimate {
    /// Clipped weights `max(w_raw, 0)`.
    pub w: Vec<f64>,
    pub w_raw: Vec<f64>,
    pub sigma_min: f64,
    /// Set when `sigma_min <= delta`; `w` is then all ones.
    pub fallback: bool,
    pub clipped: Vec<bool>,
    /// High-probability squared-error diagnostic, see [`error_bound`].
    pub bound: Option<f64>,
    /// `diag(ν_y) w`, the target label distribution. Not renormalized, so
    /// it leaves the simplex when clipping occurred.
    pub mu_y: Vec<f64>,
}

impl WeightEstimate {
    pub fn k(&self) -> usize {
        self.w.len()
    }

    pub fn any_clipped(&self) -> bool {
        self.clipped.iter().any(|&c| c)
    }

    /// `mu_y` rescaled onto the simplex, for reporting.
    pub fn mu_y_normalized(&self) -> Result<LabelDistribution> {
        LabelDistribution::normalized(&self.mu_y)
    }

    /// Per-example weights `w[y_i]`.
    pub fn example_weights(&self, labels: &[usize]) -> Vec<f64> {
        labels.iter().map(|&y| self.w[y]).collect()
    }

    /// Fills `bound` from the sample sizes used for the estimate.
    pub fn with_bound(mut self, n: usize, m: usize) -> Self {
        self.bound = if self.fallback {
            None
        } else {
            error_bound(n, m, self.k(), self.sigma_min, &self.w).ok()
        };
        self
    }
}

pub fn solve_weights(
    c: &ConfusionMatrix,
    mu_hat: &LabelDistribution,
    nu_y: &LabelDistribution,
    cfg: &SolveConfig,
) -> Result<WeightEstimate> {
    let k = c.k();
    for got in [mu_hat.k(), nu_y.k()] {
        if got != k {
            return Err(Error::Dimension { expected: k, got });
        }
    }
    cfg.validate(c.space())?;

    let sigma_min = smallest_singular_value(c);
    if sigma_min <= cfg.delta {
        return Ok(WeightEstimate {
            w: vec![1.0; k],
            w_raw: vec![1.0; k],
            sigma_min,
            fallback: true,
            clipped: vec![false; k],
            bound: None,
            mu_y: nu_y.probs.clone(),
        });
    }

    let w_raw = match cfg.solver {
        Solver::Lu => linalg::lu_solve(k, &c.entries, &mu_hat.probs)
            .ok_or(Error::Degenerate("singular confusion matrix"))?,
        Solver::PseudoInverse => linalg::pinv_solve(k, &c.entries, &mu_hat.probs),
    };
    let clipped: Vec<bool> = w_raw.iter().map(|&x| x < 0.0).collect();
    let w: Vec<f64> = w_raw.iter().map(|&x| x.max(0.0)).collect();
    let mu_y = nu_y.probs.iter().zip(&w).map(|(p, w)| p * w).collect();
    Ok(WeightEstimate {
        w,
        w_raw,
        sigma_min,
        fallback: false,
        clipped,
        bound: None,
        mu_y,
    })
}

/// Full estimation from predictor outputs on source and target; the
/// returned estimate carries the error-bound diagnostic.
pub fn estimate_weights(
    source: &SourceEval,
    target: &TargetEval,
    space: LabelSpace,
    cfg: &SolveConfig,
) -> Result<WeightEstimate> {
    if source.preds.mode() != target.preds.mode() {
        return Err(Error::Format("source and target prediction kinds differ"));
    }
    let c = estimate_confusion(source, space)?;
    let mu_hat = estimate_pred_marginal(&target.preds, space)?;
    let nu_y = estimate_label_marginal(&source.labels, space)?;
    Ok(solve_weights(&c, &mu_hat, &nu_y, cfg)?.with_bound(source.n(), target.m()))
}

pub fn smallest_singular_value(c: &ConfusionMatrix) -> f64 {
    linalg::smallest_singular_value(c.k, &c.entries)
}

/// Plug-in squared-error bound
///
/// ```text
/// 80 log n / (σ² n) · ‖w‖²  +  80 k log m / (σ² m)
/// ```
///
/// The constant comes from the concentration argument; treat the value as a
/// diagnostic for how trustworthy an estimate is, not as a guarantee.
pub fn error_bound(n: usize, m: usize, k: usize, sigma_min: f64, w: &[f64]) -> Result<f64> {
    if !(sigma_min > 0.0) {
        return Err(Error::Parameter { name: "sigma_min" });
    }
    if n < 2 || m < 2 {
        return Err(Error::Parameter { name: "sample size" });
    }
    let (n, m, k) = (n as f64, m as f64, k as f64);
    let s2 = sigma_min * sigma_min;
    let w2: f64 = w.iter().map(|x| x * x).sum();
    Ok(80.0 * n.ln() / (s2 * n) * w2 + 80.0 * k * m.ln() / (s2 * m))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(k: usize) -> LabelSpace {
        LabelSpace::new(k).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    fn dist(p: &[f64]) -> LabelDistribution {
        LabelDistribution::new(p.to_vec()).unwrap()
    }

    fn matrix(k: usize, e: &[f64]) -> ConfusionMatrix {
        ConfusionMatrix::from_entries(space(k), e.to_vec(), PredictionMode::Hard, 100).unwrap()
    }

    #[test]
    fn label_space_rejects_single_class() {
        assert_eq!(LabelSpace::new(1), Err(Error::LabelSpace(1)));
    }

    #[test]
    fn confusion_hard_examples() {
        let s = space(2);
        let ev = SourceEval::new(
            Predictions::hard(vec![0, 1, 0, 1], s).unwrap(),
            vec![0, 1, 0, 1],
            s,
        )
        .unwrap();
        let c = estimate_confusion(&ev, s).unwrap();
        close(c.entries(), &[0.5, 0.0, 0.0, 0.5], 0.0);

        let ev = SourceEval::new(
            Predictions::hard(vec![0, 0, 0, 0], s).unwrap(),
            vec![0, 1, 0, 1],
            s,
        )
        .unwrap();
        let c = estimate_confusion(&ev, s).unwrap();
        close(c.entries(), &[0.5, 0.5, 0.0, 0.0], 0.0);
    }

    #[test]
    fn confusion_soft_example() {
        let s = space(2);
        let preds = Predictions::soft(&[vec![0.8, 0.2], vec![0.4, 0.6]], s).unwrap();
        let ev = SourceEval::new(preds, vec![0, 1], s).unwrap();
        let c = estimate_confusion(&ev, s).unwrap();
        // column y=0 gets 0.8/2, 0.2/2; column y=1 gets 0.4/2, 0.6/2
        close(c.entries(), &[0.4, 0.2, 0.1, 0.3], 1e-15);
        assert_eq!(c.mode(), PredictionMode::Soft);
    }

    #[test]
    fn confusion_errors() {
        let s = space(2);
        assert!(matches!(
            SourceEval::new(Predictions::Hard(vec![0]), vec![2], s),
            Err(Error::LabelOutOfRange { label: 2, k: 2 })
        ));
        assert_eq!(
            SourceEval::new(Predictions::Hard(vec![]), vec![], s),
            Err(Error::Empty("source evaluation"))
        );
        let mixed = vec![Prediction::Label(0), Prediction::Probs(vec![0.5, 0.5])];
        assert_eq!(
            Predictions::from_rows(mixed, s),
            Err(Error::Format("mixed hard and soft predictions"))
        );
    }

    #[test]
    fn soft_rows_must_be_on_simplex() {
        let s = space(2);
        assert_eq!(
            Predictions::soft(&[vec![0.5, 0.5], vec![0.7, 0.4]], s),
            Err(Error::OffSimplex { row: 1 })
        );
        assert!(Predictions::soft(&[vec![0.5, 0.5 + 1e-10]], s).is_ok());
    }

    #[test]
    fn pred_marginal_examples() {
        let m = estimate_pred_marginal(&Predictions::Hard(vec![0, 1, 2]), space(3)).unwrap();
        close(m.probs(), &[1.0 / 3.0; 3], 1e-15);
        let m = estimate_pred_marginal(&Predictions::Hard(vec![1, 1, 1, 0]), space(2)).unwrap();
        close(m.probs(), &[0.25, 0.75], 0.0);
        let p = Predictions::soft(&[vec![0.9, 0.1], vec![0.5, 0.5]], space(2)).unwrap();
        let m = estimate_pred_marginal(&p, space(2)).unwrap();
        close(m.probs(), &[0.7, 0.3], 1e-15);
    }

    #[test]
    fn label_marginal_examples() {
        let s2 = space(2);
        close(estimate_label_marginal(&[0, 0, 1, 1], s2).unwrap().probs(), &[0.5, 0.5], 0.0);
        close(estimate_label_marginal(&[2], space(3)).unwrap().probs(), &[0.0, 0.0, 1.0], 0.0);
        close(estimate_label_marginal(&[0, 1, 1, 1], s2).unwrap().probs(), &[0.25, 0.75], 0.0);
        assert!(estimate_label_marginal(&[0, 3], s2).is_err());
    }

    #[test]
    fn solve_symmetric_two_by_two() {
        let c = matrix(2, &[0.4, 0.1, 0.1, 0.4]);
        let cfg = SolveConfig::new(0.01, Solver::Lu);
        let est = solve_weights(&c, &dist(&[0.35, 0.65]), &dist(&[0.5, 0.5]), &cfg).unwrap();
        close(&est.w_raw, &[0.5, 1.5], 1e-12);
        close(&est.w, &[0.5, 1.5], 1e-12);
        close(&est.mu_y, &[0.25, 0.75], 1e-12);
        assert!(!est.fallback);
        assert!((est.sigma_min - 0.3).abs() < 1e-12);
    }

    #[test]
    fn singular_matrix_falls_back() {
        let c = matrix(2, &[0.5, 0.5, 0.0, 0.0]);
        let cfg = SolveConfig::new(0.05, Solver::Lu);
        let est = solve_weights(&c, &dist(&[0.5, 0.5]), &dist(&[0.5, 0.5]), &cfg).unwrap();
        assert!(est.fallback);
        assert_eq!(est.w, vec![1.0, 1.0]);
        assert_eq!(est.sigma_min, 0.0);
        assert_eq!(est.with_bound(10, 10).bound, None);
    }

    #[test]
    fn negative_weight_is_clipped() {
        let c = matrix(2, &[0.45, 0.05, 0.05, 0.45]);
        let cfg = SolveConfig::new(0.01, Solver::Lu);
        let est = solve_weights(&c, &dist(&[0.02, 0.98]), &dist(&[0.5, 0.5]), &cfg).unwrap();
        close(&est.w_raw, &[-0.2, 2.2], 1e-12);
        close(&est.w, &[0.0, 2.2], 1e-12);
        assert_eq!(est.clipped, vec![true, false]);
        // not renormalized
        close(&est.mu_y, &[0.0, 1.1], 1e-12);
        let norm = est.mu_y_normalized().unwrap();
        close(norm.probs(), &[0.0, 1.0], 1e-12);
    }

    #[test]
    fn delta_is_validated() {
        let c = matrix(2, &[0.4, 0.1, 0.1, 0.4]);
        let d = dist(&[0.5, 0.5]);
        for delta in [0.0, 0.5, 0.9, -1.0, f64::NAN] {
            let cfg = SolveConfig::new(delta, Solver::Lu);
            assert_eq!(
                solve_weights(&c, &d, &d, &cfg),
                Err(Error::Parameter { name: "delta" })
            );
        }
        assert!((space(10).default_delta() - 0.01).abs() < 1e-18);
    }

    #[test]
    fn dimension_mismatch() {
        let c = matrix(2, &[0.4, 0.1, 0.1, 0.4]);
        let d3 = dist(&[0.2, 0.3, 0.5]);
        let d2 = dist(&[0.5, 0.5]);
        let cfg = SolveConfig::new(0.01, Solver::Lu);
        assert!(matches!(
            solve_weights(&c, &d3, &d2, &cfg),
            Err(Error::Dimension { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn sigma_min_examples() {
        assert!((smallest_singular_value(&matrix(2, &[0.5, 0.0, 0.0, 0.5])) - 0.5).abs() < 1e-15);
        assert!((smallest_singular_value(&matrix(2, &[0.4, 0.1, 0.1, 0.4])) - 0.3).abs() < 1e-15);
        assert!(smallest_singular_value(&matrix(2, &[0.3, 0.3, 0.2, 0.2])) < 1e-15);
    }

    #[test]
    fn bound_examples() {
        let w: Vec<f64> = vec![1.0; 10];
        let b = error_bound(10_000, 10_000, 10, 0.5, &w).unwrap();
        let expect = 2.0 * 80.0 * 10_000f64.ln() * 10.0 / 2500.0;
        assert!((b - expect).abs() < 1e-12);
        assert!((b - 5.895).abs() < 1e-3);

        let far = error_bound(100_000_000, 100_000_000, 10, 0.5, &w).unwrap();
        assert!(far < b);

        let b1 = error_bound(500, 700, 3, 0.2, &[0.5, 1.0, 2.0]).unwrap();
        let b2 = error_bound(500, 700, 3, 0.4, &[0.5, 1.0, 2.0]).unwrap();
        assert!((b1 - 4.0 * b2).abs() <= 1e-12 * b1);

        assert!(error_bound(10, 10, 2, 0.0, &w).is_err());
        assert!(error_bound(10, 10, 2, -0.1, &w).is_err());
    }

    #[test]
    fn to_hard_breaks_ties_low() {
        let p = Predictions::soft(&[vec![0.5, 0.5], vec![0.2, 0.8]], space(2)).unwrap();
        assert_eq!(p.to_hard(), vec![0, 1]);
    }
}
