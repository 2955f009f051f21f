//! Black-box shift detection.
//!
//! Label shift changes the marginal of the predictor's output whenever the
//! confusion matrix is invertible, so testing `p(ŷ) = q(ŷ)` on the
//! one-dimensional predictions stands in for a high-dimensional test on `x`.

use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::estimate::{LabelSpace, Predictions};
use crate::model::Features;
use crate::rng::SeededRng;
use crate::special::{chi2_sf, kolmogorov_sf};

/// Significance level of the label-shift assumption check.
pub const MMD_ALPHA: f64 = 0.05;
pub const MIN_BOOTSTRAP_REPS: usize = 100;
pub const DEFAULT_BOOTSTRAP_REPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TestMethod {
    Ks,
    #[default]
    Chi2,
    Mmd,
}

impl TestMethod {
    pub fn name(self) -> &'static str {
        match self {
            TestMethod::Ks => "ks",
            TestMethod::Chi2 => "chi2",
            TestMethod::Mmd => "mmd",
        }
    }
}

/// Outcome of a two-sample test at level `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftReport {
    pub method: TestMethod,
    pub statistic: f64,
    pub p_value: f64,
    pub alpha: f64,
    /// `p_value < alpha`.
    pub reject: bool,
    pub sample_sizes: (usize, usize),
}

impl ShiftReport {
    fn new(method: TestMethod, statistic: f64, p_value: f64, alpha: f64, sizes: (usize, usize)) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        ShiftReport {
            method,
            statistic: statistic.max(0.0),
            p_value,
            alpha,
            reject: p_value < alpha,
            sample_sizes: sizes,
        }
    }
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value at
/// `λ = D √(n₁ n₂ / (n₁ + n₂))`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("ks sample"));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("ks sample"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let lambda = d * (na * nb / (na + nb)).sqrt();
    Ok((d, kolmogorov_sf(lambda)))
}

/// Chi-square homogeneity test on two count vectors over the same
/// categories. Categories empty in both samples are dropped and the degrees
/// of freedom shrink with them.
pub fn chi2_two_sample(counts_a: &[u64], counts_b: &[u64]) -> Result<(f64, f64)> {
    if counts_a.len() != counts_b.len() {
        return Err(Error::Dimension {
            expected: counts_a.len(),
            got: counts_b.len(),
        });
    }
    let ta: u64 = counts_a.iter().sum();
    let tb: u64 = counts_b.iter().sum();
    if ta == 0 || tb == 0 {
        return Err(Error::Empty("chi-square counts"));
    }
    let total = (ta + tb) as f64;
    let (ta, tb) = (ta as f64, tb as f64);
    let mut stat = 0.0;
    let mut kept = 0usize;
    for (&a, &b) in counts_a.iter().zip(counts_b) {
        let col = (a + b) as f64;
        if col == 0.0 {
            continue;
        }
        kept += 1;
        let ea = ta * col / total;
        let eb = tb * col / total;
        stat += (a as f64 - ea).powi(2) / ea + (b as f64 - eb).powi(2) / eb;
    }
    let df = kept.saturating_sub(1);
    Ok((stat, chi2_sf(stat, df)))
}

/// Tests `p(ŷ) = q(ŷ)` on hard predictions. Soft predictions are reduced to
/// their argmax first.
pub fn detect_label_shift(
    source: &Predictions,
    target: &Predictions,
    space: LabelSpace,
    alpha: f64,
    method: TestMethod,
) -> Result<ShiftReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter { name: "alpha" });
    }
    if source.is_empty() || target.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    let a = source.to_hard();
    let b = target.to_hard();
    for &l in a.iter().chain(&b) {
        space.check(l)?;
    }
    let sizes = (a.len(), b.len());
    let (stat, p) = match method {
        TestMethod::Ks => {
            let fa: Vec<f64> = a.iter().map(|&x| x as f64).collect();
            let fb: Vec<f64> = b.iter().map(|&x| x as f64).collect();
            ks_two_sample(&fa, &fb)?
        }
        TestMethod::Chi2 => chi2_two_sample(&class_counts(&a, space), &class_counts(&b, space))?,
        TestMethod::Mmd => return Err(Error::Parameter { name: "method" }),
    };
    Ok(ShiftReport::new(method, stat, p, alpha, sizes))
}

pub fn class_counts(labels: &[usize], space: LabelSpace) -> Vec<u64> {
    let mut counts = vec![0u64; space.k()];
    for &l in labels {
        counts[l] += 1;
    }
    counts
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Median pairwise Euclidean distance.
pub fn median_pairwise_distance(points: &[&[f64]]) -> f64 {
    let n = points.len();
    let mut d = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in 0..i {
            d.push(sq_dist(points[i], points[j]));
        }
    }
    if d.is_empty() {
        return 0.0;
    }
    let mid = d.len() / 2;
    let (_, m, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
    m.sqrt()
}

/// Checks whether the reweighted source explains the target in the score
/// space: a weighted MMD² between `Σ w(y_i) k(φ(x_i), ·) / n` and the target
/// embedding, RBF kernel with the median-distance bandwidth.
///
/// The null is bootstrapped: each replication draws `n` source points
/// uniformly and `m` pseudo-target points from the source with probability
/// proportional to `w(y_i)`, both with replacement, and recomputes the
/// statistic. Replication `r` uses substream `r` of a generator seeded from
/// one draw of `rng`.
pub fn assumption_check_mmd(
    source_scores: &Features,
    source_labels: &[usize],
    w: &[f64],
    target_scores: &Features,
    bootstrap_reps: usize,
    rng: &mut SeededRng,
) -> Result<ShiftReport> {
    let n = source_scores.rows();
    let m = target_scores.rows();
    if n == 0 || m == 0 {
        return Err(Error::Empty("scores"));
    }
    if source_labels.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: source_labels.len(),
        });
    }
    if target_scores.cols() != source_scores.cols() {
        return Err(Error::Dimension {
            expected: source_scores.cols(),
            got: target_scores.cols(),
        });
    }
    if bootstrap_reps < MIN_BOOTSTRAP_REPS {
        return Err(Error::Parameter {
            name: "bootstrap_reps",
        });
    }
    if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::Parameter { name: "w" });
    }
    let space = LabelSpace::new(w.len())?;
    for &l in source_labels {
        space.check(l)?;
    }
    let point_w: Vec<f64> = source_labels.iter().map(|&y| w[y]).collect();
    let total_w: f64 = point_w.iter().sum();
    if total_w <= 0.0 {
        return Err(Error::Degenerate("weights vanish on every source point"));
    }

    let pooled: Vec<&[f64]> = source_scores.iter_rows().chain(target_scores.iter_rows()).collect();
    let bandwidth = median_pairwise_distance(&pooled);
    if !(bandwidth > 0.0) {
        return Err(Error::Degenerate("zero median distance"));
    }
    let gamma = 1.0 / (2.0 * bandwidth * bandwidth);
    let kernel = |a: &[f64], b: &[f64]| (-gamma * sq_dist(a, b)).exp();

    // observed statistic over the pooled sample
    let mut coef: Vec<f64> = point_w.iter().map(|&wi| wi / n as f64).collect();
    coef.extend(core::iter::repeat(-1.0 / m as f64).take(m));
    let observed = quadratic_form(&coef, |i, j| kernel(pooled[i], pooled[j]));

    // the bootstrap only ever revisits source points
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        gram[i * n + i] = 1.0;
        for j in 0..i {
            let v = kernel(pooled[i], pooled[j]);
            gram[i * n + j] = v;
            gram[j * n + i] = v;
        }
    }
    let mut cum = Vec::with_capacity(n);
    let mut acc = 0.0;
    for &wi in &point_w {
        acc += wi;
        cum.push(acc);
    }

    let base = SeededRng::new(rng.next_u64());
    let mut exceed = 0usize;
    let mut c = vec![0.0; n];
    for r in 0..bootstrap_reps {
        let mut stream = base.substream(r as u64);
        c.iter_mut().for_each(|v| *v = 0.0);
        for _ in 0..n {
            let i = stream.random_range(0..n);
            c[i] += point_w[i] / n as f64;
        }
        for _ in 0..m {
            let u = stream.random::<f64>() * acc;
            let i = cum.partition_point(|&x| x <= u).min(n - 1);
            c[i] -= 1.0 / m as f64;
        }
        let stat = quadratic_form(&c, |i, j| gram[i * n + j]);
        if stat >= observed {
            exceed += 1;
        }
    }
    let p = (1 + exceed) as f64 / (1 + bootstrap_reps) as f64;
    Ok(ShiftReport::new(TestMethod::Mmd, observed, p, MMD_ALPHA, (n, m)))
}

/// `cᵀ K c` for symmetric `K`, clamped at zero.
fn quadratic_form(c: &[f64], k: impl Fn(usize, usize) -> f64) -> f64 {
    let mut sum = 0.0;
    for i in 0..c.len() {
        if c[i] == 0.0 {
            continue;
        }
        let mut row = 0.5 * c[i] * k(i, i);
        for j in 0..i {
            if c[j] != 0.0 {
                row += c[j] * k(i, j);
            }
        }
        sum += 2.0 * c[i] * row;
    }
    sum.max(0.0)
}
