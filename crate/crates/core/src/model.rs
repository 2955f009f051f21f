//! Datasets, a softmax-regression predictor trained by weighted full-batch
//! gradient descent, and a Gaussian-mixture data generator.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::estimate::{argmax, LabelDistribution, LabelSpace, PredictionMode, Predictions};
use crate::rng::SeededRng;
use crate::shiftsim::sample_class;

/// Dense row-major `rows × cols` feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Features {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
        Ok(Features { rows, cols, data })
    }

    pub fn empty(cols: usize) -> Self {
        Features {
            rows: 0,
            cols,
            data: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks(0) panics; a zero-width matrix still has `rows` rows.
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn select(&self, indices: &[usize]) -> Features {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Features {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }
}

/// Labeled examples over a label space.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Features,
    labels: Vec<usize>,
    space: LabelSpace,
}

impl Dataset {
    pub fn new(features: Features, labels: Vec<usize>, space: LabelSpace) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::Dimension {
                expected: labels.len(),
                got: features.rows(),
            });
        }
        for &l in &labels {
            space.check(l)?;
        }
        Ok(Dataset {
            features,
            labels,
            space,
        })
    }

    pub fn features(&self) -> &Features {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn space(&self) -> LabelSpace {
        self.space
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn d(&self) -> usize {
        self.features.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            space: self.space,
        }
    }

    /// Example indices grouped by class.
    pub fn class_pools(&self) -> Vec<Vec<usize>> {
        let mut pools = vec![Vec::new(); self.space.k()];
        for (i, &l) in self.labels.iter().enumerate() {
            pools[l].push(i);
        }
        pools
    }
}

/// Isotropic Gaussian class-conditionals with labels drawn from `q`.
///
/// `means` is row-major `k × dim`.
pub fn gen_gaussian_mixture(
    space: LabelSpace,
    dim: usize,
    means: &[f64],
    scale: f64,
    q: &LabelDistribution,
    n: usize,
    rng: &mut SeededRng,
) -> Result<Dataset> {
    let k = space.k();
    if means.len() != k * dim {
        return Err(Error::Dimension {
            expected: k * dim,
            got: means.len(),
        });
    }
    if means.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("means"));
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Parameter { name: "scale" });
    }
    if q.k() != k {
        return Err(Error::Dimension {
            expected: k,
            got: q.k(),
        });
    }
    let mut labels = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * dim);
    for _ in 0..n {
        let y = sample_class(q, rng);
        labels.push(y);
        for &mu in &means[y * dim..(y + 1) * dim] {
            let z: f64 = rng.sample(StandardNormal);
            data.push(mu + scale * z);
        }
    }
    Dataset::new(Features::new(n, dim, data)?, labels, space)
}

/// Class means with neighbouring classes `separation` apart.
///
/// With `dim >= k` the classes sit on scaled one-hot corners, so every pair
/// is `separation` apart. Otherwise they go on a line (`dim = 1` or `k = 2`)
/// or on a circle in the first two coordinates.
pub fn spread_means(space: LabelSpace, dim: usize, separation: f64) -> Result<Vec<f64>> {
    let k = space.k();
    if dim == 0 {
        return Err(Error::Parameter { name: "dim" });
    }
    let mut means = vec![0.0; k * dim];
    if dim >= k {
        let s = separation / 2f64.sqrt();
        for c in 0..k {
            means[c * dim + c] = s;
        }
    } else if dim == 1 || k == 2 {
        for c in 0..k {
            means[c * dim] = separation * (c as f64 - (k - 1) as f64 / 2.0);
        }
    } else {
        // circle with chord length `separation` between neighbours
        let angle = 2.0 * core::f64::consts::PI / k as f64;
        let radius = separation / (2.0 * (angle / 2.0).sin());
        for c in 0..k {
            let t = angle * c as f64;
            means[c * dim] = radius * t.cos();
            means[c * dim + 1] = radius * t.sin();
        }
    }
    Ok(means)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub l2: f64,
    /// Descent is deterministic from a zero start; recorded for provenance.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.5,
            iterations: 200,
            l2: 1e-4,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Parameter {
                name: "learning_rate",
            });
        }
        if !(self.l2 >= 0.0) || !self.l2.is_finite() {
            return Err(Error::Parameter { name: "l2" });
        }
        Ok(())
    }
}

/// Multinomial logistic regression `softmax(W x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxModel {
    /// Row-major `k × d`.
    weights: Vec<f64>,
    bias: Vec<f64>,
    d: usize,
    space: LabelSpace,
}

/// Gradient of the training objective, shaped like the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl SoftmaxModel {
    pub fn zeros(space: LabelSpace, d: usize) -> Self {
        SoftmaxModel {
            weights: vec![0.0; space.k() * d],
            bias: vec![0.0; space.k()],
            d,
            space,
        }
    }

    pub fn from_parts(space: LabelSpace, d: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != space.k() * d {
            return Err(Error::Dimension {
                expected: space.k() * d,
                got: weights.len(),
            });
        }
        if bias.len() != space.k() {
            return Err(Error::Dimension {
                expected: space.k(),
                got: bias.len(),
            });
        }
        if weights.iter().chain(&bias).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("model parameters"));
        }
        Ok(SoftmaxModel {
            weights,
            bias,
            d,
            space,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn space(&self) -> LabelSpace {
        self.space
    }

    fn logits_into(&self, x: &[f64], out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            let w = &self.weights[c * self.d..(c + 1) * self.d];
            *o = self.bias[c] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    fn check_width(&self, features: &Features) -> Result<()> {
        if features.cols() != self.d {
            return Err(Error::Dimension {
                expected: self.d,
                got: features.cols(),
            });
        }
        Ok(())
    }

    /// Class probabilities, row-major `rows × k`.
    pub fn predict_proba(&self, features: &Features) -> Result<Vec<f64>> {
        self.check_width(features)?;
        let k = self.space.k();
        let mut out = vec![0.0; features.rows() * k];
        for (x, row) in features.iter_rows().zip(out.chunks_mut(k)) {
            self.logits_into(x, row);
            softmax_in_place(row);
        }
        Ok(out)
    }

    /// Argmax of the logits, lowest class index on ties.
    pub fn predict_hard(&self, features: &Features) -> Result<Vec<usize>> {
        self.check_width(features)?;
        let mut logits = vec![0.0; self.space.k()];
        Ok(features
            .iter_rows()
            .map(|x| {
                self.logits_into(x, &mut logits);
                argmax(&logits)
            })
            .collect())
    }

    pub fn predict(&self, features: &Features, mode: PredictionMode) -> Result<Predictions> {
        match mode {
            PredictionMode::Hard => Ok(Predictions::Hard(self.predict_hard(features)?)),
            PredictionMode::Soft => Ok(Predictions::Soft {
                k: self.space.k(),
                probs: self.predict_proba(features)?,
            }),
        }
    }

    pub fn accuracy(&self, data: &Dataset) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        let preds = self.predict_hard(data.features())?;
        let hits = preds.iter().zip(data.labels()).filter(|(a, b)| a == b).count();
        Ok(hits as f64 / data.n() as f64)
    }
}

/// Max-subtracted softmax.
pub fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

fn check_weights(data: &Dataset, example_weights: Option<&[f64]>) -> Result<()> {
    if let Some(w) = example_weights {
        if w.len() != data.n() {
            return Err(Error::Dimension {
                expected: data.n(),
                got: w.len(),
            });
        }
        if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::Parameter {
                name: "example_weights",
            });
        }
        if w.iter().all(|&x| x == 0.0) {
            return Err(Error::Degenerate("all example weights are zero"));
        }
    }
    Ok(())
}

/// Objective `(1/n) Σ w_i CE(softmax(W x_i + b), y_i) + l2 ‖W‖²_F / 2` and
/// its exact gradient. The bias is not penalized.
pub fn loss_and_grad(
    model: &SoftmaxModel,
    data: &Dataset,
    example_weights: Option<&[f64]>,
    l2: f64,
) -> Result<(f64, Gradient)> {
    if data.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    if data.space() != model.space {
        return Err(Error::Dimension {
            expected: model.space.k(),
            got: data.space().k(),
        });
    }
    model.check_width(data.features())?;
    check_weights(data, example_weights)?;

    let k = model.space.k();
    let d = model.d;
    let inv_n = 1.0 / data.n() as f64;
    let mut grad_w = vec![0.0; k * d];
    let mut grad_b = vec![0.0; k];
    let mut loss = 0.0;
    let mut z = vec![0.0; k];
    for (i, (x, &y)) in data.features().iter_rows().zip(data.labels()).enumerate() {
        let wi = example_weights.map_or(1.0, |w| w[i]);
        if wi == 0.0 {
            continue;
        }
        model.logits_into(x, &mut z);
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let shifted_y = z[y] - max;
        let mut sum = 0.0;
        for v in z.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        loss += wi * (sum.ln() - shifted_y);
        let scale = wi * inv_n;
        for c in 0..k {
            let p = z[c] / sum;
            let g = scale * (p - if c == y { 1.0 } else { 0.0 });
            grad_b[c] += g;
            for (gw, &xj) in grad_w[c * d..(c + 1) * d].iter_mut().zip(x) {
                *gw += g * xj;
            }
        }
    }
    loss *= inv_n;
    if l2 > 0.0 {
        let mut sq = 0.0;
        for (g, &w) in grad_w.iter_mut().zip(&model.weights) {
            *g += l2 * w;
            sq += w * w;
        }
        loss += 0.5 * l2 * sq;
    }
    Ok((
        loss,
        Gradient {
            weights: grad_w,
            bias: grad_b,
        },
    ))
}

/// Weighted ERM by full-batch gradient descent from the zero model, exactly
/// `cfg.iterations` steps.
pub fn train_softmax(
    data: &Dataset,
    example_weights: Option<&[f64]>,
    cfg: &TrainConfig,
) -> Result<SoftmaxModel> {
    train_softmax_traced(data, example_weights, cfg, |_, _| {})
}

/// As [`train_softmax`], calling `observe(step, loss)` with the objective
/// before every update.
pub fn train_softmax_traced(
    data: &Dataset,
    example_weights: Option<&[f64]>,
    cfg: &TrainConfig,
    mut observe: impl FnMut(usize, f64),
) -> Result<SoftmaxModel> {
    cfg.validate()?;
    if data.features().data().iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("features"));
    }
    check_weights(data, example_weights)?;
    let mut model = SoftmaxModel::zeros(data.space(), data.d());
    if cfg.iterations == 0 {
        return Ok(model);
    }
    if data.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    for step in 0..cfg.iterations {
        let (loss, grad) = loss_and_grad(&model, data, example_weights, cfg.l2)?;
        observe(step, loss);
        for (w, g) in model.weights.iter_mut().zip(&grad.weights) {
            *w -= cfg.learning_rate * g;
        }
        for (b, g) in model.bias.iter_mut().zip(&grad.bias) {
            *b -= cfg.learning_rate * g;
        }
    }
    Ok(model)
}

/// Perturbs one parameter; index runs over weights then bias.
#[doc(hidden)]
pub fn nudge_parameter(model: &SoftmaxModel, index: usize, h: f64) -> SoftmaxModel {
    let mut m = model.clone();
    if index < m.weights.len() {
        m.weights[index] += h;
    } else {
        m.bias[index - m.weights.len()] += h;
    }
    m
}
