//! Label-shift simulation: knock-out, tweak-one and Dirichlet shifts, and
//! label-conditional resampling.
//!
//! Resampling draws a class from the target distribution and then an example
//! uniformly with replacement from that class's pool, so every output row
//! is a copy of an input row with the same label and class-conditional
//! feature distributions are untouched.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::estimate::{LabelDistribution, LabelSpace};
use crate::model::{Dataset, Features};
use crate::rng::SeededRng;

/// A shift protocol and its parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShiftSpec {
    /// Remove a fraction `delta` of one class from the source.
    Knockout { class: usize, delta: f64 },
    /// Put mass `rho` on one class of the target, spread the rest evenly.
    TweakOne { class: usize, rho: f64 },
    /// Target drawn from a symmetric Dirichlet with concentration `alpha`.
    Dirichlet { alpha: f64 },
}

/// Source and target label distributions produced by a shift protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftPair {
    pub source: LabelDistribution,
    pub target: LabelDistribution,
}

impl ShiftPair {
    /// Exact importance weights `q(y) / p(y)`. Every source class must carry
    /// mass, and `Σ p(c) w(c) = 1` is checked to 1e-12.
    pub fn true_weights(&self) -> Result<Vec<f64>> {
        let p = self.source.probs();
        let q = self.target.probs();
        let mut w = Vec::with_capacity(p.len());
        for (c, (&pc, &qc)) in p.iter().zip(q).enumerate() {
            if pc <= 0.0 {
                return Err(Error::Support { class: c });
            }
            w.push(qc / pc);
        }
        let mass: f64 = p.iter().zip(&w).map(|(p, w)| p * w).sum();
        if (mass - 1.0).abs() > 1e-12 {
            return Err(Error::Degenerate("true weights do not conserve mass"));
        }
        Ok(w)
    }
}

impl ShiftSpec {
    pub fn validate(&self, space: LabelSpace) -> Result<()> {
        match *self {
            ShiftSpec::Knockout { class, delta } => {
                space.check(class)?;
                unit_interval(delta, "delta")
            }
            ShiftSpec::TweakOne { class, rho } => {
                space.check(class)?;
                unit_interval(rho, "rho")
            }
            ShiftSpec::Dirichlet { alpha } => positive(alpha),
        }
    }

    /// Knock-out shifts the source away from uniform; the other protocols
    /// shift the target and keep a uniform source.
    pub fn distributions(&self, space: LabelSpace, rng: &mut SeededRng) -> Result<ShiftPair> {
        let uniform = LabelDistribution::uniform(space);
        Ok(match *self {
            ShiftSpec::Knockout { class, delta } => ShiftPair {
                source: apply_knockout(&uniform, class, delta)?,
                target: uniform,
            },
            ShiftSpec::TweakOne { class, rho } => ShiftPair {
                target: tweak_one(space, class, rho)?,
                source: uniform,
            },
            ShiftSpec::Dirichlet { alpha } => ShiftPair {
                target: dirichlet_shift(space, alpha, rng)?,
                source: uniform,
            },
        })
    }

    /// The shift distribution itself, independent of source/target role.
    pub fn label_distribution(
        &self,
        space: LabelSpace,
        rng: &mut SeededRng,
    ) -> Result<LabelDistribution> {
        match *self {
            ShiftSpec::Knockout { class, delta } => {
                apply_knockout(&LabelDistribution::uniform(space), class, delta)
            }
            ShiftSpec::TweakOne { class, rho } => tweak_one(space, class, rho),
            ShiftSpec::Dirichlet { alpha } => dirichlet_shift(space, alpha, rng),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ShiftSpec::Knockout { .. } => "knockout",
            ShiftSpec::TweakOne { .. } => "tweak_one",
            ShiftSpec::Dirichlet { .. } => "dirichlet",
        }
    }

    /// The scalar parameter of the protocol.
    pub fn parameter(&self) -> f64 {
        match *self {
            ShiftSpec::Knockout { delta, .. } => delta,
            ShiftSpec::TweakOne { rho, .. } => rho,
            ShiftSpec::Dirichlet { alpha } => alpha,
        }
    }

    pub fn class(&self) -> Option<usize> {
        match *self {
            ShiftSpec::Knockout { class, .. } | ShiftSpec::TweakOne { class, .. } => Some(class),
            ShiftSpec::Dirichlet { .. } => None,
        }
    }
}

fn unit_interval(x: f64, name: &'static str) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Parameter { name })
    }
}

fn positive(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter { name: "alpha" })
    }
}

/// Scales one class's mass by `1 - delta` and renormalizes.
pub fn apply_knockout(
    base: &LabelDistribution,
    class: usize,
    delta: f64,
) -> Result<LabelDistribution> {
    base.space().check(class)?;
    unit_interval(delta, "delta")?;
    if delta == 0.0 {
        return Ok(base.clone());
    }
    let mut masses = base.probs().to_vec();
    masses[class] *= 1.0 - delta;
    LabelDistribution::normalized(&masses)
}

pub fn tweak_one(space: LabelSpace, class: usize, rho: f64) -> Result<LabelDistribution> {
    space.check(class)?;
    unit_interval(rho, "rho")?;
    let rest = (1.0 - rho) / (space.k() - 1) as f64;
    let mut probs = vec![rest; space.k()];
    probs[class] = rho;
    LabelDistribution::new(probs)
}

/// Symmetric Dirichlet draw from normalized gamma variates.
///
/// Variates are generated and normalized in log space: for `alpha` near
/// 1e-3 the gamma draws routinely underflow `f64`.
pub fn dirichlet_shift(
    space: LabelSpace,
    alpha: f64,
    rng: &mut SeededRng,
) -> Result<LabelDistribution> {
    positive(alpha)?;
    let logs: Vec<f64> = (0..space.k()).map(|_| ln_gamma_variate(alpha, rng)).collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let masses: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = masses.iter().sum();
    let mut probs: Vec<f64> = masses.iter().map(|m| m / sum).collect();
    // push the rounding residue onto the largest entry
    let residue = 1.0 - probs.iter().sum::<f64>();
    let top = crate::estimate::argmax(&probs);
    probs[top] = (probs[top] + residue).max(0.0);
    LabelDistribution::new(probs)
}

/// Logarithm of a Gamma(shape, 1) variate (Marsaglia–Tsang; shapes below one
/// use `G(a) = G(a + 1) · U^{1/a}`).
pub fn ln_gamma_variate(shape: f64, rng: &mut SeededRng) -> f64 {
    if shape < 1.0 {
        let u: f64 = 1.0 - rng.random::<f64>();
        return ln_gamma_variate(shape + 1.0, rng) + u.ln() / shape;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = rng.random();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d.ln() + v.ln();
        }
    }
}

/// Draws a class index from `q` by inverse CDF.
pub fn sample_class(q: &LabelDistribution, rng: &mut SeededRng) -> usize {
    let u: f64 = rng.random();
    let probs = q.probs();
    let mut cum = 0.0;
    let mut last = 0;
    for (c, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            cum += p;
            last = c;
            if u < cum {
                return c;
            }
        }
    }
    last
}

/// `size` examples: class `c ~ q`, then a uniform example of class `c`.
pub fn resample_by_label(
    data: &Dataset,
    q: &LabelDistribution,
    size: usize,
    rng: &mut SeededRng,
) -> Result<Dataset> {
    let k = data.space().k();
    if q.k() != k {
        return Err(Error::Dimension {
            expected: k,
            got: q.k(),
        });
    }
    let pools = data.class_pools();
    for (c, (&qc, pool)) in q.probs().iter().zip(&pools).enumerate() {
        if qc > 0.0 && pool.is_empty() {
            return Err(Error::Support { class: c });
        }
    }
    if size == 0 {
        return Dataset::new(Features::empty(data.d()), Vec::new(), data.space());
    }
    let mut picks = Vec::with_capacity(size);
    for _ in 0..size {
        let pool = &pools[sample_class(q, rng)];
        picks.push(pool[rng.random_range(0..pool.len())]);
    }
    Ok(data.select(&picks))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(k: usize) -> LabelSpace {
        LabelSpace::new(k).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn knockout_examples() {
        let u = LabelDistribution::uniform(space(10));
        let half = apply_knockout(&u, 5, 0.5).unwrap();
        for (c, &p) in half.probs().iter().enumerate() {
            let expect = if c == 5 { 0.05 / 0.95 } else { 0.1 / 0.95 };
            assert!((p - expect).abs() < 1e-12);
        }
        assert!((half.probs()[5] - 0.052632).abs() < 1e-6);
        assert_eq!(apply_knockout(&u, 5, 0.0).unwrap(), u);
        let full = apply_knockout(&u, 5, 1.0).unwrap();
        assert_eq!(full.probs()[5], 0.0);
        for (c, &p) in full.probs().iter().enumerate() {
            if c != 5 {
                assert!((p - 1.0 / 9.0).abs() < 1e-12);
            }
        }
        assert!(apply_knockout(&u, 10, 0.5).is_err());
        assert!(apply_knockout(&u, 1, 1.5).is_err());
    }

    #[test]
    fn tweak_one_examples() {
        let t = tweak_one(space(5), 0, 0.5).unwrap();
        close(t.probs(), &[0.5, 0.125, 0.125, 0.125, 0.125], 1e-15);
        let u = tweak_one(space(4), 2, 0.25).unwrap();
        close(u.probs(), &[0.25; 4], 1e-15);
        let one = tweak_one(space(3), 1, 1.0).unwrap();
        close(one.probs(), &[0.0, 1.0, 0.0], 0.0);
        assert!(tweak_one(space(3), 3, 0.5).is_err());
    }

    #[test]
    fn knockout_matches_tweak_one_for_two_classes() {
        let u = LabelDistribution::uniform(space(2));
        for delta in [0.0, 0.1, 0.37, 0.5, 0.9, 1.0] {
            let ko = apply_knockout(&u, 0, delta).unwrap();
            let rho = 0.5 * (1.0 - delta) / (1.0 - 0.5 * delta);
            let tw = tweak_one(space(2), 0, rho).unwrap();
            close(ko.probs(), tw.probs(), 1e-12);
        }
    }

    #[test]
    fn dirichlet_is_deterministic_and_valid() {
        for alpha in [0.001, 0.1, 1.0, 10.0, 1000.0] {
            let a = dirichlet_shift(space(10), alpha, &mut SeededRng::new(3)).unwrap();
            let b = dirichlet_shift(space(10), alpha, &mut SeededRng::new(3)).unwrap();
            assert_eq!(a, b);
            assert!(a.probs().iter().all(|&p| p >= 0.0));
            assert!((a.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(dirichlet_shift(space(3), 0.0, &mut SeededRng::new(0)).is_err());
        assert!(dirichlet_shift(space(3), -1.0, &mut SeededRng::new(0)).is_err());
    }

    #[test]
    fn dirichlet_concentrates_for_large_alpha() {
        let mut rng = SeededRng::new(42);
        let hits = (0..1000)
            .filter(|_| {
                let d = dirichlet_shift(space(10), 1000.0, &mut rng).unwrap();
                d.probs().iter().all(|p| (p - 0.1).abs() < 0.05)
            })
            .count();
        assert!(hits >= 950, "{hits}");
    }

    #[test]
    fn gamma_variate_mean() {
        // E[G] = shape
        let mut rng = SeededRng::new(9);
        for shape in [0.3, 1.0, 4.5] {
            let n = 40_000;
            let mean: f64 =
                (0..n).map(|_| ln_gamma_variate(shape, &mut rng).exp()).sum::<f64>() / n as f64;
            let se = (shape / n as f64).sqrt();
            assert!((mean - shape).abs() < 4.0 * se, "{shape}: {mean}");
        }
    }

    fn toy(k: usize, per_class: usize) -> Dataset {
        let mut labels = Vec::new();
        let mut data = Vec::new();
        for c in 0..k {
            for i in 0..per_class {
                labels.push(c);
                data.push((c * 1000 + i) as f64);
            }
        }
        Dataset::new(Features::new(labels.len(), 1, data).unwrap(), labels, space(k)).unwrap()
    }

    #[test]
    fn resample_one_hot_and_empty() {
        let data = toy(3, 5);
        let q = LabelDistribution::one_hot(space(3), 2).unwrap();
        let out = resample_by_label(&data, &q, 50, &mut SeededRng::new(1)).unwrap();
        assert!(out.labels().iter().all(|&l| l == 2));
        let none = resample_by_label(&data, &q, 0, &mut SeededRng::new(1)).unwrap();
        assert_eq!(none.n(), 0);
    }

    #[test]
    fn resample_support_error() {
        let data = toy(2, 4).select(&[0, 1, 2, 3]);
        let q = LabelDistribution::uniform(space(2));
        assert_eq!(
            resample_by_label(&data, &q, 3, &mut SeededRng::new(0)),
            Err(Error::Support { class: 1 })
        );
        // no mass on the empty class is fine
        let q0 = LabelDistribution::one_hot(space(2), 0).unwrap();
        assert!(resample_by_label(&data, &q0, 3, &mut SeededRng::new(0)).is_ok());
    }

    #[test]
    fn resample_frequencies() {
        let data = toy(3, 7);
        let q = LabelDistribution::uniform(space(3));
        let size = 100_000;
        let out = resample_by_label(&data, &q, size, &mut SeededRng::new(17)).unwrap();
        let mut counts = [0usize; 3];
        for &l in out.labels() {
            counts[l] += 1;
        }
        for &c in &counts {
            let f = c as f64 / size as f64;
            let q = 1.0 / 3.0;
            assert!((f - q).abs() <= 3.0 * (q * (1.0 - q) / size as f64).sqrt());
        }
    }

    #[test]
    fn resampled_rows_come_from_their_class_pool() {
        let data = toy(4, 6);
        let q = LabelDistribution::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let out = resample_by_label(&data, &q, 500, &mut SeededRng::new(8)).unwrap();
        for (x, &y) in out.features().iter_rows().zip(out.labels()) {
            assert!((0..data.n()).any(|i| data.labels()[i] == y && data.features().row(i) == x));
        }
    }

    #[test]
    fn true_weights_conserve_mass() {
        let spec = ShiftSpec::Dirichlet { alpha: 0.5 };
        let pair = spec.distributions(space(4), &mut SeededRng::new(2)).unwrap();
        let w = pair.true_weights().unwrap();
        let mass: f64 = pair.source.probs().iter().zip(&w).map(|(p, w)| p * w).sum();
        assert!((mass - 1.0).abs() < 1e-12);

        let ko = ShiftSpec::Knockout { class: 0, delta: 1.0 };
        let pair = ko.distributions(space(3), &mut SeededRng::new(2)).unwrap();
        assert_eq!(pair.true_weights(), Err(Error::Support { class: 0 }));
    }
}
