// SPDX-License-Identifier: MIT OR Apache-2.0

//! Softmax cross-entropy training with AdamW and best-validation snapshots.

use num_traits::Float;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ProbeInstances, ProbeParams};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng, tag};

/// Which hidden states a probe reads; selects the batch-size grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Every position of an image-token layer.
    ImagePart,
    /// One question-token position.
    TextPart,
}

impl Regime {
    pub fn batch_grid(self) -> [usize; 5] {
        match self {
            Regime::ImagePart => [1000, 2000, 4000, 8000, 16000],
            Regime::TextPart => [10, 20, 40, 80, 160],
        }
    }
}

pub const LEARNING_RATE_RANGE: (f64, f64) = (1e-4, 1e-2);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSpec {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub betas: (f64, f64),
    pub eps: f64,
    pub weight_decay: f64,
    pub val_fraction: f64,
    pub search_trials: usize,
    pub seed: u64,
}

impl Default for TrainSpec {
    fn default() -> Self {
        Self {
            epochs: 1000,
            batch_size: 1000,
            learning_rate: 1e-3,
            betas: (0.9, 0.999),
            eps: 1e-8,
            weight_decay: 0.01,
            val_fraction: 0.1,
            search_trials: 3,
            seed: 0,
        }
    }
}

impl TrainSpec {
    /// Whether batch size and learning rate lie on the search grid of `regime`.
    pub fn within_grid(&self, regime: Regime) -> bool {
        let (lo, hi) = LEARNING_RATE_RANGE;
        regime.batch_grid().contains(&self.batch_size) && (lo..=hi).contains(&self.learning_rate)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return bad("val_fraction must lie in [0, 1)");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub params: ProbeParams,
    pub best_val_accuracy: f64,
    /// Validation cross-entropy of the returned snapshot.
    pub best_val_loss: f64,
    pub best_epoch: usize,
    /// Mean mini-batch loss of every epoch.
    pub loss_history: Vec<f64>,
}

/// Eight independent accumulators let the f32 instantiation vectorize.
fn dot<F: Float>(a: &[F], b: &[F]) -> F {
    let mut acc = [F::zero(); 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail = ca.remainder().iter().zip(cb.remainder()).fold(F::zero(), |s, (&x, &y)| s + x * y);
    for (x, y) in ca.zip(cb) {
        for i in 0..8 {
            acc[i] = acc[i] + x[i] * y[i];
        }
    }
    acc.iter().fold(tail, |s, &v| s + v)
}

/// Mean cross-entropy over `batch` and its gradient, written into `gw`/`gb`.
#[allow(clippy::too_many_arguments)]
fn batch_loss_grad<F: Float>(
    weights: &[F],
    bias: &[F],
    features: &[F],
    labels: &[usize],
    d: usize,
    batch: &[usize],
    gw: &mut [F],
    gb: &mut [F],
    logits: &mut [F],
) -> F {
    gw.iter_mut().for_each(|g| *g = F::zero());
    gb.iter_mut().for_each(|g| *g = F::zero());
    let mut loss = F::zero();
    for &i in batch {
        let x = &features[i * d..(i + 1) * d];
        for (k, z) in logits.iter_mut().enumerate() {
            *z = bias[k] + dot(&weights[k * d..(k + 1) * d], x);
        }
        let max = logits.iter().fold(F::neg_infinity(), |m, &z| m.max(z));
        let mut total = F::zero();
        for z in logits.iter_mut() {
            *z = (*z - max).exp();
            total = total + *z;
        }
        let y = labels[i];
        loss = loss - (logits[y] / total).ln();
        for (k, z) in logits.iter().enumerate() {
            let coeff = *z / total - if k == y { F::one() } else { F::zero() };
            gb[k] = gb[k] + coeff;
            for (g, &v) in gw[k * d..(k + 1) * d].iter_mut().zip(x) {
                *g = *g + coeff * v;
            }
        }
    }
    let n = F::from(batch.len()).expect("batch length fits the float type");
    gw.iter_mut().for_each(|g| *g = *g / n);
    gb.iter_mut().for_each(|g| *g = *g / n);
    loss / n
}

/// Mean softmax cross-entropy of a linear classifier over all instances and
/// its analytic gradient `(loss, dW, db)`. `weights` is row-major `K x d`.
pub fn loss_and_grad<F: Float>(weights: &[F], bias: &[F], features: &[F], labels: &[usize], d: usize) -> (F, Vec<F>, Vec<F>) {
    let k = bias.len();
    let batch: Vec<usize> = (0..labels.len()).collect();
    let mut gw = vec![F::zero(); k * d];
    let mut gb = vec![F::zero(); k];
    let mut logits = vec![F::zero(); k];
    let loss = batch_loss_grad(weights, bias, features, labels, d, &batch, &mut gw, &mut gb, &mut logits);
    (loss, gw, gb)
}

/// Decoupled-weight-decay Adam state for one parameter vector.
struct AdamW {
    m: Vec<f32>,
    v: Vec<f32>,
}

impl AdamW {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    fn step(&mut self, params: &mut [f32], grad: &[f32], spec: &TrainSpec, t: i32) {
        let (b1, b2) = spec.betas;
        let lr = spec.learning_rate;
        let decay = (1.0 - lr * spec.weight_decay) as f32;
        let c1 = (1.0 - b1.powi(t)) as f32;
        let c2 = (1.0 - b2.powi(t)) as f32;
        let (b1, b2, lr, eps) = (b1 as f32, b2 as f32, lr as f32, spec.eps as f32);
        for (((p, &g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *p *= decay;
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        }
    }
}

/// Seeded shuffle, then the last `val_fraction` of each class goes to
/// validation. Every class keeps at least one training instance.
fn stratified_split(labels: &[usize], k: usize, val_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.shuffle(&mut rng(derive_seed(&[tag("probe_split"), seed])));
    let mut by_class = vec![Vec::new(); k];
    for i in order {
        by_class[labels[i]].push(i);
    }
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for members in by_class {
        let n = members.len();
        let n_val = ((n as f64 * val_fraction).round() as usize).min(n.saturating_sub(1));
        train.extend_from_slice(&members[..n - n_val]);
        val.extend_from_slice(&members[n - n_val..]);
    }
    (train, val)
}

/// Accuracy and mean cross-entropy of `probe` on `idx`.
fn evaluate(probe: &ProbeParams, inst: &ProbeInstances, idx: &[usize], logits: &mut [f32]) -> (f64, f64) {
    let d = inst.d;
    let (mut hits, mut loss) = (0usize, 0.0f64);
    for &i in idx {
        let x = inst.features(i);
        for (k, z) in logits.iter_mut().enumerate() {
            *z = probe.bias[k] + dot(&probe.weights[k * d..(k + 1) * d], x);
        }
        let y = inst.labels[i];
        hits += usize::from(super::argmax_first(logits) == y);
        let max = logits.iter().fold(f32::NEG_INFINITY, |m, &z| m.max(z));
        let total: f64 = logits.iter().map(|&z| ((z - max) as f64).exp()).sum();
        loss += total.ln() - (logits[y] - max) as f64;
    }
    (hits as f64 / idx.len() as f64, loss / idx.len() as f64)
}

/// Higher accuracy wins; equal accuracy falls back to lower loss.
fn improves(acc: f64, loss: f64, best_acc: f64, best_loss: f64) -> bool {
    acc > best_acc || (acc == best_acc && loss < best_loss)
}

/// Trains one probe and returns the epoch snapshot with the highest
/// validation accuracy; lower validation loss breaks ties. Deterministic per
/// `spec.seed`.
pub fn train_probe(instances: &ProbeInstances, spec: &TrainSpec) -> Result<TrainOutcome> {
    spec.validate()?;
    if instances.is_empty() {
        return Err(Error::DegenerateData("no training instances".into()));
    }
    let k = instances.aspect.num_classes();
    let mut present = vec![false; k];
    instances.labels.iter().for_each(|&l| present[l] = true);
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::DegenerateData("fewer than two classes present".into()));
    }
    let d = instances.d;
    let (mut train, val) = stratified_split(&instances.labels, k, spec.val_fraction, spec.seed);
    // Without a validation split the snapshot is chosen on training accuracy.
    let select_on = if val.is_empty() { train.clone() } else { val };

    let mut params = ProbeParams::zeros(instances.aspect, d);
    let bound = 1.0 / (d as f32).sqrt();
    let mut init = rng(derive_seed(&[tag("probe_init"), spec.seed]));
    for w in params.weights.iter_mut().chain(params.bias.iter_mut()) {
        *w = init.random_range(-bound..bound);
    }

    let mut order = rng(derive_seed(&[tag("probe_order"), spec.seed]));
    let (mut opt_w, mut opt_b) = (AdamW::new(k * d), AdamW::new(k));
    let (mut gw, mut gb, mut logits) = (vec![0.0f32; k * d], vec![0.0f32; k], vec![0.0f32; k]);
    let mut best = (params.clone(), f64::NEG_INFINITY, f64::INFINITY, 0);
    let mut history = Vec::with_capacity(spec.epochs);
    let mut step = 0;
    for epoch in 0..spec.epochs {
        train.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        let mut batches = 0;
        for batch in train.chunks(spec.batch_size) {
            step += 1;
            let loss = batch_loss_grad(
                &params.weights,
                &params.bias,
                &instances.features,
                &instances.labels,
                d,
                batch,
                &mut gw,
                &mut gb,
                &mut logits,
            );
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("loss diverged at epoch {epoch}")));
            }
            opt_w.step(&mut params.weights, &gw, spec, step);
            opt_b.step(&mut params.bias, &gb, spec, step);
            epoch_loss += loss as f64;
            batches += 1;
        }
        history.push(epoch_loss / batches as f64);
        let (acc, loss) = evaluate(&params, instances, &select_on, &mut logits);
        if improves(acc, loss, best.1, best.2) {
            best = (params.clone(), acc, loss, epoch);
        }
    }
    Ok(TrainOutcome {
        params: best.0,
        best_val_accuracy: best.1,
        best_val_loss: best.2,
        best_epoch: best.3,
        loss_history: history,
    })
}

/// Random search over the regime's batch grid and a log-uniform learning
/// rate. Trials are ranked like epochs: validation accuracy, then validation
/// loss; earlier trials win exact ties.
pub fn search_and_train(instances: &ProbeInstances, regime: Regime, base: &TrainSpec) -> Result<(TrainOutcome, TrainSpec)> {
    if base.search_trials == 0 {
        return Err(Error::InvalidArgument("search_trials must be positive".into()));
    }
    let mut draw = rng(derive_seed(&[tag("probe_search"), base.seed]));
    let (lo, hi) = LEARNING_RATE_RANGE;
    let mut best: Option<(TrainOutcome, TrainSpec)> = None;
    for trial in 0..base.search_trials {
        let grid = regime.batch_grid();
        let spec = TrainSpec {
            batch_size: grid[draw.random_range(0..grid.len())],
            learning_rate: draw.random_range(lo.ln()..=hi.ln()).exp().clamp(lo, hi),
            seed: derive_seed(&[base.seed, trial as u64]),
            ..base.clone()
        };
        let outcome = train_probe(instances, &spec)?;
        if best
            .as_ref()
            .is_none_or(|(b, _)| improves(outcome.best_val_accuracy, outcome.best_val_loss, b.best_val_accuracy, b.best_val_loss))
        {
            best = Some((outcome, spec));
        }
    }
    Ok(best.expect("at least one trial"))
}

#[cfg(test)]
mod tests {
    use rand_distr::StandardNormal;

    use super::*;
    use crate::graph::{Aspect, AspectLabel};

    fn blobs(n: usize, sigma: f32, seed: u64) -> ProbeInstances {
        let mut r = rng(seed);
        let mut inst = ProbeInstances::new(Aspect::EdgeExistence, 4);
        for i in 0..n {
            let y = i % 2;
            let center = if y == 0 { [1.0, 0.0, 0.0, 0.5] } else { [-1.0, 0.0, 0.0, 0.5] };
            let h: Vec<f32> = center.iter().map(|c| c + sigma * r.sample::<f32, _>(StandardNormal)).collect();
            inst.push(&h, AspectLabel::Class(y as u8)).unwrap();
        }
        inst
    }

    fn quick(epochs: usize, batch_size: usize, lr: f64) -> TrainSpec {
        TrainSpec {
            epochs,
            batch_size,
            learning_rate: lr,
            ..TrainSpec::default()
        }
    }

    #[test]
    fn stratified_split_keeps_every_class() {
        let labels: Vec<usize> = (0..95).map(|i| if i < 5 { 2 } else { i % 2 }).collect();
        let (train, val) = stratified_split(&labels, 3, 0.1, 4);
        assert_eq!(train.len() + val.len(), 95);
        for c in 0..3 {
            assert!(val.iter().any(|&i| labels[i] == c), "class {c}");
            assert!(train.iter().any(|&i| labels[i] == c));
        }
        assert_eq!(stratified_split(&labels, 3, 0.1, 4), (train, val));
    }

    #[test]
    fn separable_blobs_are_learned() {
        let sigma = 0.2 / 5.0;
        let train = blobs(200, sigma, 1);
        let out = train_probe(&train, &quick(60, 32, 1e-2)).unwrap();
        assert_eq!(out.best_val_accuracy, 1.0);
        let held_out = blobs(200, sigma, 2);
        assert_eq!(held_out.accuracy(&out.params), 1.0);
    }

    #[test]
    fn identical_seed_is_bit_identical() {
        let data = blobs(100, 0.5, 3);
        let spec = quick(5, 16, 1e-3);
        assert_eq!(train_probe(&data, &spec).unwrap(), train_probe(&data, &spec).unwrap());
    }

    #[test]
    fn single_class_is_degenerate() {
        let mut inst = ProbeInstances::new(Aspect::EdgeExistence, 1);
        inst.push(&[1.0], AspectLabel::Class(0)).unwrap();
        inst.push(&[2.0], AspectLabel::Class(0)).unwrap();
        assert!(matches!(train_probe(&inst, &TrainSpec::default()), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn search_is_deterministic_and_on_grid() {
        let data = blobs(80, 0.3, 5);
        let base = TrainSpec {
            epochs: 3,
            ..TrainSpec::default()
        };
        let (a, spec_a) = search_and_train(&data, Regime::TextPart, &base).unwrap();
        let (b, spec_b) = search_and_train(&data, Regime::TextPart, &base).unwrap();
        assert_eq!((a, &spec_a), (b, &spec_b));
        assert!(spec_a.within_grid(Regime::TextPart));
        assert!(!spec_a.within_grid(Regime::ImagePart));
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let (k, d) = (3, 2);
        let features = [0.5, -1.0, 1.5, 0.25, -0.75, 2.0, 0.0, 1.0, -1.25, -0.5];
        let labels = [0, 2, 1, 2, 0];
        let w: Vec<f64> = (0..k * d).map(|i| 0.1 * i as f64 - 0.2).collect();
        let b = vec![0.05, -0.1, 0.2];
        let (_, gw, gb) = loss_and_grad(&w, &b, &features, &labels, d);
        let eps = 1e-6;
        for i in 0..k * d {
            let (mut hi, mut lo) = (w.clone(), w.clone());
            hi[i] += eps;
            lo[i] -= eps;
            let fd = (loss_and_grad(&hi, &b, &features, &labels, d).0 - loss_and_grad(&lo, &b, &features, &labels, d).0) / (2.0 * eps);
            assert!((fd - gw[i]).abs() <= 1e-4 * fd.abs().max(gw[i].abs()).max(1e-8), "w[{i}]");
        }
        for i in 0..k {
            let (mut hi, mut lo) = (b.clone(), b.clone());
            hi[i] += eps;
            lo[i] -= eps;
            let fd = (loss_and_grad(&w, &hi, &features, &labels, d).0 - loss_and_grad(&w, &lo, &features, &labels, d).0) / (2.0 * eps);
            assert!((fd - gb[i]).abs() <= 1e-4 * fd.abs().max(gb[i].abs()).max(1e-8), "b[{i}]");
        }
    }
}
