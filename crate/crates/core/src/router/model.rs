//! The router: a single-hidden-layer tanh network with a softmax over all
//! `m^T` assignment classes, trained with minibatch SGD plus momentum on
//! mean cross-entropy. All math is f64 and single-threaded; a fixed seed
//! yields bit-identical parameters.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reward::RewardWeights;
use crate::rng::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouterHyper {
    pub hidden: usize,
    pub batch: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for RouterHyper {
    fn default() -> Self {
        Self {
            hidden: 64,
            batch: 64,
            learning_rate: 0.05,
            momentum: 0.9,
            epochs: 200,
            seed: 0,
        }
    }
}

pub const ROUTER_VERSION: &str = "router.v1";

/// Router parameters plus the train-split feature standardization applied
/// before the first layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouterModel {
    pub version: String,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub classes: usize,
    pub levels: Vec<u32>,
    pub blocks: usize,
    /// Curation preference weights of the dataset this model was fit on.
    pub weights: RewardWeights,
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
    /// Hidden weights, row-major `hidden_dim x input_dim`.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// Output weights, row-major `classes x hidden_dim`.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub hyper: RouterHyper,
    pub seed: u64,
    pub best_epoch: usize,
    pub best_val_top1: f64,
}

/// Raw-feature minibatch: `n` rows of `dim` features plus class labels.
#[derive(Debug, Clone)]
pub struct Minibatch {
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
    pub n: usize,
    pub dim: usize,
}

impl Minibatch {
    pub fn new(features: Vec<f64>, labels: Vec<usize>, dim: usize) -> Result<Self> {
        if features.len() != labels.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: labels.len() * dim,
                got: features.len(),
            });
        }
        Ok(Self {
            n: labels.len(),
            features,
            labels,
            dim,
        })
    }
}

/// Parameter gradients in the flat layout `[w1, b1, w2, b2]`.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl RouterModel {
    /// Xavier-uniform initialization; feature standardization starts as
    /// identity until a training run installs the train-split statistics.
    pub fn new(
        input_dim: usize,
        hidden_dim: usize,
        classes: usize,
        levels: Vec<u32>,
        blocks: usize,
        weights: RewardWeights,
        hyper: RouterHyper,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut init = |fan_in: usize, fan_out: usize, len: usize| -> Vec<f64> {
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..len).map(|_| rng.gen_range(-bound..bound)).collect()
        };
        let w1 = init(input_dim, hidden_dim, hidden_dim * input_dim);
        let w2 = init(hidden_dim, classes, classes * hidden_dim);
        Self {
            version: ROUTER_VERSION.to_string(),
            input_dim,
            hidden_dim,
            classes,
            levels,
            blocks,
            weights,
            feature_mean: vec![0.0; input_dim],
            feature_std: vec![1.0; input_dim],
            w1,
            b1: vec![0.0; hidden_dim],
            w2,
            b2: vec![0.0; classes],
            hyper,
            seed,
            best_epoch: 0,
            best_val_top1: f64::NAN,
        }
    }

    pub fn standardize(&self, raw: &[f64], out: &mut [f64]) {
        for ((o, &x), (&m, &s)) in out
            .iter_mut()
            .zip(raw)
            .zip(self.feature_mean.iter().zip(&self.feature_std))
        {
            *o = (x - m) / s;
        }
    }

    /// Class probabilities for one raw feature vector.
    pub fn forward(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: features.len(),
            });
        }
        let mut x = vec![0.0; self.input_dim];
        self.standardize(features, &mut x);
        let mut hidden = vec![0.0; self.hidden_dim];
        for (j, h) in hidden.iter_mut().enumerate() {
            let row = &self.w1[j * self.input_dim..(j + 1) * self.input_dim];
            let mut acc = self.b1[j];
            for (&w, &v) in row.iter().zip(&x) {
                acc += w * v;
            }
            *h = acc.tanh();
        }
        let mut logits = vec![0.0; self.classes];
        for (c, l) in logits.iter_mut().enumerate() {
            let row = &self.w2[c * self.hidden_dim..(c + 1) * self.hidden_dim];
            let mut acc = self.b2[c];
            for (&w, &h) in row.iter().zip(&hidden) {
                acc += w * h;
            }
            *l = acc;
        }
        softmax_in_place(&mut logits);
        Ok(logits)
    }

    /// Argmax class, ties to the smaller index.
    pub fn predict(&self, features: &[f64]) -> Result<usize> {
        let probs = self.forward(features)?;
        Ok(argmax(&probs))
    }

    /// The `k` highest-probability classes, descending, ties to smaller index.
    pub fn top_k(&self, features: &[f64], k: usize) -> Result<Vec<usize>> {
        let probs = self.forward(features)?;
        let mut order: Vec<usize> = (0..probs.len()).collect();
        order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
        order.truncate(k);
        Ok(order)
    }

    /// Mean cross-entropy of a raw-feature minibatch.
    pub fn batch_loss(&self, batch: &Minibatch) -> Result<f64> {
        Ok(self.run_batch(batch, false)?.0)
    }

    /// Mean cross-entropy plus analytic parameter gradients.
    pub fn loss_and_grad(&self, batch: &Minibatch) -> Result<(f64, Gradients)> {
        let (loss, grads) = self.run_batch(batch, true)?;
        Ok((loss, grads.expect("gradients requested")))
    }

    fn run_batch(&self, batch: &Minibatch, want_grad: bool) -> Result<(f64, Option<Gradients>)> {
        if batch.dim != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: batch.dim,
            });
        }
        for &label in &batch.labels {
            if label >= self.classes {
                return Err(Error::IndexOutOfRange {
                    index: label as u64,
                    count: self.classes as u64,
                });
            }
        }
        let n = batch.n;
        let d = self.input_dim;
        let h = self.hidden_dim;
        let c = self.classes;

        let mut x = vec![0.0f64; n * d];
        for i in 0..n {
            self.standardize(&batch.features[i * d..(i + 1) * d], &mut x[i * d..(i + 1) * d]);
        }
        // Hidden activations.
        let mut hid = vec![0.0f64; n * h];
        for i in 0..n {
            let xi = &x[i * d..(i + 1) * d];
            let hi = &mut hid[i * h..(i + 1) * h];
            for (j, out) in hi.iter_mut().enumerate() {
                let row = &self.w1[j * d..(j + 1) * d];
                let mut acc = self.b1[j];
                for (&w, &v) in row.iter().zip(xi) {
                    acc += w * v;
                }
                *out = acc.tanh();
            }
        }
        // Output probabilities; the matrix is reused as dlogits afterwards.
        let mut probs = vec![0.0f64; n * c];
        for i in 0..n {
            let hi = &hid[i * h..(i + 1) * h];
            let pi = &mut probs[i * c..(i + 1) * c];
            for (cls, p) in pi.iter_mut().enumerate() {
                let row = &self.w2[cls * h..(cls + 1) * h];
                let mut acc = self.b2[cls];
                for (&w, &v) in row.iter().zip(hi) {
                    acc += w * v;
                }
                *p = acc;
            }
            softmax_in_place(pi);
        }
        let mut loss = 0.0f64;
        for i in 0..n {
            let p = probs[i * c + batch.labels[i]];
            loss -= p.max(f64::MIN_POSITIVE).ln();
        }
        loss /= n as f64;

        if !want_grad {
            return Ok((loss, None));
        }

        // dlogits = (probs - onehot) / n, in place.
        for i in 0..n {
            let pi = &mut probs[i * c..(i + 1) * c];
            for p in pi.iter_mut() {
                *p /= n as f64;
            }
            pi[batch.labels[i]] -= 1.0 / n as f64;
        }
        let dlogits = probs;

        let mut gw2 = vec![0.0f64; c * h];
        let mut gb2 = vec![0.0f64; c];
        for i in 0..n {
            let hi = &hid[i * h..(i + 1) * h];
            let di = &dlogits[i * c..(i + 1) * c];
            for (cls, &g) in di.iter().enumerate() {
                gb2[cls] += g;
                let row = &mut gw2[cls * h..(cls + 1) * h];
                for (o, &v) in row.iter_mut().zip(hi) {
                    *o += g * v;
                }
            }
        }
        // dhidden, through tanh.
        let mut dhid = vec![0.0f64; n * h];
        for i in 0..n {
            let di = &dlogits[i * c..(i + 1) * c];
            let dh = &mut dhid[i * h..(i + 1) * h];
            for (cls, &g) in di.iter().enumerate() {
                let row = &self.w2[cls * h..(cls + 1) * h];
                for (o, &w) in dh.iter_mut().zip(row) {
                    *o += g * w;
                }
            }
            let hi = &hid[i * h..(i + 1) * h];
            for (o, &v) in dh.iter_mut().zip(hi) {
                *o *= 1.0 - v * v;
            }
        }
        let mut gw1 = vec![0.0f64; h * d];
        let mut gb1 = vec![0.0f64; h];
        for i in 0..n {
            let xi = &x[i * d..(i + 1) * d];
            let dh = &dhid[i * h..(i + 1) * h];
            for (j, &g) in dh.iter().enumerate() {
                gb1[j] += g;
                let row = &mut gw1[j * d..(j + 1) * d];
                for (o, &v) in row.iter_mut().zip(xi) {
                    *o += g * v;
                }
            }
        }
        Ok((
            loss,
            Some(Gradients {
                w1: gw1,
                b1: gb1,
                w2: gw2,
                b2: gb2,
            }),
        ))
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// Flat parameter accessor in the layout `[w1, b1, w2, b2]`.
    pub fn param(&self, idx: usize) -> f64 {
        self.with_param_slot(idx, |v| *v)
    }

    pub fn param_mut(&mut self, idx: usize, delta: f64) {
        let slot = self.param_slot_mut(idx);
        *slot += delta;
    }

    fn with_param_slot<R>(&self, idx: usize, f: impl FnOnce(&f64) -> R) -> R {
        let (a, b, c) = (self.w1.len(), self.b1.len(), self.w2.len());
        if idx < a {
            f(&self.w1[idx])
        } else if idx < a + b {
            f(&self.b1[idx - a])
        } else if idx < a + b + c {
            f(&self.w2[idx - a - b])
        } else {
            f(&self.b2[idx - a - b - c])
        }
    }

    fn param_slot_mut(&mut self, idx: usize) -> &mut f64 {
        let (a, b, c) = (self.w1.len(), self.b1.len(), self.w2.len());
        if idx < a {
            &mut self.w1[idx]
        } else if idx < a + b {
            &mut self.b1[idx - a]
        } else if idx < a + b + c {
            &mut self.w2[idx - a - b]
        } else {
            &mut self.b2[idx - a - b - c]
        }
    }

    pub fn grad_at(grads: &Gradients, idx: usize) -> f64 {
        let (a, b, c) = (grads.w1.len(), grads.b1.len(), grads.w2.len());
        if idx < a {
            grads.w1[idx]
        } else if idx < a + b {
            grads.b1[idx - a]
        } else if idx < a + b + c {
            grads.w2[idx - a - b]
        } else {
            grads.b2[idx - a - b - c]
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)?;
        fs::write(path, json + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let model: Self = serde_json::from_str(&text)?;
        if model.version != ROUTER_VERSION {
            return Err(Error::Format(format!(
                "unsupported router version {:?}, expected {ROUTER_VERSION:?}",
                model.version
            )));
        }
        let expectations = [
            (model.w1.len(), model.hidden_dim * model.input_dim),
            (model.b1.len(), model.hidden_dim),
            (model.w2.len(), model.classes * model.hidden_dim),
            (model.b2.len(), model.classes),
            (model.feature_mean.len(), model.input_dim),
            (model.feature_std.len(), model.input_dim),
        ];
        for (got, expected) in expectations {
            if got != expected {
                return Err(Error::Format(format!(
                    "router parameter block has length {got}, expected {expected}"
                )));
            }
        }
        Ok(model)
    }
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

fn softmax_in_place(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for l in logits.iter_mut() {
        *l = (*l - max).exp();
        sum += *l;
    }
    for l in logits.iter_mut() {
        *l /= sum;
    }
}

/// Central-finite-difference check of the analytic gradient on
/// `n_coords` randomly chosen parameters (step `1e-5`); returns the
/// maximum relative error.
pub fn grad_check(model: &RouterModel, batch: &Minibatch, n_coords: usize, seed: u64) -> Result<f64> {
    const STEP: f64 = 1e-5;
    let (_, grads) = model.loss_and_grad(batch)?;
    let mut rng = rng_for(seed, "grad-check", 0);
    let total = model.param_count();
    let mut max_err = 0.0f64;
    for _ in 0..n_coords {
        let idx = rng.gen_range(0..total);
        let analytic = RouterModel::grad_at(&grads, idx);
        let mut plus = model.clone();
        plus.param_mut(idx, STEP);
        let mut minus = model.clone();
        minus.param_mut(idx, -STEP);
        let fd = (plus.batch_loss(batch)? - minus.batch_loss(batch)?) / (2.0 * STEP);
        let err = relative_error(analytic, fd);
        if err > max_err {
            max_err = err;
        }
    }
    Ok(max_err)
}

/// `|a - b| / (max(|a|, |b|) + 1e-5)`; 2.0 for an exactly sign-flipped pair.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs().max(b.abs()) + 1e-5)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_model(seed: u64) -> RouterModel {
        RouterModel::new(
            21,
            16,
            625,
            vec![2, 4, 8, 16, 32],
            4,
            RewardWeights::new(1.2, 0.8).unwrap(),
            RouterHyper::default(),
            seed,
        )
    }

    fn random_batch(model: &RouterModel, n: usize, seed: u64) -> Minibatch {
        let mut rng = rng_for(seed, "model-test-batch", 0);
        let features: Vec<f64> = (0..n * model.input_dim)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..model.classes)).collect();
        Minibatch::new(features, labels, model.input_dim).unwrap()
    }

    #[test]
    fn zero_parameters_give_uniform_probabilities() {
        let mut model = tiny_model(1);
        model.w1.fill(0.0);
        model.w2.fill(0.0);
        let probs = model.forward(&vec![0.3; 21]).unwrap();
        for &p in &probs {
            assert!((p - 1.0 / 625.0).abs() < 1e-15);
        }
        // Uniform softmax cross-entropy is ln(625) exactly.
        let batch = random_batch(&model, 8, 3);
        let loss = model.batch_loss(&batch).unwrap();
        assert!((loss - 625.0f64.ln()).abs() < 1e-12, "loss {loss}");
        assert!((625.0f64.ln() - 6.437751649736401).abs() < 1e-12);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let model = tiny_model(5);
        let probs = model.forward(&vec![0.1; 21]).unwrap();
        let sum: f64 = probs.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(probs.iter().all(|&p| p > 0.0));
    }

    #[test]
    fn argmax_is_shift_invariant() {
        let model = tiny_model(9);
        let features = vec![0.4; 21];
        let before = model.predict(&features).unwrap();
        let mut shifted = model.clone();
        for b in shifted.b2.iter_mut() {
            *b += 3.5;
        }
        assert_eq!(shifted.predict(&features).unwrap(), before);
    }

    #[test]
    fn forward_rejects_wrong_dimension() {
        let model = tiny_model(2);
        assert!(matches!(
            model.forward(&vec![0.0; 20]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn grad_check_passes_and_detects_sign_flips() {
        let model = tiny_model(11);
        let batch = random_batch(&model, 6, 7);
        let err = grad_check(&model, &batch, 60, 13).unwrap();
        assert!(err < 1e-4, "max relative error {err}");

        // A deliberately negated output-bias gradient reads as error ~2.
        let (_, grads) = model.loss_and_grad(&batch).unwrap();
        let label = batch.labels[0];
        let idx = model.w1.len() + model.b1.len() + model.w2.len() + label;
        let analytic = RouterModel::grad_at(&grads, idx);
        assert!(analytic.abs() > 1e-3, "pick a coordinate with signal");
        let mut plus = model.clone();
        plus.param_mut(idx, 1e-5);
        let mut minus = model.clone();
        minus.param_mut(idx, -1e-5);
        let fd = (plus.batch_loss(&batch).unwrap() - minus.batch_loss(&batch).unwrap()) / 2e-5;
        let err = relative_error(-analytic, fd);
        assert!((err - 2.0).abs() < 0.05, "sign-flip error {err}");
    }

    #[test]
    fn zero_weight_model_gradcheck_on_symmetric_batch() {
        let mut model = tiny_model(17);
        model.w1.fill(0.0);
        model.w2.fill(0.0);
        model.b1.fill(0.0);
        model.b2.fill(0.0);
        let mut batch = random_batch(&model, 4, 19);
        // Mirror the features so every dimension is symmetric around zero.
        let dim = model.input_dim;
        let mirrored: Vec<f64> = batch.features[..2 * dim]
            .iter()
            .map(|&v| -v)
            .collect();
        batch.features[2 * dim..4 * dim].copy_from_slice(&mirrored);
        let err = grad_check(&model, &batch, 60, 23).unwrap();
        assert!(err.is_finite());
        assert!(err < 1e-4, "max relative error {err}");
    }
}
