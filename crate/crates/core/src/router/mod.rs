//! Lightweight assignment router: handcrafted features, an `m^T`-way
//! softmax classifier, its training loop, and evaluation against the
//! reconstruction oracle.

mod dataset;
mod features;
mod model;

pub use dataset::{
    sha256_hex, CuratedDataset, CuratedRecord, DatasetHeader, Split, DATASET_VERSION,
};
pub use features::{extract_features, feature_dim, FEATURES_PER_BLOCK};
pub use model::{
    grad_check, relative_error, Gradients, Minibatch, RouterHyper, RouterModel, ROUTER_VERSION,
};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::assign::Assignment;
use crate::error::{Error, Result};
use crate::oracle::{reconstruct, CodecConfig};
use crate::reward::{percentile, proxy_reward, NormalizationStats, RewardWeights};
use crate::rng::rng_for;

/// Per-epoch training telemetry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_top1: f64,
}

/// Fit a router on the dataset's train split with minibatch SGD plus
/// momentum, checkpointing on validation top-1 (ties keep the earlier
/// epoch). Deterministic for a fixed `hyper.seed`: shuffling, batching, and
/// accumulation order are all fixed. Returns the best checkpoint and the
/// per-epoch history. With an empty validation split the final parameters
/// are returned instead.
pub fn train(
    data: &CuratedDataset,
    hyper: &RouterHyper,
) -> Result<(RouterModel, Vec<EpochStats>)> {
    let levels = data.levels()?;
    let train_records = data.split(Split::Train);
    let val_records = data.split(Split::Val);
    if train_records.is_empty() {
        return Err(Error::Format("dataset has no train records".into()));
    }
    let input_dim = feature_dim(levels.blocks());
    for r in &train_records {
        if r.features.len() != input_dim {
            return Err(Error::DimensionMismatch {
                expected: input_dim,
                got: r.features.len(),
            });
        }
        if r.optimal >= levels.count() {
            return Err(Error::IndexOutOfRange {
                index: r.optimal,
                count: levels.count(),
            });
        }
    }

    let mut model = RouterModel::new(
        input_dim,
        hyper.hidden,
        levels.count() as usize,
        levels.levels().to_vec(),
        levels.blocks(),
        data.header.weights,
        *hyper,
        hyper.seed,
    );
    install_feature_stats(&mut model, &train_records);

    let n_train = train_records.len();
    let mut order: Vec<usize> = (0..n_train).collect();
    let mut velocity = Gradients {
        w1: vec![0.0; model.w1.len()],
        b1: vec![0.0; model.b1.len()],
        w2: vec![0.0; model.w2.len()],
        b2: vec![0.0; model.b2.len()],
    };
    let mut history = Vec::with_capacity(hyper.epochs);
    let mut best: Option<(f64, usize, RouterModel)> = None;
    let mut step = 0usize;
    for epoch in 0..hyper.epochs {
        let mut rng = rng_for(hyper.seed, "router-shuffle", epoch as u64);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0f64;
        for chunk in order.chunks(hyper.batch.max(1)) {
            let batch = gather_batch(&train_records, chunk, input_dim)?;
            let (loss, grads) = model.loss_and_grad(&batch)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { step });
            }
            loss_sum += loss * batch.n as f64;
            sgd_update(&mut model, &mut velocity, &grads, hyper);
            step += 1;
        }
        let train_loss = loss_sum / n_train as f64;
        let val_top1 = if val_records.is_empty() {
            f64::NAN
        } else {
            top1_accuracy(&model, &val_records)?
        };
        history.push(EpochStats {
            epoch,
            train_loss,
            val_top1,
        });
        if !val_records.is_empty() {
            let improved = match &best {
                None => true,
                Some((top1, _, _)) => val_top1 > *top1,
            };
            if improved {
                best = Some((val_top1, epoch, model.clone()));
            }
        }
    }
    let (final_model, best_epoch, best_val) = match best {
        Some((top1, epoch, m)) => (m, epoch, top1),
        None => {
            let epoch = hyper.epochs.saturating_sub(1);
            (model, epoch, f64::NAN)
        }
    };
    let mut final_model = final_model;
    final_model.best_epoch = best_epoch;
    final_model.best_val_top1 = best_val;
    Ok((final_model, history))
}

fn install_feature_stats(model: &mut RouterModel, records: &[&CuratedRecord]) {
    let dim = model.input_dim;
    let n = records.len() as f64;
    let mut mean = vec![0.0f64; dim];
    let mut sq = vec![0.0f64; dim];
    for r in records {
        for (i, &f) in r.features.iter().enumerate() {
            mean[i] += f;
            sq[i] += f * f;
        }
    }
    for i in 0..dim {
        mean[i] /= n;
        let var = (sq[i] / n - mean[i] * mean[i]).max(0.0);
        let std = var.sqrt();
        if std < 1e-9 {
            // Constant feature (the bias): pass through unscaled.
            model.feature_mean[i] = 0.0;
            model.feature_std[i] = 1.0;
        } else {
            model.feature_mean[i] = mean[i];
            model.feature_std[i] = std;
        }
    }
}

fn gather_batch(records: &[&CuratedRecord], picks: &[usize], dim: usize) -> Result<Minibatch> {
    let mut features = Vec::with_capacity(picks.len() * dim);
    let mut labels = Vec::with_capacity(picks.len());
    for &i in picks {
        features.extend_from_slice(&records[i].features);
        labels.push(records[i].optimal as usize);
    }
    Minibatch::new(features, labels, dim)
}

fn sgd_update(
    model: &mut RouterModel,
    velocity: &mut Gradients,
    grads: &Gradients,
    hyper: &RouterHyper,
) {
    let lr = hyper.learning_rate;
    let mu = hyper.momentum;
    let apply = |params: &mut [f64], vel: &mut [f64], grad: &[f64]| {
        for ((p, v), &g) in params.iter_mut().zip(vel).zip(grad) {
            *v = mu * *v - lr * g;
            *p += *v;
        }
    };
    apply(&mut model.w1, &mut velocity.w1, &grads.w1);
    apply(&mut model.b1, &mut velocity.b1, &grads.b1);
    apply(&mut model.w2, &mut velocity.w2, &grads.w2);
    apply(&mut model.b2, &mut velocity.b2, &grads.b2);
}

fn top1_accuracy(model: &RouterModel, records: &[&CuratedRecord]) -> Result<f64> {
    let mut hits = 0usize;
    for r in records {
        if model.predict(&r.features)? == r.optimal as usize {
            hits += 1;
        }
    }
    Ok(hits as f64 / records.len() as f64)
}

/// Router quality on one dataset split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub top1: f64,
    pub top5: f64,
    /// Reward percentile of the router's choices against the per-video
    /// exhaustive best/worst rewards.
    pub percentile: f64,
    pub mean_tokens: f64,
    pub mean_mse: f64,
    pub n: usize,
}

/// Score a router on `records`: top-1/top-5 accuracy against the stored
/// optima, reward percentile per the stored best/worst anchors, and the
/// mean token count and distortion of its predicted assignments (rewards
/// recomputed through the oracle from each record's scene spec).
pub fn evaluate(
    model: &RouterModel,
    records: &[&CuratedRecord],
    codec: &CodecConfig,
    stats: &NormalizationStats,
    w: RewardWeights,
    dims: crate::oracle::VideoDims,
) -> Result<EvalMetrics> {
    if records.is_empty() {
        return Err(Error::Format("empty evaluation split".into()));
    }
    let levels = crate::assign::CandidateLevels::new(model.levels.clone(), model.blocks)?;
    stats.ensure_matches(&levels)?;
    let mut top1 = 0usize;
    let mut top5 = 0usize;
    let mut eval_rewards = Vec::with_capacity(records.len());
    let mut best_rewards = Vec::with_capacity(records.len());
    let mut worst_rewards = Vec::with_capacity(records.len());
    let mut tokens = 0.0f64;
    let mut mse = 0.0f64;
    for r in records {
        let ranked = model.top_k(&r.features, 5)?;
        let predicted = ranked[0];
        if predicted as u64 == r.optimal {
            top1 += 1;
        }
        if ranked.iter().any(|&c| c as u64 == r.optimal) {
            top5 += 1;
        }
        let assignment = Assignment::from_index(predicted as u64, &levels)?;
        let video = r.scene.generate(dims)?;
        let (_, quality) = reconstruct(&video, &assignment, codec)?;
        let length = assignment.total_length();
        eval_rewards.push(proxy_reward(quality.mse, length, stats, w));
        best_rewards.push(r.optimal_reward);
        worst_rewards.push(r.worst_reward);
        tokens += length as f64;
        mse += quality.mse;
    }
    let n = records.len();
    Ok(EvalMetrics {
        top1: top1 as f64 / n as f64,
        top5: top5 as f64 / n as f64,
        percentile: percentile(&eval_rewards, &best_rewards, &worst_rewards)?,
        mean_tokens: tokens / n as f64,
        mean_mse: mse / n as f64,
        n,
    })
}
