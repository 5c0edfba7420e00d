//! Handcrafted per-block video statistics used as router inputs.

use crate::oracle::{BlockVideo, CodecConfig};

/// Feature groups per temporal block.
pub const FEATURES_PER_BLOCK: usize = 5;

/// Feature dimension: five statistics per block plus one bias.
pub fn feature_dim(blocks: usize) -> usize {
    FEATURES_PER_BLOCK * blocks + 1
}

/// Deterministic per-block statistics, concatenated over blocks, bias last.
///
/// Per block: mean intensity, intensity variance, mean absolute spatial
/// gradient (forward differences), temporal-difference energy against the
/// block's causal predictor frame (the last frame of the previous block in
/// the raw clip; the codec fill frame for block 0), and residual energy
/// after copy-prediction (mean squared frame-to-frame difference, the first
/// frame differenced against the predictor frame).
pub fn extract_features(x: &BlockVideo, codec: &CodecConfig) -> Vec<f64> {
    let dims = x.dims();
    let frame_len = dims.frame_len();
    let mut features = Vec::with_capacity(feature_dim(dims.blocks));
    let fill = vec![codec.first_block_fill; frame_len];
    for t in 0..dims.blocks {
        let block = x.block(t);
        let n = block.len() as f64;
        let mut sum = 0.0f64;
        let mut sum_sq = 0.0f64;
        for &p in block {
            let p = f64::from(p);
            sum += p;
            sum_sq += p * p;
        }
        let mean = sum / n;
        let variance = (sum_sq / n - mean * mean).max(0.0);

        let mut grad_sum = 0.0f64;
        let mut grad_count = 0u64;
        for f in 0..dims.frames_per_block {
            let frame = &block[f * frame_len..(f + 1) * frame_len];
            for i in 0..dims.height {
                let row = &frame[i * dims.width..(i + 1) * dims.width];
                for j in 0..dims.width - 1 {
                    grad_sum += (f64::from(row[j + 1]) - f64::from(row[j])).abs();
                    grad_count += 1;
                }
            }
            for i in 0..dims.height - 1 {
                for j in 0..dims.width {
                    let a = frame[i * dims.width + j];
                    let b = frame[(i + 1) * dims.width + j];
                    grad_sum += (f64::from(b) - f64::from(a)).abs();
                    grad_count += 1;
                }
            }
        }
        let gradient = grad_sum / grad_count as f64;

        let predictor: &[f32] = if t == 0 {
            &fill
        } else {
            x.last_frame_of_block(t - 1)
        };
        let mut temporal = 0.0f64;
        let mut copy_residual = 0.0f64;
        let mut prev = predictor;
        for f in 0..dims.frames_per_block {
            let frame = &block[f * frame_len..(f + 1) * frame_len];
            temporal += mean_sq_diff(frame, predictor);
            copy_residual += mean_sq_diff(frame, prev);
            prev = frame;
        }
        temporal /= dims.frames_per_block as f64;
        copy_residual /= dims.frames_per_block as f64;

        features.extend_from_slice(&[mean, variance, gradient, temporal, copy_residual]);
    }
    features.push(1.0);
    features
}

fn mean_sq_diff(a: &[f32], b: &[f32]) -> f64 {
    let mut sum = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        let d = f64::from(x) - f64::from(y);
        sum += d * d;
    }
    sum / a.len() as f64
}
