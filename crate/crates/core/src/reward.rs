//! Proxy reward: standardized quality/length trade-off, its calibration
//! statistics, and the reward-percentile metric.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::assign::{Assignment, CandidateLevels};
use crate::error::{Error, Result};
use crate::oracle::{reconstruct, CodecConfig, SceneDistribution, VideoDims};
use crate::rng::rng_for;

/// Preference weights `(w_q, w_l)` for quality vs token cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub quality: f64,
    pub length: f64,
}

impl RewardWeights {
    pub fn new(quality: f64, length: f64) -> Result<Self> {
        if !(quality >= 0.0 && length >= 0.0 && quality + length > 0.0) {
            return Err(Error::InvalidAssignment(format!(
                "weights must be nonnegative with positive sum, got ({quality}, {length})"
            )));
        }
        Ok(Self { quality, length })
    }
}

/// Mean/std of distortion and token length restricted to the first `p`
/// blocks, for one prefix length `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrefixStats {
    pub mean_distortion: f64,
    pub std_distortion: f64,
    pub mean_length: f64,
    pub std_length: f64,
}

pub const STATS_VERSION: &str = "stats.v1";

/// Monte Carlo standardization statistics over random (video, assignment)
/// pairs. `prefix[p - 1]` holds the stats restricted to the first `p`
/// blocks; the last entry equals the full-clip fields bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub version: String,
    pub levels: Vec<u32>,
    pub blocks: usize,
    pub mean_distortion: f64,
    pub std_distortion: f64,
    pub mean_length: f64,
    pub std_length: f64,
    pub prefix: Vec<PrefixStats>,
    pub n_videos: usize,
    pub n_assignments_per_video: usize,
    pub seed: u64,
}

impl NormalizationStats {
    /// Refuse stats computed for a different level set or block count.
    pub fn ensure_matches(&self, levels: &CandidateLevels) -> Result<()> {
        if self.levels != levels.levels() || self.blocks != levels.blocks() {
            return Err(Error::StatsMismatch(format!(
                "stats are for levels {:?} x {} blocks, run uses {:?} x {}",
                self.levels,
                self.blocks,
                levels.levels(),
                levels.blocks()
            )));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path, json + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let stats: Self = serde_json::from_str(&text)?;
        if stats.version != STATS_VERSION {
            return Err(Error::Format(format!(
                "unsupported stats version {:?}, expected {STATS_VERSION:?}",
                stats.version
            )));
        }
        if stats.prefix.len() != stats.blocks {
            return Err(Error::Format(format!(
                "stats file has {} prefix entries for {} blocks",
                stats.prefix.len(),
                stats.blocks
            )));
        }
        Ok(stats)
    }
}

/// Standardized proxy reward `w_q * Qhat - w_l * Lhat` where
/// `Qhat = -(distortion - mean_D) / std_D` (higher is better quality) and
/// `Lhat = (length - mean_L) / std_L`.
pub fn proxy_reward(
    distortion: f64,
    length: u64,
    stats: &NormalizationStats,
    w: RewardWeights,
) -> f64 {
    let quality = -(distortion - stats.mean_distortion) / stats.std_distortion;
    let cost = (length as f64 - stats.mean_length) / stats.std_length;
    w.quality * quality - w.length * cost
}

/// Proxy reward of a partial assignment covering the first `prefix_len`
/// blocks, standardized by the matching prefix statistics.
pub fn prefix_reward(
    distortion: f64,
    length: u64,
    stats: &NormalizationStats,
    prefix_len: usize,
    w: RewardWeights,
) -> f64 {
    let p = &stats.prefix[prefix_len - 1];
    let quality = -(distortion - p.mean_distortion) / p.std_distortion;
    let cost = (length as f64 - p.mean_length) / p.std_length;
    w.quality * quality - w.length * cost
}

/// Reward percentile of a strategy:
/// `(E[R_eval] - E[R_worst]) / (E[R_best] - E[R_worst]) * 100`, where entry
/// `i` of each list refers to the same video.
pub fn percentile(eval: &[f64], best: &[f64], worst: &[f64]) -> Result<f64> {
    if eval.is_empty() || eval.len() != best.len() || eval.len() != worst.len() {
        return Err(Error::ShapeMismatch {
            expected: "three equal-length nonempty reward lists".into(),
            got: format!("{}/{}/{}", eval.len(), best.len(), worst.len()),
        });
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let spread = mean(best) - mean(worst);
    if !(spread > 0.0) {
        return Err(Error::DegeneratePercentile { spread });
    }
    Ok((mean(eval) - mean(worst)) / spread * 100.0)
}

#[derive(Default, Clone, Copy)]
struct Moments {
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn finish(&self, n: f64) -> (f64, f64) {
        let mean = self.sum / n;
        let var = (self.sum_sq / n - mean * mean).max(0.0);
        (mean, var.sqrt())
    }
}

/// Estimate standardization statistics by reconstructing
/// `n_videos * n_assignments_per_video` random (video, assignment) pairs:
/// videos sampled from `scenes`, one uniformly random level per block.
/// Prefix statistics for every prefix length are filled from the same
/// sample. Deterministic for a fixed seed.
pub fn calibrate(
    scenes: &SceneDistribution,
    codec: &CodecConfig,
    dims: VideoDims,
    levels: &CandidateLevels,
    n_videos: usize,
    n_assignments_per_video: usize,
    seed: u64,
) -> Result<NormalizationStats> {
    if n_videos < 2 {
        return Err(Error::DegenerateCalibration(format!(
            "need at least 2 videos, got {n_videos}"
        )));
    }
    if n_assignments_per_video < 1 {
        return Err(Error::DegenerateCalibration(
            "need at least 1 assignment per video".into(),
        ));
    }
    if dims.blocks != levels.blocks() {
        return Err(Error::StatsMismatch(format!(
            "dims have {} blocks, levels have {}",
            dims.blocks,
            levels.blocks()
        )));
    }

    let t = levels.blocks();
    let m = levels.num_levels();
    let mut dist = vec![Moments::default(); t];
    let mut len = vec![Moments::default(); t];
    for v in 0..n_videos {
        let spec = scenes.sample(seed, v as u64);
        let video = spec.generate(dims)?;
        let mut rng = rng_for(seed, "calibrate-assignments", v as u64);
        for _ in 0..n_assignments_per_video {
            let counts: Vec<u32> = (0..t)
                .map(|_| levels.levels()[rng.gen_range(0..m)])
                .collect();
            let a = Assignment::new(counts, levels)?;
            let (_, quality) = reconstruct(&video, &a, codec)?;
            let mut mse_sum = 0.0f64;
            let mut len_sum = 0u64;
            for p in 0..t {
                mse_sum += quality.per_block_mse[p];
                len_sum += u64::from(a.counts()[p]);
                dist[p].push(mse_sum / (p + 1) as f64);
                len[p].push(len_sum as f64);
            }
        }
    }

    let n = (n_videos * n_assignments_per_video) as f64;
    let mut prefix = Vec::with_capacity(t);
    for p in 0..t {
        let (mean_distortion, std_distortion) = dist[p].finish(n);
        let (mean_length, std_length) = len[p].finish(n);
        if !(std_distortion > 0.0) || !std_distortion.is_finite() {
            return Err(Error::DegenerateCalibration(format!(
                "distortion spread is {std_distortion} at prefix length {}",
                p + 1
            )));
        }
        if !(std_length > 0.0) || !std_length.is_finite() {
            return Err(Error::DegenerateCalibration(format!(
                "length spread is {std_length} at prefix length {}",
                p + 1
            )));
        }
        prefix.push(PrefixStats {
            mean_distortion,
            std_distortion,
            mean_length,
            std_length,
        });
    }
    let full = prefix[t - 1];
    Ok(NormalizationStats {
        version: STATS_VERSION.to_string(),
        levels: levels.levels().to_vec(),
        blocks: t,
        mean_distortion: full.mean_distortion,
        std_distortion: full.std_distortion,
        mean_length: full.mean_length,
        std_length: full.std_length,
        prefix,
        n_videos,
        n_assignments_per_video,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk_levels() -> CandidateLevels {
        CandidateLevels::new(vec![2, 4, 8, 16, 32], 4).unwrap()
    }

    fn dims() -> VideoDims {
        VideoDims::new(4, 4, 16, 16).unwrap()
    }

    fn test_stats() -> NormalizationStats {
        NormalizationStats {
            version: STATS_VERSION.into(),
            levels: vec![2, 4, 8, 16, 32],
            blocks: 4,
            mean_distortion: 0.02,
            std_distortion: 0.01,
            mean_length: 49.0,
            std_length: 21.0,
            prefix: vec![
                PrefixStats {
                    mean_distortion: 0.02,
                    std_distortion: 0.01,
                    mean_length: 12.25,
                    std_length: 10.5,
                };
                4
            ],
            n_videos: 2,
            n_assignments_per_video: 1,
            seed: 0,
        }
    }

    #[test]
    fn reward_examples() {
        let stats = test_stats();
        let w = RewardWeights::new(1.0, 1.0).unwrap();
        // Both standardized terms vanish at the means.
        assert_eq!(proxy_reward(stats.mean_distortion, 49, &stats, w), 0.0);
        // One std better quality at mean length.
        let r = proxy_reward(
            stats.mean_distortion - stats.std_distortion,
            49,
            &stats,
            w,
        );
        assert!((r - 1.0).abs() < 1e-12);
        // Reference weights, one std more length at mean distortion.
        let w = RewardWeights::new(1.2, 0.8).unwrap();
        let r = proxy_reward(stats.mean_distortion, 49 + 21, &stats, w);
        assert!((r - (-0.8)).abs() < 1e-12);
    }

    #[test]
    fn reward_is_monotone() {
        let stats = test_stats();
        let w = RewardWeights::new(1.0, 1.0).unwrap();
        assert!(proxy_reward(0.01, 40, &stats, w) > proxy_reward(0.02, 40, &stats, w));
        assert!(proxy_reward(0.01, 40, &stats, w) > proxy_reward(0.01, 41, &stats, w));
    }

    #[test]
    fn percentile_examples() {
        let best = vec![2.0, 3.0, 4.0];
        let worst = vec![-2.0, -1.0, 0.0];
        assert_eq!(percentile(&best, &best, &worst).unwrap(), 100.0);
        assert_eq!(percentile(&worst, &best, &worst).unwrap(), 0.0);
        let mid: Vec<f64> = best
            .iter()
            .zip(&worst)
            .map(|(b, w)| (b + w) / 2.0)
            .collect();
        assert!((percentile(&mid, &best, &worst).unwrap() - 50.0).abs() < 1e-9);
    }

    #[test]
    fn percentile_rejects_degenerate_population() {
        let same = vec![1.0, 1.0];
        assert!(matches!(
            percentile(&same, &same, &same),
            Err(Error::DegeneratePercentile { .. })
        ));
        assert!(percentile(&[], &[], &[]).is_err());
        assert!(percentile(&[1.0], &[1.0, 2.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn weight_validation() {
        assert!(RewardWeights::new(-0.1, 1.0).is_err());
        assert!(RewardWeights::new(0.0, 0.0).is_err());
        assert!(RewardWeights::new(0.0, 1.0).is_ok());
    }

    #[test]
    fn calibration_matches_closed_form_length_stats() {
        let levels = desk_levels();
        let stats = calibrate(
            &SceneDistribution::default(),
            &CodecConfig::default(),
            dims(),
            &levels,
            1500,
            8,
            99,
        )
        .unwrap();
        // Closed form: mean_L = T * mean(levels), std_L = sqrt(T * var(levels)).
        let mean_level: f64 = 62.0 / 5.0;
        let mean_l: f64 = 4.0 * mean_level;
        let var_level: f64 = (4.0 + 16.0 + 64.0 + 256.0 + 1024.0) / 5.0 - mean_level * mean_level;
        let std_l: f64 = (4.0 * var_level).sqrt();
        assert!((mean_l - 49.6).abs() < 1e-12);
        assert!((std_l - 21.82).abs() < 0.005);
        assert!(
            (stats.mean_length - mean_l).abs() / mean_l < 0.01,
            "mean length {} vs {mean_l}",
            stats.mean_length
        );
        assert!(
            (stats.std_length - std_l).abs() / std_l < 0.01,
            "std length {} vs {std_l}",
            stats.std_length
        );
        // Prefix entry for the full clip mirrors the top-level fields.
        let last = stats.prefix.last().unwrap();
        assert_eq!(last.mean_length, stats.mean_length);
        assert_eq!(last.std_distortion, stats.std_distortion);
        assert_eq!(stats.prefix.len(), 4);
    }

    #[test]
    fn calibration_is_deterministic() {
        let levels = desk_levels();
        let scenes = SceneDistribution::default();
        let a = calibrate(&scenes, &CodecConfig::default(), dims(), &levels, 20, 3, 5).unwrap();
        let b = calibrate(&scenes, &CodecConfig::default(), dims(), &levels, 20, 3, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn calibration_rejects_degenerate_scenes() {
        // Flat scenes reconstruct exactly under every assignment, so the
        // distortion population has zero spread.
        let scenes = SceneDistribution {
            kind_weights: [1.0, 0.0, 0.0, 0.0, 0.0],
            amplitude: (0.0, 0.0),
            detail: (0.0, 0.0),
            grain: (0.0, 0.0),
            ..SceneDistribution::default()
        };
        let err = calibrate(
            &scenes,
            &CodecConfig::default(),
            dims(),
            &desk_levels(),
            4,
            2,
            1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateCalibration(_)));
    }

    #[test]
    fn stats_file_roundtrip_and_mismatch() {
        let stats = test_stats();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stats.json");
        stats.save(&path).unwrap();
        let loaded = NormalizationStats::load(&path).unwrap();
        assert_eq!(stats, loaded);
        loaded.ensure_matches(&desk_levels()).unwrap();
        let other = CandidateLevels::new(vec![1, 2, 4, 8, 16], 4).unwrap();
        assert!(loaded.ensure_matches(&other).is_err());
    }
}
