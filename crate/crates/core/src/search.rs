//! Assignment-selection strategies: exhaustive max-proxy-reward search, the
//! autoregressive approximation, the distortion-threshold baseline, uniform
//! sweeps, and best-uniform.
//!
//! The exhaustive strategies run over an [`AssignmentTable`], which codes
//! the whole assignment tree once per video. Because block `t` of the codec
//! depends only on the levels chosen for blocks `<= t`, assignments sharing
//! a prefix share their leading blocks; the table visits each distinct
//! prefix once and extends reconstructions through the nested budgets
//! incrementally, which is bit-identical to reconstructing every assignment
//! from scratch.

use crate::assign::{Assignment, CandidateLevels};
use crate::error::{Error, Result};
use crate::oracle::{
    block_mse, reconstruct, BlockCodec, BlockVideo, CodecConfig, QualityRecord,
};
use crate::reward::{prefix_reward, proxy_reward, NormalizationStats, RewardWeights};

/// Which strategy produced a [`SearchResult`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    Exhaustive,
    Autoregressive { chunk: usize },
    Threshold { tau: f64 },
    BestUniform,
    Uniform { level: u32 },
    Router,
    WorstCase,
}

/// One selected assignment with its full-clip score.
#[derive(Debug, Clone)]
pub struct SearchResult {
    pub assignment: Assignment,
    pub reward: f64,
    pub distortion: f64,
    pub length: u64,
    pub strategy: Strategy,
    /// Number of oracle scorings the strategy performs.
    pub evaluations: u64,
}

/// Distortion and length of one assignment inside a table.
#[derive(Debug, Clone)]
pub struct AssignmentRecord {
    pub index: u64,
    pub mse: f64,
    pub length: u64,
}

/// Every assignment of a video coded once: per-assignment full-clip MSE,
/// per-block MSEs, and token length, ordered by class index.
#[derive(Debug, Clone)]
pub struct AssignmentTable {
    levels: CandidateLevels,
    records: Vec<AssignmentRecord>,
    per_block: Vec<f64>,
}

impl AssignmentTable {
    pub fn build(x: &BlockVideo, config: &CodecConfig, levels: &CandidateLevels) -> Result<Self> {
        let dims = x.dims();
        if dims.blocks != levels.blocks() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} blocks", levels.blocks()),
                got: format!("{} blocks", dims.blocks),
            });
        }
        let codec = BlockCodec::new(*config, dims);
        let count = levels.count() as usize;
        let mut builder = TableBuilder {
            codec: &codec,
            x,
            levels,
            records: Vec::with_capacity(count),
            per_block: Vec::with_capacity(count * levels.blocks()),
        };
        let prediction = codec.fill_frame();
        let mut mses = Vec::with_capacity(levels.blocks());
        builder.descend(0, &prediction, &mut mses, 0, 0);
        Ok(Self {
            levels: levels.clone(),
            records: builder.records,
            per_block: builder.per_block,
        })
    }

    pub fn levels(&self) -> &CandidateLevels {
        &self.levels
    }

    pub fn records(&self) -> &[AssignmentRecord] {
        &self.records
    }

    pub fn record(&self, index: u64) -> &AssignmentRecord {
        &self.records[index as usize]
    }

    /// Per-block MSEs of one assignment.
    pub fn per_block(&self, index: u64) -> &[f64] {
        let t = self.levels.blocks();
        &self.per_block[index as usize * t..(index as usize + 1) * t]
    }

    pub fn reward(&self, index: u64, stats: &NormalizationStats, w: RewardWeights) -> f64 {
        let r = self.record(index);
        proxy_reward(r.mse, r.length, stats, w)
    }

    fn result(
        &self,
        index: u64,
        stats: &NormalizationStats,
        w: RewardWeights,
        strategy: Strategy,
        evaluations: u64,
    ) -> SearchResult {
        let r = self.record(index);
        SearchResult {
            assignment: Assignment::from_index(index, &self.levels).expect("index in table range"),
            reward: proxy_reward(r.mse, r.length, stats, w),
            distortion: r.mse,
            length: r.length,
            strategy,
            evaluations,
        }
    }

    /// Max-proxy-reward assignment over all `m^T` candidates; ties broken
    /// by smaller total length, then smaller class index.
    pub fn exhaustive(&self, stats: &NormalizationStats, w: RewardWeights) -> SearchResult {
        let mut best = 0u64;
        let mut best_key = (f64::NEG_INFINITY, u64::MAX);
        for r in &self.records {
            let reward = proxy_reward(r.mse, r.length, stats, w);
            if reward > best_key.0 || (reward == best_key.0 && r.length < best_key.1) {
                best_key = (reward, r.length);
                best = r.index;
            }
        }
        self.result(best, stats, w, Strategy::Exhaustive, self.records.len() as u64)
    }

    /// Min-proxy-reward assignment (the denominator anchor for reward
    /// percentiles); ties broken like [`AssignmentTable::exhaustive`].
    pub fn worst_case(&self, stats: &NormalizationStats, w: RewardWeights) -> SearchResult {
        let mut worst = 0u64;
        let mut worst_key = (f64::INFINITY, u64::MAX);
        for r in &self.records {
            let reward = proxy_reward(r.mse, r.length, stats, w);
            if reward < worst_key.0 || (reward == worst_key.0 && r.length < worst_key.1) {
                worst_key = (reward, r.length);
                worst = r.index;
            }
        }
        self.result(worst, stats, w, Strategy::WorstCase, self.records.len() as u64)
    }

    /// Max-proxy-reward assignment restricted to the `m` uniform ones;
    /// ties to the smaller length.
    pub fn best_uniform(&self, stats: &NormalizationStats, w: RewardWeights) -> SearchResult {
        let mut best = None;
        let mut best_key = (f64::NEG_INFINITY, u64::MAX);
        for &level in self.levels.levels() {
            let index = Assignment::uniform(level, &self.levels)
                .and_then(|a| a.to_index(&self.levels))
                .expect("uniform assignment valid");
            let r = self.record(index);
            let reward = proxy_reward(r.mse, r.length, stats, w);
            if reward > best_key.0 || (reward == best_key.0 && r.length < best_key.1) {
                best_key = (reward, r.length);
                best = Some(index);
            }
        }
        self.result(
            best.expect("at least two levels"),
            stats,
            w,
            Strategy::BestUniform,
            self.levels.num_levels() as u64,
        )
    }

    /// Minimum-length assignment with `mse <= tau` (ties: smaller index);
    /// the maximum-length assignment when nothing qualifies. The reward is
    /// reported under `(stats, w)` but does not influence the choice.
    pub fn threshold(
        &self,
        tau: f64,
        stats: &NormalizationStats,
        w: RewardWeights,
    ) -> SearchResult {
        let mut best: Option<u64> = None;
        let mut best_len = u64::MAX;
        for r in &self.records {
            if r.mse <= tau && r.length < best_len {
                best_len = r.length;
                best = Some(r.index);
            }
        }
        let index = best.unwrap_or(self.levels.count() - 1);
        self.result(
            index,
            stats,
            w,
            Strategy::Threshold { tau },
            self.records.len() as u64,
        )
    }

    /// Quality/length of every uniform assignment, one entry per level.
    pub fn uniform_points(&self) -> Vec<UniformSweepPoint> {
        self.levels
            .levels()
            .iter()
            .map(|&level| {
                let index = Assignment::uniform(level, &self.levels)
                    .and_then(|a| a.to_index(&self.levels))
                    .expect("uniform assignment valid");
                UniformSweepPoint {
                    level,
                    quality: QualityRecord::from_per_block(self.per_block(index).to_vec()),
                    length: self.record(index).length,
                }
            })
            .collect()
    }
}

struct TableBuilder<'a> {
    codec: &'a BlockCodec,
    x: &'a BlockVideo,
    levels: &'a CandidateLevels,
    records: Vec<AssignmentRecord>,
    per_block: Vec<f64>,
}

impl TableBuilder<'_> {
    fn descend(
        &mut self,
        t: usize,
        prediction: &[f32],
        mses: &mut Vec<f64>,
        length: u64,
        index: u64,
    ) {
        let blocks = self.levels.blocks();
        if t == blocks {
            let mse = mses.iter().sum::<f64>() / blocks as f64;
            self.records.push(AssignmentRecord { index, mse, length });
            self.per_block.extend_from_slice(mses);
            return;
        }
        let dims = self.x.dims();
        let max_level = self.levels.max_level() as usize;
        let spectrum = self
            .codec
            .spectrum(prediction, self.x.block(t), max_level);
        let mut acc = vec![0.0f64; dims.block_len()];
        let mut recon = vec![0.0f32; dims.block_len()];
        let mut prev_k = 0usize;
        let m = self.levels.num_levels() as u64;
        for (digit, &k) in self.levels.levels().iter().enumerate() {
            let k = k as usize;
            self.codec.accumulate_residual(&spectrum, prev_k, k, &mut acc);
            prev_k = k;
            self.codec.finish_block(prediction, &acc, &mut recon);
            let mse = block_mse(self.x.block(t), &recon);
            let last = recon[(dims.frames_per_block - 1) * dims.frame_len()..].to_vec();
            mses.push(mse);
            self.descend(
                t + 1,
                &last,
                mses,
                length + k as u64,
                index * m + digit as u64,
            );
            mses.pop();
        }
    }
}

/// Quality of one uniform assignment from [`uniform_sweep`].
#[derive(Debug, Clone)]
pub struct UniformSweepPoint {
    pub level: u32,
    pub quality: QualityRecord,
    pub length: u64,
}

/// Brute-force max-proxy-reward search over all `m^T` assignments.
pub fn exhaustive_search(
    x: &BlockVideo,
    config: &CodecConfig,
    levels: &CandidateLevels,
    stats: &NormalizationStats,
    w: RewardWeights,
) -> Result<SearchResult> {
    stats.ensure_matches(levels)?;
    Ok(AssignmentTable::build(x, config, levels)?.exhaustive(stats, w))
}

/// Chunked approximate search: blocks are fixed `chunk` at a time; each
/// chunk enumerates all `m^chunk` continuations of the already-chosen
/// prefix and keeps the one with the best prefix reward (prefix-restricted
/// distortion and length standardized by the matching prefix statistics).
/// The concatenated assignment is re-scored with the full-clip reward.
pub fn autoregressive_search(
    x: &BlockVideo,
    config: &CodecConfig,
    levels: &CandidateLevels,
    stats: &NormalizationStats,
    w: RewardWeights,
    chunk: usize,
) -> Result<SearchResult> {
    stats.ensure_matches(levels)?;
    let blocks = levels.blocks();
    if chunk < 1 || chunk > blocks {
        return Err(Error::ChunkOutOfRange { chunk, blocks });
    }
    if stats.prefix.len() != blocks {
        return Err(Error::StatsMismatch(format!(
            "stats carry {} prefix entries, need {}",
            stats.prefix.len(),
            blocks
        )));
    }
    let codec = BlockCodec::new(*config, x.dims());
    let mut digits: Vec<usize> = Vec::with_capacity(blocks);
    let mut state = ChunkState {
        prediction: codec.fill_frame(),
        mses: Vec::with_capacity(blocks),
        length: 0,
    };
    let mut evaluations = 0u64;
    let mut start = 0;
    while start < blocks {
        let end = (start + chunk).min(blocks);
        let mut chooser = ChunkChooser {
            codec: &codec,
            x,
            levels,
            stats,
            w,
            end,
            evaluations: 0,
            best: None,
        };
        let mut suffix = Vec::with_capacity(end - start);
        chooser.explore(start, &state.prediction.clone(), &mut state.mses, state.length, &mut suffix);
        evaluations += chooser.evaluations;
        let (_, _, best_digits, best_state) = chooser.best.expect("chunk enumerates candidates");
        digits.extend(best_digits);
        state = best_state;
        start = end;
    }
    let counts: Vec<u32> = digits.iter().map(|&d| levels.levels()[d]).collect();
    let assignment = Assignment::new(counts, levels)?;
    let distortion = state.mses.iter().sum::<f64>() / blocks as f64;
    let reward = proxy_reward(distortion, state.length, stats, w);
    Ok(SearchResult {
        assignment,
        reward,
        distortion,
        length: state.length,
        strategy: Strategy::Autoregressive { chunk },
        evaluations,
    })
}

#[derive(Clone)]
struct ChunkState {
    prediction: Vec<f32>,
    mses: Vec<f64>,
    length: u64,
}

struct ChunkChooser<'a> {
    codec: &'a BlockCodec,
    x: &'a BlockVideo,
    levels: &'a CandidateLevels,
    stats: &'a NormalizationStats,
    w: RewardWeights,
    end: usize,
    evaluations: u64,
    best: Option<(f64, u64, Vec<usize>, ChunkState)>,
}

impl ChunkChooser<'_> {
    fn explore(
        &mut self,
        t: usize,
        prediction: &[f32],
        mses: &mut Vec<f64>,
        length: u64,
        suffix: &mut Vec<usize>,
    ) {
        if t == self.end {
            self.evaluations += 1;
            let distortion = mses.iter().sum::<f64>() / self.end as f64;
            let reward = prefix_reward(distortion, length, self.stats, self.end, self.w);
            let better = match &self.best {
                None => true,
                Some((r, l, _, _)) => reward > *r || (reward == *r && length < *l),
            };
            if better {
                self.best = Some((
                    reward,
                    length,
                    suffix.clone(),
                    ChunkState {
                        prediction: prediction.to_vec(),
                        mses: mses.clone(),
                        length,
                    },
                ));
            }
            return;
        }
        let dims = self.x.dims();
        let max_level = self.levels.max_level() as usize;
        let spectrum = self
            .codec
            .spectrum(prediction, self.x.block(t), max_level);
        let mut acc = vec![0.0f64; dims.block_len()];
        let mut recon = vec![0.0f32; dims.block_len()];
        let mut prev_k = 0usize;
        for (digit, &k) in self.levels.levels().iter().enumerate() {
            let k = k as usize;
            self.codec.accumulate_residual(&spectrum, prev_k, k, &mut acc);
            prev_k = k;
            self.codec.finish_block(prediction, &acc, &mut recon);
            let mse = block_mse(self.x.block(t), &recon);
            let last = recon[(dims.frames_per_block - 1) * dims.frame_len()..].to_vec();
            mses.push(mse);
            suffix.push(digit);
            self.explore(t + 1, &last, mses, length + k as u64, suffix);
            suffix.pop();
            mses.pop();
        }
    }
}

/// Minimum-length assignment meeting `mse <= tau`, falling back to the
/// maximum-length assignment; see [`AssignmentTable::threshold`].
pub fn threshold_search(
    x: &BlockVideo,
    config: &CodecConfig,
    levels: &CandidateLevels,
    tau: f64,
    stats: &NormalizationStats,
    w: RewardWeights,
) -> Result<SearchResult> {
    stats.ensure_matches(levels)?;
    Ok(AssignmentTable::build(x, config, levels)?.threshold(tau, stats, w))
}

/// Quality/length of every uniform assignment `(k, ..., k)`.
pub fn uniform_sweep(
    x: &BlockVideo,
    config: &CodecConfig,
    levels: &CandidateLevels,
) -> Result<Vec<UniformSweepPoint>> {
    levels
        .levels()
        .iter()
        .map(|&level| {
            let a = Assignment::uniform(level, levels)?;
            let (_, quality) = reconstruct(x, &a, config)?;
            Ok(UniformSweepPoint {
                level,
                quality,
                length: a.total_length(),
            })
        })
        .collect()
}

/// Max-proxy-reward choice among the `m` uniform assignments, scored with
/// `m` direct reconstructions.
pub fn best_uniform_search(
    x: &BlockVideo,
    config: &CodecConfig,
    levels: &CandidateLevels,
    stats: &NormalizationStats,
    w: RewardWeights,
) -> Result<SearchResult> {
    stats.ensure_matches(levels)?;
    let mut best: Option<SearchResult> = None;
    for &level in levels.levels() {
        let a = Assignment::uniform(level, levels)?;
        let (_, quality) = reconstruct(x, &a, config)?;
        let length = a.total_length();
        let reward = proxy_reward(quality.mse, length, stats, w);
        let better = match &best {
            None => true,
            Some(b) => reward > b.reward || (reward == b.reward && length < b.length),
        };
        if better {
            best = Some(SearchResult {
                assignment: a,
                reward,
                distortion: quality.mse,
                length,
                strategy: Strategy::BestUniform,
                evaluations: levels.num_levels() as u64,
            });
        }
    }
    Ok(best.expect("at least two levels"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{generate_video, SceneDistribution, SceneKind, SceneSpec, VideoDims};
    use crate::reward::calibrate;

    fn dims() -> VideoDims {
        VideoDims::new(4, 4, 16, 16).unwrap()
    }

    fn levels() -> CandidateLevels {
        CandidateLevels::new(vec![2, 4, 8, 16, 32], 4).unwrap()
    }

    fn small_stats() -> NormalizationStats {
        calibrate(
            &SceneDistribution::default(),
            &CodecConfig::default(),
            dims(),
            &levels(),
            30,
            4,
            17,
        )
        .unwrap()
    }

    fn scene(kind: SceneKind, seed: u64) -> BlockVideo {
        let spec = SceneSpec {
            kind,
            amplitude: 0.8,
            period: 4,
            velocity: (1.0, -0.5),
            texture_scale: 1.6,
            detail: 0.06,
            complexity: 5,
            noise: 0.2,
            block_variation: 0.7,
            grain: 0.03,
            seed,
        };
        generate_video(&spec, dims()).unwrap()
    }

    #[test]
    fn table_matches_direct_reconstruction() {
        let x = scene(SceneKind::Composite, 21);
        let cfg = CodecConfig::default();
        let levels = levels();
        let table = AssignmentTable::build(&x, &cfg, &levels).unwrap();
        assert_eq!(table.records().len(), 625);
        for idx in [0u64, 1, 5, 77, 312, 499, 624] {
            let a = Assignment::from_index(idx, &levels).unwrap();
            let (_, q) = reconstruct(&x, &a, &cfg).unwrap();
            assert_eq!(table.record(idx).mse, q.mse, "mse differs at index {idx}");
            assert_eq!(table.per_block(idx), &q.per_block_mse[..]);
            assert_eq!(table.record(idx).length, a.total_length());
        }
    }

    #[test]
    fn exhaustive_examples() {
        let x = scene(SceneKind::Turbulent, 9);
        let cfg = CodecConfig::default();
        let stats = small_stats();
        let res = exhaustive_search(&x, &cfg, &levels(), &stats, RewardWeights::new(1.0, 1.0).unwrap())
            .unwrap();
        assert_eq!(res.evaluations, 625);

        // Only length matters: minimal assignment wins.
        let res = exhaustive_search(&x, &cfg, &levels(), &stats, RewardWeights::new(0.0, 1.0).unwrap())
            .unwrap();
        assert_eq!(res.assignment.counts(), &[2, 2, 2, 2]);

        // Only quality matters: winner attains the global distortion minimum.
        let res = exhaustive_search(&x, &cfg, &levels(), &stats, RewardWeights::new(1.0, 0.0).unwrap())
            .unwrap();
        let table = AssignmentTable::build(&x, &cfg, &levels()).unwrap();
        let min_mse = table
            .records()
            .iter()
            .map(|r| r.mse)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(res.distortion, min_mse);
        // On this turbulent clip distortion strictly improves with every
        // block's level, so the maximum assignment is optimal.
        assert_eq!(res.assignment.counts(), &[32, 32, 32, 32]);
    }

    #[test]
    fn argmax_is_invariant_to_weight_scale() {
        let cfg = CodecConfig::default();
        let stats = small_stats();
        for seed in [1u64, 2, 3] {
            let x = scene(SceneKind::Composite, seed);
            let table = AssignmentTable::build(&x, &cfg, &levels()).unwrap();
            let a = table.exhaustive(&stats, RewardWeights::new(1.2, 0.8).unwrap());
            let b = table.exhaustive(&stats, RewardWeights::new(3.6, 2.4).unwrap());
            assert_eq!(a.assignment, b.assignment);
        }
    }

    #[test]
    fn threshold_examples() {
        let x = scene(SceneKind::Drift, 4);
        let cfg = CodecConfig::default();
        let stats = small_stats();
        let w = RewardWeights::new(1.0, 1.0).unwrap();

        let res = threshold_search(&x, &cfg, &levels(), f64::INFINITY, &stats, w).unwrap();
        assert_eq!(res.assignment.counts(), &[2, 2, 2, 2]);

        let res = threshold_search(&x, &cfg, &levels(), 0.0, &stats, w).unwrap();
        assert_eq!(res.assignment.counts(), &[32, 32, 32, 32]);

        let table = AssignmentTable::build(&x, &cfg, &levels()).unwrap();
        let tau = table.record(624).mse;
        let res = table.threshold(tau, &stats, w);
        assert!(res.distortion <= tau);
        assert!(res.length <= 128);
        // Brute-force: no qualifying assignment is shorter.
        for r in table.records() {
            if r.mse <= tau {
                assert!(res.length <= r.length);
            }
        }
    }

    #[test]
    fn uniform_sweep_examples() {
        let cfg = CodecConfig::default();
        let x = scene(SceneKind::Drift, 7);
        let points = uniform_sweep(&x, &cfg, &levels()).unwrap();
        let lengths: Vec<u64> = points.iter().map(|p| p.length).collect();
        assert_eq!(lengths, vec![8, 16, 32, 64, 128]);
        // Weak distortion decrease with level on the fixed drift clip.
        for pair in points.windows(2) {
            assert!(
                pair[1].quality.mse <= pair[0].quality.mse,
                "level {} mse {} > level {} mse {}",
                pair[1].level,
                pair[1].quality.mse,
                pair[0].level,
                pair[0].quality.mse
            );
        }

        let flat = BlockVideo::new(dims(), vec![0.5; dims().total_len()], 0, None).unwrap();
        let points = uniform_sweep(&flat, &cfg, &levels()).unwrap();
        assert!(points.iter().all(|p| p.quality.mse == 0.0));
    }

    #[test]
    fn best_uniform_examples() {
        let cfg = CodecConfig::default();
        let stats = small_stats();
        let x = scene(SceneKind::Composite, 31);
        let w = RewardWeights::new(1.0, 1.0).unwrap();
        let bu = best_uniform_search(&x, &cfg, &levels(), &stats, w).unwrap();
        let ex = exhaustive_search(&x, &cfg, &levels(), &stats, w).unwrap();
        assert!(bu.reward <= ex.reward);
        assert_eq!(bu.evaluations, 5);

        let res = best_uniform_search(&x, &cfg, &levels(), &stats, RewardWeights::new(0.0, 1.0).unwrap())
            .unwrap();
        assert_eq!(res.assignment.counts(), &[2, 2, 2, 2]);

        // Static flat clip: zero distortion at every level, length decides.
        let flat = BlockVideo::new(dims(), vec![0.5; dims().total_len()], 0, None).unwrap();
        let res = best_uniform_search(&flat, &cfg, &levels(), &stats, w).unwrap();
        assert_eq!(res.assignment.counts(), &[2, 2, 2, 2]);
    }

    #[test]
    fn best_uniform_table_path_matches_direct_path() {
        let cfg = CodecConfig::default();
        let stats = small_stats();
        let w = RewardWeights::new(1.2, 0.8).unwrap();
        let x = scene(SceneKind::Periodic, 13);
        let direct = best_uniform_search(&x, &cfg, &levels(), &stats, w).unwrap();
        let table = AssignmentTable::build(&x, &cfg, &levels()).unwrap();
        let via_table = table.best_uniform(&stats, w);
        assert_eq!(direct.assignment, via_table.assignment);
        assert_eq!(direct.reward, via_table.reward);
    }

    #[test]
    fn autoregressive_full_chunk_equals_exhaustive() {
        let cfg = CodecConfig::default();
        let stats = small_stats();
        let w = RewardWeights::new(1.2, 0.8).unwrap();
        for seed in [5u64, 6, 7] {
            let x = scene(SceneKind::Composite, seed);
            let ar = autoregressive_search(&x, &cfg, &levels(), &stats, w, 4).unwrap();
            let ex = exhaustive_search(&x, &cfg, &levels(), &stats, w).unwrap();
            assert_eq!(ar.assignment, ex.assignment);
            assert_eq!(ar.reward, ex.reward);
            assert_eq!(ar.distortion, ex.distortion);
        }
    }

    #[test]
    fn autoregressive_chunk_one_costs_t_times_m() {
        let cfg = CodecConfig::default();
        let stats = small_stats();
        let w = RewardWeights::new(1.0, 1.0).unwrap();
        let x = scene(SceneKind::Drift, 8);
        let ar = autoregressive_search(&x, &cfg, &levels(), &stats, w, 1).unwrap();
        assert_eq!(ar.evaluations, 20);
        let ex = exhaustive_search(&x, &cfg, &levels(), &stats, w).unwrap();
        assert!(ar.reward <= ex.reward);
    }

    #[test]
    fn autoregressive_rejects_bad_chunk() {
        let cfg = CodecConfig::default();
        let stats = small_stats();
        let w = RewardWeights::new(1.0, 1.0).unwrap();
        let x = scene(SceneKind::Static, 2);
        assert!(matches!(
            autoregressive_search(&x, &cfg, &levels(), &stats, w, 5),
            Err(Error::ChunkOutOfRange { .. })
        ));
        assert!(autoregressive_search(&x, &cfg, &levels(), &stats, w, 0).is_err());
    }
}
