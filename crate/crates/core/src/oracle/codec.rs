//! Causal block codec: per-frame orthonormal DCT of the prediction residual
//! with top-k coefficient retention.
//!
//! Each temporal block is predicted by replicating the last reconstructed
//! frame of the previous block (a constant fill frame for block 0). The
//! residual is transformed per frame with an orthonormal 2D type-II DCT and
//! only the `k` largest-magnitude coefficients of the whole block are kept,
//! ties broken by flat (frame, row, col) position. One retained coefficient
//! is one token.
//!
//! The transform stage (residual + forward DCT + coefficient ranking) is
//! split from the retention stage so that searches enumerating many token
//! counts over the same prediction can reuse the spectrum. Retention
//! accumulates coefficients in rank order, which makes the reconstruction
//! for a larger `k` an extension of the smaller one: reconstructing
//! incrementally through nested budgets is bit-identical to reconstructing
//! each budget from scratch.

use serde::{Deserialize, Serialize};

use super::video::VideoDims;

/// Fixed codec parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodecConfig {
    /// Intensity of the synthetic prediction frame for block 0. Unbiased
    /// middle of the intensity range by default, so block 0 has to carry
    /// the scene layout.
    #[serde(default = "default_fill")]
    pub first_block_fill: f32,
}

fn default_fill() -> f32 {
    0.5
}

impl Default for CodecConfig {
    fn default() -> Self {
        Self {
            first_block_fill: default_fill(),
        }
    }
}

/// Orthonormal type-II DCT basis for one dimension.
///
/// `basis[u * n + i] = c(u) * cos(pi * (2i + 1) * u / (2n))` with
/// `c(0) = sqrt(1/n)` and `c(u) = sqrt(2/n)`, so rows are orthonormal.
#[derive(Debug, Clone)]
struct DctPlan {
    basis: Vec<f64>,
}

impl DctPlan {
    fn new(n: usize) -> Self {
        let mut basis = vec![0.0; n * n];
        for u in 0..n {
            let scale = if u == 0 {
                (1.0 / n as f64).sqrt()
            } else {
                (2.0 / n as f64).sqrt()
            };
            for i in 0..n {
                let angle = std::f64::consts::PI * (2 * i + 1) as f64 * u as f64 / (2 * n) as f64;
                basis[u * n + i] = scale * angle.cos();
            }
        }
        Self { basis }
    }
}

/// Residual spectrum of one temporal block: DCT coefficients for each frame
/// plus the retention ranking (largest magnitude first, position ascending
/// on ties) truncated to the largest budget that will be queried.
#[derive(Debug, Clone)]
pub struct ResidualSpectrum {
    coeffs: Vec<f64>,
    ranking: Vec<u32>,
}

impl ResidualSpectrum {
    /// Flat (frame, row, col) coefficient tensor.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Flat coefficient positions in retention order.
    pub fn ranking(&self) -> &[u32] {
        &self.ranking
    }

    pub fn max_rank(&self) -> usize {
        self.ranking.len()
    }
}

/// Per-video codec context: config, dims, and DCT plans.
#[derive(Debug, Clone)]
pub struct BlockCodec {
    config: CodecConfig,
    dims: VideoDims,
    rows: DctPlan,
    cols: DctPlan,
}

impl BlockCodec {
    pub fn new(config: CodecConfig, dims: VideoDims) -> Self {
        let rows = DctPlan::new(dims.height);
        let cols = DctPlan::new(dims.width);
        Self {
            config,
            dims,
            rows,
            cols,
        }
    }

    pub fn dims(&self) -> VideoDims {
        self.dims
    }

    pub fn config(&self) -> CodecConfig {
        self.config
    }

    /// Prediction frame for block 0.
    pub fn fill_frame(&self) -> Vec<f32> {
        vec![self.config.first_block_fill; self.dims.frame_len()]
    }

    /// Transform stage: residual of `block` against the replicated
    /// `prediction` frame, forward DCT per frame, ranking of the top
    /// `max_rank` coefficients.
    pub fn spectrum(&self, prediction: &[f32], block: &[f32], max_rank: usize) -> ResidualSpectrum {
        let frame_len = self.dims.frame_len();
        let block_len = self.dims.block_len();
        debug_assert_eq!(prediction.len(), frame_len);
        debug_assert_eq!(block.len(), block_len);

        let h = self.dims.height;
        let w = self.dims.width;
        let mut coeffs = vec![0.0f64; block_len];
        let mut residual = vec![0.0f64; frame_len];
        let mut scratch = vec![0.0f64; frame_len];
        for f in 0..self.dims.frames_per_block {
            let frame = &block[f * frame_len..(f + 1) * frame_len];
            for (r, (&p, &q)) in residual.iter_mut().zip(frame.iter().zip(prediction)) {
                *r = f64::from(p) - f64::from(q);
            }
            let out = &mut coeffs[f * frame_len..(f + 1) * frame_len];
            // tmp = Mh * X
            scratch.fill(0.0);
            for u in 0..h {
                let trow = &mut scratch[u * w..(u + 1) * w];
                for i in 0..h {
                    let m = self.rows.basis[u * h + i];
                    let xrow = &residual[i * w..(i + 1) * w];
                    for (t, &x) in trow.iter_mut().zip(xrow) {
                        *t += m * x;
                    }
                }
            }
            // C = tmp * Mw^T
            for u in 0..h {
                let trow = &scratch[u * w..(u + 1) * w];
                let orow = &mut out[u * w..(u + 1) * w];
                for (v, o) in orow.iter_mut().enumerate() {
                    let mrow = &self.cols.basis[v * w..(v + 1) * w];
                    let mut acc = 0.0;
                    for (&t, &m) in trow.iter().zip(mrow) {
                        acc += t * m;
                    }
                    *o = acc;
                }
            }
        }

        let max_rank = max_rank.min(block_len);
        let mut order: Vec<u32> = (0..block_len as u32).collect();
        let by_retention = |a: &u32, b: &u32| {
            let ca = coeffs[*a as usize].abs();
            let cb = coeffs[*b as usize].abs();
            cb.total_cmp(&ca).then(a.cmp(b))
        };
        if max_rank < block_len {
            order.select_nth_unstable_by(max_rank, by_retention);
            order.truncate(max_rank);
        }
        order.sort_unstable_by(by_retention);
        ResidualSpectrum {
            coeffs,
            ranking: order,
        }
    }

    /// Retention stage: add the inverse-transform contribution of the
    /// coefficients ranked `[from_rank, to_rank)` into `acc` (flat block of
    /// f64 residual intensities). Accumulating `0..k` in one call or through
    /// any chain of sub-ranges produces bit-identical results.
    pub fn accumulate_residual(
        &self,
        spectrum: &ResidualSpectrum,
        from_rank: usize,
        to_rank: usize,
        acc: &mut [f64],
    ) {
        debug_assert!(to_rank <= spectrum.max_rank());
        debug_assert_eq!(acc.len(), self.dims.block_len());
        let h = self.dims.height;
        let w = self.dims.width;
        let frame_len = self.dims.frame_len();
        for &pos in &spectrum.ranking[from_rank..to_rank] {
            let pos = pos as usize;
            let c = spectrum.coeffs[pos];
            let f = pos / frame_len;
            let u = (pos % frame_len) / w;
            let v = pos % w;
            let col_basis = &self.cols.basis[v * w..(v + 1) * w];
            let frame = &mut acc[f * frame_len..(f + 1) * frame_len];
            for i in 0..h {
                let s = c * self.rows.basis[u * h + i];
                let row = &mut frame[i * w..(i + 1) * w];
                for (r, &m) in row.iter_mut().zip(col_basis) {
                    *r += s * m;
                }
            }
        }
    }

    /// Residual reconstruction from the top `k` coefficients.
    pub fn residual_reconstruction(&self, spectrum: &ResidualSpectrum, k: usize) -> Vec<f64> {
        let mut acc = vec![0.0f64; self.dims.block_len()];
        self.accumulate_residual(spectrum, 0, k, &mut acc);
        acc
    }

    /// Final block pixels: prediction plus residual, clamped to [0, 1].
    pub fn finish_block(&self, prediction: &[f32], residual: &[f64], out: &mut [f32]) {
        let frame_len = self.dims.frame_len();
        debug_assert_eq!(residual.len(), self.dims.block_len());
        debug_assert_eq!(out.len(), self.dims.block_len());
        for f in 0..self.dims.frames_per_block {
            let res = &residual[f * frame_len..(f + 1) * frame_len];
            let dst = &mut out[f * frame_len..(f + 1) * frame_len];
            for ((d, &r), &p) in dst.iter_mut().zip(res).zip(prediction) {
                *d = (f64::from(p) + r).clamp(0.0, 1.0) as f32;
            }
        }
    }
}

/// Mean squared error between two equally sized pixel slices, accumulated
/// in f64 in flat order.
pub fn block_mse(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut sum = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        let d = f64::from(x) - f64::from(y);
        sum += d * d;
    }
    sum / a.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims() -> VideoDims {
        VideoDims::new(4, 4, 16, 16).unwrap()
    }

    fn noise_block(dims: VideoDims, seed: u64) -> Vec<f32> {
        use rand::Rng;
        let mut rng = crate::rng::rng_for(seed, "codec-test-block", 0);
        (0..dims.block_len()).map(|_| rng.gen_range(0.0..1.0)).collect()
    }

    #[test]
    fn dct_basis_is_orthonormal() {
        let plan = DctPlan::new(16);
        for u in 0..16 {
            for v in 0..16 {
                let dot: f64 = (0..16)
                    .map(|i| plan.basis[u * 16 + i] * plan.basis[v * 16 + i])
                    .sum();
                let expected = if u == v { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-12, "u={u} v={v} dot={dot}");
            }
        }
    }

    #[test]
    fn full_retention_reconstructs_exactly() {
        let dims = dims();
        let codec = BlockCodec::new(CodecConfig::default(), dims);
        let block = noise_block(dims, 9);
        let pred = codec.fill_frame();
        let spec = codec.spectrum(&pred, &block, dims.block_len());
        let full = codec.residual_reconstruction(&spec, dims.block_len());
        let mut recon = vec![0.0f32; dims.block_len()];
        codec.finish_block(&pred, &full, &mut recon);
        // Residual round-trip error is far below half an f32 ulp, so the
        // clamped f32 pixels come back bit-identical.
        assert_eq!(recon, block);
        assert_eq!(block_mse(&block, &recon), 0.0);
    }

    #[test]
    fn retention_matches_dropped_energy() {
        let dims = dims();
        let codec = BlockCodec::new(CodecConfig::default(), dims);
        let block = noise_block(dims, 11);
        let pred = codec.fill_frame();
        let spec = codec.spectrum(&pred, &block, dims.block_len());
        for &k in &[2usize, 16, 128, 1024] {
            let recon = codec.residual_reconstruction(&spec, k);
            let mut err = 0.0f64;
            let frame_len = dims.frame_len();
            for f in 0..dims.frames_per_block {
                for i in 0..frame_len {
                    let r = f64::from(block[f * frame_len + i]) - f64::from(pred[i]);
                    let d = r - recon[f * frame_len + i];
                    err += d * d;
                }
            }
            let dropped: f64 = spec.ranking()[k..]
                .iter()
                .map(|&p| spec.coeffs()[p as usize].powi(2))
                .sum();
            assert!(
                (err - dropped).abs() <= 1e-9 * (1.0 + dropped),
                "k={k}: pixel-domain error {err} vs dropped energy {dropped}"
            );
        }
    }

    #[test]
    fn incremental_accumulation_is_bit_identical() {
        let dims = dims();
        let codec = BlockCodec::new(CodecConfig::default(), dims);
        let block = noise_block(dims, 13);
        let pred = codec.fill_frame();
        let spec = codec.spectrum(&pred, &block, 32);
        let direct = codec.residual_reconstruction(&spec, 32);
        let mut acc = vec![0.0f64; dims.block_len()];
        for bounds in [(0usize, 2usize), (2, 4), (4, 8), (8, 16), (16, 32)] {
            codec.accumulate_residual(&spec, bounds.0, bounds.1, &mut acc);
        }
        assert_eq!(direct, acc);
    }

    #[test]
    fn ranking_prefix_is_independent_of_max_rank() {
        let dims = dims();
        let codec = BlockCodec::new(CodecConfig::default(), dims);
        let block = noise_block(dims, 17);
        let pred = codec.fill_frame();
        let full = codec.spectrum(&pred, &block, dims.block_len());
        let small = codec.spectrum(&pred, &block, 8);
        assert_eq!(&full.ranking()[..8], small.ranking());
    }
}
