//! Deterministic reconstruction oracle: synthetic scenes plus the causal
//! block codec that scores token assignments.

mod codec;
mod scene;
mod video;

pub use codec::{block_mse, BlockCodec, CodecConfig, ResidualSpectrum};
pub use scene::{generate_video, SceneDistribution, SceneKind, SceneSpec};
pub use video::{measure, psnr_of, BlockVideo, QualityRecord, VideoDims};

use crate::assign::Assignment;
use crate::error::Result;

/// Reconstruct `x` under assignment `a`.
///
/// Blocks are coded in order: block `t` is predicted by replicating the last
/// reconstructed frame of block `t - 1` (the constant fill frame for block
/// 0), the residual is transformed, the top `k_t` coefficients are retained,
/// and the result is clamped to [0, 1]. Returns the reconstruction and its
/// quality against `x`.
pub fn reconstruct(
    x: &BlockVideo,
    a: &Assignment,
    config: &CodecConfig,
) -> Result<(BlockVideo, QualityRecord)> {
    let dims = x.dims();
    if a.counts().len() != dims.blocks {
        return Err(crate::error::Error::InvalidAssignment(format!(
            "assignment has {} blocks, video has {}",
            a.counts().len(),
            dims.blocks
        )));
    }
    let codec = BlockCodec::new(*config, dims);
    let block_len = dims.block_len();
    let mut pixels = vec![0.0f32; dims.total_len()];
    let mut prediction = codec.fill_frame();
    for (t, &k) in a.counts().iter().enumerate() {
        let spectrum = codec.spectrum(&prediction, x.block(t), k as usize);
        let residual = codec.residual_reconstruction(&spectrum, k as usize);
        let out = &mut pixels[t * block_len..(t + 1) * block_len];
        codec.finish_block(&prediction, &residual, out);
        prediction.copy_from_slice(&out[(dims.frames_per_block - 1) * dims.frame_len()..]);
    }
    let recon = BlockVideo::new(dims, pixels, x.seed, None)?;
    let quality = measure(x, &recon)?;
    Ok((recon, quality))
}
