//! Clip container, quality metrics, and the flat binary layout.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::codec::block_mse;
use super::scene::SceneSpec;

/// Clip geometry: `T` temporal blocks of `F` frames, each `H x W`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoDims {
    #[serde(rename = "t")]
    pub blocks: usize,
    #[serde(rename = "f")]
    pub frames_per_block: usize,
    #[serde(rename = "h")]
    pub height: usize,
    #[serde(rename = "w")]
    pub width: usize,
}

impl VideoDims {
    pub fn new(blocks: usize, frames_per_block: usize, height: usize, width: usize) -> Result<Self> {
        let dims = Self {
            blocks,
            frames_per_block,
            height,
            width,
        };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks < 1 || self.frames_per_block < 1 || self.height < 1 || self.width < 1 {
            return Err(Error::ShapeMismatch {
                expected: "all dims >= 1".into(),
                got: format!("{self:?}"),
            });
        }
        Ok(())
    }

    pub fn frame_len(&self) -> usize {
        self.height * self.width
    }

    pub fn block_len(&self) -> usize {
        self.frames_per_block * self.frame_len()
    }

    pub fn total_frames(&self) -> usize {
        self.blocks * self.frames_per_block
    }

    pub fn total_len(&self) -> usize {
        self.blocks * self.block_len()
    }
}

/// A grayscale clip partitioned into causal temporal blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVideo {
    dims: VideoDims,
    pixels: Vec<f32>,
    pub seed: u64,
    pub scene: Option<SceneSpec>,
}

impl BlockVideo {
    pub fn new(
        dims: VideoDims,
        pixels: Vec<f32>,
        seed: u64,
        scene: Option<SceneSpec>,
    ) -> Result<Self> {
        dims.validate()?;
        if pixels.len() != dims.total_len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} pixels", dims.total_len()),
                got: format!("{} pixels", pixels.len()),
            });
        }
        if !pixels.iter().all(|p| (0.0..=1.0).contains(p)) {
            return Err(Error::ShapeMismatch {
                expected: "intensities in [0, 1]".into(),
                got: "out-of-range intensity".into(),
            });
        }
        Ok(Self {
            dims,
            pixels,
            seed,
            scene,
        })
    }

    pub fn dims(&self) -> VideoDims {
        self.dims
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    /// Flat pixels of temporal block `t`.
    pub fn block(&self, t: usize) -> &[f32] {
        let len = self.dims.block_len();
        &self.pixels[t * len..(t + 1) * len]
    }

    /// Flat pixels of absolute frame `idx` (0-based across the whole clip).
    pub fn frame(&self, idx: usize) -> &[f32] {
        let len = self.dims.frame_len();
        &self.pixels[idx * len..(idx + 1) * len]
    }

    pub fn last_frame_of_block(&self, t: usize) -> &[f32] {
        self.frame((t + 1) * self.dims.frames_per_block - 1)
    }

    /// Flat binary layout: header T, F, H, W as little-endian u32, then
    /// row-major little-endian f32 intensities.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_u32::<LittleEndian>(self.dims.blocks as u32)?;
        w.write_u32::<LittleEndian>(self.dims.frames_per_block as u32)?;
        w.write_u32::<LittleEndian>(self.dims.height as u32)?;
        w.write_u32::<LittleEndian>(self.dims.width as u32)?;
        for &p in &self.pixels {
            w.write_f32::<LittleEndian>(p)?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let blocks = r.read_u32::<LittleEndian>()? as usize;
        let frames_per_block = r.read_u32::<LittleEndian>()? as usize;
        let height = r.read_u32::<LittleEndian>()? as usize;
        let width = r.read_u32::<LittleEndian>()? as usize;
        let dims = VideoDims::new(blocks, frames_per_block, height, width)?;
        let mut pixels = vec![0.0f32; dims.total_len()];
        for p in pixels.iter_mut() {
            *p = r.read_f32::<LittleEndian>()?;
        }
        Self::new(dims, pixels, 0, None)
    }
}

/// Reconstruction quality: overall MSE, PSNR in dB, and per-block MSEs.
/// The overall MSE is the equal-weight mean of the per-block values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityRecord {
    pub mse: f64,
    pub psnr: f64,
    pub per_block_mse: Vec<f64>,
}

impl QualityRecord {
    pub fn from_per_block(per_block_mse: Vec<f64>) -> Self {
        let mse = per_block_mse.iter().sum::<f64>() / per_block_mse.len() as f64;
        Self {
            mse,
            psnr: psnr_of(mse),
            per_block_mse,
        }
    }
}

/// PSNR in dB for unit-range intensities; +inf when the error is zero.
pub fn psnr_of(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (1.0 / mse).log10()
    }
}

/// MSE/PSNR of `y` against the reference `x`, per temporal block and overall.
pub fn measure(x: &BlockVideo, y: &BlockVideo) -> Result<QualityRecord> {
    if x.dims() != y.dims() {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?}", x.dims()),
            got: format!("{:?}", y.dims()),
        });
    }
    let per_block: Vec<f64> = (0..x.dims().blocks)
        .map(|t| block_mse(x.block(t), y.block(t)))
        .collect();
    Ok(QualityRecord::from_per_block(per_block))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims() -> VideoDims {
        VideoDims::new(4, 4, 16, 16).unwrap()
    }

    fn constant_video(value: f32) -> BlockVideo {
        BlockVideo::new(dims(), vec![value; dims().total_len()], 0, None).unwrap()
    }

    #[test]
    fn measure_identity_is_zero_with_psnr_sentinel() {
        let x = constant_video(0.25);
        let q = measure(&x, &x).unwrap();
        assert_eq!(q.mse, 0.0);
        assert!(q.psnr.is_infinite());
        assert!(q.per_block_mse.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn measure_constant_offset() {
        let x = constant_video(0.0);
        let y = constant_video(0.1);
        let q = measure(&x, &y).unwrap();
        assert!((q.mse - 0.01).abs() < 1e-8);
        assert!((q.psnr - 20.0).abs() < 1e-6);
    }

    #[test]
    fn measure_rejects_shape_mismatch() {
        let x = constant_video(0.0);
        let other = BlockVideo::new(
            VideoDims::new(2, 4, 16, 16).unwrap(),
            vec![0.0; 2 * 4 * 256],
            0,
            None,
        )
        .unwrap();
        assert!(measure(&x, &other).is_err());
    }

    #[test]
    fn per_block_mse_averages_to_mse() {
        let q = QualityRecord::from_per_block(vec![0.1, 0.2, 0.3, 0.4]);
        assert_eq!(q.mse, (0.1 + 0.2 + 0.3 + 0.4) / 4.0);
    }

    #[test]
    fn binary_roundtrip_preserves_pixels() {
        let spec = crate::oracle::SceneSpec {
            kind: crate::oracle::SceneKind::Composite,
            amplitude: 0.8,
            period: 4,
            velocity: (0.5, 0.3),
            texture_scale: 2.0,
            detail: 0.05,
            complexity: 5,
            noise: 0.1,
            block_variation: 0.7,
            grain: 0.03,
            seed: 42,
        };
        let x = crate::oracle::generate_video(&spec, dims()).unwrap();
        let mut buf = Vec::new();
        x.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 4 * dims().total_len());
        let y = BlockVideo::read_binary(buf.as_slice()).unwrap();
        assert_eq!(x.dims(), y.dims());
        assert_eq!(x.pixels(), y.pixels());
    }

    #[test]
    fn rejects_out_of_range_intensities() {
        assert!(BlockVideo::new(dims(), vec![1.5; dims().total_len()], 0, None).is_err());
    }
}
