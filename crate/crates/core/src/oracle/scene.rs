//! Procedural grayscale scenes with controllable temporal structure.
//!
//! Scene kinds span the spectrum the budget allocator has to discriminate:
//! static layouts that only need tokens in the first block, periodic and
//! drifting content with moderate per-block change, turbulent content that
//! is expensive everywhere, and composites mixing all three. A per-block
//! activity envelope varies motion and noise intensity across temporal
//! blocks (except for pure periodic clips, which repeat exactly), and a
//! static per-pixel grain keeps every clip away from lossless
//! reconstruction at small budgets. Generation is a pure function of the
//! spec: identical specs give bit-identical clips.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derive_seed;

use super::video::{BlockVideo, VideoDims};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SceneKind {
    Static,
    Periodic,
    Drift,
    Turbulent,
    Composite,
}

/// Parameters of one synthetic clip. Fields not used by a kind are ignored
/// by it (`period` only drives periodic/composite, `velocity` only
/// drift/composite, `noise` only turbulent/composite).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub kind: SceneKind,
    /// Texture contrast in [0, 1]; 0 is a flat mid-gray clip.
    pub amplitude: f64,
    /// Temporal period in frames, >= 1.
    pub period: u32,
    /// Drift velocity in pixels per frame, each component in [-8, 8].
    pub velocity: (f64, f64),
    /// Spatial frequency multiplier in (0, 8]; larger means finer blobs.
    pub texture_scale: f64,
    /// Fine-grain wave amplitude in [0, 0.2].
    pub detail: f64,
    /// Number of Gaussian blobs in [1, 16].
    pub complexity: u32,
    /// Per-frame structured noise amplitude in [0, 0.5].
    pub noise: f64,
    /// Per-block spread of motion/noise intensity in [0, 1]: block
    /// activity is scaled by factors drawn from `[1 - v, 1 + v]`.
    /// Ignored by static and periodic clips.
    pub block_variation: f64,
    /// Static per-pixel sensor grain amplitude in [0, 0.1].
    pub grain: f64,
    pub seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, msg: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidScene(msg.to_string()))
            }
        }
        check(
            (0.0..=1.0).contains(&self.amplitude) && self.amplitude.is_finite(),
            "amplitude must be in [0, 1]",
        )?;
        check(self.period >= 1, "period must be >= 1")?;
        check(
            self.velocity.0.is_finite()
                && self.velocity.1.is_finite()
                && self.velocity.0.abs() <= 8.0
                && self.velocity.1.abs() <= 8.0,
            "velocity components must be in [-8, 8]",
        )?;
        check(
            self.texture_scale > 0.0 && self.texture_scale <= 8.0,
            "texture_scale must be in (0, 8]",
        )?;
        check(
            (0.0..=0.2).contains(&self.detail),
            "detail must be in [0, 0.2]",
        )?;
        check(
            (1..=16).contains(&self.complexity),
            "complexity must be in [1, 16]",
        )?;
        check((0.0..=0.5).contains(&self.noise), "noise must be in [0, 0.5]")?;
        check(
            (0.0..=1.0).contains(&self.block_variation),
            "block_variation must be in [0, 1]",
        )?;
        check((0.0..=0.1).contains(&self.grain), "grain must be in [0, 0.1]")?;
        Ok(())
    }

    pub fn generate(&self, dims: VideoDims) -> Result<BlockVideo> {
        generate_video(self, dims)
    }
}

#[derive(Debug, Clone)]
struct Blob {
    cx: f64,
    cy: f64,
    inv_two_sigma_sq: f64,
    weight: f64,
}

#[derive(Debug, Clone)]
struct Wave {
    fx: f64,
    fy: f64,
    phase: f64,
    weight: f64,
}

/// Torus-periodic analytic texture: Gaussian blobs plus one low-frequency
/// wave, normalized so |eval| <= 1. Periodicity keeps drifting scenes
/// seamless under wraparound sampling.
#[derive(Debug, Clone)]
struct Texture {
    blobs: Vec<Blob>,
    wave: Wave,
    norm: f64,
}

impl Texture {
    fn build(rng: &mut ChaCha8Rng, spec: &SceneSpec, width: usize, height: usize) -> Self {
        let mut blobs = Vec::with_capacity(spec.complexity as usize);
        let mut sum_sq = 0.0;
        // Log-uniform multi-scale blob sizes: a mix of coarse layout masses
        // and sharp spectrally broad features, upper scale set by
        // texture_scale.
        let lo: f64 = 0.55;
        let hi = (height as f64 / (1.2 * spec.texture_scale)).max(1.1 * lo);
        for _ in 0..spec.complexity {
            let cx = rng.gen_range(0.0..width as f64);
            let cy = rng.gen_range(0.0..height as f64);
            let sigma = (rng.gen_range(lo.ln()..hi.ln())).exp();
            let contrast = (sigma / hi).powf(0.35);
            let weight: f64 =
                contrast * rng.gen_range(0.5..1.0) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
            sum_sq += weight * weight;
            blobs.push(Blob {
                cx,
                cy,
                inv_two_sigma_sq: 1.0 / (2.0 * sigma * sigma),
                weight,
            });
        }
        let wave = Wave {
            fx: f64::from(rng.gen_range(1..=2)),
            fy: f64::from(rng.gen_range(1..=2)),
            phase: rng.gen_range(0.0..std::f64::consts::TAU),
            weight: rng.gen_range(0.3..0.8),
        };
        sum_sq += wave.weight * wave.weight;
        // RMS-based normalization keeps individual features crisp when many
        // blobs are present; the final pixel clamp absorbs rare overshoots.
        let norm = 1.4 * sum_sq.sqrt();
        Self { blobs, wave, norm }
    }

    /// Accumulate `scale * eval(x - ox, y - oy)` into `frame` (height x width,
    /// row major), using separable per-row/per-column factors.
    fn render(
        &self,
        ox: f64,
        oy: f64,
        scale: f64,
        width: usize,
        height: usize,
        frame: &mut [f64],
        row_buf: &mut [f64],
        col_buf: &mut [f64],
    ) {
        let wf = width as f64;
        let hf = height as f64;
        let s = scale / self.norm;
        for blob in &self.blobs {
            for (j, c) in col_buf.iter_mut().enumerate().take(width) {
                let dx = torus_dist(j as f64 - ox - blob.cx, wf);
                *c = (-dx * dx * blob.inv_two_sigma_sq).exp();
            }
            for (i, r) in row_buf.iter_mut().enumerate().take(height) {
                let dy = torus_dist(i as f64 - oy - blob.cy, hf);
                *r = (-dy * dy * blob.inv_two_sigma_sq).exp();
            }
            for i in 0..height {
                let rw = s * blob.weight * row_buf[i];
                let out = &mut frame[i * width..(i + 1) * width];
                for (o, &c) in out.iter_mut().zip(col_buf.iter()) {
                    *o += rw * c;
                }
            }
        }
        // sin(ax + by + phase) accumulated separably via the angle-sum identity.
        let tau = std::f64::consts::TAU;
        for (j, c) in col_buf.iter_mut().enumerate().take(width) {
            *c = tau * self.wave.fx * (j as f64 - ox) / wf;
        }
        for i in 0..height {
            let by = tau * self.wave.fy * (i as f64 - oy) / hf + self.wave.phase;
            let (sin_b, cos_b) = by.sin_cos();
            let rw = s * self.wave.weight;
            let out = &mut frame[i * width..(i + 1) * width];
            for (o, &ax) in out.iter_mut().zip(col_buf.iter()) {
                let (sin_a, cos_a) = ax.sin_cos();
                *o += rw * (sin_a * cos_b + cos_a * sin_b);
            }
        }
    }
}

fn torus_dist(d: f64, len: f64) -> f64 {
    let d = d.rem_euclid(len);
    d.min(len - d)
}

/// One moving spectral component of a composite clip: a spatial wave whose
/// phase rotates over time and whose strength is set per temporal block.
#[derive(Debug, Clone)]
struct MovingWave {
    fx: f64,
    fy: f64,
    phase: f64,
    /// Temporal phase advance per frame.
    spin: f64,
    weight: f64,
    /// Per-block gain, scaled by the activity envelope.
    block_gain: Vec<f64>,
}

fn build_wave_bank(
    rng: &mut ChaCha8Rng,
    spec: &SceneSpec,
    blocks: usize,
    envelope: &[f64],
) -> Vec<MovingWave> {
    let count = (spec.complexity as usize / 3).clamp(2, 5);
    let mut bank = Vec::with_capacity(count);
    for _ in 0..count {
        let fx = f64::from(rng.gen_range(1..=5));
        let fy = f64::from(rng.gen_range(1..=5));
        let spin = rng.gen_range(0.3..1.4) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        let weight = rng.gen_range(0.6..1.0);
        let block_gain = (0..blocks)
            .map(|t| envelope[t] * rng.gen_range(0.25..1.0))
            .collect();
        bank.push(MovingWave {
            fx,
            fy,
            phase,
            spin,
            weight,
            block_gain,
        });
    }
    bank
}

fn render_wave(
    wave: &MovingWave,
    gain: f64,
    tau: f64,
    width: usize,
    height: usize,
    frame: &mut [f64],
    col_buf: &mut [f64],
) {
    let tauc = std::f64::consts::TAU;
    for (j, c) in col_buf.iter_mut().enumerate().take(width) {
        *c = tauc * wave.fx * j as f64 / width as f64;
    }
    let temporal = wave.phase + wave.spin * tau;
    for i in 0..height {
        let by = tauc * wave.fy * i as f64 / height as f64 + temporal;
        let (sin_b, cos_b) = by.sin_cos();
        let row = &mut frame[i * width..(i + 1) * width];
        for (o, &ax) in row.iter_mut().zip(col_buf.iter()) {
            let (sin_a, cos_a) = ax.sin_cos();
            *o += gain * wave.weight * (sin_a * cos_b + cos_a * sin_b);
        }
    }
}

/// Per-frame structured noise: a coarse random grid upsampled bilinearly
/// with wraparound.
fn render_noise_grid(
    rng: &mut ChaCha8Rng,
    scale: f64,
    width: usize,
    height: usize,
    frame: &mut [f64],
) {
    const GRID: usize = 6;
    let mut grid = [0.0f64; GRID * GRID];
    for g in grid.iter_mut() {
        *g = rng.gen_range(-1.0..1.0);
    }
    let cw = width as f64 / GRID as f64;
    let ch = height as f64 / GRID as f64;
    for i in 0..height {
        let gy = i as f64 / ch;
        let i0 = gy.floor() as usize % GRID;
        let i1 = (i0 + 1) % GRID;
        let fy = gy - gy.floor();
        let out = &mut frame[i * width..(i + 1) * width];
        for (j, o) in out.iter_mut().enumerate() {
            let gx = j as f64 / cw;
            let j0 = gx.floor() as usize % GRID;
            let j1 = (j0 + 1) % GRID;
            let fx = gx - gx.floor();
            let top = grid[i0 * GRID + j0] * (1.0 - fx) + grid[i0 * GRID + j1] * fx;
            let bot = grid[i1 * GRID + j0] * (1.0 - fx) + grid[i1 * GRID + j1] * fx;
            *o += scale * (top * (1.0 - fy) + bot * fy);
        }
    }
}

/// Generate the clip for `spec`: deterministic, every intensity in [0, 1].
pub fn generate_video(spec: &SceneSpec, dims: VideoDims) -> Result<BlockVideo> {
    spec.validate()?;
    dims.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let width = dims.width;
    let height = dims.height;
    let frame_len = dims.frame_len();
    let total_frames = dims.total_frames();

    let main = Texture::build(&mut rng, spec, width, height);
    // Spatial modulation field and temporal phase for the periodic component.
    let modulation = match spec.kind {
        SceneKind::Periodic => Some(Texture::build(&mut rng, spec, width, height)),
        _ => None,
    };
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let detail_wave = Wave {
        fx: f64::from(rng.gen_range((height as u32 / 4).max(2)..=(height as u32 / 2).max(3))),
        fy: f64::from(rng.gen_range((height as u32 / 4).max(2)..=(height as u32 / 2).max(3))),
        phase: rng.gen_range(0.0..std::f64::consts::TAU),
        weight: 1.0,
    };
    // Static and periodic clips carry a fixed grain pattern so their
    // repetition structure stays exact; moving kinds get fresh sensor
    // grain every frame (sampled inside the frame loop).
    let grain: Vec<f64> = (0..frame_len)
        .map(|_| rng.gen_range(-1.0..1.0) * spec.grain)
        .collect();
    // Per-block activity multipliers, normalized to mean 1 so the clip's
    // total activity is independent of how it is distributed over blocks.
    // Pure periodic and static clips ignore them so their repetition
    // structure stays exact.
    let envelope: Vec<f64> = {
        let raw: Vec<f64> = (0..dims.blocks)
            .map(|_| 1.0 + spec.block_variation * rng.gen_range(-1.0..1.0))
            .collect();
        let mean = (raw.iter().sum::<f64>() / dims.blocks as f64).max(0.2);
        raw.iter().map(|u| u / mean).collect()
    };
    let enveloped = matches!(
        spec.kind,
        SceneKind::Drift | SceneKind::Turbulent | SceneKind::Composite
    );

    let (want_drift, want_noise, want_waves) = match spec.kind {
        SceneKind::Drift => (true, false, false),
        SceneKind::Turbulent => (false, true, false),
        SceneKind::Composite => (true, false, true),
        _ => (false, false, false),
    };
    let waves = if want_waves {
        build_wave_bank(&mut rng, spec, dims.blocks, &envelope)
    } else {
        Vec::new()
    };
    let (static_gain, periodic_gain) = match spec.kind {
        SceneKind::Periodic => (0.30, 0.25),
        SceneKind::Composite => (0.30, 0.0),
        _ => (0.5, 0.0),
    };

    // Piecewise drift: velocity scales with the block envelope, offsets
    // accumulate per frame so motion stays continuous across blocks.
    let mut offsets = Vec::with_capacity(total_frames);
    let mut off = (0.0f64, 0.0f64);
    for frame_idx in 0..total_frames {
        offsets.push(off);
        if want_drift {
            let e = if enveloped {
                envelope[frame_idx / dims.frames_per_block]
            } else {
                1.0
            };
            off.0 += spec.velocity.0 * e;
            off.1 += spec.velocity.1 * e;
        }
    }

    let mut row_buf = vec![0.0f64; height];
    let mut col_buf = vec![0.0f64; width];
    let mut field = vec![0.0f64; frame_len];
    let mut pixels = vec![0.0f32; dims.total_len()];

    let frames_to_render = if spec.kind == SceneKind::Static {
        1
    } else {
        total_frames
    };
    for frame_idx in 0..frames_to_render {
        let block = frame_idx / dims.frames_per_block;
        let (ox, oy) = offsets[frame_idx];
        field.fill(0.0);
        main.render(
            ox,
            oy,
            static_gain * spec.amplitude,
            width,
            height,
            &mut field,
            &mut row_buf,
            &mut col_buf,
        );
        if let Some(modulation) = &modulation {
            // The phase argument stays a pure function of frame_idx mod
            // period, so clips repeat bit-exactly with the declared period.
            let cycle = (frame_idx as u64 % u64::from(spec.period)) as f64;
            let osc = (std::f64::consts::TAU * cycle / f64::from(spec.period) + phase).sin();
            modulation.render(
                0.0,
                0.0,
                periodic_gain * spec.amplitude * osc,
                width,
                height,
                &mut field,
                &mut row_buf,
                &mut col_buf,
            );
        }
        if want_noise {
            let e = if enveloped { envelope[block] } else { 1.0 };
            render_noise_grid(&mut rng, spec.noise * e, width, height, &mut field);
        }
        for wave in &waves {
            render_wave(
                wave,
                0.28 * spec.amplitude * wave.block_gain[block],
                frame_idx as f64,
                width,
                height,
                &mut field,
                &mut col_buf,
            );
        }
        if enveloped {
            for o in field.iter_mut() {
                *o += rng.gen_range(-1.0..1.0) * spec.grain;
            }
        }
        // Fine detail rides along with the scene motion.
        let tauc = std::f64::consts::TAU;
        for i in 0..height {
            let by = tauc * detail_wave.fy * (i as f64 - oy) / height as f64 + detail_wave.phase;
            let (sin_b, cos_b) = by.sin_cos();
            let row = &mut field[i * width..(i + 1) * width];
            let grain_row = &grain[i * width..(i + 1) * width];
            for (j, (o, &g)) in row.iter_mut().zip(grain_row).enumerate() {
                let ax = tauc * detail_wave.fx * (j as f64 - ox) / width as f64;
                let (sin_a, cos_a) = ax.sin_cos();
                *o += 0.5 * spec.detail * (sin_a * cos_b + cos_a * sin_b)
                    + if enveloped { 0.0 } else { g };
            }
        }
        let out = &mut pixels[frame_idx * frame_len..(frame_idx + 1) * frame_len];
        for (p, &v) in out.iter_mut().zip(field.iter()) {
            *p = (0.5 + v).clamp(0.0, 1.0) as f32;
        }
    }
    if spec.kind == SceneKind::Static {
        let first = pixels[..frame_len].to_vec();
        for frame_idx in 1..total_frames {
            pixels[frame_idx * frame_len..(frame_idx + 1) * frame_len].copy_from_slice(&first);
        }
    }

    BlockVideo::new(dims, pixels, spec.seed, Some(spec.clone()))
}

/// Sampling distribution over scene specs: kind weights plus uniform ranges
/// for every parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDistribution {
    /// Weights for (static, periodic, drift, turbulent, composite).
    pub kind_weights: [f64; 5],
    pub amplitude: (f64, f64),
    pub periods: Vec<u32>,
    /// Drift speed magnitude range in pixels per frame.
    pub speed: (f64, f64),
    pub texture_scale: (f64, f64),
    pub detail: (f64, f64),
    pub complexity: (u32, u32),
    pub noise: (f64, f64),
    pub block_variation: (f64, f64),
    pub grain: (f64, f64),
}

impl Default for SceneDistribution {
    fn default() -> Self {
        Self {
            kind_weights: [0.0, 0.0, 0.30, 0.05, 0.65],
            amplitude: (0.82, 0.95),
            periods: vec![2, 4, 8],
            speed: (1.4, 2.2),
            texture_scale: (2.2, 3.8),
            detail: (0.09, 0.14),
            complexity: (11, 15),
            noise: (0.02, 0.06),
            block_variation: (0.7, 1.0),
            grain: (0.047, 0.053),
        }
    }
}

impl SceneDistribution {
    /// Sample the `index`-th spec of the stream identified by `master`.
    pub fn sample(&self, master: u64, index: u64) -> SceneSpec {
        let mut rng = crate::rng::rng_for(master, "scene-spec", index);
        let total: f64 = self.kind_weights.iter().sum();
        let mut pick = rng.gen_range(0.0..total.max(f64::MIN_POSITIVE));
        let mut kind = SceneKind::Composite;
        for (i, &w) in self.kind_weights.iter().enumerate() {
            if pick < w {
                kind = [
                    SceneKind::Static,
                    SceneKind::Periodic,
                    SceneKind::Drift,
                    SceneKind::Turbulent,
                    SceneKind::Composite,
                ][i];
                break;
            }
            pick -= w;
        }
        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
        let speed = sample_range(&mut rng, self.speed);
        SceneSpec {
            kind,
            amplitude: sample_range(&mut rng, self.amplitude),
            period: self.periods[rng.gen_range(0..self.periods.len())],
            velocity: (speed * angle.cos(), speed * angle.sin()),
            texture_scale: sample_range(&mut rng, self.texture_scale),
            detail: sample_range(&mut rng, self.detail),
            complexity: rng.gen_range(self.complexity.0..=self.complexity.1),
            noise: sample_range(&mut rng, self.noise),
            block_variation: sample_range(&mut rng, self.block_variation),
            grain: sample_range(&mut rng, self.grain),
            seed: derive_seed(master, "scene-seed", index) ^ rng.gen::<u64>(),
        }
    }
}

fn sample_range(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}
