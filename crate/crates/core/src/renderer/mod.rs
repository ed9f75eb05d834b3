//! Ray marching with transmittance accumulation.
//!
//! Samples lie on the lattice `t_i = t_min + i·δ` of each ray, so skipping
//! empty space (by box clipping or by the collision mesh) never moves the
//! samples that remain. Integration follows
//! `ĉ = Σ T_i (1 − exp(−σ_i δ)) c_i` with `T_{i+1} = T_i exp(−σ_i δ)`, and
//! stops once `T` drops below the termination threshold.

mod bench;
mod camera;
mod framebuffer;
mod source;

pub use bench::{bench, BenchEntry, BenchReport};
pub use camera::{
    look_at_matrix, matrix_from_row_major, matrix_to_row_major, orbit_to_matrix, orthonormality_error, Camera,
    OrbitState, ORTHONORMAL_TOLERANCE,
};
pub use framebuffer::{psnr, FrameBuffer};
pub use source::{CachedSource, Clip, FieldSource, RadianceSource, Shaded};

use glam::DVec3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Ray;
use crate::mesher::Bvh;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    /// Step length `δ`; `None` uses the source's natural step.
    pub step: Option<f64>,
    /// Stop once transmittance falls below this value.
    pub termination: f64,
    pub background: [f64; 3],
    pub max_samples: usize,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            step: None,
            termination: 1e-3,
            background: [1.0; 3],
            max_samples: 1 << 16,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.step {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidConfig(format!("step must be positive, got {s}")));
            }
        }
        if !(0.0..1.0).contains(&self.termination) {
            return Err(Error::InvalidConfig(format!(
                "termination must lie in [0, 1), got {}",
                self.termination
            )));
        }
        if self.max_samples == 0 {
            return Err(Error::InvalidConfig("max_samples must be positive".into()));
        }
        Ok(())
    }

    fn step_for<S: RadianceSource + ?Sized>(&self, source: &S) -> Result<f64> {
        self.validate()?;
        self.step
            .or_else(|| source.default_step())
            .ok_or_else(|| Error::InvalidConfig("no step length configured and the source has none".into()))
    }
}

/// Result of integrating one ray.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayOutput {
    /// Accumulated emission, before compositing over the background.
    pub color: [f64; 3],
    pub transmittance: f64,
    pub samples: usize,
}

impl RayOutput {
    pub fn alpha(&self) -> f64 {
        1.0 - self.transmittance
    }

    /// `color + T · background`.
    pub fn composite(&self, background: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|c| self.color[c] + self.transmittance * background[c])
    }
}

/// One marched sample, recorded by [`integrate_ray_traced`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub sigma: f64,
    /// Transmittance after this sample.
    pub transmittance: f64,
}

#[derive(Default)]
struct Scratch {
    beta: Vec<f64>,
    points: Vec<DVec3>,
    shaded: Vec<Shaded>,
    rows: Vec<f64>,
}

pub fn integrate_ray<S: RadianceSource + ?Sized>(
    ray: &Ray,
    source: &S,
    bvh: Option<&Bvh>,
    cfg: &RenderConfig,
) -> Result<RayOutput> {
    let step = cfg.step_for(source)?;
    Ok(march(ray, source, bvh, cfg, step, &mut Scratch::default(), None))
}

pub fn integrate_ray_traced<S: RadianceSource + ?Sized>(
    ray: &Ray,
    source: &S,
    bvh: Option<&Bvh>,
    cfg: &RenderConfig,
) -> Result<(RayOutput, Vec<TraceSample>)> {
    let step = cfg.step_for(source)?;
    let mut trace = Vec::new();
    let out = march(ray, source, bvh, cfg, step, &mut Scratch::default(), Some(&mut trace));
    Ok((out, trace))
}

fn march<S: RadianceSource + ?Sized>(
    ray: &Ray,
    source: &S,
    bvh: Option<&Bvh>,
    cfg: &RenderConfig,
    step: f64,
    scratch: &mut Scratch,
    mut trace: Option<&mut Vec<TraceSample>>,
) -> RayOutput {
    let mut out = RayOutput {
        color: [0.0; 3],
        transmittance: 1.0,
        samples: 0,
    };
    let origin = ray.origin;
    let dir = ray.dir.vec();
    let (mut lo, hi) = match source.clip() {
        Clip::Empty => return out,
        Clip::Unbounded => (ray.t_min, ray.t_max),
        Clip::Box(b) => match b.intersect_ray(origin, dir, ray.t_min, ray.t_max) {
            Some(range) => range,
            None => return out,
        },
    };
    if let Some(bvh) = bvh {
        match bvh.first_hit_raw(origin, dir, ray.t_min, ray.t_max) {
            None => return out,
            Some(hit) if hit.front_facing => lo = lo.max(hit.t),
            Some(_) => {}
        }
    }
    if lo > hi {
        return out;
    }
    let first = ((lo - ray.t_min) / step).floor() as u64;
    let last = ((hi - ray.t_min) / step).floor() as u64;
    let last = last.min(first + cfg.max_samples as u64 - 1);

    scratch.beta.resize(source.components(), 0.0);
    source.direction_weights(ray.dir, &mut scratch.beta);
    let batch = source.batch().max(1) as u64;
    let mut i = first;
    while i <= last {
        let n = batch.min(last - i + 1);
        scratch.points.clear();
        scratch
            .points
            .extend((i..i + n).map(|j| ray.at(ray.t_min + j as f64 * step)));
        source.shade(&scratch.points, &scratch.beta, &mut scratch.shaded, &mut scratch.rows);
        for (j, s) in scratch.shaded.iter().enumerate() {
            let sigma = s.sigma.max(0.0);
            let e = (-sigma * step).exp();
            let w = out.transmittance * (1.0 - e);
            for c in 0..3 {
                out.color[c] += w * s.color[c];
            }
            out.transmittance *= e;
            out.samples += 1;
            if let Some(trace) = trace.as_deref_mut() {
                trace.push(TraceSample {
                    t: ray.t_min + (i + j as u64) as f64 * step,
                    sigma,
                    transmittance: out.transmittance,
                });
            }
            if out.transmittance < cfg.termination {
                return out;
            }
        }
        i += n;
    }
    out
}

/// Renders every pixel on the current rayon pool. Output does not depend on
/// the pool size.
pub fn render<S: RadianceSource + ?Sized>(
    camera: &Camera,
    source: &S,
    bvh: Option<&Bvh>,
    cfg: &RenderConfig,
) -> Result<FrameBuffer> {
    let step = cfg.step_for(source)?;
    let (w, h) = (camera.width(), camera.height());
    let bg = cfg.background;
    let mut pixels = vec![[0.0f32; 4]; w as usize * h as usize];
    pixels
        .par_chunks_mut(w as usize)
        .enumerate()
        .for_each_init(Scratch::default, |scratch, (y, row)| {
            for (x, px) in row.iter_mut().enumerate() {
                let ray = camera
                    .generate_ray(x as u32, y as u32, None)
                    .expect("pixel inside image");
                let out = march(&ray, source, bvh, cfg, step, scratch, None);
                let rgb = out.composite(bg);
                *px = [rgb[0] as f32, rgb[1] as f32, rgb[2] as f32, out.alpha() as f32];
            }
        });
    FrameBuffer::from_pixels(w, h, pixels)
}

/// [`render`] on a dedicated pool of `workers` threads.
pub fn render_with_workers<S: RadianceSource + ?Sized>(
    camera: &Camera,
    source: &S,
    bvh: Option<&Bvh>,
    cfg: &RenderConfig,
    workers: usize,
) -> Result<FrameBuffer> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| render(camera, source, bvh, cfg))
}
