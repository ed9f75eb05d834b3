use std::time::Instant;

use serde::Serialize;

use super::{render, CachedSource, Camera, FieldSource, RenderConfig};
use crate::error::{Error, Result};
use crate::mesher::Bvh;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchEntry {
    pub resolution: u32,
    pub cached_ms: Vec<f64>,
    pub cached_median_ms: f64,
    pub direct_ms: Vec<f64>,
    pub direct_median_ms: Option<f64>,
    /// `direct / cached` median ratio.
    pub speedup: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub repetitions: usize,
    pub entries: Vec<BenchEntry>,
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn time_ms(f: impl FnOnce() -> Result<()>) -> Result<f64> {
    let start = Instant::now();
    f()?;
    Ok(start.elapsed().as_secs_f64() * 1e3)
}

/// Times square renders of `camera` at each resolution. Both renders march
/// with the cache's voxel step and share the collision mesh, so they differ
/// only in how samples are shaded.
pub fn bench(
    camera: &Camera,
    cached: &CachedSource<'_>,
    direct: Option<&FieldSource<'_>>,
    bvh: Option<&Bvh>,
    cfg: &RenderConfig,
    resolutions: &[u32],
    repetitions: usize,
) -> Result<BenchReport> {
    if repetitions == 0 {
        return Err(Error::InvalidArgument("repetitions must be positive".into()));
    }
    let cfg = RenderConfig {
        step: Some(cfg.step.unwrap_or(cached.position_cache().voxel_size())),
        ..cfg.clone()
    };
    let mut entries = Vec::with_capacity(resolutions.len());
    for &res in resolutions {
        let cam = camera.with_size(res, res);
        let cached_ms = (0..repetitions)
            .map(|_| time_ms(|| render(&cam, cached, bvh, &cfg).map(drop)))
            .collect::<Result<Vec<_>>>()?;
        let direct_ms = match direct {
            Some(src) => (0..repetitions)
                .map(|_| time_ms(|| render(&cam, src, bvh, &cfg).map(drop)))
                .collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };
        let cached_median_ms = median(&cached_ms);
        let direct_median_ms = (!direct_ms.is_empty()).then(|| median(&direct_ms));
        log::info!("bench {res}²: cached {cached_median_ms:.2} ms, direct {direct_median_ms:?} ms");
        entries.push(BenchEntry {
            resolution: res,
            speedup: direct_median_ms.map(|d| d / cached_median_ms),
            cached_ms,
            cached_median_ms,
            direct_ms,
            direct_median_ms,
        });
    }
    Ok(BenchReport { repetitions, entries })
}
