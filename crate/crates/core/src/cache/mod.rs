//! Sparse position cache, direction cache, their file format, and the memory
//! estimator.

mod direction;
mod estimate;
mod io;
mod position;

pub use direction::{DirMode, DirectionCache};
pub use estimate::{estimate_sizes, CacheSizeReport, SizeInputs};
pub use io::{load_cache, save_cache, CACHE_MAGIC, CACHE_VERSION};
pub use position::{PositionCache, BLOCK_EDGE, EMPTY_BLOCK};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::FactorizedField;
use crate::geometry::Aabb;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BakeConfig {
    /// Voxels along the longest AABB side.
    pub k: usize,
    pub dir_mode: DirMode,
    pub l: usize,
    /// A voxel is occupied iff `σ > density_threshold`.
    pub density_threshold: f64,
    /// Skip regions whose density upper bound is at or below the threshold.
    pub cull: bool,
}

impl Default for BakeConfig {
    fn default() -> Self {
        BakeConfig {
            k: 128,
            dir_mode: DirMode::Cube,
            l: 64,
            density_threshold: 0.0,
            cull: true,
        }
    }
}

/// Tabulates `field` into a position cache over `aabb` and a direction cache.
pub fn bake(field: &FactorizedField, aabb: &Aabb, cfg: &BakeConfig) -> Result<(PositionCache, DirectionCache)> {
    let pos = PositionCache::bake(field, aabb, cfg.k, cfg.density_threshold, cfg.cull)?;
    let dir = DirectionCache::bake(field, cfg.dir_mode, cfg.l)?;
    Ok((pos, dir))
}
