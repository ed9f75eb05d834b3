//! Cache file layout, all integers little-endian:
//!
//! ```text
//! magic "RCCACHE\0" | version u32 | header length u32 | JSON header
//! occupancy word count u64 | occupancy words u64…
//! block count u64          | block directory u32…
//! payload length u64       | payload f32…
//! direction length u64     | direction values f32…
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::position::BLOCK_EDGE;
use super::{DirMode, DirectionCache, PositionCache, EMPTY_BLOCK};
use crate::container::Reader;
use crate::error::{Error, Result};
use crate::geometry::Aabb;

pub const CACHE_MAGIC: &[u8; 8] = b"RCCACHE\0";
pub const CACHE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    k: usize,
    dims: [usize; 3],
    voxel: f64,
    aabb: Aabb,
    components: usize,
    density_threshold: f64,
    occupied: usize,
    occupied_bounds: Option<Aabb>,
    dir_mode: DirMode,
    l: usize,
}

pub(crate) fn to_bytes(pos: &PositionCache, dir: &DirectionCache) -> Result<Vec<u8>> {
    if pos.components != dir.components {
        return Err(Error::dims(pos.components, dir.components));
    }
    let header = Header {
        k: pos.k,
        dims: pos.dims,
        voxel: pos.voxel,
        aabb: pos.aabb,
        components: pos.components,
        density_threshold: pos.threshold,
        occupied: pos.occupied,
        occupied_bounds: (!pos.occupied_bounds.is_empty()).then_some(pos.occupied_bounds),
        dir_mode: dir.mode,
        l: dir.l,
    };
    let header = serde_json::to_vec(&header).map_err(|e| Error::parse(e.to_string()))?;
    let mut out = Vec::with_capacity(
        64 + header.len()
            + pos.occupancy.len() * 8
            + pos.block_dir.len() * 4
            + (pos.payload.len() + dir.values.len()) * 4,
    );
    out.extend_from_slice(CACHE_MAGIC);
    out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&(pos.occupancy.len() as u64).to_le_bytes());
    pos.occupancy
        .iter()
        .for_each(|w| out.extend_from_slice(&w.to_le_bytes()));
    out.extend_from_slice(&(pos.block_dir.len() as u64).to_le_bytes());
    pos.block_dir
        .iter()
        .for_each(|w| out.extend_from_slice(&w.to_le_bytes()));
    out.extend_from_slice(&(pos.payload.len() as u64).to_le_bytes());
    pos.payload.iter().for_each(|w| out.extend_from_slice(&w.to_le_bytes()));
    out.extend_from_slice(&(dir.values.len() as u64).to_le_bytes());
    dir.values.iter().for_each(|w| out.extend_from_slice(&w.to_le_bytes()));
    Ok(out)
}

pub(crate) fn from_bytes(bytes: &[u8]) -> Result<(PositionCache, DirectionCache)> {
    let mut r = Reader::new(bytes);
    if r.take(8)? != CACHE_MAGIC {
        return Err(Error::parse("not a cache file (bad magic)"));
    }
    let version = r.u32()?;
    if version != CACHE_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: CACHE_VERSION,
        });
    }
    let len = r.u32()? as usize;
    let h: Header = serde_json::from_slice(r.take(len)?).map_err(|e| Error::parse(format!("malformed header: {e}")))?;
    if h.components == 0 || h.l == 0 || h.dims.contains(&0) {
        return Err(Error::parse("header has zero-sized dimensions"));
    }
    let blocks = h.dims.map(|d| d.div_ceil(BLOCK_EDGE));
    let nblocks: usize = blocks.iter().product();
    let words_per_block = BLOCK_EDGE * BLOCK_EDGE * BLOCK_EDGE / 64;

    let n = r.u64()? as usize;
    if n != nblocks * words_per_block {
        return Err(Error::parse(format!(
            "occupancy has {n} words, dims {:?} need {}",
            h.dims,
            nblocks * words_per_block
        )));
    }
    let occupancy = r.u64s(n)?;
    let n = r.u64()? as usize;
    if n != nblocks {
        return Err(Error::parse(format!(
            "block directory has {n} entries, expected {nblocks}"
        )));
    }
    let block_dir = r.u32s(n)?;
    let width = 1 + 3 * h.components;
    let n = r.u64()? as usize;
    if n != h.occupied * width {
        return Err(Error::parse(format!(
            "payload has {n} values, expected {}",
            h.occupied * width
        )));
    }
    let payload = r.f32s(n)?;
    let n = r.u64()? as usize;
    let expected = DirectionCache::bins(h.dir_mode, h.l) * h.components;
    if n != expected {
        return Err(Error::parse(format!(
            "direction table has {n} values, expected {expected}"
        )));
    }
    let values = r.f32s(n)?;
    if !r.is_at_end() {
        return Err(Error::parse("trailing bytes after cache sections"));
    }

    // Directory and bitmap must agree.
    let mut running = 0u64;
    for (b, entry) in block_dir.iter().enumerate() {
        let count: u64 = occupancy[b * words_per_block..(b + 1) * words_per_block]
            .iter()
            .map(|w| w.count_ones() as u64)
            .sum();
        let expected = if count == 0 { EMPTY_BLOCK as u64 } else { running };
        if *entry as u64 != expected {
            return Err(Error::parse(format!(
                "block {b} directory entry {entry} inconsistent with occupancy"
            )));
        }
        running += count;
    }
    if running != h.occupied as u64 {
        return Err(Error::parse("occupancy popcount does not match header"));
    }

    let pos = PositionCache {
        aabb: h.aabb,
        k: h.k,
        dims: h.dims,
        voxel: h.voxel,
        components: h.components,
        threshold: h.density_threshold,
        blocks,
        occupancy,
        block_dir,
        payload,
        occupied: h.occupied,
        occupied_bounds: h.occupied_bounds.unwrap_or_else(Aabb::empty),
    };
    let dir = DirectionCache {
        mode: h.dir_mode,
        l: h.l,
        components: h.components,
        values,
    };
    Ok((pos, dir))
}

pub fn save_cache(pos: &PositionCache, dir: &DirectionCache, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_bytes(pos, dir)?)?;
    Ok(())
}

pub fn load_cache(path: impl AsRef<Path>) -> Result<(PositionCache, DirectionCache)> {
    from_bytes(&std::fs::read(path)?)
}

impl PositionCache {
    /// Serialized size of this cache together with `dir`.
    pub fn file_bytes(&self, dir: &DirectionCache) -> Result<Vec<u8>> {
        to_bytes(self, dir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cache::{bake, estimate_sizes, BakeConfig, SizeInputs};
    use crate::field::{AnalyticScene, FactorizedField};

    fn fixture() -> (PositionCache, DirectionCache) {
        let field = FactorizedField::Analytic(AnalyticScene::SpecSphere {
            center: [0.0; 3],
            radius: 0.6,
            density: 20.0,
            albedo: [0.45, 0.35, 0.25],
            albedo_gradient: [0.15; 3],
            specular: [0.35; 3],
            lobe_axis: [0.0, 0.0, 1.0],
            exponent: 6.0,
        });
        let cfg = BakeConfig {
            k: 24,
            l: 6,
            ..BakeConfig::default()
        };
        bake(&field, &Aabb::cube(1.0), &cfg).unwrap()
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let (p, d) = fixture();
        let bytes = to_bytes(&p, &d).unwrap();
        let (p2, d2) = from_bytes(&bytes).unwrap();
        assert_eq!(p2, p);
        assert_eq!(d2, d);
        assert_eq!(to_bytes(&p2, &d2).unwrap(), bytes);
    }

    #[test]
    fn corrupted_occupancy_length_is_parse_error() {
        let (p, d) = fixture();
        let mut bytes = to_bytes(&p, &d).unwrap();
        let header_len = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let at = 16 + header_len;
        let n = u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
        bytes[at..at + 8].copy_from_slice(&(n - 1).to_le_bytes());
        assert!(matches!(from_bytes(&bytes), Err(Error::Parse(_))));
    }

    #[test]
    fn flipped_occupancy_bit_is_parse_error() {
        let (p, d) = fixture();
        let mut bytes = to_bytes(&p, &d).unwrap();
        let header_len = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        bytes[16 + header_len + 8] ^= 1;
        assert!(matches!(from_bytes(&bytes), Err(Error::Parse(_))));
    }

    #[test]
    fn version_and_truncation() {
        let (p, d) = fixture();
        let bytes = to_bytes(&p, &d).unwrap();
        let mut v2 = bytes.clone();
        v2[8] = 2;
        assert!(matches!(from_bytes(&v2), Err(Error::VersionMismatch { found: 2, .. })));
        assert!(matches!(from_bytes(&bytes[..bytes.len() - 3]), Err(Error::Parse(_))));
    }

    #[test]
    fn file_size_tracks_estimate() {
        let field = FactorizedField::Analytic(AnalyticScene::LambertSphere {
            center: [0.0; 3],
            radius: 0.6,
            density: 5.0,
            albedo: [0.5; 3],
            albedo_gradient: [0.0; 3],
        });
        let cfg = BakeConfig {
            k: 256,
            l: 64,
            dir_mode: DirMode::Equirect,
            ..BakeConfig::default()
        };
        let (p, d) = bake(&field, &Aabb::cube(1.0), &cfg).unwrap();
        let actual = to_bytes(&p, &d).unwrap().len() as f64;
        let est = estimate_sizes(&SizeInputs {
            k: 256,
            l: 64,
            d: 1,
            alpha: p.sparsity(),
            s_sigma: 32,
            s_rgb: 96,
            s_uvw: 96,
            s_beta: 32,
        })
        .unwrap();
        let predicted = est.m_fastnerf_bytes as f64;
        assert!((actual - predicted).abs() / predicted < 0.10, "{actual} vs {predicted}");
    }
}
