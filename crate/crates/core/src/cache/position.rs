use glam::DVec3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{DeepRadianceMap, FactorizedField, Position};
use crate::geometry::Aabb;

/// Voxels per block edge.
pub const BLOCK_EDGE: usize = 8;
const WORDS_PER_BLOCK: usize = BLOCK_EDGE * BLOCK_EDGE * BLOCK_EDGE / 64;
/// Block directory entry for a block with no occupied voxel.
pub const EMPTY_BLOCK: u32 = u32::MAX;

/// Sparse `k³` grid of `[σ, u₁, v₁, w₁, …]` rows.
///
/// Occupancy is one bit per voxel, stored block-major: block `b` owns words
/// `8b..8b+8`, voxel `(x, y, z)` inside it is bit `x + 8y + 64z`. The block
/// directory gives the payload row of each block's first occupied voxel;
/// the rank of a voxel inside its block is a popcount.
#[derive(Clone, Debug, PartialEq)]
pub struct PositionCache {
    pub(crate) aabb: Aabb,
    pub(crate) k: usize,
    pub(crate) dims: [usize; 3],
    pub(crate) voxel: f64,
    pub(crate) components: usize,
    pub(crate) threshold: f64,
    pub(crate) blocks: [usize; 3],
    pub(crate) occupancy: Vec<u64>,
    pub(crate) block_dir: Vec<u32>,
    pub(crate) payload: Vec<f32>,
    pub(crate) occupied: usize,
    pub(crate) occupied_bounds: Aabb,
}

struct BlockResult {
    words: [u64; WORDS_PER_BLOCK],
    rows: Vec<f32>,
    lo: [usize; 3],
    hi: [usize; 3],
}

#[derive(Clone, Copy)]
struct Region {
    lo: [usize; 3],
    size: usize,
}

impl PositionCache {
    /// Grid over `aabb` with `k` voxels along the longest side; the other
    /// axes get `⌈k · extent / longest⌉` voxels of the same edge length, so
    /// the grid box may extend past `aabb.max` by less than one voxel.
    pub(crate) fn layout(aabb: &Aabb, k: usize) -> Result<(Aabb, [usize; 3], f64)> {
        if !(0..3).all(|a| aabb.min[a] < aabb.max[a]) {
            return Err(Error::DegenerateAabb);
        }
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let ext = aabb.extent();
        let longest = ext.max_element();
        let voxel = longest / k as f64;
        let mut dims = [k; 3];
        let mut max = aabb.max;
        for a in 0..3 {
            if ext[a] < longest {
                dims[a] = ((k as f64 * ext[a] / longest - 1e-9).ceil() as usize).clamp(1, k);
                max[a] = (aabb.min[a] + dims[a] as f64 * voxel).max(aabb.max[a]);
            }
        }
        Ok((Aabb { min: aabb.min, max }, dims, voxel))
    }

    /// Evaluates `field` at voxel centers; voxels with `σ > threshold` are
    /// stored. With `cull`, regions whose density upper bound is at or below
    /// the threshold are skipped without evaluation.
    pub fn bake(field: &FactorizedField, aabb: &Aabb, k: usize, threshold: f64, cull: bool) -> Result<Self> {
        let (grid, dims, voxel) = Self::layout(aabb, k)?;
        if field.components() == 0 {
            return Err(Error::UninitializedField);
        }
        let components = field.components();
        let blocks = [0, 1, 2].map(|a| dims[a].div_ceil(BLOCK_EDGE));
        let mut cache = PositionCache {
            aabb: grid,
            k,
            dims,
            voxel,
            components,
            threshold,
            blocks,
            occupancy: vec![0; blocks.iter().product::<usize>() * WORDS_PER_BLOCK],
            block_dir: vec![EMPTY_BLOCK; blocks.iter().product()],
            payload: Vec::new(),
            occupied: 0,
            occupied_bounds: Aabb::empty(),
        };

        // Coarse-to-fine culling down to whole blocks.
        let mut candidates: Vec<Region> = Vec::new();
        let top = 4 * BLOCK_EDGE;
        for z in (0..dims[2]).step_by(top) {
            for y in (0..dims[1]).step_by(top) {
                for x in (0..dims[0]).step_by(top) {
                    candidates.push(Region {
                        lo: [x, y, z],
                        size: top,
                    });
                }
            }
        }
        let mut size = top;
        loop {
            if cull {
                candidates = cache.survivors(field, candidates);
            }
            if size == BLOCK_EDGE {
                break;
            }
            size /= 2;
            candidates = candidates.iter().flat_map(|r| cache.split(r)).collect();
        }

        let results: Vec<(usize, BlockResult)> = candidates
            .par_iter()
            .map(|r| {
                let b = cache.block_index([r.lo[0] / BLOCK_EDGE, r.lo[1] / BLOCK_EDGE, r.lo[2] / BLOCK_EDGE]);
                cache.bake_block(field, *r, cull).map(|res| (b, res))
            })
            .collect::<Result<_>>()?;
        let mut results = results;
        results.sort_by_key(|(b, _)| *b);

        let row_width = 1 + 3 * components;
        let mut bounds = Aabb::empty();
        for (b, res) in results {
            let count: u32 = res.words.iter().map(|w| w.count_ones()).sum();
            if count == 0 {
                continue;
            }
            let rows = cache.payload.len() / row_width;
            if rows + count as usize >= EMPTY_BLOCK as usize {
                return Err(Error::InvalidArgument(
                    "too many occupied voxels for a 32-bit directory".into(),
                ));
            }
            cache.block_dir[b] = rows as u32;
            cache.occupancy[b * WORDS_PER_BLOCK..(b + 1) * WORDS_PER_BLOCK].copy_from_slice(&res.words);
            cache.payload.extend_from_slice(&res.rows);
            cache.occupied += count as usize;
            bounds.grow(cache.cell_min(res.lo));
            bounds.grow(cache.cell_min(res.hi.map(|v| v + 1)));
        }
        cache.occupied_bounds = bounds;
        Ok(cache)
    }

    fn split(&self, r: &Region) -> Vec<Region> {
        let h = r.size / 2;
        let mut out = Vec::with_capacity(8);
        for dz in 0..2 {
            for dy in 0..2 {
                for dx in 0..2 {
                    let lo = [r.lo[0] + dx * h, r.lo[1] + dy * h, r.lo[2] + dz * h];
                    if (0..3).all(|a| lo[a] < self.dims[a]) {
                        out.push(Region { lo, size: h });
                    }
                }
            }
        }
        out
    }

    /// Hull of the voxel centers covered by `r`.
    fn region_box(&self, r: &Region) -> Aabb {
        let hi = [0, 1, 2].map(|a| (r.lo[a] + r.size).min(self.dims[a]) - 1);
        Aabb {
            min: self.voxel_center(r.lo),
            max: self.voxel_center(hi),
        }
    }

    fn survivors(&self, field: &FactorizedField, regions: Vec<Region>) -> Vec<Region> {
        let boxes: Vec<Aabb> = regions.iter().map(|r| self.region_box(r)).collect();
        let bounds: Vec<Option<f64>> = boxes
            .par_chunks(64)
            .flat_map_iter(|c| field.density_upper_bounds(c))
            .collect();
        regions
            .into_iter()
            .zip(bounds)
            .filter(|(_, b)| b.is_none_or(|b| b > self.threshold))
            .map(|(r, _)| r)
            .collect()
    }

    fn bake_block(&self, field: &FactorizedField, block: Region, cull: bool) -> Result<BlockResult> {
        let mut leaves = vec![block];
        if cull {
            for _ in 0..2 {
                leaves = leaves.iter().flat_map(|r| self.split(r)).collect();
                leaves = self.survivors(field, leaves);
            }
        }
        let mut cells = Vec::new();
        for r in &leaves {
            for z in r.lo[2]..(r.lo[2] + r.size).min(self.dims[2]) {
                for y in r.lo[1]..(r.lo[1] + r.size).min(self.dims[1]) {
                    for x in r.lo[0]..(r.lo[0] + r.size).min(self.dims[0]) {
                        cells.push([x, y, z]);
                    }
                }
            }
        }
        cells.sort_by_key(|c| Self::local_bit(*c));
        let points: Vec<DVec3> = cells.iter().map(|c| self.voxel_center(*c)).collect();
        let mut values = Vec::new();
        field.eval_pos_batch(&points, &mut values)?;
        let width = 1 + 3 * self.components;
        let mut res = BlockResult {
            words: [0; WORDS_PER_BLOCK],
            rows: Vec::new(),
            lo: [usize::MAX; 3],
            hi: [0; 3],
        };
        for (cell, row) in cells.iter().zip(values.chunks_exact(width)) {
            if row[0] > self.threshold {
                let bit = Self::local_bit(*cell);
                res.words[bit / 64] |= 1 << (bit % 64);
                res.rows.extend(row.iter().map(|v| *v as f32));
                for a in 0..3 {
                    res.lo[a] = res.lo[a].min(cell[a]);
                    res.hi[a] = res.hi[a].max(cell[a]);
                }
            }
        }
        Ok(res)
    }

    fn local_bit(cell: [usize; 3]) -> usize {
        (cell[0] % BLOCK_EDGE) + BLOCK_EDGE * ((cell[1] % BLOCK_EDGE) + BLOCK_EDGE * (cell[2] % BLOCK_EDGE))
    }

    fn block_index(&self, b: [usize; 3]) -> usize {
        b[0] + self.blocks[0] * (b[1] + self.blocks[1] * b[2])
    }

    fn cell_min(&self, cell: [usize; 3]) -> DVec3 {
        self.aabb.min + DVec3::new(cell[0] as f64, cell[1] as f64, cell[2] as f64) * self.voxel
    }

    /// Grid box: the AABB extended to whole voxels.
    pub fn aabb(&self) -> &Aabb {
        &self.aabb
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    /// Voxel edge length.
    pub fn voxel_size(&self) -> f64 {
        self.voxel
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn density_threshold(&self) -> f64 {
        self.threshold
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied
    }

    pub fn total_voxels(&self) -> usize {
        self.dims.iter().product()
    }

    /// Occupied fraction α.
    pub fn sparsity(&self) -> f64 {
        self.occupied as f64 / self.total_voxels() as f64
    }

    /// Union of occupied voxel boxes (empty box when nothing is occupied).
    pub fn occupied_bounds(&self) -> &Aabb {
        &self.occupied_bounds
    }

    pub fn payload(&self) -> &[f32] {
        &self.payload
    }

    pub fn voxel_center(&self, cell: [usize; 3]) -> DVec3 {
        self.aabb.min + (DVec3::new(cell[0] as f64, cell[1] as f64, cell[2] as f64) + 0.5) * self.voxel
    }

    /// Voxel whose center is nearest to `p`, or `None` outside the grid box.
    #[inline]
    pub fn cell_of(&self, p: DVec3) -> Option<[usize; 3]> {
        if !self.aabb.contains(p) {
            return None;
        }
        let mut cell = [0; 3];
        for a in 0..3 {
            let f = ((p[a] - self.aabb.min[a]) / self.voxel).floor();
            cell[a] = (f.max(0.0) as usize).min(self.dims[a] - 1);
        }
        Some(cell)
    }

    #[inline]
    pub fn is_occupied(&self, cell: [usize; 3]) -> bool {
        let b = self.block_index(cell.map(|v| v / BLOCK_EDGE));
        let bit = Self::local_bit(cell);
        self.occupancy[b * WORDS_PER_BLOCK + bit / 64] >> (bit % 64) & 1 == 1
    }

    /// Payload row of an occupied voxel.
    #[inline]
    pub fn row_at(&self, cell: [usize; 3]) -> Option<&[f32]> {
        let b = self.block_index(cell.map(|v| v / BLOCK_EDGE));
        let bit = Self::local_bit(cell);
        let words = &self.occupancy[b * WORDS_PER_BLOCK..(b + 1) * WORDS_PER_BLOCK];
        let (w, shift) = (bit / 64, bit % 64);
        if words[w] >> shift & 1 == 0 {
            return None;
        }
        let below: u32 =
            words[..w].iter().map(|x| x.count_ones()).sum::<u32>() + (words[w] & ((1u64 << shift) - 1)).count_ones();
        let row = self.block_dir[b] as usize + below as usize;
        let width = 1 + 3 * self.components;
        Some(&self.payload[row * width..(row + 1) * width])
    }

    /// Payload row of the voxel nearest `p`, if occupied.
    #[inline]
    pub fn lookup_row(&self, p: DVec3) -> Option<&[f32]> {
        self.row_at(self.cell_of(p)?)
    }

    /// Nearest-voxel lookup; empty map outside the grid or in empty voxels.
    pub fn lookup_pos(&self, p: Position) -> DeepRadianceMap {
        match self.lookup_row(p.0) {
            Some(row) => DeepRadianceMap::from_row(&row.iter().map(|v| *v as f64).collect::<Vec<_>>()),
            None => DeepRadianceMap::empty(self.components),
        }
    }

    /// Stored σ at `cell` (zero when unoccupied).
    pub fn sigma_at(&self, cell: [usize; 3]) -> f32 {
        self.row_at(cell).map_or(0.0, |r| r[0])
    }
}
