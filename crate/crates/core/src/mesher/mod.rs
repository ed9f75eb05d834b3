//! Density volume to collision mesh, and first-hit queries over it.

mod bvh;
mod export;
mod marching;
mod table;

pub use bvh::{Bvh, Hit, MAX_LEAF};
pub use export::{write_obj, write_stl};
pub use marching::marching_cubes;

use glam::DVec3;

use crate::cache::PositionCache;
use crate::error::{Error, Result};
use crate::geometry::Aabb;

/// Largest per-axis resolution meshed without downsampling.
pub const MAX_MESH_DIM: usize = 512;

/// Scalar samples on a regular lattice. Sample `(i, j, k)` sits at
/// `origin + (i, j, k) ⊙ spacing`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityVolume {
    dims: [usize; 3],
    origin: DVec3,
    spacing: DVec3,
    values: Vec<f64>,
}

impl DensityVolume {
    pub fn new(dims: [usize; 3], origin: DVec3, spacing: DVec3, values: Vec<f64>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if values.len() != n {
            return Err(Error::dims(n, values.len()));
        }
        if dims.contains(&0) || !(spacing.min_element() > 0.0) {
            return Err(Error::InvalidArgument("volume needs positive dims and spacing".into()));
        }
        Ok(DensityVolume {
            dims,
            origin,
            spacing,
            values,
        })
    }

    /// Samples `f` at the centers of a `dims` lattice of cells over `aabb`.
    pub fn from_fn(aabb: &Aabb, dims: [usize; 3], mut f: impl FnMut(DVec3) -> f64) -> Result<Self> {
        let spacing = aabb.extent() / DVec3::new(dims[0] as f64, dims[1] as f64, dims[2] as f64);
        let origin = aabb.min + 0.5 * spacing;
        let mut values = Vec::with_capacity(dims.iter().product());
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    values.push(f(origin + DVec3::new(x as f64, y as f64, z as f64) * spacing));
                }
            }
        }
        DensityVolume::new(dims, origin, spacing, values)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn origin(&self) -> DVec3 {
        self.origin
    }

    pub fn spacing(&self) -> DVec3 {
        self.spacing
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.values[self.index(x, y, z)]
    }

    pub fn position(&self, x: usize, y: usize, z: usize) -> DVec3 {
        self.origin + DVec3::new(x as f64, y as f64, z as f64) * self.spacing
    }

    /// Count of samples with value `> 0`.
    pub fn positive_count(&self) -> usize {
        self.values.iter().filter(|v| **v > 0.0).count()
    }

    /// Samples mapped to `+1` where positive and `−1` elsewhere.
    pub fn indicator(&self) -> DensityVolume {
        DensityVolume {
            values: self.values.iter().map(|v| if *v > 0.0 { 1.0 } else { -1.0 }).collect(),
            ..self.clone()
        }
    }

    /// `3³` max filter (samples outside the lattice are ignored).
    pub fn dilate(&self) -> DensityVolume {
        let [nx, ny, _] = self.dims;
        let pass = |src: &[f64], axis: usize| -> Vec<f64> {
            let mut out = src.to_vec();
            let stride = [1, nx, nx * ny][axis];
            let len = self.dims[axis];
            for (i, o) in out.iter_mut().enumerate() {
                let c = (i / stride) % len;
                if c > 0 {
                    *o = o.max(src[i - stride]);
                }
                if c + 1 < len {
                    *o = o.max(src[i + stride]);
                }
            }
            out
        };
        let v = pass(&pass(&pass(&self.values, 0), 1), 2);
        DensityVolume {
            values: v,
            ..self.clone()
        }
    }

    /// Adds one layer of `fill` samples on every side.
    pub fn pad(&self, fill: f64) -> DensityVolume {
        let [nx, ny, nz] = self.dims;
        let dims = [nx + 2, ny + 2, nz + 2];
        let mut values = vec![fill; dims.iter().product()];
        for z in 0..nz {
            for y in 0..ny {
                let src = self.index(0, y, z);
                let dst = 1 + dims[0] * ((y + 1) + dims[1] * (z + 1));
                values[dst..dst + nx].copy_from_slice(&self.values[src..src + nx]);
            }
        }
        DensityVolume {
            dims,
            origin: self.origin - self.spacing,
            spacing: self.spacing,
            values,
        }
    }
}

/// Level-set field `σ − threshold` sampled at the cache's voxel centers.
pub fn to_occupancy(cache: &PositionCache, threshold: f64) -> DensityVolume {
    let dims = cache.dims();
    let mut values = Vec::with_capacity(dims.iter().product());
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                values.push(cache.sigma_at([x, y, z]) as f64 - threshold);
            }
        }
    }
    let spacing = DVec3::splat(cache.voxel_size());
    DensityVolume {
        dims,
        origin: cache.aabb().min + 0.5 * spacing,
        spacing,
        values,
    }
}

/// Halves the resolution; each output sample is the max of its `2³` children.
pub fn downsample(volume: &DensityVolume) -> Result<DensityVolume> {
    if volume.dims.iter().any(|d| *d < 4) {
        return Err(Error::TooSmall(volume.dims));
    }
    let dims = volume.dims.map(|d| d.div_ceil(2));
    let mut values = vec![f64::NEG_INFINITY; dims.iter().product()];
    for z in 0..volume.dims[2] {
        for y in 0..volume.dims[1] {
            for x in 0..volume.dims[0] {
                let o = (x / 2) + dims[0] * ((y / 2) + dims[1] * (z / 2));
                values[o] = values[o].max(volume.get(x, y, z));
            }
        }
    }
    Ok(DensityVolume {
        dims,
        origin: volume.origin + 0.5 * volume.spacing,
        spacing: 2.0 * volume.spacing,
        values,
    })
}

/// Triangle mesh with outward winding (normals point out of the positive
/// region).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CollisionMesh {
    pub vertices: Vec<DVec3>,
    pub triangles: Vec<[u32; 3]>,
    pub threshold: f64,
}

impl CollisionMesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle(&self, i: usize) -> [DVec3; 3] {
        self.triangles[i].map(|v| self.vertices[v as usize])
    }

    /// Signed enclosed volume; positive for a closed, outward-wound mesh.
    pub fn signed_volume(&self) -> f64 {
        (0..self.triangles.len())
            .map(|i| {
                let [a, b, c] = self.triangle(i);
                a.dot(b.cross(c)) / 6.0
            })
            .sum()
    }

    pub fn bounds(&self) -> Aabb {
        let mut b = Aabb::empty();
        for v in &self.vertices {
            b.grow(*v);
        }
        b
    }
}

/// Mesh used to skip empty space while rendering.
///
/// The occupancy volume is reduced to a `±1` indicator, downsampled while
/// any axis exceeds [`MAX_MESH_DIM`], dilated by one sample and padded with
/// one empty layer before meshing at iso `0`. Every occupied voxel box then
/// lies strictly inside the closed mesh, so starting a ray at its first hit
/// never skips a sample that lookups would find occupied.
pub fn collision_mesh(cache: &PositionCache, threshold: f64) -> Result<CollisionMesh> {
    let mut volume = to_occupancy(cache, threshold).indicator();
    while volume.dims.iter().any(|d| *d > MAX_MESH_DIM) {
        volume = downsample(&volume)?;
    }
    let volume = volume.dilate().pad(-1.0);
    let mut mesh = marching_cubes(&volume, 0.0);
    mesh.threshold = threshold;
    Ok(mesh)
}
