use rayon::prelude::*;

use super::table::{case_table, EDGES};
use super::{CollisionMesh, DensityVolume};

/// Triangles with smaller area are dropped.
const MIN_AREA: f64 = 1e-12;

/// Extracts the `iso` level set. Samples with value `> iso` are inside;
/// triangles are wound with normals pointing outward. Vertices are welded
/// per lattice edge and numbered in lattice-edge order, so the result does
/// not depend on how cells are scheduled.
pub fn marching_cubes(volume: &DensityVolume, iso: f64) -> CollisionMesh {
    let [nx, ny, nz] = volume.dims();
    if nx < 2 || ny < 2 || nz < 2 {
        return CollisionMesh::default();
    }
    let table = case_table();
    // Lattice edge key: linear index of the lower endpoint * 3 + axis.
    let edge_key = |x: usize, y: usize, z: usize, e: u8| -> u64 {
        let (a, b) = EDGES[e as usize];
        let off = |c: u8| ((c & 1) as usize, (c >> 1 & 1) as usize, (c >> 2 & 1) as usize);
        let (ax, ay, az) = off(a);
        let axis = (a ^ b).trailing_zeros() as u64;
        volume.index(x + ax, y + ay, z + az) as u64 * 3 + axis
    };

    let slabs: Vec<Vec<[u64; 3]>> = (0..nz - 1)
        .into_par_iter()
        .map(|z| {
            let mut tris = Vec::new();
            for y in 0..ny - 1 {
                for x in 0..nx - 1 {
                    let mut mask = 0u8;
                    for c in 0..8u8 {
                        let v = volume.get(
                            x + (c & 1) as usize,
                            y + (c >> 1 & 1) as usize,
                            z + (c >> 2 & 1) as usize,
                        );
                        if v > iso {
                            mask |= 1 << c;
                        }
                    }
                    for t in &table[mask as usize] {
                        tris.push(t.map(|e| edge_key(x, y, z, e)));
                    }
                }
            }
            tris
        })
        .collect();
    let tri_keys: Vec<[u64; 3]> = slabs.into_iter().flatten().collect();

    let mut keys: Vec<u64> = tri_keys.iter().flatten().copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let vertices = keys
        .iter()
        .map(|&key| {
            let (index, axis) = ((key / 3) as usize, (key % 3) as usize);
            let x = index % nx;
            let y = (index / nx) % ny;
            let z = index / (nx * ny);
            let mut hi = [x, y, z];
            hi[axis] += 1;
            let (f0, f1) = (volume.get(x, y, z), volume.get(hi[0], hi[1], hi[2]));
            let t = ((iso - f0) / (f1 - f0)).clamp(0.0, 1.0);
            let p0 = volume.position(x, y, z);
            let p1 = volume.position(hi[0], hi[1], hi[2]);
            p0 + t * (p1 - p0)
        })
        .collect::<Vec<_>>();
    let lookup = |k: u64| keys.binary_search(&k).expect("key present") as u32;
    let triangles = tri_keys
        .iter()
        .map(|t| t.map(lookup))
        .filter(|t| {
            let [a, b, c] = t.map(|i| vertices[i as usize]);
            0.5 * (b - a).cross(c - a).length() >= MIN_AREA
        })
        .collect();
    CollisionMesh {
        vertices,
        triangles,
        threshold: iso,
    }
}
