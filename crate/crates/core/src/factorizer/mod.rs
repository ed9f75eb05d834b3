//! Rank-`D` factorization of a sampled plenoptic function.
//!
//! A [`SampleGrid`] holds reference colors for `P` lattice positions and `Q`
//! directions, viewed as a `3P × Q` matrix with row `3p + channel`. Fitting
//! finds `U` (`3P × D`) and `B` (`Q × D`) with `M ≈ U Bᵀ`, so that row
//! `(p, channel)` of `U` holds the per-position components and row `q` of
//! `B` the per-direction weights.

mod als;
mod svd;
mod tables;

use glam::DVec3;

pub use als::fit_als;
pub use svd::{fit_svd_oracle, numerical_rank, singular_values, SVD_SIZE_LIMIT};
pub use tables::{tables_to_field, TableField};

use crate::error::{Error, Result};
use crate::field::{combine_slices, FactorizedField};
use crate::geometry::{Aabb, Direction};

/// Reference samples on a regular position lattice times a direction set.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleGrid {
    aabb: Aabb,
    dims: [usize; 3],
    directions: Vec<DVec3>,
    /// `radiance[p * Q + q]`.
    radiance: Vec<[f64; 3]>,
    density: Vec<f64>,
}

impl SampleGrid {
    pub fn new(
        aabb: Aabb,
        dims: [usize; 3],
        directions: Vec<DVec3>,
        radiance: Vec<[f64; 3]>,
        density: Vec<f64>,
    ) -> Result<Self> {
        check_aabb(&aabb)?;
        let p: usize = dims.iter().product();
        if p == 0 || directions.is_empty() {
            return Err(Error::InvalidArgument("sample grid needs P, Q >= 1".into()));
        }
        if density.len() != p {
            return Err(Error::dims(p, density.len()));
        }
        if radiance.len() != p * directions.len() {
            return Err(Error::dims(p * directions.len(), radiance.len()));
        }
        if radiance.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("radiance must be finite".into()));
        }
        if density.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::InvalidArgument("density must be non-negative".into()));
        }
        Ok(SampleGrid {
            aabb,
            dims,
            directions,
            radiance,
            density,
        })
    }

    /// Grid whose `3P × Q` matrix is `matrix` (row-major), with `P = rows / 3`
    /// positions laid along x of the unit cube, all directions `+z`-ish
    /// Fibonacci points and zero density.
    pub fn from_matrix(rows: usize, cols: usize, matrix: &[f64]) -> Result<Self> {
        if !rows.is_multiple_of(3) || rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(
                "matrix rows must be a positive multiple of 3".into(),
            ));
        }
        if matrix.len() != rows * cols {
            return Err(Error::dims(rows * cols, matrix.len()));
        }
        let p = rows / 3;
        let mut radiance = vec![[0.0; 3]; p * cols];
        for pi in 0..p {
            for q in 0..cols {
                for c in 0..3 {
                    radiance[pi * cols + q][c] = matrix[(3 * pi + c) * cols + q];
                }
            }
        }
        SampleGrid::new(
            Aabb::cube(0.5),
            [p, 1, 1],
            fibonacci_sphere(cols),
            radiance,
            vec![0.0; p],
        )
    }

    pub fn aabb(&self) -> &Aabb {
        &self.aabb
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn num_positions(&self) -> usize {
        self.density.len()
    }

    pub fn num_directions(&self) -> usize {
        self.directions.len()
    }

    pub fn directions(&self) -> &[DVec3] {
        &self.directions
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn radiance(&self, p: usize, q: usize) -> [f64; 3] {
        self.radiance[p * self.directions.len() + q]
    }

    /// Position of lattice entry `index` (x fastest).
    pub fn position(&self, index: usize) -> DVec3 {
        let [nx, ny, _] = self.dims;
        let cell = [index % nx, (index / nx) % ny, index / (nx * ny)];
        lattice_center(&self.aabb, self.dims, cell)
    }

    pub fn positions(&self) -> Vec<DVec3> {
        (0..self.num_positions()).map(|i| self.position(i)).collect()
    }

    /// The `3P × Q` matrix, row-major.
    pub fn matrix(&self) -> Vec<f64> {
        let q = self.directions.len();
        let mut m = vec![0.0; 3 * self.num_positions() * q];
        for (idx, rgb) in self.radiance.iter().enumerate() {
            let (p, j) = (idx / q, idx % q);
            for c in 0..3 {
                m[(3 * p + c) * q + j] = rgb[c];
            }
        }
        m
    }
}

/// Fitted factors.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorTables {
    pub components: usize,
    /// `pos_factors[(p * D + i) * 3 + channel]`.
    pub pos_factors: Vec<f64>,
    /// `dir_factors[q * D + i]`.
    pub dir_factors: Vec<f64>,
    /// Frobenius norm of `M − U Bᵀ`.
    pub residual: f64,
    /// Residual after each alternation (empty for the SVD oracle).
    pub history: Vec<f64>,
    /// Set when a normal-equations solve was singular and needed damping.
    pub rank_deficient: bool,
}

impl FactorTables {
    pub fn num_positions(&self) -> usize {
        self.pos_factors.len() / (3 * self.components)
    }

    pub fn num_directions(&self) -> usize {
        self.dir_factors.len() / self.components
    }

    pub fn position_components(&self, p: usize) -> Vec<[f64; 3]> {
        let d = self.components;
        (0..d)
            .map(|i| {
                let base = (p * d + i) * 3;
                [
                    self.pos_factors[base],
                    self.pos_factors[base + 1],
                    self.pos_factors[base + 2],
                ]
            })
            .collect()
    }

    pub fn direction_weights(&self, q: usize) -> &[f64] {
        &self.dir_factors[q * self.components..(q + 1) * self.components]
    }

    /// `Σᵢ βᵢ(q) (uᵢ, vᵢ, wᵢ)(p)`.
    pub fn color(&self, p: usize, q: usize) -> [f64; 3] {
        combine_slices(&self.position_components(p), self.direction_weights(q))
    }

    /// Builds tables from `U` (`3P × D`, row `3p + c`) and `B` (`Q × D`).
    pub(crate) fn from_matrices(d: usize, u: &[f64], b: &[f64], residual: f64) -> Self {
        let p = u.len() / (3 * d);
        let mut pos = vec![0.0; u.len()];
        for pi in 0..p {
            for c in 0..3 {
                for i in 0..d {
                    pos[(pi * d + i) * 3 + c] = u[(3 * pi + c) * d + i];
                }
            }
        }
        FactorTables {
            components: d,
            pos_factors: pos,
            dir_factors: b.to_vec(),
            residual,
            history: Vec::new(),
            rank_deficient: false,
        }
    }
}

/// `‖M − U Bᵀ‖_F` for row-major `M` (`rows × cols`), `U` (`rows × d`),
/// `B` (`cols × d`).
pub(crate) fn residual_norm(m: &[f64], rows: usize, cols: usize, u: &[f64], b: &[f64], d: usize) -> f64 {
    let mut sum = 0.0;
    for r in 0..rows {
        let ur = &u[r * d..(r + 1) * d];
        for q in 0..cols {
            let br = &b[q * d..(q + 1) * d];
            let approx: f64 = ur.iter().zip(br).map(|(x, y)| x * y).sum();
            let e = m[r * cols + q] - approx;
            sum += e * e;
        }
    }
    sum.sqrt()
}

fn check_aabb(aabb: &Aabb) -> Result<()> {
    if (0..3).all(|a| aabb.min[a] < aabb.max[a]) {
        Ok(())
    } else {
        Err(Error::DegenerateAabb)
    }
}

pub(crate) fn lattice_center(aabb: &Aabb, dims: [usize; 3], cell: [usize; 3]) -> DVec3 {
    let ext = aabb.extent();
    DVec3::new(
        aabb.min.x + (cell[0] as f64 + 0.5) * ext.x / dims[0] as f64,
        aabb.min.y + (cell[1] as f64 + 0.5) * ext.y / dims[1] as f64,
        aabb.min.z + (cell[2] as f64 + 0.5) * ext.z / dims[2] as f64,
    )
}

/// `n` points spread over the unit sphere along a golden-angle spiral from
/// `+z` to `−z`. `n = 1` gives `+z`.
pub fn fibonacci_sphere(n: usize) -> Vec<DVec3> {
    if n == 1 {
        return vec![DVec3::Z];
    }
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * i as f64 / (n - 1) as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            DVec3::new(r * phi.cos(), r * phi.sin(), z).normalize()
        })
        .collect()
}

/// Samples `field` at the bin centers of a `dims` lattice over `aabb` and at
/// `q` Fibonacci-sphere directions.
pub fn sample_reference(field: &FactorizedField, aabb: &Aabb, dims: [usize; 3], q: usize) -> Result<SampleGrid> {
    check_aabb(aabb)?;
    if dims.contains(&0) || q == 0 {
        return Err(Error::InvalidArgument("sample grid needs P, Q >= 1".into()));
    }
    let directions = fibonacci_sphere(q);
    let betas = directions
        .iter()
        .map(|d| Ok(field.eval_dir(Direction::new(*d)?)?.0))
        .collect::<Result<Vec<_>>>()?;
    let n: usize = dims.iter().product();
    let d = field.components();
    let mut row = vec![0.0; 1 + 3 * d];
    let mut density = Vec::with_capacity(n);
    let mut radiance = Vec::with_capacity(n * q);
    let [nx, ny, _] = dims;
    for index in 0..n {
        let cell = [index % nx, (index / nx) % ny, index / (nx * ny)];
        field.eval_pos_into(lattice_center(aabb, dims, cell), &mut row)?;
        density.push(row[0]);
        let comps: Vec<[f64; 3]> = row[1..].chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        for beta in &betas {
            radiance.push(combine_slices(&comps, beta));
        }
    }
    SampleGrid::new(*aabb, dims, directions, radiance, density)
}

#[cfg(test)]
pub(crate) mod test_support {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::SampleGrid;

    /// Matrix `Σ_r 0.6^r a_r b_rᵀ + noise` with uniform random factors.
    pub fn random_low_rank(seed: u64, rows: usize, cols: usize, rank: usize, noise: f64) -> SampleGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = vec![0.0; rows * cols];
        for r in 0..rank {
            let scale = 0.6f64.powi(r as i32);
            let a: Vec<f64> = (0..rows).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect();
            for i in 0..rows {
                for j in 0..cols {
                    m[i * cols + j] += scale * a[i] * b[j];
                }
            }
        }
        for v in m.iter_mut() {
            *v += noise * rng.random_range(-1.0..1.0);
        }
        SampleGrid::from_matrix(rows, cols, &m).unwrap()
    }
}
