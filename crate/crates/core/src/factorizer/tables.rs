use std::path::Path;

use glam::DVec3;
use serde::{Deserialize, Serialize};

use super::{FactorTables, SampleGrid};
use crate::container::{self, Payload};
use crate::error::{Error, Result};
use crate::field::FactorizedField;
use crate::geometry::Aabb;

const TABLES_MAGIC: &[u8; 8] = b"RCTABLE\0";

/// Field backed by fitted tables: nearest lattice entry for positions,
/// nearest sampled direction for weights.
#[derive(Clone, Debug, PartialEq)]
pub struct TableField {
    aabb: Aabb,
    dims: [usize; 3],
    directions: Vec<DVec3>,
    density: Vec<f64>,
    tables: FactorTables,
}

#[derive(Serialize, Deserialize)]
struct TablesHeader {
    components: usize,
    dims: [usize; 3],
    directions: usize,
    aabb: Aabb,
    residual: f64,
    rank_deficient: bool,
}

/// Attaches fitted tables to the lattice and direction set they were fit on.
pub fn tables_to_field(tables: FactorTables, grid: &SampleGrid) -> Result<FactorizedField> {
    Ok(FactorizedField::Tables(TableField::new(
        *grid.aabb(),
        grid.dims(),
        grid.directions().to_vec(),
        grid.density().to_vec(),
        tables,
    )?))
}

impl TableField {
    pub fn new(
        aabb: Aabb,
        dims: [usize; 3],
        directions: Vec<DVec3>,
        density: Vec<f64>,
        tables: FactorTables,
    ) -> Result<Self> {
        let p: usize = dims.iter().product();
        let d = tables.components;
        if d == 0 {
            return Err(Error::InvalidArgument("tables need D >= 1".into()));
        }
        if density.len() != p {
            return Err(Error::dims(p, density.len()));
        }
        if tables.pos_factors.len() != 3 * p * d {
            return Err(Error::dims(3 * p * d, tables.pos_factors.len()));
        }
        if tables.dir_factors.len() != directions.len() * d || directions.is_empty() {
            return Err(Error::dims(directions.len() * d, tables.dir_factors.len()));
        }
        Ok(TableField {
            aabb,
            dims,
            directions,
            density,
            tables,
        })
    }

    pub fn aabb(&self) -> &Aabb {
        &self.aabb
    }

    pub fn components(&self) -> usize {
        self.tables.components
    }

    pub fn tables(&self) -> &FactorTables {
        &self.tables
    }

    /// Lattice entry whose bin contains `p`, clamped at the border.
    pub fn nearest_position(&self, p: DVec3) -> usize {
        let ext = self.aabb.extent();
        let mut cell = [0usize; 3];
        for a in 0..3 {
            let f = (p[a] - self.aabb.min[a]) / ext[a] * self.dims[a] as f64;
            cell[a] = if f.is_nan() {
                0
            } else {
                (f.floor().max(0.0) as usize).min(self.dims[a] - 1)
            };
        }
        cell[0] + self.dims[0] * (cell[1] + self.dims[1] * cell[2])
    }

    /// Sampled direction with the largest dot product; ties to lowest index.
    pub fn nearest_direction(&self, d: DVec3) -> usize {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, s) in self.directions.iter().enumerate() {
            let dot = s.dot(d);
            if dot > best.0 {
                best = (dot, i);
            }
        }
        best.1
    }

    pub(crate) fn eval_pos_into(&self, p: DVec3, row: &mut [f64]) {
        let idx = self.nearest_position(p);
        let d = self.components();
        row[0] = self.density[idx];
        row[1..].copy_from_slice(&self.tables.pos_factors[idx * 3 * d..(idx + 1) * 3 * d]);
    }

    pub(crate) fn eval_dir(&self, d: DVec3) -> Vec<f64> {
        self.tables.direction_weights(self.nearest_direction(d)).to_vec()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = TablesHeader {
            components: self.components(),
            dims: self.dims,
            directions: self.directions.len(),
            aabb: self.aabb,
            residual: self.tables.residual,
            rank_deficient: self.tables.rank_deficient,
        };
        let mut payload = self.density.clone();
        payload.extend(self.directions.iter().flat_map(|d| d.to_array()));
        payload.extend_from_slice(&self.tables.pos_factors);
        payload.extend_from_slice(&self.tables.dir_factors);
        container::encode(TABLES_MAGIC, &header, &Payload::F64(payload))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (h, payload): (TablesHeader, _) = container::decode(bytes, TABLES_MAGIC)?;
        let Payload::F64(v) = payload else {
            return Err(Error::parse("tables payload must be f64"));
        };
        let p: usize = h.dims.iter().product();
        let (d, q) = (h.components, h.directions);
        let expected = p + 3 * q + 3 * p * d + q * d;
        if v.len() != expected {
            return Err(Error::parse(format!(
                "tables payload has {} values, expected {expected}",
                v.len()
            )));
        }
        let (density, rest) = v.split_at(p);
        let (dirs, rest) = rest.split_at(3 * q);
        let (pos, dir) = rest.split_at(3 * p * d);
        let tables = FactorTables {
            components: d,
            pos_factors: pos.to_vec(),
            dir_factors: dir.to_vec(),
            residual: h.residual,
            history: Vec::new(),
            rank_deficient: h.rank_deficient,
        };
        let directions = dirs.chunks_exact(3).map(|c| DVec3::new(c[0], c[1], c[2])).collect();
        TableField::new(h.aabb, h.dims, directions, density.to_vec(), tables).map_err(|e| Error::parse(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
