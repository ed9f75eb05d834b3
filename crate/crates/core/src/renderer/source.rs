use glam::DVec3;

use crate::cache::{DirectionCache, PositionCache};
use crate::error::{Error, Result};
use crate::field::{combine_flat, FactorizedField};
use crate::geometry::{Aabb, Direction};

/// Region outside of which a source is known to have zero density.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Clip {
    Unbounded,
    Box(Aabb),
    Empty,
}

/// Density and shaded color of one sample.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Shaded {
    pub sigma: f64,
    pub color: [f64; 3],
}

/// Anything the integrator can march through: the baked caches or a field
/// evaluated directly.
pub trait RadianceSource: Sync {
    fn components(&self) -> usize;

    /// Direction weights `β(d)`, written into `beta` (length `D`).
    fn direction_weights(&self, d: Direction, beta: &mut [f64]);

    fn clip(&self) -> Clip;

    /// Natural step length, if the source has one.
    fn default_step(&self) -> Option<f64>;

    /// Number of samples worth evaluating together.
    fn batch(&self) -> usize {
        1
    }

    /// Shades `points` (all on one ray) with the weights `beta`. `out` is
    /// resized to `points.len()`.
    fn shade(&self, points: &[DVec3], beta: &[f64], out: &mut Vec<Shaded>, scratch: &mut Vec<f64>);
}

/// Nearest-voxel position lookups and interpolated direction lookups.
#[derive(Clone, Copy, Debug)]
pub struct CachedSource<'a> {
    pos: &'a PositionCache,
    dir: &'a DirectionCache,
}

impl<'a> CachedSource<'a> {
    pub fn new(pos: &'a PositionCache, dir: &'a DirectionCache) -> Result<Self> {
        if pos.components() != dir.components() {
            return Err(Error::dims(pos.components(), dir.components()));
        }
        Ok(CachedSource { pos, dir })
    }

    pub fn position_cache(&self) -> &'a PositionCache {
        self.pos
    }

    pub fn direction_cache(&self) -> &'a DirectionCache {
        self.dir
    }
}

impl RadianceSource for CachedSource<'_> {
    fn components(&self) -> usize {
        self.pos.components()
    }

    fn direction_weights(&self, d: Direction, beta: &mut [f64]) {
        self.dir.lookup_into(d.vec(), beta);
    }

    fn clip(&self) -> Clip {
        let b = self.pos.occupied_bounds();
        if b.is_empty() {
            Clip::Empty
        } else {
            Clip::Box(*b)
        }
    }

    fn default_step(&self) -> Option<f64> {
        Some(self.pos.voxel_size())
    }

    fn shade(&self, points: &[DVec3], beta: &[f64], out: &mut Vec<Shaded>, _scratch: &mut Vec<f64>) {
        out.clear();
        out.extend(points.iter().map(|p| match self.pos.lookup_row(*p) {
            Some(row) => Shaded {
                sigma: row[0] as f64,
                color: combine_flat(&row[1..], beta),
            },
            None => Shaded::default(),
        }));
    }
}

/// Evaluates a field at every sample.
#[derive(Clone, Copy, Debug)]
pub struct FieldSource<'a> {
    field: &'a FactorizedField,
    clip: Clip,
    step: Option<f64>,
}

impl<'a> FieldSource<'a> {
    /// `clip` must enclose all density of `field`.
    pub fn new(field: &'a FactorizedField, clip: Clip, step: Option<f64>) -> Result<Self> {
        if field.components() == 0 {
            return Err(Error::UninitializedField);
        }
        Ok(FieldSource { field, clip, step })
    }

    pub fn field(&self) -> &'a FactorizedField {
        self.field
    }
}

impl RadianceSource for FieldSource<'_> {
    fn components(&self) -> usize {
        self.field.components()
    }

    fn direction_weights(&self, d: Direction, beta: &mut [f64]) {
        let w = self.field.eval_dir(d).expect("initialized field and unit direction");
        beta.copy_from_slice(&w.0);
    }

    fn clip(&self) -> Clip {
        self.clip
    }

    fn default_step(&self) -> Option<f64> {
        self.step
    }

    fn batch(&self) -> usize {
        match self.field {
            FactorizedField::Mlp(_) => 8,
            _ => 1,
        }
    }

    fn shade(&self, points: &[DVec3], beta: &[f64], out: &mut Vec<Shaded>, scratch: &mut Vec<f64>) {
        self.field.eval_pos_batch(points, scratch).expect("initialized field");
        let width = 1 + 3 * beta.len();
        out.clear();
        out.extend(scratch.chunks_exact(width).map(|row| Shaded {
            sigma: row[0],
            color: combine_flat(&row[1..], beta),
        }));
    }
}
