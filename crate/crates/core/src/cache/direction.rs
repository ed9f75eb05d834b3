use std::f64::consts::{PI, TAU};

use glam::DVec3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Direction, FactorizedField, WeightVector};

/// Fractions this close to a lattice node are treated as exactly on it.
const SNAP: f64 = 1e-9;

/// Discretization of the direction domain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirMode {
    /// `l³` bins over `[-1, 1]³`; each bin holds `β` at its normalized
    /// center. Trilinear lookup.
    #[default]
    Cube,
    /// `l × l` bins over `θ ∈ [0, π]`, `φ ∈ [0, 2π)`. Bilinear lookup with
    /// `φ` wraparound; across a pole the lattice continues at `φ + π`.
    Equirect,
}

impl std::str::FromStr for DirMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cube" => Ok(DirMode::Cube),
            "equirect" => Ok(DirMode::Equirect),
            other => Err(Error::InvalidArgument(format!("unknown direction mode {other:?}"))),
        }
    }
}

/// Dense table of `β` over direction bins.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionCache {
    pub(crate) mode: DirMode,
    pub(crate) l: usize,
    pub(crate) components: usize,
    pub(crate) values: Vec<f32>,
}

fn snap(t: f64) -> f64 {
    if t.abs() < SNAP {
        0.0
    } else if (t - 1.0).abs() < SNAP {
        1.0
    } else {
        t
    }
}

impl DirectionCache {
    pub fn bins(mode: DirMode, l: usize) -> usize {
        match mode {
            DirMode::Cube => l * l * l,
            DirMode::Equirect => l * l,
        }
    }

    /// Direction sampled by bin `index`.
    pub fn bin_direction(mode: DirMode, l: usize, index: usize) -> DVec3 {
        match mode {
            DirMode::Cube => {
                let c = |i: usize| -1.0 + (i as f64 + 0.5) * 2.0 / l as f64;
                let v = DVec3::new(c(index % l), c((index / l) % l), c(index / (l * l)));
                v.try_normalize().unwrap_or(DVec3::Z)
            }
            DirMode::Equirect => {
                let (row, col) = (index / l, index % l);
                let theta = (row as f64 + 0.5) * PI / l as f64;
                let phi = (col as f64 + 0.5) * TAU / l as f64;
                Direction::from_spherical(theta, phi).vec()
            }
        }
    }

    /// Tabulates the direction function at every bin.
    pub fn bake(field: &FactorizedField, mode: DirMode, l: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidArgument("l must be at least 1".into()));
        }
        let components = field.components();
        if components == 0 {
            return Err(Error::UninitializedField);
        }
        let dirs: Vec<DVec3> = (0..Self::bins(mode, l))
            .map(|i| Self::bin_direction(mode, l, i))
            .collect();
        let mut values = Vec::new();
        field.eval_dir_batch(&dirs, &mut values)?;
        Ok(DirectionCache {
            mode,
            l,
            components,
            values: values.into_iter().map(|v| v as f32).collect(),
        })
    }

    /// Cache whose every bin holds `beta`.
    pub fn constant(mode: DirMode, l: usize, beta: &[f64]) -> Self {
        let values = (0..Self::bins(mode, l))
            .flat_map(|_| beta.iter().map(|v| *v as f32))
            .collect();
        DirectionCache {
            mode,
            l,
            components: beta.len(),
            values,
        }
    }

    pub fn mode(&self) -> DirMode {
        self.mode
    }

    pub fn resolution(&self) -> usize {
        self.l
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn bin(&self, index: usize) -> &[f32] {
        &self.values[index * self.components..(index + 1) * self.components]
    }

    pub fn lookup_dir(&self, d: Direction) -> WeightVector {
        let mut out = vec![0.0; self.components];
        self.lookup_into(d.vec(), &mut out);
        WeightVector(out)
    }

    /// Interpolated `β` for a unit vector `d`.
    pub fn lookup_into(&self, d: DVec3, out: &mut [f64]) {
        match self.mode {
            DirMode::Cube => self.lookup_cube_point(d, out),
            DirMode::Equirect => self.lookup_equirect(d, out),
        }
    }

    fn accumulate(&self, bin: usize, weight: f64, out: &mut [f64]) {
        if weight != 0.0 {
            for (o, v) in out.iter_mut().zip(self.bin(bin)) {
                *o += weight * *v as f64;
            }
        }
    }

    /// Trilinear interpolation at cube-space point `v`. Outside the outermost
    /// bin centers the nearest cell is extrapolated linearly.
    pub(crate) fn lookup_cube_point(&self, v: DVec3, out: &mut [f64]) {
        out.fill(0.0);
        let l = self.l;
        let axis = |x: f64| -> [(usize, f64); 2] {
            if l == 1 {
                return [(0, 1.0), (0, 0.0)];
            }
            let f = (x + 1.0) * 0.5 * l as f64 - 0.5;
            let i = (f.floor() as isize).clamp(0, l as isize - 2) as usize;
            let t = snap(f - i as f64);
            [(i, 1.0 - t), (i + 1, t)]
        };
        let (ax, ay, az) = (axis(v.x), axis(v.y), axis(v.z));
        for (iz, wz) in az {
            for (iy, wy) in ay {
                for (ix, wx) in ax {
                    self.accumulate(ix + l * (iy + l * iz), wx * wy * wz, out);
                }
            }
        }
    }

    fn lookup_equirect(&self, d: DVec3, out: &mut [f64]) {
        out.fill(0.0);
        let l = self.l;
        let theta = d.z.clamp(-1.0, 1.0).acos();
        let phi = d.y.atan2(d.x).rem_euclid(TAU);
        let ft = theta / PI * l as f64 - 0.5;
        let fp = phi / TAU * l as f64 - 0.5;
        let r0 = ft.floor();
        let t = snap(ft - r0);
        for (r, w) in [(r0 as isize, 1.0 - t), (r0 as isize + 1, t)] {
            if w == 0.0 {
                continue;
            }
            // Past a pole: reflect to the adjacent row on the far meridian.
            let (row, f) = if r < 0 {
                (0, fp + 0.5 * l as f64)
            } else if r >= l as isize {
                (l - 1, fp + 0.5 * l as f64)
            } else {
                (r as usize, fp)
            };
            let c0 = f.floor();
            let s = snap(f - c0);
            let c0 = (c0 as isize).rem_euclid(l as isize) as usize;
            let c1 = (c0 + 1) % l;
            self.accumulate(row * l + c0, w * (1.0 - s), out);
            self.accumulate(row * l + c1, w * s, out);
        }
    }
}
