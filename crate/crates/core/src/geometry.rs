//! Points, unit directions, rays and axis-aligned boxes shared by every stage.

use glam::DVec3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `‖d‖ = 1` accepted by [`Direction::new`].
pub const UNIT_TOLERANCE: f64 = 1e-6;

/// World-space point.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Position(pub DVec3);

impl Position {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Position(DVec3::new(x, y, z))
    }
}

impl From<DVec3> for Position {
    fn from(v: DVec3) -> Self {
        Position(v)
    }
}

/// Unit view direction.
///
/// The spherical accessors use `θ` measured from `+z` and `φ` measured from
/// `+x` towards `+y`, so `d = (sin θ cos φ, sin θ sin φ, cos θ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction(DVec3);

impl Direction {
    pub const Z: Direction = Direction(DVec3::Z);

    /// Wraps a vector that must already be unit length.
    pub fn new(v: DVec3) -> Result<Self> {
        let norm = v.length();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::NonUnitDirection { norm });
        }
        Ok(Direction(v))
    }

    /// Normalizes `v`; `None` for zero or non-finite input.
    pub fn normalize(v: DVec3) -> Option<Self> {
        let n = v.length();
        (n > 0.0 && n.is_finite()).then(|| Direction(v / n))
    }

    pub fn from_spherical(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Direction(DVec3::new(st * cp, st * sp, ct))
    }

    /// `(θ, φ)` with `θ ∈ [0, π]` and `φ ∈ [0, 2π)`.
    pub fn spherical(&self) -> (f64, f64) {
        let theta = self.0.z.clamp(-1.0, 1.0).acos();
        let mut phi = self.0.y.atan2(self.0.x);
        if phi < 0.0 {
            phi += std::f64::consts::TAU;
        }
        if phi >= std::f64::consts::TAU {
            phi = 0.0;
        }
        (theta, phi)
    }

    pub fn vec(&self) -> DVec3 {
        self.0
    }
}

impl std::ops::Neg for Direction {
    type Output = Direction;
    fn neg(self) -> Direction {
        Direction(-self.0)
    }
}

/// A ray restricted to the parameter interval `[t_min, t_max]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: DVec3,
    pub dir: Direction,
    pub t_min: f64,
    pub t_max: f64,
}

impl Ray {
    pub fn new(origin: DVec3, dir: Direction, t_min: f64, t_max: f64) -> Result<Self> {
        if !(t_min < t_max) {
            return Err(Error::InvalidArgument(format!(
                "ray interval [{t_min}, {t_max}] is empty"
            )));
        }
        Ok(Ray {
            origin,
            dir,
            t_min,
            t_max,
        })
    }

    pub fn at(&self, t: f64) -> DVec3 {
        self.origin + self.dir.vec() * t
    }
}

/// Axis-aligned box. [`Aabb::new`] enforces `min < max`; boxes built with
/// [`Aabb::empty`] and [`Aabb::grow`] may be flat.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: DVec3,
    pub max: DVec3,
}

impl Aabb {
    pub fn new(min: DVec3, max: DVec3) -> Result<Self> {
        let ok = min.is_finite() && max.is_finite() && min.cmplt(max).all();
        if !ok {
            return Err(Error::DegenerateAabb);
        }
        Ok(Aabb { min, max })
    }

    pub fn cube(half: f64) -> Self {
        Aabb {
            min: DVec3::splat(-half),
            max: DVec3::splat(half),
        }
    }

    pub fn empty() -> Self {
        Aabb {
            min: DVec3::splat(f64::INFINITY),
            max: DVec3::splat(f64::NEG_INFINITY),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min.cmpgt(self.max).any()
    }

    pub fn grow(&mut self, p: DVec3) {
        self.min = self.min.min(p);
        self.max = self.max.max(p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.min(other.min),
            max: self.max.max(other.max),
        }
    }

    pub fn contains(&self, p: DVec3) -> bool {
        p.cmpge(self.min).all() && p.cmple(self.max).all()
    }

    pub fn contains_box(&self, other: &Aabb) -> bool {
        other.min.cmpge(self.min).all() && other.max.cmple(self.max).all()
    }

    pub fn extent(&self) -> DVec3 {
        self.max - self.min
    }

    pub fn center(&self) -> DVec3 {
        (self.min + self.max) * 0.5
    }

    pub fn longest_axis(&self) -> usize {
        let e = self.extent();
        if e.x >= e.y && e.x >= e.z {
            0
        } else if e.y >= e.z {
            1
        } else {
            2
        }
    }

    /// Slab test. Returns the clipped parameter interval, if non-empty.
    pub fn intersect_ray(&self, origin: DVec3, dir: DVec3, t0: f64, t1: f64) -> Option<(f64, f64)> {
        let mut lo = t0;
        let mut hi = t1;
        for axis in 0..3 {
            let o = origin[axis];
            let d = dir[axis];
            if d == 0.0 {
                if o < self.min[axis] || o > self.max[axis] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / d;
            let mut ta = (self.min[axis] - o) * inv;
            let mut tb = (self.max[axis] - o) * inv;
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            lo = lo.max(ta);
            hi = hi.min(tb);
            if lo > hi {
                return None;
            }
        }
        Some((lo, hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_unit_direction() {
        assert!(Direction::new(DVec3::new(1.0, 1.0, 0.0)).is_err());
        assert!(Direction::new(DVec3::X).is_ok());
    }

    #[test]
    fn spherical_round_trip() {
        for &(t, p) in &[(0.3, 0.1), (1.2, 4.0), (2.9, 6.0)] {
            let d = Direction::from_spherical(t, p);
            let (t2, p2) = d.spherical();
            assert!((t - t2).abs() < 1e-12 && (p - p2).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_box() {
        assert!(matches!(
            Aabb::new(DVec3::ZERO, DVec3::new(1.0, 0.0, 1.0)),
            Err(Error::DegenerateAabb)
        ));
    }

    #[test]
    fn slab_test_axis_ray() {
        let b = Aabb::cube(1.0);
        let (lo, hi) = b
            .intersect_ray(DVec3::new(0.0, 0.0, -3.0), DVec3::Z, 0.0, 10.0)
            .unwrap();
        assert_eq!((lo, hi), (2.0, 4.0));
        assert!(b
            .intersect_ray(DVec3::new(2.0, 0.0, -3.0), DVec3::Z, 0.0, 10.0)
            .is_none());
    }
}
