//! Closed-form scenes used as ground truth. Each one is written directly in
//! factorized form, so its rank `D` is known exactly.

use glam::DVec3;
use serde::{Deserialize, Serialize};

use crate::geometry::Aabb;

/// One homogeneous sphere of a [`AnalyticScene::TwoBlobs`] scene.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Blob {
    pub center: [f64; 3],
    pub radius: f64,
    pub density: f64,
    pub color: [f64; 3],
}

impl Blob {
    fn contains(&self, p: DVec3) -> bool {
        p.distance_squared(DVec3::from(self.center)) <= self.radius * self.radius
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AnalyticScene {
    /// Homogeneous sphere with a linearly varying albedo and no view
    /// dependence. `D = 1`, `β ≡ 1`.
    LambertSphere {
        center: [f64; 3],
        radius: f64,
        density: f64,
        albedo: [f64; 3],
        albedo_gradient: [f64; 3],
    },
    /// Lambert sphere plus a view-dependent lobe
    /// `g(d) = ((1 + d·a) / 2)^n` scaling a constant specular color.
    /// `D = 2`, `β = (1, g(d))`.
    SpecSphere {
        center: [f64; 3],
        radius: f64,
        density: f64,
        albedo: [f64; 3],
        albedo_gradient: [f64; 3],
        specular: [f64; 3],
        lobe_axis: [f64; 3],
        exponent: f64,
    },
    /// Two homogeneous spheres; overlapping density adds and color is the
    /// density-weighted mean. `D = 1`.
    TwoBlobs { blobs: [Blob; 2] },
    /// Spherical shell `r_in ≤ |p − c| ≤ r_out` of constant density. `D = 1`.
    HollowShell {
        center: [f64; 3],
        inner_radius: f64,
        outer_radius: f64,
        density: f64,
        color: [f64; 3],
    },
    /// Homogeneous axis-aligned box. `D = 1`.
    Slab {
        min: [f64; 3],
        max: [f64; 3],
        density: f64,
        color: [f64; 3],
    },
    /// Zero density everywhere. `D = 1`.
    Empty,
}

impl AnalyticScene {
    pub fn components(&self) -> usize {
        match self {
            AnalyticScene::SpecSphere { .. } => 2,
            _ => 1,
        }
    }

    pub(crate) fn eval_pos_into(&self, p: DVec3, row: &mut [f64]) {
        row.fill(0.0);
        match self {
            AnalyticScene::LambertSphere {
                center,
                radius,
                density,
                albedo,
                albedo_gradient,
            } => {
                let rel = p - DVec3::from(*center);
                if rel.length_squared() <= radius * radius {
                    row[0] = *density;
                    write_albedo(&mut row[1..4], rel / *radius, albedo, albedo_gradient);
                }
            }
            AnalyticScene::SpecSphere {
                center,
                radius,
                density,
                albedo,
                albedo_gradient,
                specular,
                ..
            } => {
                let rel = p - DVec3::from(*center);
                if rel.length_squared() <= radius * radius {
                    row[0] = *density;
                    write_albedo(&mut row[1..4], rel / *radius, albedo, albedo_gradient);
                    row[4..7].copy_from_slice(specular);
                }
            }
            AnalyticScene::TwoBlobs { blobs } => {
                let mut sigma = 0.0;
                let mut weighted = [0.0; 3];
                for b in blobs.iter().filter(|b| b.contains(p)) {
                    sigma += b.density;
                    for ch in 0..3 {
                        weighted[ch] += b.density * b.color[ch];
                    }
                }
                if sigma > 0.0 {
                    row[0] = sigma;
                    for ch in 0..3 {
                        row[1 + ch] = weighted[ch] / sigma;
                    }
                }
            }
            AnalyticScene::HollowShell {
                center,
                inner_radius,
                outer_radius,
                density,
                color,
            } => {
                let r = p.distance(DVec3::from(*center));
                if r >= *inner_radius && r <= *outer_radius {
                    row[0] = *density;
                    row[1..4].copy_from_slice(color);
                }
            }
            AnalyticScene::Slab {
                min,
                max,
                density,
                color,
            } => {
                let inside = p.cmpge(DVec3::from(*min)).all() && p.cmple(DVec3::from(*max)).all();
                if inside {
                    row[0] = *density;
                    row[1..4].copy_from_slice(color);
                }
            }
            AnalyticScene::Empty => {}
        }
    }

    pub(crate) fn eval_dir(&self, d: DVec3) -> Vec<f64> {
        match self {
            AnalyticScene::SpecSphere {
                lobe_axis, exponent, ..
            } => {
                let axis = DVec3::from(*lobe_axis).normalize();
                vec![1.0, lobe(d, axis, *exponent)]
            }
            _ => vec![1.0],
        }
    }

    /// Exact bound for the sphere-like scenes; boxes far from every primitive
    /// bound to zero.
    pub(crate) fn density_upper_bound(&self, region: &Aabb) -> Option<f64> {
        let sphere_hits = |c: &[f64; 3], r: f64| {
            let c = DVec3::from(*c);
            let nearest = c.clamp(region.min, region.max);
            nearest.distance_squared(c) <= r * r
        };
        let bound = match self {
            AnalyticScene::LambertSphere {
                center,
                radius,
                density,
                ..
            }
            | AnalyticScene::SpecSphere {
                center,
                radius,
                density,
                ..
            } => {
                if sphere_hits(center, *radius) {
                    *density
                } else {
                    0.0
                }
            }
            AnalyticScene::TwoBlobs { blobs } => blobs
                .iter()
                .filter(|b| sphere_hits(&b.center, b.radius))
                .map(|b| b.density)
                .sum(),
            AnalyticScene::HollowShell {
                center,
                outer_radius,
                density,
                ..
            } => {
                if sphere_hits(center, *outer_radius) {
                    *density
                } else {
                    0.0
                }
            }
            AnalyticScene::Slab { min, max, density, .. } => {
                let overlap = region.min.cmple(DVec3::from(*max)).all() && region.max.cmpge(DVec3::from(*min)).all();
                if overlap {
                    *density
                } else {
                    0.0
                }
            }
            AnalyticScene::Empty => 0.0,
        };
        Some(bound)
    }
}

fn write_albedo(out: &mut [f64], unit_rel: DVec3, albedo: &[f64; 3], gradient: &[f64; 3]) {
    for ch in 0..3 {
        out[ch] = albedo[ch] + gradient[ch] * unit_rel[ch];
    }
}

/// Smooth view lobe `((1 + d·a) / 2)^n`, in `[0, 1]`.
pub(crate) fn lobe(d: DVec3, axis: DVec3, exponent: f64) -> f64 {
    (0.5 * (1.0 + d.dot(axis))).max(0.0).powf(exponent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{combine, FactorizedField, Position};
    use crate::geometry::Direction;
    use rand::{Rng, SeedableRng};

    fn lambert() -> AnalyticScene {
        AnalyticScene::LambertSphere {
            center: [0.0; 3],
            radius: 0.5,
            density: 7.0,
            albedo: [0.5; 3],
            albedo_gradient: [0.2, 0.1, 0.0],
        }
    }

    fn spec() -> AnalyticScene {
        AnalyticScene::SpecSphere {
            center: [0.0; 3],
            radius: 0.5,
            density: 7.0,
            albedo: [0.4; 3],
            albedo_gradient: [0.1; 3],
            specular: [0.3; 3],
            lobe_axis: [0.0, 0.0, 1.0],
            exponent: 4.0,
        }
    }

    fn random_dir(rng: &mut impl Rng) -> Direction {
        loop {
            let v = DVec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            if v.length_squared() > 1e-4 && v.length_squared() <= 1.0 {
                return Direction::normalize(v).unwrap();
            }
        }
    }

    #[test]
    fn sphere_empty_outside_and_dense_at_center() {
        let f = FactorizedField::Analytic(lambert());
        let out = f.eval_pos(Position::new(0.9, 0.0, 0.0)).unwrap();
        assert!(out.is_empty());
        let c = f.eval_pos(Position::new(0.0, 0.0, 0.0)).unwrap();
        assert_eq!(c.sigma, 7.0);
    }

    #[test]
    fn lambert_is_view_independent() {
        let f = FactorizedField::Analytic(lambert());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let p = Position::new(0.1, -0.2, 0.15);
        let map = f.eval_pos(p).unwrap();
        let reference = combine(&map, &f.eval_dir(Direction::Z).unwrap()).unwrap();
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let c = combine(&map, &f.eval_dir(random_dir(&mut rng)).unwrap()).unwrap();
            for ch in 0..3 {
                worst = worst.max((c[ch] - reference[ch]).abs());
            }
        }
        assert!(worst < 1e-9);
    }

    #[test]
    fn specular_differs_for_opposite_directions() {
        let f = FactorizedField::Analytic(spec());
        let d = Direction::normalize(DVec3::new(0.2, 0.3, 0.9)).unwrap();
        let a = f.eval_dir(d).unwrap();
        let b = f.eval_dir(-d).unwrap();
        let expected_a = lobe(d.vec(), DVec3::Z, 4.0);
        let expected_b = lobe(-d.vec(), DVec3::Z, 4.0);
        assert_eq!(a.0[1], expected_a);
        assert_eq!(b.0[1], expected_b);
        assert_ne!(a, b);
    }

    #[test]
    fn evaluation_is_pure() {
        let f = FactorizedField::Analytic(spec());
        let p = Position::new(0.1, 0.1, 0.1);
        assert_eq!(f.eval_pos(p).unwrap(), f.eval_pos(p).unwrap());
        assert_eq!(f.eval_dir(Direction::Z).unwrap(), f.eval_dir(Direction::Z).unwrap());
    }

    #[test]
    fn density_bound_is_sound() {
        let s = spec();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let c = DVec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let region = Aabb::new(c, c + DVec3::splat(0.1)).unwrap();
            let bound = s.density_upper_bound(&region).unwrap();
            let mut row = [0.0; 7];
            for _ in 0..20 {
                let p = c + DVec3::new(rng.random(), rng.random(), rng.random()) * 0.1;
                s.eval_pos_into(p, &mut row);
                assert!(row[0] <= bound);
            }
        }
    }
}
