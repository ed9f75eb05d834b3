use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::field::{AnalyticScene, Blob};
use crate::geometry::Aabb;

/// A named analytic scene. `σ(p)` and `c(p, d)` for each are listed in
/// `summary`; all fit inside `aabb`.
#[derive(Clone, Debug, PartialEq)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub summary: &'static str,
    pub scene: AnalyticScene,
    pub aabb: Aabb,
}

pub const CATALOG_IDS: [&str; 6] = [
    "lambert-sphere",
    "spec-sphere",
    "two-blobs",
    "hollow-shell",
    "slab",
    "empty",
];

const ALBEDO: [f64; 3] = [0.45, 0.3, 0.2];
const ALBEDO_GRADIENT: [f64; 3] = [0.15, 0.1, -0.1];

pub fn analytic_catalog() -> Vec<CatalogEntry> {
    let aabb = Aabb::cube(1.0);
    vec![
        CatalogEntry {
            id: "lambert-sphere",
            summary: "σ = 20 for |p| ≤ 0.6; c = a + g ⊙ p/0.6, independent of d",
            scene: AnalyticScene::LambertSphere {
                center: [0.0; 3],
                radius: 0.6,
                density: 20.0,
                albedo: ALBEDO,
                albedo_gradient: ALBEDO_GRADIENT,
            },
            aabb,
        },
        CatalogEntry {
            id: "spec-sphere",
            summary: "σ = 20 for |p| ≤ 0.6; c = a + g ⊙ p/0.6 + s · ((1 + d·n)/2)⁴ with n = (1,1,1)/√3",
            scene: AnalyticScene::SpecSphere {
                center: [0.0; 3],
                radius: 0.6,
                density: 20.0,
                albedo: ALBEDO,
                albedo_gradient: ALBEDO_GRADIENT,
                specular: [0.35, 0.35, 0.3],
                lobe_axis: [1.0, 1.0, 1.0],
                exponent: 4.0,
            },
            aabb,
        },
        CatalogEntry {
            id: "two-blobs",
            summary: "two overlapping balls; σ = Σ σ_j 1[p ∈ B_j], c = Σ σ_j c_j 1[p ∈ B_j] / σ",
            scene: AnalyticScene::TwoBlobs {
                blobs: [
                    Blob {
                        center: [-0.3, 0.0, 0.1],
                        radius: 0.4,
                        density: 8.0,
                        color: [0.9, 0.25, 0.1],
                    },
                    Blob {
                        center: [0.3, 0.05, -0.15],
                        radius: 0.35,
                        density: 25.0,
                        color: [0.1, 0.35, 0.9],
                    },
                ],
            },
            aabb,
        },
        CatalogEntry {
            id: "hollow-shell",
            summary: "σ = 3 for 0.4 ≤ |p| ≤ 0.7; c = (0.8, 0.7, 0.3)",
            scene: AnalyticScene::HollowShell {
                center: [0.0; 3],
                inner_radius: 0.4,
                outer_radius: 0.7,
                density: 3.0,
                color: [0.8, 0.7, 0.3],
            },
            aabb,
        },
        CatalogEntry {
            id: "slab",
            summary: "σ = 4 on the box [−0.6, 0.6]² × [−0.2, 0.2]; c = (0.2, 0.6, 0.9)",
            scene: AnalyticScene::Slab {
                min: [-0.6, -0.6, -0.2],
                max: [0.6, 0.6, 0.2],
                density: 4.0,
                color: [0.2, 0.6, 0.9],
            },
            aabb,
        },
        CatalogEntry {
            id: "empty",
            summary: "σ = 0 everywhere",
            scene: AnalyticScene::Empty,
            aabb,
        },
    ]
}

pub fn catalog_entry(id: &str) -> Option<CatalogEntry> {
    analytic_catalog().into_iter().find(|e| e.id == id)
}

/// Catalog scene `id` with selected parameters replaced, e.g.
/// `{"radius": 0.4}`.
pub fn scene_with_params(id: &str, params: &Map<String, Value>) -> Result<AnalyticScene> {
    let entry = catalog_entry(id)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown scene `{id}` (known: {})", CATALOG_IDS.join(", "))))?;
    if params.is_empty() {
        return Ok(entry.scene);
    }
    let mut value = serde_json::to_value(&entry.scene).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let obj = value.as_object_mut().expect("scenes serialize as maps");
    for (key, v) in params {
        if key == "kind" || !obj.contains_key(key) {
            return Err(Error::InvalidConfig(format!("scene `{id}` has no parameter `{key}`")));
        }
        obj.insert(key.clone(), v.clone());
    }
    serde_json::from_value(value).map_err(|e| Error::InvalidConfig(format!("scene `{id}` parameters: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorizer::{numerical_rank, sample_reference, singular_values};
    use crate::field::{combine, FactorizedField, Position};
    use crate::geometry::{Direction, Ray};
    use crate::renderer::{integrate_ray, Clip, FieldSource, RenderConfig};
    use glam::DVec3;

    #[test]
    fn ids_are_stable() {
        let ids: Vec<_> = analytic_catalog().iter().map(|e| e.id).collect();
        assert_eq!(ids, CATALOG_IDS);
    }

    #[test]
    fn lambert_color_ignores_direction() {
        let field = FactorizedField::Analytic(catalog_entry("lambert-sphere").unwrap().scene);
        let map = field.eval_pos(Position::new(0.1, -0.2, 0.3)).unwrap();
        let a = combine(&map, &field.eval_dir(Direction::Z).unwrap()).unwrap();
        for d in crate::factorizer::fibonacci_sphere(20) {
            let b = combine(&map, &field.eval_dir(Direction::new(d).unwrap()).unwrap()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn spec_sphere_has_rank_two() {
        let entry = catalog_entry("spec-sphere").unwrap();
        let field = FactorizedField::Analytic(entry.scene);
        let grid = sample_reference(&field, &entry.aabb, [6, 6, 6], 40).unwrap();
        let sv = singular_values(&grid).unwrap();
        assert!(numerical_rank(&sv, 1e-9) <= 2);
        assert!(numerical_rank(&sv, 1e-9) == 2);
    }

    #[test]
    fn hollow_shell_axial_alpha_matches_quadrature() {
        let entry = catalog_entry("hollow-shell").unwrap();
        let field = FactorizedField::Analytic(entry.scene);
        let origin = DVec3::new(0.0, 0.0, 1.5);
        // Midpoint-rule optical depth along the axis.
        let n = 300_000;
        let h = 3.0 / n as f64;
        let tau: f64 = (0..n)
            .map(|i| {
                let p = origin - DVec3::Z * ((i as f64 + 0.5) * h);
                field.eval_pos(Position(p)).unwrap().sigma * h
            })
            .sum();
        let oracle = 1.0 - (-tau).exp();
        let src = FieldSource::new(&field, Clip::Box(entry.aabb), Some(1e-4)).unwrap();
        let ray = Ray::new(origin, Direction::new(-DVec3::Z).unwrap(), 0.0, 3.0).unwrap();
        let cfg = RenderConfig {
            termination: 0.0,
            ..RenderConfig::default()
        };
        let alpha = integrate_ray(&ray, &src, None, &cfg).unwrap().alpha();
        assert!((alpha - oracle).abs() < 1e-3, "{alpha} vs {oracle}");
        assert!((oracle - (1.0 - (-3.0f64 * 0.6).exp())).abs() < 1e-4);
    }

    #[test]
    fn colors_and_densities_bounded() {
        for entry in analytic_catalog() {
            let field = FactorizedField::Analytic(entry.scene.clone());
            let grid = sample_reference(&field, &entry.aabb, [9, 9, 9], 12).unwrap();
            for q in 0..grid.num_directions() {
                for p in 0..grid.num_positions() {
                    for c in grid.radiance(p, q) {
                        assert!((0.0..=1.0).contains(&c), "{}: color {c}", entry.id);
                    }
                }
            }
            assert!(grid.density().iter().all(|s| (0.0..=100.0).contains(s)));
        }
    }

    #[test]
    fn params_override() {
        let mut params = Map::new();
        params.insert("radius".into(), Value::from(0.3));
        match scene_with_params("lambert-sphere", &params).unwrap() {
            AnalyticScene::LambertSphere { radius, .. } => assert_eq!(radius, 0.3),
            other => panic!("{other:?}"),
        }
        params.insert("bogus".into(), Value::from(1));
        assert!(matches!(
            scene_with_params("lambert-sphere", &params),
            Err(Error::InvalidConfig(_))
        ));
        assert!(scene_with_params("teapot", &Map::new()).is_err());
    }
}
