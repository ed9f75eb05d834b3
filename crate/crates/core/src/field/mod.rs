//! The factorized radiance field: position function, direction function and
//! their inner-product combination.

mod analytic;
mod encoding;
mod mlp;

pub use analytic::{AnalyticScene, Blob};
pub use encoding::{encode, encode_into, encoded_len, EncodingConfig};
pub use mlp::{Activation, DenseLayer, Mlp, MlpArchitecture, MlpWeights, SupportShape};

pub use crate::geometry::{Direction, Position};

use glam::DVec3;

use crate::error::{Error, Result};
use crate::factorizer::TableField;
use crate::geometry::Aabb;

/// Output of the position function: density plus `D` radiance components.
#[derive(Clone, Debug, PartialEq)]
pub struct DeepRadianceMap {
    pub sigma: f64,
    pub components: Vec<[f64; 3]>,
}

impl DeepRadianceMap {
    /// Zero density, `d` zero components.
    pub fn empty(d: usize) -> Self {
        DeepRadianceMap {
            sigma: 0.0,
            components: vec![[0.0; 3]; d],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.sigma == 0.0 && self.components.iter().all(|c| *c == [0.0; 3])
    }

    /// Packs as `[σ, u₁, v₁, w₁, …, u_D, v_D, w_D]`.
    pub fn to_row(&self) -> Vec<f64> {
        let mut row = Vec::with_capacity(1 + 3 * self.components.len());
        row.push(self.sigma);
        for c in &self.components {
            row.extend_from_slice(c);
        }
        row
    }

    pub fn from_row(row: &[f64]) -> Self {
        DeepRadianceMap {
            sigma: row[0],
            components: row[1..].chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
        }
    }
}

/// Output of the direction function: one weight per component.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `c = Σᵢ βᵢ (uᵢ, vᵢ, wᵢ)`. No clamping: components and weights may be
/// negative, only final pixels are clamped.
pub fn combine(map: &DeepRadianceMap, beta: &WeightVector) -> Result<[f64; 3]> {
    if map.components.len() != beta.len() {
        return Err(Error::dims(map.components.len(), beta.len()));
    }
    Ok(combine_slices(&map.components, &beta.0))
}

pub(crate) fn combine_slices(components: &[[f64; 3]], beta: &[f64]) -> [f64; 3] {
    let mut c = [0.0; 3];
    for (comp, b) in components.iter().zip(beta) {
        c[0] += b * comp[0];
        c[1] += b * comp[1];
        c[2] += b * comp[2];
    }
    c
}

/// Combine over a flat `[u₁, v₁, w₁, u₂, …]` slice.
#[inline]
pub(crate) fn combine_flat<T: Copy + Into<f64>>(uvw: &[T], beta: &[f64]) -> [f64; 3] {
    let mut c = [0.0; 3];
    for (comp, b) in uvw.chunks_exact(3).zip(beta) {
        c[0] += b * comp[0].into();
        c[1] += b * comp[1].into();
        c[2] += b * comp[2].into();
    }
    c
}

/// A factorized field. Evaluation is pure and read-only, so a field can be
/// shared across threads freely.
#[derive(Clone, Debug, Default)]
pub enum FactorizedField {
    #[default]
    Uninitialized,
    Analytic(AnalyticScene),
    Mlp(MlpWeights),
    Tables(TableField),
}

impl FactorizedField {
    /// Number of components `D`; zero when uninitialized.
    pub fn components(&self) -> usize {
        match self {
            FactorizedField::Uninitialized => 0,
            FactorizedField::Analytic(s) => s.components(),
            FactorizedField::Mlp(w) => w.components(),
            FactorizedField::Tables(t) => t.components(),
        }
    }

    pub fn eval_pos(&self, p: Position) -> Result<DeepRadianceMap> {
        let mut row = vec![0.0; 1 + 3 * self.components()];
        self.eval_pos_into(p.0, &mut row)?;
        Ok(DeepRadianceMap::from_row(&row))
    }

    /// Writes `[σ, u₁, v₁, w₁, …]` into `row` (length `1 + 3D`).
    pub fn eval_pos_into(&self, p: DVec3, row: &mut [f64]) -> Result<()> {
        match self {
            FactorizedField::Uninitialized => return Err(Error::UninitializedField),
            FactorizedField::Analytic(s) => s.eval_pos_into(p, row),
            FactorizedField::Mlp(w) => w.eval_pos_into(p, row),
            FactorizedField::Tables(t) => t.eval_pos_into(p, row),
        }
        Ok(())
    }

    /// Evaluates many positions at once; `out` receives one `1 + 3D` row per
    /// point. MLP fields batch the layers as matrix products.
    pub fn eval_pos_batch(&self, points: &[DVec3], out: &mut Vec<f64>) -> Result<()> {
        let width = 1 + 3 * self.components();
        out.clear();
        match self {
            FactorizedField::Uninitialized => return Err(Error::UninitializedField),
            FactorizedField::Mlp(w) => w.eval_pos_batch(points, out),
            _ => {
                out.resize(points.len() * width, 0.0);
                for (p, row) in points.iter().zip(out.chunks_exact_mut(width)) {
                    self.eval_pos_into(*p, row)?;
                }
            }
        }
        Ok(())
    }

    pub fn eval_dir(&self, d: Direction) -> Result<WeightVector> {
        // Re-check: `Direction` is unit by construction but callers may build
        // one through `normalize` on denormal input.
        let norm = d.vec().length();
        if (norm - 1.0).abs() > crate::geometry::UNIT_TOLERANCE {
            return Err(Error::NonUnitDirection { norm });
        }
        let beta = match self {
            FactorizedField::Uninitialized => return Err(Error::UninitializedField),
            FactorizedField::Analytic(s) => s.eval_dir(d.vec()),
            FactorizedField::Mlp(w) => w.eval_dir(d.vec()),
            FactorizedField::Tables(t) => t.eval_dir(d.vec()),
        };
        Ok(WeightVector(beta))
    }

    /// Evaluates the direction function at many (unit) directions; rows of
    /// `D` weights.
    pub fn eval_dir_batch(&self, dirs: &[DVec3], out: &mut Vec<f64>) -> Result<()> {
        out.clear();
        match self {
            FactorizedField::Uninitialized => return Err(Error::UninitializedField),
            FactorizedField::Mlp(w) => w.eval_dir_batch(dirs, out),
            _ => {
                for d in dirs {
                    let dir = Direction::new(*d)?;
                    out.extend(self.eval_dir(dir)?.0);
                }
            }
        }
        Ok(())
    }

    /// Upper bound on σ over `region`, when the field can provide a sound
    /// one cheaply. Baking skips blocks whose bound is at or below the
    /// occupancy threshold.
    pub fn density_upper_bound(&self, region: &Aabb) -> Option<f64> {
        match self {
            FactorizedField::Mlp(w) => w.density_upper_bounds(std::slice::from_ref(region))[0],
            FactorizedField::Analytic(s) => s.density_upper_bound(region),
            _ => None,
        }
    }

    /// Batched form of [`Self::density_upper_bound`].
    pub fn density_upper_bounds(&self, regions: &[Aabb]) -> Vec<Option<f64>> {
        match self {
            FactorizedField::Mlp(w) => w.density_upper_bounds(regions),
            _ => regions.iter().map(|r| self.density_upper_bound(r)).collect(),
        }
    }

    /// Convenience: full radiance `combine(eval_pos(p), eval_dir(d))` plus σ.
    pub fn radiance(&self, p: Position, d: Direction) -> Result<(f64, [f64; 3])> {
        let map = self.eval_pos(p)?;
        let beta = self.eval_dir(d)?;
        Ok((map.sigma, combine(&map, &beta)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn map_from(components: Vec<[f64; 3]>) -> DeepRadianceMap {
        DeepRadianceMap { sigma: 1.0, components }
    }

    #[test]
    fn combine_zero_weights_is_black() {
        let m = map_from(vec![[0.3, 0.2, 0.1], [0.5, 0.5, 0.5]]);
        assert_eq!(combine(&m, &WeightVector(vec![0.0, 0.0])).unwrap(), [0.0; 3]);
    }

    #[test]
    fn combine_scalar_scaling() {
        let m = map_from(vec![[0.1, 0.2, 0.3]]);
        let c = combine(&m, &WeightVector(vec![2.0])).unwrap();
        assert_eq!(c, [0.2, 0.4, 0.6]);
    }

    #[test]
    fn combine_dimension_mismatch() {
        let m = map_from(vec![[0.1, 0.2, 0.3]]);
        assert!(matches!(
            combine(&m, &WeightVector(vec![1.0, 1.0])),
            Err(Error::DimensionMismatch { expected: 1, found: 2 })
        ));
    }

    #[test]
    fn combine_matches_explicit_summation() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let comps: Vec<[f64; 3]> = (0..8)
            .map(|_| {
                [
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ]
            })
            .collect();
        let beta: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let got = combine(&map_from(comps.clone()), &WeightVector(beta.clone())).unwrap();
        for ch in 0..3 {
            let mut s = 0.0;
            let mut i = 0;
            while i < 8 {
                s += beta[i] * comps[i][ch];
                i += 1;
            }
            assert!((got[ch] - s).abs() < 1e-15);
        }
    }

    #[test]
    fn uninitialized_field_errors() {
        let f = FactorizedField::default();
        assert!(matches!(
            f.eval_pos(Position::new(0.0, 0.0, 0.0)),
            Err(Error::UninitializedField)
        ));
        assert!(matches!(f.eval_dir(Direction::Z), Err(Error::UninitializedField)));
    }

    fn triple() -> impl Strategy<Value = [f64; 3]> {
        [-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64]
    }

    proptest! {
        #[test]
        fn combine_is_linear_in_beta(
            comps in proptest::collection::vec(triple(), 4),
            b1 in proptest::collection::vec(-2.0..2.0f64, 4),
            b2 in proptest::collection::vec(-2.0..2.0f64, 4),
            a in -3.0..3.0f64,
            b in -3.0..3.0f64,
        ) {
            let m = map_from(comps);
            let mixed: Vec<f64> = b1.iter().zip(&b2).map(|(x, y)| a * x + b * y).collect();
            let lhs = combine(&m, &WeightVector(mixed)).unwrap();
            let c1 = combine(&m, &WeightVector(b1)).unwrap();
            let c2 = combine(&m, &WeightVector(b2)).unwrap();
            for ch in 0..3 {
                prop_assert!((lhs[ch] - (a * c1[ch] + b * c2[ch])).abs() < 1e-6);
            }
        }

        #[test]
        fn combine_is_linear_in_components(
            c1 in proptest::collection::vec(triple(), 3),
            c2 in proptest::collection::vec(triple(), 3),
            beta in proptest::collection::vec(-2.0..2.0f64, 3),
            a in -3.0..3.0f64,
        ) {
            let mixed: Vec<[f64; 3]> = c1.iter().zip(&c2)
                .map(|(x, y)| [a * x[0] + y[0], a * x[1] + y[1], a * x[2] + y[2]])
                .collect();
            let w = WeightVector(beta);
            let lhs = combine(&map_from(mixed), &w).unwrap();
            let r1 = combine(&map_from(c1), &w).unwrap();
            let r2 = combine(&map_from(c2), &w).unwrap();
            for ch in 0..3 {
                prop_assert!((lhs[ch] - (a * r1[ch] + r2[ch])).abs() < 1e-6);
            }
        }
    }
}
