//! Cached vs direct rendering of a synthetic 8 × 384 MLP field.
//!
//! ```text
//! cargo run --release --example mlp_speedup -- [k] [resolution] [density_scale]
//! ```

use std::time::Instant;

use radiance_cache::cache::{bake, BakeConfig};
use radiance_cache::field::{FactorizedField, MlpArchitecture, MlpWeights, SupportShape};
use radiance_cache::geometry::Aabb;
use radiance_cache::mesher::{collision_mesh, Bvh};
use radiance_cache::renderer::{
    orbit_to_matrix, render, CachedSource, Camera, Clip, FieldSource, OrbitState, RenderConfig,
};

fn main() -> radiance_cache::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let k = args.first().copied().unwrap_or(128.0) as usize;
    let res = args.get(1).copied().unwrap_or(128.0) as u32;
    let scale = args.get(2).copied().unwrap_or(4000.0);

    let weights = MlpWeights::synthetic(
        &MlpArchitecture::default(),
        SupportShape::Octahedron {
            radius: 0.35,
            density_scale: scale,
        },
        11,
    )?;
    let field = FactorizedField::Mlp(weights);
    let t = Instant::now();
    let (pos, dir) = bake(
        &field,
        &Aabb::cube(1.0),
        &BakeConfig {
            k,
            ..BakeConfig::default()
        },
    )?;
    let bvh = Bvh::build(&collision_mesh(&pos, 1e-6)?)?;
    println!(
        "bake + mesh: {:.2} s, {} occupied voxels",
        t.elapsed().as_secs_f64(),
        pos.occupied_count()
    );

    let state = OrbitState {
        target: [0.0; 3],
        azimuth: 0.5,
        elevation: 0.35,
        distance: 3.0,
        fov: 0.8,
    };
    let camera = Camera::new(orbit_to_matrix(&state), state.fov, res, res, 0.0, 100.0)?;
    let cfg = RenderConfig::default();

    let cached = CachedSource::new(&pos, &dir)?;
    let t = Instant::now();
    let a = render(&camera, &cached, Some(&bvh), &cfg)?;
    let cached_ms = t.elapsed().as_secs_f64() * 1e3;

    let direct = FieldSource::new(&field, Clip::Box(*pos.occupied_bounds()), Some(pos.voxel_size()))?;
    let t = Instant::now();
    let b = render(&camera, &direct, Some(&bvh), &cfg)?;
    let direct_ms = t.elapsed().as_secs_f64() * 1e3;

    println!(
        "{res}²: cached {cached_ms:.1} ms, direct {direct_ms:.1} ms, speedup {:.0}x, psnr {:.2} dB",
        direct_ms / cached_ms,
        radiance_cache::renderer::psnr(&a, &b)?
    );
    a.write_png("mlp_cached.png")?;
    Ok(())
}
