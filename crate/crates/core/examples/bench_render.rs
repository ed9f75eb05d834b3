//! Times cached rendering against direct field evaluation for an analytic
//! scene and prints the report as JSON. Analytic fields are cheap to
//! evaluate, so the ratio stays small; `mlp_speedup` shows the network case.
//!
//! ```text
//! cargo run --release --example bench_render -- [scene] [k]
//! ```

use radiance_cache::cache::{bake, BakeConfig};
use radiance_cache::field::FactorizedField;
use radiance_cache::mesher::{collision_mesh, Bvh};
use radiance_cache::renderer::{
    bench, orbit_to_matrix, CachedSource, Camera, Clip, FieldSource, OrbitState, RenderConfig,
};
use radiance_cache::scene_io::catalog_entry;

fn main() -> radiance_cache::Result<()> {
    let mut args = std::env::args().skip(1);
    let id = args.next().unwrap_or_else(|| "two-blobs".into());
    let k: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(128);
    let entry =
        catalog_entry(&id).ok_or_else(|| radiance_cache::Error::InvalidArgument(format!("unknown scene {id}")))?;
    let field = FactorizedField::Analytic(entry.scene);
    let (pos, dir) = bake(
        &field,
        &entry.aabb,
        &BakeConfig {
            k,
            ..BakeConfig::default()
        },
    )?;
    let bvh = Bvh::build(&collision_mesh(&pos, 1e-6)?).ok();

    let state = OrbitState {
        target: [0.0; 3],
        azimuth: 0.5,
        elevation: 0.35,
        distance: 3.0,
        fov: 0.8,
    };
    let camera = Camera::new(orbit_to_matrix(&state), state.fov, 64, 64, 0.0, 100.0)?;
    let cached = CachedSource::new(&pos, &dir)?;
    let direct = FieldSource::new(&field, Clip::Box(entry.aabb), None)?;
    let report = bench(
        &camera,
        &cached,
        Some(&direct),
        bvh.as_ref(),
        &RenderConfig::default(),
        &[64, 128, 256],
        3,
    )?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}
