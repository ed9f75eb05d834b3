//! Renders a turntable of PNG frames from a baked cache.
//!
//! ```text
//! cargo run --release --example render_orbit -- [scene] [frames] [out-dir]
//! ```

use std::path::PathBuf;
use std::time::Instant;

use radiance_cache::cache::{bake, BakeConfig};
use radiance_cache::field::FactorizedField;
use radiance_cache::mesher::{collision_mesh, Bvh};
use radiance_cache::renderer::{orbit_to_matrix, render, CachedSource, Camera, OrbitState, RenderConfig};
use radiance_cache::scene_io::catalog_entry;

fn main() -> radiance_cache::Result<()> {
    let mut args = std::env::args().skip(1);
    let id = args.next().unwrap_or_else(|| "spec-sphere".into());
    let frames: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(12);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "orbit".into()));
    std::fs::create_dir_all(&out)?;

    let entry =
        catalog_entry(&id).ok_or_else(|| radiance_cache::Error::InvalidArgument(format!("unknown scene {id}")))?;
    let field = FactorizedField::Analytic(entry.scene);
    let (pos, dir) = bake(
        &field,
        &entry.aabb,
        &BakeConfig {
            k: 128,
            ..BakeConfig::default()
        },
    )?;
    let bvh = Bvh::build(&collision_mesh(&pos, 1e-6)?).ok();
    let source = CachedSource::new(&pos, &dir)?;
    let cfg = RenderConfig::default();

    for i in 0..frames {
        let state = OrbitState {
            target: [0.0; 3],
            azimuth: std::f64::consts::TAU * i as f64 / frames as f64,
            elevation: 0.3,
            distance: 3.0,
            fov: 0.8,
        };
        let camera = Camera::new(orbit_to_matrix(&state), state.fov, 256, 256, 0.0, 100.0)?;
        let start = Instant::now();
        let image = render(&camera, &source, bvh.as_ref(), &cfg)?;
        let path = out.join(format!("{id}_{i:03}.png"));
        image.write_png(&path)?;
        println!("{} in {:.1} ms", path.display(), start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(())
}
