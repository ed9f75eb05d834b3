//! Extracts the collision mesh of a baked scene, writes it as OBJ and
//! measures how many samples the first-hit skip saves.
//!
//! ```text
//! cargo run --release --example collision_mesh -- [scene] [out.obj]
//! ```

use std::fs::File;
use std::io::BufWriter;

use radiance_cache::cache::{bake, BakeConfig};
use radiance_cache::field::FactorizedField;
use radiance_cache::mesher::{collision_mesh, write_obj, Bvh};
use radiance_cache::renderer::{integrate_ray, orbit_to_matrix, CachedSource, Camera, OrbitState, RenderConfig};
use radiance_cache::scene_io::catalog_entry;

fn main() -> radiance_cache::Result<()> {
    let mut args = std::env::args().skip(1);
    let id = args.next().unwrap_or_else(|| "two-blobs".into());
    let entry =
        catalog_entry(&id).ok_or_else(|| radiance_cache::Error::InvalidArgument(format!("unknown scene {id}")))?;
    let field = FactorizedField::Analytic(entry.scene);
    let (pos, dir) = bake(
        &field,
        &entry.aabb,
        &BakeConfig {
            k: 96,
            ..BakeConfig::default()
        },
    )?;
    let mesh = collision_mesh(&pos, 1e-6)?;
    println!(
        "{id}: {} vertices, {} triangles",
        mesh.vertices.len(),
        mesh.triangles.len()
    );
    if let Some(path) = args.next() {
        write_obj(&mesh, BufWriter::new(File::create(&path)?))?;
        println!("wrote {path}");
    }

    let bvh = Bvh::build(&mesh)?;
    let state = OrbitState {
        target: [0.0; 3],
        azimuth: 0.9,
        elevation: 0.3,
        distance: 3.0,
        fov: 0.8,
    };
    let camera = Camera::new(orbit_to_matrix(&state), state.fov, 96, 96, 0.0, 100.0)?;
    let source = CachedSource::new(&pos, &dir)?;
    let cfg = RenderConfig::default();
    let (mut with, mut without, mut worst) = (0, 0, 0.0f64);
    for y in 0..96 {
        for x in 0..96 {
            let ray = camera.generate_ray(x, y, None)?;
            let a = integrate_ray(&ray, &source, Some(&bvh), &cfg)?;
            let b = integrate_ray(&ray, &source, None, &cfg)?;
            with += a.samples;
            without += b.samples;
            for c in 0..3 {
                worst = worst.max((a.color[c] - b.color[c]).abs());
            }
        }
    }
    println!("samples with mesh skip {with}, without {without}; max color difference {worst:.2e}");
    Ok(())
}
