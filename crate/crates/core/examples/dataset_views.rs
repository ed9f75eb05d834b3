//! Renders a baked scene from every camera of a `transforms.json` manifest.
//!
//! ```text
//! cargo run --release --example dataset_views -- [transforms.json] [scene] [out-dir]
//! ```

use std::path::PathBuf;

use radiance_cache::cache::{bake, BakeConfig};
use radiance_cache::field::FactorizedField;
use radiance_cache::mesher::{collision_mesh, Bvh};
use radiance_cache::renderer::{render, CachedSource, RenderConfig};
use radiance_cache::scene_io::{catalog_entry, DatasetManifest};

fn main() -> radiance_cache::Result<()> {
    let mut args = std::env::args().skip(1);
    let manifest_path = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/transforms.json").into());
    let id = args.next().unwrap_or_else(|| "two-blobs".into());
    let out = PathBuf::from(args.next().unwrap_or_else(|| "views".into()));
    std::fs::create_dir_all(&out)?;

    let manifest = DatasetManifest::load(&manifest_path)?;
    for w in &manifest.warnings {
        eprintln!("warning: {w}");
    }
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
    let bvh = Bvh::build(&collision_mesh(&pos, 1e-6)?).ok();
    let source = CachedSource::new(&pos, &dir)?;

    for (i, camera) in manifest.cameras(0.0, 100.0)?.into_iter().enumerate() {
        let scale = (200.0 / camera.width() as f64).min(1.0);
        let camera = camera.with_size(
            (camera.width() as f64 * scale).round().max(1.0) as u32,
            (camera.height() as f64 * scale).round().max(1.0) as u32,
        );
        let image = render(&camera, &source, bvh.as_ref(), &RenderConfig::default())?;
        let path = out.join(format!("view_{i:03}.png"));
        image.write_png(&path)?;
        println!("{} ({}×{})", path.display(), image.width(), image.height());
    }
    Ok(())
}
