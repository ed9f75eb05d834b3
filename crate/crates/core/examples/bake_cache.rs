//! Bakes every catalog scene at a few grid resolutions and reports
//! occupancy and stored size.
//!
//! ```text
//! cargo run --release --example bake_cache -- [out-dir]
//! ```

use std::time::Instant;

use radiance_cache::cache::{bake, save_cache, BakeConfig};
use radiance_cache::field::FactorizedField;
use radiance_cache::scene_io::analytic_catalog;

fn main() -> radiance_cache::Result<()> {
    let out_dir = std::env::args().nth(1);
    for entry in analytic_catalog() {
        let field = FactorizedField::Analytic(entry.scene);
        for k in [32, 64, 128] {
            let start = Instant::now();
            let (pos, dir) = bake(
                &field,
                &entry.aabb,
                &BakeConfig {
                    k,
                    ..BakeConfig::default()
                },
            )?;
            println!(
                "{:<15} k = {k:<4} occupied {:>8} / {:<8} ({:5.2}%) in {:.2} s",
                entry.id,
                pos.occupied_count(),
                pos.total_voxels(),
                100.0 * pos.sparsity(),
                start.elapsed().as_secs_f64()
            );
            if let (Some(dir_path), 128) = (&out_dir, k) {
                let path = std::path::Path::new(dir_path).join(format!("{}.cache", entry.id));
                save_cache(&pos, &dir, &path)?;
            }
        }
    }
    Ok(())
}
