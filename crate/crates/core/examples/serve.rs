//! Bakes a catalog scene and streams frames over a websocket at `/ws`,
//! optionally serving viewer files at `/`.
//!
//! ```text
//! cargo run --release --example serve -- [scene] [port] [assets-dir]
//! ```

use std::sync::Arc;

use radiance_cache::cache::{bake, BakeConfig};
use radiance_cache::field::FactorizedField;
use radiance_cache::mesher::{collision_mesh, Bvh};
use radiance_cache::renderer::RenderConfig;
use radiance_cache::scene_io::catalog_entry;
use radiance_cache::service::{serve, ServiceState};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let id = args.next().unwrap_or_else(|| "spec-sphere".into());
    let port: u16 = args.next().and_then(|s| s.parse().ok()).unwrap_or(8080);
    let assets = args.next().map(Into::into);

    let entry = catalog_entry(&id).ok_or("unknown scene")?;
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
    let state = Arc::new(ServiceState::new(pos, dir, bvh, RenderConfig::default(), None)?);
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    serve(listener, state, assets).await?;
    Ok(())
}
