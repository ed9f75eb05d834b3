//! Writes a synthetic 8 × 384 network in the weights file format and reads
//! it back.
//!
//! ```text
//! cargo run --release --example synthetic_weights -- [out.weights] [seed]
//! ```

use radiance_cache::field::{MlpArchitecture, MlpWeights, SupportShape};

fn main() -> radiance_cache::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "synthetic.weights".into());
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(11);
    let arch = MlpArchitecture::default();
    let weights = MlpWeights::synthetic(
        &arch,
        SupportShape::Octahedron {
            radius: 0.35,
            density_scale: 400.0,
        },
        seed,
    )?;
    weights.save(&path)?;
    let back = MlpWeights::load(&path)?;
    assert_eq!(back, weights);
    let params: usize = weights
        .position()
        .layers()
        .iter()
        .chain(weights.direction().layers())
        .map(|l| l.weights().len() + l.bias().len())
        .sum();
    println!("wrote {path}: {params} parameters, D = {}", weights.components());
    println!("bake it with: radiance-cache bake --weights {path} --k 128 --out synthetic.cache");
    Ok(())
}
