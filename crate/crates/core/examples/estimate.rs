//! Memory footprint of the unfactorized and factorized caches.
//!
//! ```text
//! cargo run --example estimate
//! ```

use radiance_cache::cache::{estimate_sizes, SizeInputs};

fn gib(bytes: u64) -> f64 {
    bytes as f64 / (1u64 << 30) as f64
}

fn main() -> radiance_cache::Result<()> {
    println!(
        "{:>6} {:>6} {:>3} {:>6} {:>16} {:>12}",
        "k", "l", "D", "alpha", "dense (GiB)", "factored"
    );
    for (k, l, d, alpha) in [
        (256, 256, 8, 1.0),
        (512, 512, 8, 1.0),
        (1024, 1024, 8, 1.0),
        (1024, 1024, 8, 0.05),
        (768, 384, 6, 0.1),
    ] {
        let r = estimate_sizes(&SizeInputs::half_precision(k, l, d, alpha))?;
        println!(
            "{k:>6} {l:>6} {d:>3} {alpha:>6} {:>16.1} {:>9.3} GiB",
            gib(r.m_nerf_bytes),
            gib(r.m_fastnerf_bytes)
        );
    }
    Ok(())
}
