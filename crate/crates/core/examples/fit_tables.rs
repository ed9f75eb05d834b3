//! Fits rank-D factor tables to the glossy sphere with alternating least
//! squares and compares each fit with the truncated SVD.
//!
//! ```text
//! cargo run --release --example fit_tables -- [out.tables]
//! ```

use radiance_cache::factorizer::{
    fit_als, fit_svd_oracle, numerical_rank, sample_reference, singular_values, tables_to_field,
};
use radiance_cache::field::FactorizedField;
use radiance_cache::scene_io::catalog_entry;

fn main() -> radiance_cache::Result<()> {
    let entry = catalog_entry("spec-sphere").expect("catalog scene");
    let field = FactorizedField::Analytic(entry.scene);
    let grid = sample_reference(&field, &entry.aabb, [10, 10, 10], 96)?;
    let sv = singular_values(&grid)?;
    println!("leading singular values: {:.4?}", &sv[..sv.len().min(5)]);
    println!("numerical rank: {}", numerical_rank(&sv, 1e-9));

    for d in 1..=3 {
        let als = fit_als(&grid, d, 40, 0)?;
        let svd = fit_svd_oracle(&grid, d)?;
        println!(
            "D = {d}: ALS residual {:.3e} after {} sweeps, SVD residual {:.3e}",
            als.residual,
            als.history.len(),
            svd.residual
        );
    }

    if let Some(path) = std::env::args().nth(1) {
        let tables = fit_als(&grid, 2, 40, 0)?;
        if let FactorizedField::Tables(t) = tables_to_field(tables, &grid)? {
            t.save(&path)?;
            println!("wrote {path}");
        }
    }
    Ok(())
}
