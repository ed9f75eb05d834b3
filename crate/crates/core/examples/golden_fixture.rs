//! Writes the orbit-camera fixture shared with the viewer.
//!
//! ```text
//! cargo run --example golden_fixture -- crates/core/tests/fixtures/orbit_golden.json
//! ```

fn main() -> std::io::Result<()> {
    let json = radiance_cache::service::orbit_golden_json();
    match std::env::args().nth(1) {
        Some(path) => std::fs::write(path, json),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}
