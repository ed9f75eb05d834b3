use serde::{Deserialize, Serialize};

use crate::renderer::{matrix_to_row_major, orbit_to_matrix, OrbitState};

/// One orbit pose and its serialized camera-to-world matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldenVector {
    pub state: OrbitState,
    /// Row-major, as sent in render requests.
    pub matrix: [f64; 16],
}

/// Poses shared with the viewer; both sides must serialize identical
/// matrices for them.
pub fn orbit_golden_vectors() -> Vec<GoldenVector> {
    let poses = [
        ([0.0, 0.0, 0.0], 0.0, 0.0, 2.0),
        ([0.0, 0.0, 0.0], 0.0, std::f64::consts::FRAC_PI_4, 2.0),
        ([0.0, 0.0, 0.0], std::f64::consts::FRAC_PI_2, 0.0, 3.0),
        ([0.1, -0.2, 0.3], 0.7, -0.4, 2.5),
        ([0.0, 0.5, 0.0], -2.3, 1.2, 4.0),
    ];
    poses
        .into_iter()
        .map(|(target, azimuth, elevation, distance)| {
            let state = OrbitState {
                target,
                azimuth,
                elevation,
                distance,
                fov: 0.8,
            };
            GoldenVector {
                // `+ 0.0` folds -0.0, which JSON.stringify cannot emit.
                matrix: matrix_to_row_major(&orbit_to_matrix(&state)).map(|v| v + 0.0),
                state,
            }
        })
        .collect()
}

/// Fixture file contents: pretty JSON with shortest round-trip floats.
pub fn orbit_golden_json() -> String {
    let mut s = serde_json::to_string_pretty(&orbit_golden_vectors()).expect("plain data serializes");
    s.push('\n');
    s
}
