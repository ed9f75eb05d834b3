//! Camera datasets, the engine configuration file and the analytic scene
//! catalog.
//!
//! `transforms.json` follows the common synthetic-dataset layout:
//!
//! | key | meaning |
//! |-----|---------|
//! | `camera_angle_x` | horizontal field of view, radians |
//! | `frames[].file_path` | image path relative to the manifest, `.png` implied when there is no extension |
//! | `frames[].transform_matrix` | 4×4 camera-to-world matrix, row-major; the camera looks down its local `−z` with `+y` up |
//! | `w`, `h` (optional) | image size in pixels; otherwise read from the frame images |

mod catalog;
mod config;
mod manifest;

pub use catalog::{analytic_catalog, catalog_entry, scene_with_params, CatalogEntry, CATALOG_IDS};
pub use config::{EngineConfig, MeshConfig, SceneSource, ServiceConfig, SCHEMA_VERSION};
pub use manifest::{DatasetManifest, Frame, ROTATION_WARN_TOLERANCE};
