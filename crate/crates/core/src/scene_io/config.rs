use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::catalog::{catalog_entry, scene_with_params};
use crate::cache::BakeConfig;
use crate::error::{Error, Result};
use crate::field::{FactorizedField, MlpWeights};
use crate::geometry::Aabb;
use crate::renderer::RenderConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Where the radiance field comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SceneSource {
    Analytic {
        id: String,
        #[serde(default, skip_serializing_if = "Map::is_empty")]
        params: Map<String, Value>,
    },
    Weights {
        path: PathBuf,
    },
    Cache {
        path: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    /// Meshes the `σ − threshold = 0` level set.
    pub threshold: f64,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig { threshold: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub host: String,
    pub port: u16,
    /// Static files served at `/`.
    pub assets: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            host: "127.0.0.1".into(),
            port: 8080,
            assets: None,
            workers: None,
        }
    }
}

/// One-file description of a run, stored as TOML:
///
/// ```toml
/// schema_version = 1
/// components = 8
///
/// [scene]
/// kind = "analytic"
/// id = "spec-sphere"
/// params = { radius = 0.5 }
///
/// [bake]
/// k = 128
/// l = 64
/// dir_mode = "cube"
///
/// [render]
/// termination = 0.001
/// background = [1.0, 1.0, 1.0]
///
/// [service]
/// port = 8080
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    pub schema_version: u32,
    pub scene: SceneSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aabb: Option<Aabb>,
    /// `D` used when fitting factor tables.
    #[serde(default = "default_components")]
    pub components: usize,
    #[serde(default)]
    pub bake: BakeConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub render: RenderConfig,
    #[serde(default)]
    pub service: ServiceConfig,
}

fn default_components() -> usize {
    8
}

impl EngineConfig {
    pub fn new(scene: SceneSource) -> Self {
        EngineConfig {
            schema_version: SCHEMA_VERSION,
            scene,
            aabb: None,
            components: default_components(),
            bake: BakeConfig::default(),
            mesh: MeshConfig::default(),
            render: RenderConfig::default(),
            service: ServiceConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: EngineConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_toml_str(&std::fs::read_to_string(path)?).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} unsupported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if !(2..=4096).contains(&self.bake.k) {
            return bad(format!("bake.k = {} outside [2, 4096]", self.bake.k));
        }
        if !(1..=4096).contains(&self.bake.l) {
            return bad(format!("bake.l = {} outside [1, 4096]", self.bake.l));
        }
        if !(1..=64).contains(&self.components) {
            return bad(format!("components = {} outside [1, 64]", self.components));
        }
        if !(self.mesh.threshold >= 0.0) {
            return bad(format!("mesh.threshold = {} must be non-negative", self.mesh.threshold));
        }
        if let Some(b) = &self.aabb {
            Aabb::new(b.min, b.max)?;
        }
        if self.service.workers == Some(0) {
            return bad("service.workers must be positive".into());
        }
        self.render.validate()?;
        if let SceneSource::Analytic { id, params } = &self.scene {
            scene_with_params(id, params)?;
        }
        Ok(())
    }

    /// Scene bounds: explicit `aabb`, else the catalog entry's, else the
    /// cube `[-1, 1]³`.
    pub fn scene_aabb(&self) -> Aabb {
        self.aabb.unwrap_or_else(|| match &self.scene {
            SceneSource::Analytic { id, .. } => catalog_entry(id).map_or(Aabb::cube(1.0), |e| e.aabb),
            _ => Aabb::cube(1.0),
        })
    }

    /// The field for analytic and weights sources; `None` for a cache.
    pub fn load_field(&self) -> Result<Option<FactorizedField>> {
        match &self.scene {
            SceneSource::Analytic { id, params } => Ok(Some(FactorizedField::Analytic(scene_with_params(id, params)?))),
            SceneSource::Weights { path } => Ok(Some(FactorizedField::Mlp(MlpWeights::load(path)?))),
            SceneSource::Cache { .. } => Ok(None),
        }
    }
}
