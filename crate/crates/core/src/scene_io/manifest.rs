use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use glam::DMat4;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::renderer::{orthonormality_error, Camera};

/// Rotation deviation above which a frame is flagged.
pub const ROTATION_WARN_TOLERANCE: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Frame {
    pub file_path: String,
    /// Camera-to-world, row-major as stored in the file.
    pub transform_matrix: [[f64; 4]; 4],
}

impl Frame {
    pub fn c2w(&self) -> DMat4 {
        DMat4::from_cols_array_2d(&self.transform_matrix).transpose()
    }
}

/// A `transforms.json` camera set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DatasetManifest {
    pub camera_angle_x: f64,
    pub frames: Vec<Frame>,
    #[serde(rename = "w", skip_serializing_if = "Option::is_none")]
    pub width: Option<u32>,
    #[serde(rename = "h", skip_serializing_if = "Option::is_none")]
    pub height: Option<u32>,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

fn number(v: &Value, what: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::parse(format!("{what}: expected a number, found {v}")))
}

fn field<'a>(obj: &'a Value, key: &str, ctx: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| Error::MissingField(format!("{ctx}{key}")))
}

fn dimension(v: &Value, what: &str) -> Result<u32> {
    let x = number(v, what)?;
    if x < 1.0 || x.fract() != 0.0 || x > u32::MAX as f64 {
        return Err(Error::parse(format!("{what}: expected a positive integer, found {v}")));
    }
    Ok(x as u32)
}

fn png_size(path: &Path) -> Result<(u32, u32)> {
    let reader = png::Decoder::new(BufReader::new(File::open(path)?))
        .read_info()
        .map_err(|e| Error::parse(format!("{}: {e}", path.display())))?;
    let info = reader.info();
    Ok((info.width, info.height))
}

impl DatasetManifest {
    /// Parses manifest JSON. Image dimensions come from `w`/`h` when
    /// present.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let root: Value = serde_json::from_str(text)
            .map_err(|e| Error::parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        if !root.is_object() {
            return Err(Error::parse("manifest root must be an object"));
        }
        let camera_angle_x = number(field(&root, "camera_angle_x", "")?, "camera_angle_x")?;
        let frames_v = field(&root, "frames", "")?
            .as_array()
            .ok_or_else(|| Error::parse("frames: expected an array"))?;
        if frames_v.is_empty() {
            return Err(Error::parse("frames: at least one frame required"));
        }
        let mut frames = Vec::with_capacity(frames_v.len());
        let mut warnings = Vec::new();
        for (i, f) in frames_v.iter().enumerate() {
            let ctx = format!("frames[{i}].");
            let file_path = field(f, "file_path", &ctx)?
                .as_str()
                .ok_or_else(|| Error::parse(format!("{ctx}file_path: expected a string")))?
                .to_owned();
            let rows = field(f, "transform_matrix", &ctx)?
                .as_array()
                .filter(|r| r.len() == 4)
                .ok_or_else(|| Error::parse(format!("{ctx}transform_matrix: expected 4 rows")))?;
            let mut m = [[0.0; 4]; 4];
            for (r, row) in rows.iter().enumerate() {
                let row = row
                    .as_array()
                    .filter(|c| c.len() == 4)
                    .ok_or_else(|| Error::parse(format!("{ctx}transform_matrix[{r}]: expected 4 numbers")))?;
                for (c, v) in row.iter().enumerate() {
                    m[r][c] = number(v, &format!("{ctx}transform_matrix[{r}][{c}]"))?;
                }
            }
            let frame = Frame {
                file_path,
                transform_matrix: m,
            };
            let c2w = frame.c2w();
            if !c2w.is_finite() || c2w.determinant() == 0.0 {
                return Err(Error::parse(format!("{ctx}transform_matrix is not invertible")));
            }
            let dev = orthonormality_error(&c2w);
            if dev > ROTATION_WARN_TOLERANCE {
                let msg = format!("{ctx}transform_matrix rotation deviates from orthonormal by {dev:.3e}");
                log::warn!("{msg}");
                warnings.push(msg);
            }
            frames.push(frame);
        }
        let width = root.get("w").map(|v| dimension(v, "w")).transpose()?;
        let height = root.get("h").map(|v| dimension(v, "h")).transpose()?;
        Ok(DatasetManifest {
            camera_angle_x,
            frames,
            width,
            height,
            warnings,
        })
    }

    /// Loads a manifest; without `w`/`h` the dimensions are read from the
    /// frame images next to it, which must all agree.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut m = Self::from_json_str(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::parse(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if m.width.is_none() || m.height.is_none() {
            let base = path.parent().unwrap_or(Path::new("."));
            let mut size = None;
            for f in &m.frames {
                let mut img = base.join(&f.file_path);
                if img.extension().is_none() {
                    img.set_extension("png");
                }
                if !img.exists() {
                    continue;
                }
                let s = png_size(&img)?;
                match size {
                    None => size = Some(s),
                    Some(prev) if prev != s => {
                        return Err(Error::InvalidArgument(format!(
                            "{} is {}x{}, other frames are {}x{}",
                            img.display(),
                            s.0,
                            s.1,
                            prev.0,
                            prev.1
                        )))
                    }
                    _ => {}
                }
            }
            if let Some((w, h)) = size {
                m.width.get_or_insert(w);
                m.height.get_or_insert(h);
            }
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::parse(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Camera for frame `index` with the given near/far bounds.
    pub fn camera(&self, index: usize, near: f64, far: f64) -> Result<Camera> {
        let frame = self
            .frames
            .get(index)
            .ok_or_else(|| Error::InvalidArgument(format!("frame {index} out of range")))?;
        let (Some(w), Some(h)) = (self.width, self.height) else {
            return Err(Error::InvalidArgument(
                "image dimensions unresolved; set `w` and `h`".into(),
            ));
        };
        Camera::lenient(frame.c2w(), self.camera_angle_x, w, h, near, far)
    }

    pub fn cameras(&self, near: f64, far: f64) -> Result<Vec<Camera>> {
        (0..self.frames.len()).map(|i| self.camera(i, near, far)).collect()
    }
}
