use glam::{DMat3, DMat4, DVec3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Direction, Ray};

/// Allowed deviation of the rotation block from orthonormal.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-5;

/// Pinhole camera. Camera space looks down `−z` with `+y` up; pixel rows
/// run top to bottom.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Camera {
    c2w: DMat4,
    fov_x: f64,
    width: u32,
    height: u32,
    near: f64,
    far: f64,
}

/// Largest absolute entry of `RᵀR − I`.
pub fn orthonormality_error(m: &DMat4) -> f64 {
    let r = DMat3::from_mat4(*m);
    let g = r.transpose() * r - DMat3::IDENTITY;
    g.to_cols_array().iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

impl Camera {
    pub fn new(c2w: DMat4, fov_x: f64, width: u32, height: u32, near: f64, far: f64) -> Result<Self> {
        let err = orthonormality_error(&c2w);
        if !(err <= ORTHONORMAL_TOLERANCE) {
            return Err(Error::InvalidCamera(format!(
                "rotation not orthonormal (deviation {err:.3e})"
            )));
        }
        Self::lenient(c2w, fov_x, width, height, near, far)
    }

    /// Like [`Camera::new`] without the orthonormality check; ray
    /// directions are still normalized.
    pub fn lenient(c2w: DMat4, fov_x: f64, width: u32, height: u32, near: f64, far: f64) -> Result<Self> {
        if !c2w.is_finite() || c2w.determinant() == 0.0 {
            return Err(Error::InvalidCamera("transform must be finite and invertible".into()));
        }
        if !(fov_x > 0.0 && fov_x < std::f64::consts::PI) {
            return Err(Error::InvalidCamera(format!("fov {fov_x} outside (0, π)")));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidCamera("image must be non-empty".into()));
        }
        if !(near < far) || near < 0.0 {
            return Err(Error::InvalidCamera(format!("need 0 <= near < far, got {near}, {far}")));
        }
        Ok(Camera {
            c2w,
            fov_x,
            width,
            height,
            near,
            far,
        })
    }

    /// Camera at `eye` looking at `target`.
    pub fn look_at(eye: DVec3, target: DVec3, up: DVec3, fov_x: f64, width: u32, height: u32) -> Result<Self> {
        Camera::new(look_at_matrix(eye, target, up), fov_x, width, height, 0.0, 1e3)
    }

    pub fn c2w(&self) -> &DMat4 {
        &self.c2w
    }

    pub fn fov_x(&self) -> f64 {
        self.fov_x
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn near(&self) -> f64 {
        self.near
    }

    pub fn far(&self) -> f64 {
        self.far
    }

    /// `0.5 · W / tan(0.5 · fov_x)`.
    pub fn focal(&self) -> f64 {
        0.5 * self.width as f64 / (0.5 * self.fov_x).tan()
    }

    pub fn with_size(&self, width: u32, height: u32) -> Self {
        Camera { width, height, ..*self }
    }

    pub fn with_bounds(&self, near: f64, far: f64) -> Result<Self> {
        Camera::lenient(self.c2w, self.fov_x, self.width, self.height, near, far)
    }

    /// Ray through the center of pixel `(px, py)`, optionally offset by
    /// `jitter` pixels (each component in `[-0.5, 0.5]`).
    pub fn generate_ray(&self, px: u32, py: u32, jitter: Option<(f64, f64)>) -> Result<Ray> {
        if px >= self.width || py >= self.height {
            return Err(Error::OutOfImage {
                x: px,
                y: py,
                width: self.width,
                height: self.height,
            });
        }
        let (jx, jy) = jitter.unwrap_or((0.0, 0.0));
        let f = self.focal();
        let x = (px as f64 + 0.5 + jx - 0.5 * self.width as f64) / f;
        let y = -(py as f64 + 0.5 + jy - 0.5 * self.height as f64) / f;
        let d = self.c2w.transform_vector3(DVec3::new(x, y, -1.0));
        let dir = Direction::normalize(d).ok_or_else(|| Error::InvalidCamera("degenerate ray".into()))?;
        Ray::new(self.c2w.w_axis.truncate(), dir, self.near, self.far)
    }
}

/// Camera-to-world matrix for a camera at `eye` looking at `target`.
pub fn look_at_matrix(eye: DVec3, target: DVec3, up: DVec3) -> DMat4 {
    let forward = (target - eye).normalize();
    let right = forward.cross(up).normalize();
    let true_up = right.cross(forward);
    DMat4::from_cols(
        right.extend(0.0),
        true_up.extend(0.0),
        (-forward).extend(0.0),
        eye.extend(1.0),
    )
}

/// Orbit-camera parameters shared with the interactive viewer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitState {
    pub target: [f64; 3],
    pub azimuth: f64,
    pub elevation: f64,
    pub distance: f64,
    pub fov: f64,
}

/// Eye at `target + distance · (cos e · sin a, sin e, cos e · cos a)`
/// looking at the target with `+y` up.
pub fn orbit_to_matrix(s: &OrbitState) -> DMat4 {
    let (sa, ca) = s.azimuth.sin_cos();
    let (se, ce) = s.elevation.sin_cos();
    let target = DVec3::from(s.target);
    let eye = target + s.distance * DVec3::new(ce * sa, se, ce * ca);
    look_at_matrix(eye, target, DVec3::Y)
}

/// Row-major flattening used on the wire and in fixtures.
pub fn matrix_to_row_major(m: &DMat4) -> [f64; 16] {
    m.transpose().to_cols_array()
}

pub fn matrix_from_row_major(v: &[f64; 16]) -> DMat4 {
    DMat4::from_cols_array(v).transpose()
}
