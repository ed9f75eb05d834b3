use std::io::Write;

use super::CollisionMesh;
use crate::error::Result;

/// Binary STL: 80-byte header, triangle count, then normal + 3 vertices +
/// attribute word per triangle, all `f32` little-endian.
pub fn write_stl(mesh: &CollisionMesh, mut out: impl Write) -> Result<()> {
    let mut header = [0u8; 80];
    header[..15].copy_from_slice(b"collision mesh\0");
    out.write_all(&header)?;
    out.write_all(&(mesh.triangles.len() as u32).to_le_bytes())?;
    for i in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.triangle(i);
        let n = (b - a).cross(c - a).normalize_or_zero();
        for v in [n, a, b, c] {
            for x in v.to_array() {
                out.write_all(&(x as f32).to_le_bytes())?;
            }
        }
        out.write_all(&[0, 0])?;
    }
    Ok(())
}

/// Wavefront OBJ with 1-based indices.
pub fn write_obj(mesh: &CollisionMesh, mut out: impl Write) -> Result<()> {
    for v in &mesh.vertices {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for t in &mesh.triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use glam::DVec3;

    fn quad() -> CollisionMesh {
        CollisionMesh {
            vertices: vec![DVec3::ZERO, DVec3::X, DVec3::new(1.0, 1.0, 0.0), DVec3::Y],
            triangles: vec![[0, 1, 2], [0, 2, 3]],
            threshold: 0.0,
        }
    }

    #[test]
    fn stl_size() {
        let mut buf = Vec::new();
        write_stl(&quad(), &mut buf).unwrap();
        assert_eq!(buf.len(), 84 + 2 * 50);
        assert_eq!(u32::from_le_bytes(buf[80..84].try_into().unwrap()), 2);
    }

    #[test]
    fn obj_lines() {
        let mut buf = Vec::new();
        write_obj(&quad(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 4);
        assert!(text.contains("f 1 3 4"));
    }
}
