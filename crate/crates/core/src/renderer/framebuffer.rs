use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Linear RGBA image, rows top to bottom.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameBuffer {
    width: u32,
    height: u32,
    linear: Vec<[f32; 4]>,
}

impl FrameBuffer {
    pub fn new(width: u32, height: u32, fill: [f32; 4]) -> Self {
        FrameBuffer {
            width,
            height,
            linear: vec![fill; width as usize * height as usize],
        }
    }

    pub fn from_pixels(width: u32, height: u32, linear: Vec<[f32; 4]>) -> Result<Self> {
        let n = width as usize * height as usize;
        if linear.len() != n {
            return Err(Error::dims(n, linear.len()));
        }
        Ok(FrameBuffer { width, height, linear })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[[f32; 4]] {
        &self.linear
    }

    pub fn pixel(&self, x: u32, y: u32) -> [f32; 4] {
        self.linear[y as usize * self.width as usize + x as usize]
    }

    /// Clamped, rounded 8-bit RGBA, row-major from the top-left corner.
    pub fn to_rgba8(&self) -> Vec<u8> {
        self.linear
            .iter()
            .flat_map(|px| px.map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8))
            .collect()
    }

    pub fn write_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let w = BufWriter::new(File::create(path)?);
        let mut enc = png::Encoder::new(w, self.width, self.height);
        enc.set_color(png::ColorType::Rgba);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(png_err)?;
        writer.write_image_data(&self.to_rgba8()).map_err(png_err)?;
        writer.finish().map_err(png_err)
    }

    /// Reads an 8- or 16-bit PNG; channels are scaled to `[0, 1]`.
    pub fn read_png(path: impl AsRef<Path>) -> Result<Self> {
        let mut dec = png::Decoder::new(BufReader::new(File::open(path)?));
        dec.set_transformations(png::Transformations::normalize_to_color8());
        let mut reader = dec.read_info().map_err(png_err)?;
        let mut buf = vec![0; reader.output_buffer_size()];
        let info = reader.next_frame(&mut buf).map_err(png_err)?;
        let bytes = &buf[..info.buffer_size()];
        let to_f = |v: u8| v as f32 / 255.0;
        let linear: Vec<[f32; 4]> = match info.color_type {
            png::ColorType::Rgba => bytes
                .chunks_exact(4)
                .map(|c| [c[0], c[1], c[2], c[3]].map(to_f))
                .collect(),
            png::ColorType::Rgb => bytes
                .chunks_exact(3)
                .map(|c| [to_f(c[0]), to_f(c[1]), to_f(c[2]), 1.0])
                .collect(),
            png::ColorType::GrayscaleAlpha => bytes
                .chunks_exact(2)
                .map(|c| {
                    let g = to_f(c[0]);
                    [g, g, g, to_f(c[1])]
                })
                .collect(),
            png::ColorType::Grayscale => bytes
                .iter()
                .map(|&c| {
                    let g = to_f(c);
                    [g, g, g, 1.0]
                })
                .collect(),
            png::ColorType::Indexed => return Err(Error::parse("unexpanded indexed PNG")),
        };
        FrameBuffer::from_pixels(info.width, info.height, linear)
    }

    /// Little-endian color PFM (`PF`, scale −1), rows bottom to top. Alpha is
    /// dropped.
    pub fn write_pfm(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        write!(w, "PF\n{} {}\n-1.0\n", self.width, self.height)?;
        for row in self.linear.chunks_exact(self.width as usize).rev() {
            for px in row {
                for v in &px[..3] {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `PF` (RGB) or `Pf` (gray) files of either byte order.
    pub fn read_pfm(path: impl AsRef<Path>) -> Result<Self> {
        let mut bytes = Vec::new();
        File::open(path)?.read_to_end(&mut bytes)?;
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::parse("truncated PFM header"));
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        // Exactly one whitespace byte separates the header from the data.
        pos += 1;
        let channels = match fields[0].as_str() {
            "PF" => 3,
            "Pf" => 1,
            other => return Err(Error::parse(format!("not a PFM file (tag {other:?})"))),
        };
        let parse = |s: &str, what: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::parse(format!("bad PFM {what} {s:?}")))
        };
        let width = parse(&fields[1], "width")? as u32;
        let height = parse(&fields[2], "height")? as u32;
        let little = parse(&fields[3], "scale")? < 0.0;
        let n = width as usize * height as usize;
        let data = bytes.get(pos..).unwrap_or_default();
        if data.len() != n * channels * 4 {
            return Err(Error::parse(format!(
                "PFM payload is {} bytes, expected {}",
                data.len(),
                n * channels * 4
            )));
        }
        let values: Vec<f32> = data
            .chunks_exact(4)
            .map(|c| {
                let b = c.try_into().unwrap();
                if little {
                    f32::from_le_bytes(b)
                } else {
                    f32::from_be_bytes(b)
                }
            })
            .collect();
        let mut linear = Vec::with_capacity(n);
        for row in values.chunks_exact(width as usize * channels).rev() {
            for px in row.chunks_exact(channels) {
                linear.push(if channels == 3 {
                    [px[0], px[1], px[2], 1.0]
                } else {
                    [px[0], px[0], px[0], 1.0]
                });
            }
        }
        FrameBuffer::from_pixels(width, height, linear)
    }
}

fn png_err(e: impl std::fmt::Display) -> Error {
    Error::parse(format!("png: {e}"))
}

/// Peak signal-to-noise ratio over the RGB channels with peak 1.0; `+∞` for
/// identical images.
pub fn psnr(a: &FrameBuffer, b: &FrameBuffer) -> Result<f64> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::dims(a.linear.len(), b.linear.len()));
    }
    let mut sum = 0.0;
    for (p, q) in a.linear.iter().zip(&b.linear) {
        for c in 0..3 {
            let d = p[c] as f64 - q[c] as f64;
            sum += d * d;
        }
    }
    if sum == 0.0 {
        return Ok(f64::INFINITY);
    }
    let mse = sum / (3 * a.linear.len()) as f64;
    Ok(-10.0 * mse.log10())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(w: u32, h: u32) -> FrameBuffer {
        let px = (0..w * h)
            .map(|i| {
                let (x, y) = ((i % w) as f32, (i / w) as f32);
                [x / w as f32, y / h as f32, 0.25, 1.0]
            })
            .collect();
        FrameBuffer::from_pixels(w, h, px).unwrap()
    }

    #[test]
    fn psnr_identical_is_infinite() {
        let a = gradient(8, 4);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
    }

    #[test]
    fn psnr_uniform_offset() {
        let a = FrameBuffer::new(5, 5, [0.25, 0.25, 0.25, 1.0]);
        let b = FrameBuffer::new(5, 5, [0.75, 0.75, 0.75, 1.0]);
        // MSE = 0.25 exactly.
        assert!((psnr(&a, &b).unwrap() - 10.0 * 4f64.log10()).abs() < 1e-12);
        let c = FrameBuffer::new(5, 5, [0.35, 0.35, 0.35, 1.0]);
        assert!((psnr(&a, &c).unwrap() - 20.0).abs() < 1e-5);
    }

    #[test]
    fn psnr_matches_scalar_recomputation() {
        let a = gradient(6, 3);
        let mut px = a.pixels().to_vec();
        px[4][1] += 0.2;
        px[17][2] -= 0.05;
        let b = FrameBuffer::from_pixels(6, 3, px).unwrap();
        let d1 = (a.pixels()[4][1] + 0.2 - a.pixels()[4][1]) as f64;
        let d2 = (a.pixels()[17][2] - 0.05 - a.pixels()[17][2]) as f64;
        let mse = (d1 * d1 + d2 * d2) / 54.0;
        assert!((psnr(&a, &b).unwrap() + 10.0 * mse.log10()).abs() < 1e-9);
    }

    #[test]
    fn psnr_dimension_mismatch() {
        assert!(matches!(
            psnr(&gradient(4, 4), &gradient(4, 5)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rgba8_clamps_and_rounds() {
        let fb = FrameBuffer::new(1, 1, [-0.5, 0.5, 2.0, 1.0]);
        assert_eq!(fb.to_rgba8(), vec![0, 128, 255, 255]);
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.png");
        let fb = gradient(7, 5);
        fb.write_png(&path).unwrap();
        let back = FrameBuffer::read_png(&path).unwrap();
        assert_eq!(back.to_rgba8(), fb.to_rgba8());
    }

    #[test]
    fn pfm_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pfm");
        let fb = gradient(7, 5);
        fb.write_pfm(&path).unwrap();
        assert_eq!(FrameBuffer::read_pfm(&path).unwrap(), fb);
        let bytes = std::fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"PF\n7 5\n-1.0\n"));
        assert_eq!(bytes.len(), 12 + 7 * 5 * 12);
    }

    #[test]
    fn pfm_rejects_short_payload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.pfm");
        std::fs::write(&path, b"PF\n2 2\n-1.0\n\0\0\0\0").unwrap();
        assert!(matches!(FrameBuffer::read_pfm(&path), Err(Error::Parse(_))));
    }
}
