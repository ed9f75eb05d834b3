//! Wire format.
//!
//! Clients send JSON text messages:
//!
//! ```json
//! {"type": "render", "id": 7, "matrix": [16 numbers, row-major camera-to-world],
//!  "fov": 0.8, "width": 256, "height": 256, "quality": "full"}
//! ```
//!
//! The server answers each request with either one binary frame or one
//! `dropped` notice. Binary frames carry a 24-byte little-endian header
//! followed by RGBA8 pixels, row-major from the top-left corner:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "RFRM"
//! 4       8     request id, u64
//! 12      2     width, u16
//! 14      2     height, u16
//! 16      4     render time in microseconds, u32
//! 20      1     flags: bit 0 set for the preview tier
//! 21      3     reserved, zero
//! ```
//!
//! Text notices are `{"type": "dropped", "id": 3, "superseded_by": 5}` and
//! `{"type": "error", "id": 7, "reason": "..."}` (`id` is null when the
//! message could not be parsed).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FRAME_MAGIC: [u8; 4] = *b"RFRM";
pub const FRAME_HEADER_LEN: usize = 24;
pub const FLAG_PREVIEW: u8 = 1;
pub const MIN_DIM: u32 = 16;
pub const MAX_DIM: u32 = 2048;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quality {
    #[default]
    Full,
    /// Rendered at half resolution; the client upsamples.
    Preview,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderRequest {
    pub id: u64,
    pub matrix: [f64; 16],
    pub fov: f64,
    pub width: u32,
    pub height: u32,
    #[serde(default)]
    pub quality: Quality,
}

impl RenderRequest {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("width", self.width), ("height", self.height)] {
            if !(MIN_DIM..=MAX_DIM).contains(&v) {
                return Err(Error::InvalidArgument(format!(
                    "{name} {v} outside [{MIN_DIM}, {MAX_DIM}]"
                )));
            }
        }
        if self.matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("matrix must be finite".into()));
        }
        Ok(())
    }

    /// Dimensions actually rendered for this tier.
    pub fn render_size(&self) -> (u32, u32) {
        match self.quality {
            Quality::Full => (self.width, self.height),
            Quality::Preview => (self.width.div_ceil(2), self.height.div_ceil(2)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ClientMessage {
    Render(RenderRequest),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Notice {
    Dropped { id: u64, superseded_by: u64 },
    Error { id: Option<u64>, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameHeader {
    pub id: u64,
    pub width: u16,
    pub height: u16,
    pub micros: u32,
    pub flags: u8,
}

impl FrameHeader {
    pub fn encode(&self, pixels: &[u8]) -> Vec<u8> {
        let mut out = Vec::with_capacity(FRAME_HEADER_LEN + pixels.len());
        out.extend_from_slice(&FRAME_MAGIC);
        out.extend_from_slice(&self.id.to_le_bytes());
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        out.extend_from_slice(&self.micros.to_le_bytes());
        out.extend_from_slice(&[self.flags, 0, 0, 0]);
        out.extend_from_slice(pixels);
        out
    }

    /// Splits a binary message into header and pixels, checking the payload
    /// length.
    pub fn decode(bytes: &[u8]) -> Result<(FrameHeader, &[u8])> {
        if bytes.len() < FRAME_HEADER_LEN || bytes[..4] != FRAME_MAGIC {
            return Err(Error::parse("not a frame message"));
        }
        let h = FrameHeader {
            id: u64::from_le_bytes(bytes[4..12].try_into().unwrap()),
            width: u16::from_le_bytes(bytes[12..14].try_into().unwrap()),
            height: u16::from_le_bytes(bytes[14..16].try_into().unwrap()),
            micros: u32::from_le_bytes(bytes[16..20].try_into().unwrap()),
            flags: bytes[20],
        };
        let pixels = &bytes[FRAME_HEADER_LEN..];
        if pixels.len() != 4 * h.width as usize * h.height as usize {
            return Err(Error::parse(format!(
                "payload is {} bytes for a {}x{} frame",
                pixels.len(),
                h.width,
                h.height
            )));
        }
        Ok((h, pixels))
    }

    pub fn millis(&self) -> f64 {
        self.micros as f64 / 1e3
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_round_trip() {
        let h = FrameHeader {
            id: 0x0102_0304_0506_0708,
            width: 17,
            height: 16,
            micros: 12345,
            flags: FLAG_PREVIEW,
        };
        let pixels = vec![9u8; 4 * 17 * 16];
        let bytes = h.encode(&pixels);
        assert_eq!(&bytes[..4], b"RFRM");
        assert_eq!(bytes.len(), FRAME_HEADER_LEN + pixels.len());
        let (back, px) = FrameHeader::decode(&bytes).unwrap();
        assert_eq!(back, h);
        assert_eq!(px, &pixels[..]);
        assert!(FrameHeader::decode(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn request_json() {
        let text =
            r#"{"type":"render","id":7,"matrix":[1,0,0,0,0,1,0,0,0,0,1,2,0,0,0,1],"fov":0.8,"width":32,"height":24}"#;
        let ClientMessage::Render(req) = serde_json::from_str(text).unwrap();
        assert_eq!(req.id, 7);
        assert_eq!(req.quality, Quality::Full);
        req.validate().unwrap();
        let big = RenderRequest {
            width: 4096,
            ..req.clone()
        };
        assert!(big.validate().is_err());
        let preview = RenderRequest {
            quality: Quality::Preview,
            width: 33,
            ..req
        };
        assert_eq!(preview.render_size(), (17, 12));
    }

    #[test]
    fn notices_are_tagged() {
        let n = serde_json::to_string(&Notice::Dropped {
            id: 3,
            superseded_by: 5,
        })
        .unwrap();
        assert_eq!(n, r#"{"type":"dropped","id":3,"superseded_by":5}"#);
    }
}
