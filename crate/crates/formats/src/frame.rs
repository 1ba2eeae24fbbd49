//! Camera frames as handed to consumers.

use std::io::Cursor;

use crate::{FormatError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    Jpeg,
    Png,
    /// Tightly packed 8-bit pixels, row-major.
    Raw { width: u32, height: u32, channels: u8 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub kind: FrameKind,
    pub bytes: Vec<u8>,
}

pub(crate) fn sniff(bytes: &[u8]) -> Option<FrameKind> {
    if bytes.starts_with(&[0xff, 0xd8, 0xff]) {
        Some(FrameKind::Jpeg)
    } else if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
        Some(FrameKind::Png)
    } else {
        None
    }
}

impl Frame {
    /// Wraps encoded image bytes, identifying the codec from the magic bytes.
    pub fn encoded(bytes: Vec<u8>) -> Result<Self> {
        match sniff(&bytes) {
            Some(kind) => Ok(Frame { kind, bytes }),
            None => Err(FormatError::Unsupported("unknown image encoding (neither JPEG nor PNG)".into())),
        }
    }

    pub fn raw(width: u32, height: u32, channels: u8, bytes: Vec<u8>) -> Result<Self> {
        let need = width as usize * height as usize * channels as usize;
        if bytes.len() != need || !matches!(channels, 1 | 3 | 4) {
            return Err(FormatError::decode(
                "raw frame",
                format!("{width}x{height}x{channels} needs {need} bytes, got {}", bytes.len()),
            ));
        }
        Ok(Frame {
            kind: FrameKind::Raw { width, height, channels },
            bytes,
        })
    }

    /// Bytes and MIME type suitable for a browser. Raw frames become PNG.
    pub fn to_web(&self) -> Result<(&'static str, Vec<u8>)> {
        match self.kind {
            FrameKind::Jpeg => Ok(("image/jpeg", self.bytes.clone())),
            FrameKind::Png => Ok(("image/png", self.bytes.clone())),
            FrameKind::Raw { width, height, channels } => {
                let color = match channels {
                    1 => image::ExtendedColorType::L8,
                    3 => image::ExtendedColorType::Rgb8,
                    _ => image::ExtendedColorType::Rgba8,
                };
                let mut out = Vec::new();
                image::write_buffer_with_format(&mut Cursor::new(&mut out), &self.bytes, width, height, color, image::ImageFormat::Png)
                    .map_err(|e| FormatError::decode("png encode", e))?;
                Ok(("image/png", out))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_frame_becomes_png() {
        let f = Frame::raw(2, 1, 3, vec![255, 0, 0, 0, 255, 0]).unwrap();
        let (mime, png) = f.to_web().unwrap();
        assert_eq!(mime, "image/png");
        let img = image::load_from_memory(&png).unwrap().to_rgb8();
        assert_eq!(img.as_raw(), &f.bytes);
    }

    #[test]
    fn sniffing() {
        assert!(Frame::encoded(vec![0xff, 0xd8, 0xff, 0xe0]).is_ok());
        assert!(Frame::encoded(b"GIF89a".to_vec()).is_err());
        assert!(Frame::raw(2, 2, 3, vec![0; 11]).is_err());
    }
}
