use std::io::Cursor;

use image::{ImageFormat, RgbImage};

/// Small deterministic RGB test pattern.
pub fn pattern(width: u32, height: u32, seed: u8) -> RgbImage {
    RgbImage::from_fn(width, height, |x, y| image::Rgb([seed, (x * 16) as u8, (y * 16) as u8]))
}

pub fn png(width: u32, height: u32, seed: u8) -> Vec<u8> {
    let mut out = Cursor::new(Vec::new());
    pattern(width, height, seed).write_to(&mut out, ImageFormat::Png).unwrap();
    out.into_inner()
}

pub fn jpeg(width: u32, height: u32, seed: u8) -> Vec<u8> {
    let mut out = Cursor::new(Vec::new());
    pattern(width, height, seed).write_to(&mut out, ImageFormat::Jpeg).unwrap();
    out.into_inner()
}
