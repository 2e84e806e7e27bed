use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageFormat, RgbImage};

use crate::error::{PaintError, Result};
use crate::raster::Raster;

/// Decode an image as RGB with values in [0, 1].
pub fn load_image(path: &Path) -> Result<Raster> {
    let img = image::open(path)?.to_rgb8();
    let (w, h) = img.dimensions();
    let data = img
        .into_raw()
        .into_iter()
        .map(|v| v as f64 / 255.0)
        .collect();
    Raster::from_vec(w as usize, h as usize, 3, data)
}

/// Clamp to [0, 1] and round half to even onto 8 bits.
pub fn quantize(r: &Raster) -> Vec<u8> {
    r.data()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round_ties_even() as u8)
        .collect()
}

fn to_dynamic(r: &Raster) -> Result<DynamicImage> {
    let (w, h) = (r.width() as u32, r.height() as u32);
    let bytes = quantize(r);
    let bad = || PaintError::shape("raster size does not fit its buffer");
    match r.channels() {
        1 => Ok(DynamicImage::ImageLuma8(
            GrayImage::from_raw(w, h, bytes).ok_or_else(bad)?,
        )),
        3 => Ok(DynamicImage::ImageRgb8(
            RgbImage::from_raw(w, h, bytes).ok_or_else(bad)?,
        )),
        c => Err(PaintError::shape(format!(
            "cannot encode a {c}-channel raster"
        ))),
    }
}

/// PNG bytes of a one- or three-channel raster.
pub fn encode_png(r: &Raster) -> Result<Vec<u8>> {
    let mut out = Cursor::new(Vec::new());
    to_dynamic(r)?.write_to(&mut out, ImageFormat::Png)?;
    Ok(out.into_inner())
}

/// Write a raster as PNG.
pub fn save_image(path: &Path, r: &Raster) -> Result<()> {
    std::fs::write(path, encode_png(r)?)?;
    Ok(())
}
