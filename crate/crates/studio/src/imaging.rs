//! Image encoding for top views and thumbnails.

use std::io::Cursor;

use image::{ImageError, ImageFormat};

/// Re-encodes any decodable image (top views are PPM) as PNG.
pub fn to_png(bytes: &[u8]) -> Result<Vec<u8>, ImageError> {
    let img = image::load_from_memory(bytes)?;
    let mut png = Vec::new();
    img.write_to(&mut Cursor::new(&mut png), ImageFormat::Png)?;
    Ok(png)
}
