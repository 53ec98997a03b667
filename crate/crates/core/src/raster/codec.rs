//! Binary PPM (P6) / PGM (P5) decoding and encoding.
//!
//! These are the pixel-exact interchange formats; PNG and JPEG decoding is
//! available behind the `image-formats` feature.

use super::{ColorImage, GrayImage};
use crate::error::{Error, Result};

/// Decodes an encoded image payload into an RGB image.
///
/// PPM (P6) and PGM (P5) with maxval 255 are always supported; PGM gray
/// values are replicated across the three channels. With the
/// `image-formats` feature, PNG and JPEG payloads are handled as well.
pub fn decode_image(bytes: &[u8]) -> Result<ColorImage> {
    match bytes.get(..2) {
        Some(b"P6") => decode_pnm(bytes, 3),
        Some(b"P5") => decode_pnm(bytes, 1),
        _ => decode_other(bytes),
    }
}

#[cfg(feature = "image-formats")]
fn decode_other(bytes: &[u8]) -> Result<ColorImage> {
    let img = image::load_from_memory(bytes).map_err(|e| match e {
        image::ImageError::Unsupported(_) => Error::UnsupportedFormat,
        other => Error::CorruptPayload(other.to_string()),
    })?;
    let rgb = img.to_rgb8();
    Ok(ColorImage::new(rgb.width() as usize, rgb.height() as usize, rgb.into_raw()))
}

#[cfg(not(feature = "image-formats"))]
fn decode_other(_bytes: &[u8]) -> Result<ColorImage> {
    Err(Error::UnsupportedFormat)
}

fn decode_pnm(bytes: &[u8], channels: usize) -> Result<ColorImage> {
    let mut pos = 2; // past the magic
    let width = read_header_int(bytes, &mut pos)?;
    let height = read_header_int(bytes, &mut pos)?;
    let maxval = read_header_int(bytes, &mut pos)?;
    if width == 0 || height == 0 {
        return Err(Error::CorruptPayload("zero dimension".into()));
    }
    if maxval != 255 {
        return Err(Error::UnsupportedFormat);
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::CorruptPayload("missing raster separator".into())),
    }
    let need = width * height * channels;
    let raster = bytes
        .get(pos..pos + need)
        .ok_or_else(|| Error::CorruptPayload("truncated raster".into()))?;
    let data = if channels == 3 {
        raster.to_vec()
    } else {
        raster.iter().flat_map(|&v| [v, v, v]).collect()
    };
    Ok(ColorImage::new(width, height, data))
}

/// Parses the next decimal integer in a PNM header, skipping whitespace and
/// `#` comment lines.
fn read_header_int(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while let Some(&b) = bytes.get(*pos) {
                    *pos += 1;
                    if b == b'\n' {
                        break;
                    }
                }
            }
            Some(b) if b.is_ascii_digit() => break,
            _ => return Err(Error::CorruptPayload("truncated header".into())),
        }
    }
    let mut value: usize = 0;
    let mut any = false;
    while let Some(&b) = bytes.get(*pos) {
        if !b.is_ascii_digit() {
            break;
        }
        value = value
            .checked_mul(10)
            .and_then(|v| v.checked_add((b - b'0') as usize))
            .ok_or_else(|| Error::CorruptPayload("header value overflow".into()))?;
        any = true;
        *pos += 1;
    }
    if !any {
        return Err(Error::CorruptPayload("expected integer".into()));
    }
    Ok(value)
}

/// Encodes as binary PPM (P6), the exact inverse of [`decode_image`] for RGB.
pub fn encode_ppm(img: &ColorImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

/// Encodes as binary PGM (P5).
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}
