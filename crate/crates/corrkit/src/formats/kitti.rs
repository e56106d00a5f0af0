//! KITTI-style 16-bit PNG annotation payloads.
//!
//! Disparity: single 16-bit channel, raw value `round(d * 256)`, 0 meaning
//! invalid. Flow: three 16-bit channels `(round(u * 64) + 2^15,
//! round(v * 64) + 2^15, valid)` where a zero third channel marks the pixel
//! invalid. The payload semantics are fixed here; the PNG codec is not part
//! of the contract.

use std::io::Cursor;

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma, Rgb};

use crate::core::{DisparityMap, DisplacementField};
use crate::error::{Error, Result};

fn decode(bytes: &[u8]) -> Result<DynamicImage> {
    image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map_err(|e| Error::format(0, format!("PNG decode failed: {e}")))
}

fn encode(img: DynamicImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    img.write_to(&mut Cursor::new(&mut out), ImageFormat::Png)
        .map_err(|e| Error::format(0, format!("PNG encode failed: {e}")))?;
    Ok(out)
}

/// Decodes a 16-bit single-channel PNG as disparity. Raw 0 is invalid.
pub fn read_kitti_disp(bytes: &[u8]) -> Result<DisparityMap> {
    let img = match decode(bytes)? {
        DynamicImage::ImageLuma16(img) => img,
        other => {
            return Err(Error::format(
                0,
                format!(
                    "disparity PNG must be 16-bit single-channel, got {:?}",
                    other.color()
                ),
            ))
        }
    };
    let (w, h) = (img.width() as usize, img.height() as usize);
    DisparityMap::from_fn(w, h, |u, v| {
        let raw = img.get_pixel(u as u32, v as u32).0[0];
        (raw != 0).then(|| raw as f64 / 256.0)
    })
}

/// Encodes disparity as a 16-bit single-channel PNG. Invalid pixels get raw
/// value 0; valid disparities below the 1/256 px quantization step are
/// rounded up to the smallest nonzero raw value so the mask survives.
pub fn write_kitti_disp(disp: &DisparityMap) -> Result<Vec<u8>> {
    let (w, h) = (disp.width(), disp.height());
    let mut raw = Vec::with_capacity(w * h);
    for i in 0..w * h {
        raw.push(if disp.valid()[i] {
            (disp.d()[i] * 256.0).round().clamp(1.0, 65535.0) as u16
        } else {
            0
        });
    }
    let img = ImageBuffer::<Luma<u16>, Vec<u16>>::from_raw(w as u32, h as u32, raw).unwrap();
    encode(DynamicImage::ImageLuma16(img))
}

/// Decodes a 16-bit RGB PNG as flow. A zero third channel is invalid.
pub fn read_kitti_flow(bytes: &[u8]) -> Result<DisplacementField> {
    let img = match decode(bytes)? {
        DynamicImage::ImageRgb16(img) => img,
        other => {
            return Err(Error::format(
                0,
                format!(
                    "flow PNG must be 16-bit three-channel, got {:?}",
                    other.color()
                ),
            ))
        }
    };
    let (w, h) = (img.width() as usize, img.height() as usize);
    DisplacementField::from_fn(w, h, |u, v| {
        let [ru, rv, ok] = img.get_pixel(u as u32, v as u32).0;
        (ok != 0).then(|| {
            (
                (ru as f64 - 32768.0) / 64.0,
                (rv as f64 - 32768.0) / 64.0,
            )
        })
    })
}

/// Encodes flow as a 16-bit RGB PNG. Components saturate at the
/// representable range (roughly +-512 px); invalid pixels get a zero third
/// channel.
pub fn write_kitti_flow(field: &DisplacementField) -> Result<Vec<u8>> {
    let (w, h) = (field.width(), field.height());
    let quantize = |x: f64| ((x * 64.0).round() + 32768.0).clamp(0.0, 65535.0) as u16;
    let mut raw = Vec::with_capacity(w * h * 3);
    for i in 0..w * h {
        if field.valid()[i] {
            raw.push(quantize(field.du()[i]));
            raw.push(quantize(field.dv()[i]));
            raw.push(1);
        } else {
            raw.extend_from_slice(&[32768, 32768, 0]);
        }
    }
    let img = ImageBuffer::<Rgb<u16>, Vec<u16>>::from_raw(w as u32, h as u32, raw).unwrap();
    encode(DynamicImage::ImageRgb16(img))
}
