//! The `.flo` optical-flow container.
//!
//! Layout, all little-endian: a 4-byte float magic (202021.25, which reads as
//! "PIEH" in ASCII), int32 width, int32 height, then `width * height`
//! interleaved `(u, v)` float32 pairs, row-major top-to-bottom. Pixels whose
//! components are NaN or exceed 1e9 in magnitude are invalid.

use crate::core::DisplacementField;
use crate::error::{Error, Result};

/// Magic float of a `.flo` header.
pub const FLO_MAGIC: f32 = 202021.25;

/// Components at or above this magnitude mark a pixel invalid.
const INVALID_LIMIT: f32 = 1e9;

fn read_f32(bytes: &[u8], offset: usize, what: &str) -> Result<f32> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(Error::format(
            bytes.len(),
            format!("truncated while reading {what}"),
        ));
    }
    Ok(f32::from_le_bytes(bytes[offset..end].try_into().unwrap()))
}

fn read_i32(bytes: &[u8], offset: usize, what: &str) -> Result<i32> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(Error::format(
            bytes.len(),
            format!("truncated while reading {what}"),
        ));
    }
    Ok(i32::from_le_bytes(bytes[offset..end].try_into().unwrap()))
}

/// Decodes a `.flo` byte buffer into a displacement field.
pub fn read_flo(bytes: &[u8]) -> Result<DisplacementField> {
    let magic = read_f32(bytes, 0, "magic")?;
    if magic != FLO_MAGIC {
        return Err(Error::format(
            0,
            format!("bad magic {magic}, expected {FLO_MAGIC}"),
        ));
    }
    let width = read_i32(bytes, 4, "width")?;
    let height = read_i32(bytes, 8, "height")?;
    if width < 1 || height < 1 {
        return Err(Error::format(
            4,
            format!("dimensions must be at least 1x1, got {width}x{height}"),
        ));
    }
    let (width, height) = (width as usize, height as usize);
    let n = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::format(4, "dimension overflow"))?;
    let expected = 12 + n;
    if bytes.len() != expected {
        return Err(Error::format(
            bytes.len().min(expected),
            format!("payload is {} bytes, expected {expected}", bytes.len()),
        ));
    }

    let mut du = Vec::with_capacity(width * height);
    let mut dv = Vec::with_capacity(width * height);
    let mut valid = Vec::with_capacity(width * height);
    for i in 0..width * height {
        let off = 12 + i * 8;
        let u = f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
        let v = f32::from_le_bytes(bytes[off + 4..off + 8].try_into().unwrap());
        let ok = u.is_finite() && v.is_finite() && u.abs() < INVALID_LIMIT && v.abs() < INVALID_LIMIT;
        if ok {
            du.push(u as f64);
            dv.push(v as f64);
        } else {
            du.push(f64::NAN);
            dv.push(f64::NAN);
        }
        valid.push(ok);
    }
    DisplacementField::from_parts(width, height, du, dv, valid)
}

/// Encodes a displacement field as `.flo` bytes. Invalid pixels are written
/// as NaN. Payload precision is float32.
pub fn write_flo(field: &DisplacementField) -> Vec<u8> {
    let (w, h) = (field.width(), field.height());
    let mut out = Vec::with_capacity(12 + w * h * 8);
    out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    out.extend_from_slice(&(w as i32).to_le_bytes());
    out.extend_from_slice(&(h as i32).to_le_bytes());
    for i in 0..w * h {
        let (u, v) = if field.valid()[i] {
            (field.du()[i] as f32, field.dv()[i] as f32)
        } else {
            (f32::NAN, f32::NAN)
        };
        out.extend_from_slice(&u.to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}
