//! The PFM float-image container.
//!
//! Header is three ASCII tokens: `"Pf"` (1 channel) or `"PF"` (3 channels),
//! then `width height`, then a scale whose sign encodes endianness (negative
//! means little-endian). Exactly one whitespace byte separates the scale from
//! the float32 payload, which is stored row-major with rows bottom-to-top.
//! [`PfmImage`] holds rows top-down; the flip happens at the byte boundary.

use crate::core::DisparityMap;
use crate::error::{Error, Result};

/// A decoded PFM image: rows top-down, samples channel-interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct PfmImage {
    pub width: usize,
    pub height: usize,
    /// 1 (`Pf`) or 3 (`PF`).
    pub channels: usize,
    pub samples: Vec<f32>,
}

impl PfmImage {
    pub fn new(width: usize, height: usize, channels: usize, samples: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Construction(format!(
                "image dimensions must be at least 1x1, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::Construction(format!(
                "channel count must be 1 or 3, got {channels}"
            )));
        }
        if samples.len() != width * height * channels {
            return Err(Error::Construction(format!(
                "sample count {} does not match {width}x{height}x{channels}",
                samples.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            samples,
        })
    }
}

struct Tokenizer<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Tokenizer<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn token(&mut self, what: &str) -> Result<&'a str> {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format(start, format!("missing {what} token")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| Error::format(start, format!("{what} token is not ASCII")))
    }
}

/// Decodes a PFM byte buffer.
pub fn read_pfm(bytes: &[u8]) -> Result<PfmImage> {
    let mut tok = Tokenizer::new(bytes);
    let header = tok.token("header")?;
    let channels = match header {
        "Pf" => 1usize,
        "PF" => 3usize,
        other => {
            return Err(Error::format(
                0,
                format!("bad header {other:?}, expected \"Pf\" or \"PF\""),
            ))
        }
    };
    let wpos = tok.pos;
    let width: usize = tok
        .token("width")?
        .parse()
        .map_err(|_| Error::format(wpos, "width is not a positive integer"))?;
    let hpos = tok.pos;
    let height: usize = tok
        .token("height")?
        .parse()
        .map_err(|_| Error::format(hpos, "height is not a positive integer"))?;
    if width == 0 || height == 0 {
        return Err(Error::format(wpos, "dimensions must be at least 1x1"));
    }
    let spos = tok.pos;
    let scale: f32 = tok
        .token("scale")?
        .parse()
        .map_err(|_| Error::format(spos, "scale is not numeric"))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::format(spos, "scale must be finite and nonzero"));
    }
    let little_endian = scale < 0.0;
    // Exactly one whitespace byte between the scale token and the payload.
    if tok.pos >= bytes.len() || !bytes[tok.pos].is_ascii_whitespace() {
        return Err(Error::format(tok.pos, "missing separator before payload"));
    }
    let data_start = tok.pos + 1;

    let n = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::format(wpos, "dimension overflow"))?;
    let expected = data_start + n * 4;
    if bytes.len() != expected {
        return Err(Error::format(
            bytes.len().min(expected),
            format!("payload is {} bytes, expected {expected}", bytes.len()),
        ));
    }

    // File rows run bottom-to-top; fill the top-down buffer back to front.
    let mut samples = vec![0.0f32; n];
    let row_len = width * channels;
    for file_row in 0..height {
        let mem_row = height - 1 - file_row;
        for i in 0..row_len {
            let off = data_start + (file_row * row_len + i) * 4;
            let raw: [u8; 4] = bytes[off..off + 4].try_into().unwrap();
            samples[mem_row * row_len + i] = if little_endian {
                f32::from_le_bytes(raw)
            } else {
                f32::from_be_bytes(raw)
            };
        }
    }
    PfmImage::new(width, height, channels, samples)
}

/// Encodes a PFM image, always little-endian (scale -1.0).
pub fn write_pfm(img: &PfmImage) -> Vec<u8> {
    let header = if img.channels == 1 { "Pf" } else { "PF" };
    let mut out = format!("{header}\n{} {}\n-1.0\n", img.width, img.height).into_bytes();
    let row_len = img.width * img.channels;
    for file_row in 0..img.height {
        let mem_row = img.height - 1 - file_row;
        for i in 0..row_len {
            out.extend_from_slice(&img.samples[mem_row * row_len + i].to_le_bytes());
        }
    }
    out
}

/// Interprets a 1-channel PFM as disparity. Non-finite values (the +inf
/// Middlebury sentinel) and negative values decode as invalid pixels.
pub fn pfm_to_disparity(img: &PfmImage) -> Result<DisparityMap> {
    if img.channels != 1 {
        return Err(Error::InvalidArgument(format!(
            "disparity PFM must have 1 channel, got {}",
            img.channels
        )));
    }
    DisparityMap::from_fn(img.width, img.height, |u, v| {
        let x = img.samples[v * img.width + u];
        (x.is_finite() && x >= 0.0).then(|| x as f64)
    })
}

/// Encodes a disparity map as a 1-channel PFM image, writing +inf at invalid
/// pixels. Payload precision is float32.
pub fn disparity_to_pfm(disp: &DisparityMap) -> PfmImage {
    let samples = disp
        .d()
        .iter()
        .zip(disp.valid())
        .map(|(&d, &ok)| if ok { d as f32 } else { f32::INFINITY })
        .collect();
    PfmImage::new(disp.width(), disp.height(), 1, samples).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn minimal_grayscale_header() {
        let mut bytes = b"Pf\n2 1\n-1.0\n".to_vec();
        bytes.extend_from_slice(&1.25f32.to_le_bytes());
        bytes.extend_from_slice(&(-3.5f32).to_le_bytes());
        let img = read_pfm(&bytes).unwrap();
        assert_eq!((img.width, img.height, img.channels), (2, 1, 1));
        assert_eq!(img.samples, vec![1.25, -3.5]);
    }

    #[test]
    fn big_endian_scale_decodes() {
        let mut bytes = b"Pf\n1 1\n1.0\n".to_vec();
        bytes.extend_from_slice(&3.5f32.to_be_bytes());
        let img = read_pfm(&bytes).unwrap();
        assert_eq!(img.samples, vec![3.5]);
    }

    #[test]
    fn rows_are_flipped() {
        // File order is bottom row first, so memory row 0 is the file's last.
        let mut bytes = b"Pf\n1 2\n-1.0\n".to_vec();
        bytes.extend_from_slice(&10.0f32.to_le_bytes());
        bytes.extend_from_slice(&20.0f32.to_le_bytes());
        let img = read_pfm(&bytes).unwrap();
        assert_eq!(img.samples, vec![20.0, 10.0]);
    }

    #[test]
    fn round_trip_bit_identical() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let samples: Vec<f32> = (0..8 * 8 * 3).map(|_| rng.gen_range(-1e4..1e4)).collect();
        let img = PfmImage::new(8, 8, 3, samples).unwrap();
        let back = read_pfm(&write_pfm(&img)).unwrap();
        assert_eq!(back, img);
        // And the re-encoded bytes are identical too.
        assert_eq!(write_pfm(&back), write_pfm(&img));
    }

    #[test]
    fn infinity_is_invalid_disparity() {
        let img = PfmImage::new(2, 1, 1, vec![f32::INFINITY, 4.0]).unwrap();
        let disp = pfm_to_disparity(&img).unwrap();
        assert!(!disp.is_valid(0, 0));
        assert_eq!(disp.get(1, 0), Some(4.0));
    }

    #[test]
    fn disparity_round_trip() {
        let disp = DisparityMap::from_fn(3, 2, |u, v| {
            if (u + v) % 3 == 0 {
                None
            } else {
                Some((u * 2 + v) as f64)
            }
        })
        .unwrap();
        let back = pfm_to_disparity(&disparity_to_pfm(&disp)).unwrap();
        assert_eq!(back, disp);
    }

    #[test]
    fn malformed_inputs_rejected() {
        assert!(read_pfm(b"PX\n1 1\n-1.0\n\0\0\0\0").is_err());
        assert!(read_pfm(b"Pf\n1 1\nabc\n\0\0\0\0").is_err());
        assert!(read_pfm(b"Pf\n1 1\n-1.0\n\0\0").is_err());
        assert!(read_pfm(b"Pf\n0 1\n-1.0\n").is_err());
        assert!(read_pfm(b"").is_err());
        assert!(read_pfm(b"Pf\n1 1\n-1.0").is_err());
    }
}
