//! Bit-exact tensor file I/O.
//!
//! Two on-disk formats are supported:
//!
//! * `FT64`, the native tensor format: ASCII magic `FT64`, one unsigned byte
//!   for the number of dims, that many little-endian `u32` dims, then the
//!   row-major payload as little-endian IEEE-754 `f64`. Round trips are
//!   bit-exact for any finite payload, so files can serve as golden data
//!   across implementations.
//! * PGM (`P5` binary / `P2` ASCII), 8-bit grayscale only. Pixel `v` maps to
//!   `v/255` on read; writes use `round(clamp(x, 0, 1) * 255)` with halves
//!   rounding up.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

const MAGIC: &[u8; 4] = b"FT64";

fn format_err(offset: u64, message: impl Into<String>) -> Error {
    Error::Format {
        offset,
        message: message.into(),
    }
}

/// Serialize a tensor into the FT64 byte layout.
pub fn tensor_to_bytes(t: &Tensor) -> Result<Vec<u8>> {
    let ndim = t.shape().len();
    if ndim > u8::MAX as usize {
        return Err(Error::invalid(
            "shape",
            format!("{ndim} dims exceed the format limit of 255"),
        ));
    }
    let mut out = Vec::with_capacity(5 + 4 * ndim + 8 * t.len());
    out.extend_from_slice(MAGIC);
    out.push(ndim as u8);
    for &d in t.shape() {
        let d32 = u32::try_from(d)
            .map_err(|_| Error::invalid("shape", format!("dim {d} exceeds u32 range")))?;
        out.extend_from_slice(&d32.to_le_bytes());
    }
    for &v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Parse a tensor from FT64 bytes, reporting the byte offset of any defect.
pub fn tensor_from_bytes(bytes: &[u8]) -> Result<Tensor> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(format_err(0, "bad magic, expected \"FT64\""));
    }
    if bytes.len() < 5 {
        return Err(format_err(4, "truncated before ndim byte"));
    }
    let ndim = bytes[4] as usize;
    let mut off = 5usize;
    let mut shape = Vec::with_capacity(ndim);
    for i in 0..ndim {
        let end = off + 4;
        if bytes.len() < end {
            return Err(format_err(off as u64, format!("truncated in dim {i}")));
        }
        let d = u32::from_le_bytes(bytes[off..end].try_into().unwrap()) as usize;
        shape.push(d);
        off = end;
    }
    let count = shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| {
            format_err(
                5,
                format!("dim product overflows usize for shape {shape:?}"),
            )
        })?;
    let payload = &bytes[off..];
    if payload.len() != 8 * count {
        return Err(format_err(
            off as u64,
            format!(
                "payload holds {} values but header declares {count}",
                payload.len() / 8
            ),
        ));
    }
    let mut data = Vec::with_capacity(count);
    for (i, chunk) in payload.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(format_err((off + 8 * i) as u64, "non-finite payload value"));
        }
        data.push(v);
    }
    Tensor::from_vec(shape, data)
}

pub fn write_tensor(path: impl AsRef<Path>, t: &Tensor) -> Result<()> {
    let bytes = tensor_to_bytes(t)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    let bytes = fs::read(path)?;
    tensor_from_bytes(&bytes)
}

/// Read an 8-bit grayscale PGM (`P5` or `P2`) into a 2-d tensor in `[0, 1]`.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<Tensor> {
    let bytes = fs::read(path)?;
    pgm_from_bytes(&bytes)
}

/// Write a 2-d tensor as binary PGM. Values are clamped to `[0, 1]` and
/// quantized with `round(x * 255)`, halves rounding up.
pub fn write_pgm(path: impl AsRef<Path>, t: &Tensor) -> Result<()> {
    let bytes = pgm_to_bytes(t)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn pgm_to_bytes(t: &Tensor) -> Result<Vec<u8>> {
    let [h, w] = *t.shape() else {
        return Err(Error::DimensionMismatch(format!(
            "PGM requires a 2-d tensor, got shape {:?}",
            t.shape()
        )));
    };
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(
        t.data()
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    Ok(out)
}

pub fn pgm_from_bytes(bytes: &[u8]) -> Result<Tensor> {
    let mut cursor = PgmCursor { bytes, pos: 0 };
    let magic = cursor.token()?;
    let binary = match magic.as_str() {
        "P5" => true,
        "P2" => false,
        other => {
            return Err(format_err(
                0,
                format!("unsupported PGM magic {other:?}, want P5 or P2"),
            ))
        }
    };
    let w = cursor.number()? as usize;
    let h = cursor.number()? as usize;
    let maxval = cursor.number()?;
    if maxval != 255 {
        return Err(format_err(
            cursor.pos as u64,
            format!("unsupported maxval {maxval}, want 255"),
        ));
    }
    let count = h
        .checked_mul(w)
        .ok_or_else(|| format_err(cursor.pos as u64, "pixel count overflows usize"))?;
    let mut data = Vec::with_capacity(count);
    if binary {
        // Exactly one whitespace byte separates the header from the raster.
        cursor.pos += 1;
        let raster = &bytes[cursor.pos.min(bytes.len())..];
        if raster.len() < count {
            return Err(format_err(
                cursor.pos as u64,
                format!(
                    "raster holds {} bytes but header declares {count}",
                    raster.len()
                ),
            ));
        }
        data.extend(raster[..count].iter().map(|&b| b as f64 / 255.0));
    } else {
        for _ in 0..count {
            let v = cursor.number()?;
            if v > 255 {
                return Err(format_err(
                    cursor.pos as u64,
                    format!("sample {v} exceeds maxval"),
                ));
            }
            data.push(v as f64 / 255.0);
        }
    }
    Tensor::from_vec(vec![h, w], data)
}

struct PgmCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl PgmCursor<'_> {
    fn skip_ws_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<String> {
        self.skip_ws_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(format_err(start as u64, "unexpected end of header"));
        }
        String::from_utf8(self.bytes[start..self.pos].to_vec())
            .map_err(|_| format_err(start as u64, "non-ASCII header token"))
    }

    fn number(&mut self) -> Result<u32> {
        let start = self.pos;
        let tok = self.token()?;
        tok.parse::<u32>()
            .map_err(|_| format_err(start as u64, format!("expected number, got {tok:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ft64_round_trip() {
        let t = Tensor::from_vec(vec![2, 3], vec![1.0, -2.5, 3.25, 0.0, -0.0, 1e-300]).unwrap();
        let back = tensor_from_bytes(&tensor_to_bytes(&t).unwrap()).unwrap();
        assert_eq!(back.shape(), t.shape());
        for (a, b) in back.data().iter().zip(t.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn ft64_bad_magic() {
        let mut bytes = tensor_to_bytes(&Tensor::zeros(vec![2]).unwrap()).unwrap();
        bytes[0] = b'X';
        match tensor_from_bytes(&bytes) {
            Err(Error::Format { offset: 0, .. }) => {}
            other => panic!("expected bad-magic format error, got {other:?}"),
        }
    }

    #[test]
    fn ft64_truncated_payload() {
        // Header declares 2x3 but carry only 5 values.
        let t = Tensor::zeros(vec![2, 3]).unwrap();
        let mut bytes = tensor_to_bytes(&t).unwrap();
        bytes.truncate(bytes.len() - 8);
        match tensor_from_bytes(&bytes) {
            Err(Error::Format { message, .. }) => {
                assert!(message.contains('5') && message.contains('6'), "{message}");
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn ft64_handles_leading_channel_dim() {
        // Multi-channel images are stored with a leading channel dim.
        let t = Tensor::from_vec(vec![2, 3, 4], (0..24).map(|i| i as f64 * 0.5).collect()).unwrap();
        let back = tensor_from_bytes(&tensor_to_bytes(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn ft64_dim_product_overflow() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"FT64");
        bytes.push(3);
        for _ in 0..3 {
            bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        }
        match tensor_from_bytes(&bytes) {
            Err(Error::Format { message, .. }) => {
                assert!(message.contains("overflow"), "{message}")
            }
            other => panic!("expected overflow format error, got {other:?}"),
        }
    }

    #[test]
    fn pgm_zero_image_and_endpoints() {
        let bytes = pgm_to_bytes(&Tensor::zeros(vec![8, 8]).unwrap()).unwrap();
        let t = pgm_from_bytes(&bytes).unwrap();
        assert!(t.data().iter().all(|&v| v == 0.0));

        let one = Tensor::from_vec(vec![1, 1], vec![1.0]).unwrap();
        let back = pgm_from_bytes(&pgm_to_bytes(&one).unwrap()).unwrap();
        assert_eq!(back.data()[0], 1.0);
    }

    #[test]
    fn pgm_rounds_half_up() {
        // 0.5 * 255 = 127.5 must quantize to 128.
        let t = Tensor::from_vec(vec![1, 1], vec![0.5]).unwrap();
        let bytes = pgm_to_bytes(&t).unwrap();
        assert_eq!(*bytes.last().unwrap(), 128u8);
    }

    #[test]
    fn pgm_ascii_variant_and_comments() {
        let src = b"P2\n# comment\n2 2\n255\n0 128\n255 64\n";
        let t = pgm_from_bytes(src).unwrap();
        assert_eq!(t.shape(), &[2, 2]);
        assert_eq!(t.data()[1], 128.0 / 255.0);
    }

    #[test]
    fn pgm_rejects_color_and_wrong_maxval() {
        assert!(pgm_from_bytes(b"P6\n2 2\n255\n").is_err());
        assert!(pgm_from_bytes(b"P2\n1 1\n65535\n0\n").is_err());
    }
}
