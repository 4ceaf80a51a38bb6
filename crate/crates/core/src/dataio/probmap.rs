//! `PFG1` probability-map files.
//!
//! Layout: the ASCII magic `PFG1`, then `width` and `height` as little-endian
//! `u32`, then `width * height` little-endian IEEE-754 `f32` values in row-major
//! order. Nothing follows the payload.

use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{ProbMap, Validate};

pub const MAGIC: &[u8; 4] = b"PFG1";
const HEADER_LEN: usize = 12;

/// Values are narrowed to `f32`; maps read from a `PFG1` file re-encode bit-identically.
pub fn encode_probmap(map: &ProbMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + map.values.len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(map.width as u32).to_le_bytes());
    out.extend_from_slice(&(map.height as u32).to_le_bytes());
    for &v in &map.values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_probmap(bytes: &[u8]) -> Result<ProbMap> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("truncated header: {} bytes", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Format(format!("dimensions {width}x{height} overflow")))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < expected {
        return Err(Error::Format(format!(
            "truncated payload: {} of {expected} bytes",
            payload.len()
        )));
    }
    if payload.len() > expected {
        return Err(Error::Format(format!(
            "{} trailing bytes after payload",
            payload.len() - expected
        )));
    }
    let mut values = Vec::with_capacity(width * height);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::Format(format!("non-finite value at index {i}")));
        }
        values.push(f64::from(v));
    }
    let map = ProbMap {
        width,
        height,
        values,
    };
    map.validate()?;
    Ok(map)
}

pub fn read_probmap(path: &Path) -> Result<ProbMap> {
    decode_probmap(&std::fs::read(path)?)
}

pub fn write_probmap(map: &ProbMap, path: &Path) -> Result<()> {
    map.validate()?;
    super::write_atomic(path, &encode_probmap(map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_pixel_layout() {
        let bytes = encode_probmap(&ProbMap::filled(1, 1, 0.5));
        assert_eq!(
            bytes,
            [
                0x50, 0x46, 0x47, 0x31, 0x01, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x00,
                0x00, 0x00, 0x3F
            ]
        );
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode_probmap(&ProbMap::filled(1, 1, 0.5));
        bytes[3] = b'2';
        match decode_probmap(&bytes) {
            Err(Error::Format(msg)) => assert_eq!(msg, "bad magic"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn truncated_payload() {
        let bytes = encode_probmap(&ProbMap::filled(3, 2, 0.1));
        assert!(decode_probmap(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_probmap(&bytes[..7]).is_err());
    }

    #[test]
    fn non_finite_value() {
        let mut bytes = encode_probmap(&ProbMap::filled(1, 1, 0.5));
        bytes[12..16].copy_from_slice(&f32::NAN.to_le_bytes());
        match decode_probmap(&bytes) {
            Err(Error::Format(msg)) => assert!(msg.contains("non-finite")),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn file_bytes_round_trip(values in proptest::collection::vec(0.0f32..=1.0, 35)) {
            let mut bytes = Vec::from(*MAGIC);
            bytes.extend_from_slice(&7u32.to_le_bytes());
            bytes.extend_from_slice(&5u32.to_le_bytes());
            for v in &values {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            let map = decode_probmap(&bytes).unwrap();
            prop_assert_eq!(encode_probmap(&map), bytes);
        }
    }
}
