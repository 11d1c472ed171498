//! Image files as link payloads: a 12-byte integrity header in front of the
//! raw file bytes, and byte-level comparison of what came back.
//!
//! Header layout: magic `NFIM`, original length (u32 LE), CRC-32 of the
//! body (u32 LE).

use crate::bits::crc32;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const MAGIC: [u8; 4] = *b"NFIM";
pub const HEADER_LEN: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Integrity {
    Exact,
    CrcMismatch,
    Truncated,
}

pub fn encode_image(file_bytes: &[u8]) -> Result<Vec<u8>> {
    if file_bytes.is_empty() {
        return Err(Error::EmptyFile);
    }
    let len = u32::try_from(file_bytes.len()).map_err(|_| Error::Config("image larger than 4 GiB".into()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + file_bytes.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(&crc32(file_bytes).to_le_bytes());
    out.extend_from_slice(file_bytes);
    Ok(out)
}

/// Best-effort decode. Bytes are returned even when degraded.
pub fn decode_image(payload: &[u8]) -> (Vec<u8>, Integrity) {
    if payload.len() < HEADER_LEN || payload[..4] != MAGIC {
        let body = payload.get(HEADER_LEN..).unwrap_or_default().to_vec();
        return (body, Integrity::Truncated);
    }
    let len = u32::from_le_bytes(payload[4..8].try_into().unwrap()) as usize;
    let crc = u32::from_le_bytes(payload[8..12].try_into().unwrap());
    let body = &payload[HEADER_LEN..];
    if body.len() < len {
        return (body.to_vec(), Integrity::Truncated);
    }
    let body = &body[..len];
    let integrity = if crc32(body) == crc {
        Integrity::Exact
    } else {
        Integrity::CrcMismatch
    };
    (body.to_vec(), integrity)
}

/// Differing bytes over the common length plus the length difference.
pub fn compare_images(tx: &[u8], rx: &[u8]) -> (usize, f64) {
    let common = tx.len().min(rx.len());
    let errors = tx[..common].iter().zip(&rx[..common]).filter(|(a, b)| a != b).count() + tx.len().abs_diff(rx.len());
    let denom = tx.len().max(rx.len());
    let ratio = if denom == 0 { 0.0 } else { errors as f64 / denom as f64 };
    (errors, ratio)
}

pub const TEST_IMAGE_SIZE: usize = 64;

/// Deterministic 64×64 8-bit greyscale test card as a binary PGM.
pub fn test_image() -> Vec<u8> {
    let n = TEST_IMAGE_SIZE;
    let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
    for y in 0..n {
        for x in 0..n {
            // Diagonal gradient with a checkerboard and a centred ring.
            let grad = ((x + y) * 255 / (2 * n - 2)) as u8;
            let check = if ((x / 8) + (y / 8)) % 2 == 0 { 0 } else { 40 };
            let (dx, dy) = (x as i32 - 32, y as i32 - 32);
            let r2 = dx * dx + dy * dy;
            let ring = if (14 * 14..=18 * 18).contains(&r2) { 255 } else { 0 };
            out.push(grad.saturating_add(check).max(ring));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fragment_count_for_12000_byte_file() {
        let p = encode_image(&vec![3u8; 12_000]).unwrap();
        assert_eq!(p.len(), 12_012);
        assert_eq!(crate::framing::fragment(&p, 2304).unwrap().len(), 6);
    }

    #[test]
    fn empty_file() {
        assert_eq!(encode_image(&[]), Err(Error::EmptyFile));
    }

    #[test]
    fn degradations() {
        let img = test_image();
        let p = encode_image(&img).unwrap();
        assert_eq!(decode_image(&p), (img.clone(), Integrity::Exact));
        let mut bad = p.clone();
        bad[100] ^= 0x10;
        let (bytes, i) = decode_image(&bad);
        assert_eq!(i, Integrity::CrcMismatch);
        assert_eq!(bytes.len(), img.len());
        assert_eq!(decode_image(&p[..p.len() / 2]).1, Integrity::Truncated);
        assert_eq!(decode_image(&p[4..]).1, Integrity::Truncated);
    }

    #[test]
    fn comparisons() {
        let a = vec![0u8; 1000];
        assert_eq!(compare_images(&a, &a), (0, 0.0));
        let mut b = a.clone();
        b[10] = 1;
        assert_eq!(compare_images(&a, &b), (1, 0.001));
        assert_eq!(compare_images(&a, &[]), (1000, 1.0));
    }

    #[test]
    fn test_image_is_a_pgm() {
        let img = test_image();
        assert!(img.starts_with(b"P5\n64 64\n255\n"));
        assert_eq!(img.len(), 13 + 64 * 64);
        assert_eq!(img, test_image());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn round_trip(data in proptest::collection::vec(any::<u8>(), 1..20_000)) {
            let (back, i) = decode_image(&encode_image(&data).unwrap());
            prop_assert_eq!(i, Integrity::Exact);
            prop_assert_eq!(back, data);
        }
    }
}
