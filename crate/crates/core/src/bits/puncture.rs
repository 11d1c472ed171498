use super::{CodeRate, SoftBit};
use crate::error::{Error, Result};

/// Drop mother-code bits according to the rate's keep pattern.
pub fn puncture(coded: &[u8], rate: CodeRate) -> Result<Vec<u8>> {
    let pattern = rate.pattern();
    if !coded.len().is_multiple_of(pattern.len()) {
        return Err(Error::BadLength {
            len: coded.len(),
            period: pattern.len(),
        });
    }
    Ok(coded
        .iter()
        .zip(pattern.iter().cycle())
        .filter_map(|(&b, &keep)| keep.then_some(b))
        .collect())
}

/// Reinsert erasures (soft value 0) at the punctured positions.
pub fn depuncture(punctured: &[SoftBit], rate: CodeRate) -> Result<Vec<SoftBit>> {
    let pattern = rate.pattern();
    let kept = rate.kept_per_period();
    if !punctured.len().is_multiple_of(kept) {
        return Err(Error::BadLength {
            len: punctured.len(),
            period: kept,
        });
    }
    let mut out = Vec::with_capacity(punctured.len() / kept * pattern.len());
    for chunk in punctured.chunks_exact(kept) {
        let mut it = chunk.iter();
        for &keep in pattern {
            out.push(if keep { *it.next().unwrap() } else { 0 });
        }
    }
    Ok(out)
}

/// Map hard bits to full-confidence soft values (1 -> +127, 0 -> -127).
pub fn hard_to_soft(bits: &[u8]) -> Vec<SoftBit> {
    bits.iter().map(|&b| if b & 1 == 1 { 127 } else { -127 }).collect()
}
