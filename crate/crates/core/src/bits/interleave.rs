//! Per-symbol two-step block interleaver for 48-subcarrier OFDM.

use crate::error::{Error, Result};

const DATA_SUBCARRIERS: usize = 48;

/// `perm[k]` is the output position of input bit `k`.
pub fn interleave_permutation(bits_per_subcarrier: usize) -> Result<Vec<usize>> {
    if ![1, 2, 4, 6].contains(&bits_per_subcarrier) {
        return Err(Error::BitsPerSubcarrier(bits_per_subcarrier));
    }
    let ncbps = DATA_SUBCARRIERS * bits_per_subcarrier;
    let s = (bits_per_subcarrier / 2).max(1);
    Ok((0..ncbps)
        .map(|k| {
            let i = (ncbps / 16) * (k % 16) + k / 16;
            s * (i / s) + (i + ncbps - (16 * i / ncbps)) % s
        })
        .collect())
}

fn check(len: usize, bits_per_subcarrier: usize, coded_bits_per_symbol: usize) -> Result<Vec<usize>> {
    let perm = interleave_permutation(bits_per_subcarrier)?;
    if coded_bits_per_symbol != perm.len() {
        return Err(Error::BlockLength {
            expected: perm.len(),
            got: coded_bits_per_symbol,
        });
    }
    if len != coded_bits_per_symbol {
        return Err(Error::BlockLength {
            expected: coded_bits_per_symbol,
            got: len,
        });
    }
    Ok(perm)
}

pub fn interleave<T: Copy + Default>(
    bits: &[T],
    bits_per_subcarrier: usize,
    coded_bits_per_symbol: usize,
) -> Result<Vec<T>> {
    let perm = check(bits.len(), bits_per_subcarrier, coded_bits_per_symbol)?;
    let mut out = vec![T::default(); bits.len()];
    for (k, &j) in perm.iter().enumerate() {
        out[j] = bits[k];
    }
    Ok(out)
}

pub fn deinterleave<T: Copy + Default>(
    bits: &[T],
    bits_per_subcarrier: usize,
    coded_bits_per_symbol: usize,
) -> Result<Vec<T>> {
    let perm = check(bits.len(), bits_per_subcarrier, coded_bits_per_symbol)?;
    Ok(perm.iter().map(|&j| bits[j]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bpsk_table() {
        // For BPSK the second permutation is the identity, so the table is
        // the 16-column write / row read of the first permutation.
        let perm = interleave_permutation(1).unwrap();
        let expect: Vec<usize> = (0..48).map(|k| 3 * (k % 16) + k / 16).collect();
        assert_eq!(perm, expect);
        assert_eq!(&perm[..6], &[0, 3, 6, 9, 12, 15]);
        assert_eq!(perm[16], 1);
    }

    #[test]
    fn inverse_for_all_constellations() {
        for bpsc in [1, 2, 4, 6] {
            let n = 48 * bpsc;
            let x: Vec<u16> = (0..n as u16).collect();
            let y = interleave(&x, bpsc, n).unwrap();
            let mut sorted = y.clone();
            sorted.sort();
            assert_eq!(sorted, x);
            assert_eq!(deinterleave(&y, bpsc, n).unwrap(), x);
        }
    }

    #[test]
    fn wrong_length() {
        assert!(interleave(&[0u8; 47], 1, 48).is_err());
        assert!(interleave(&[0u8; 96], 1, 96).is_err());
        assert!(interleave_permutation(3).is_err());
    }
}
