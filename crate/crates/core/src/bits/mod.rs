//! Bit-level channel coding shared by the transmitter and receiver.
//!
//! Bits are carried as `u8` values that are always 0 or 1. Soft decisions
//! are signed 8-bit log-likelihoods where positive favours a 1 and zero
//! marks an erasure.

mod conv;
mod crc;
mod interleave;
mod puncture;
mod scrambler;

pub use conv::{conv_encode, viterbi_decode, viterbi_decode_unterminated, CONSTRAINT_LENGTH, TAIL_BITS};
pub use crc::crc32;
pub use interleave::{deinterleave, interleave, interleave_permutation};
pub use puncture::{depuncture, hard_to_soft, puncture};
pub use scrambler::{scramble, Scrambler, DEFAULT_SEED};

use serde::{Deserialize, Serialize};

/// Soft bit: positive means "1 is more likely", 0 is an erasure.
pub type SoftBit = i8;

/// Convolutional code rate after puncturing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CodeRate {
    Half,
    TwoThirds,
    ThreeQuarters,
}

impl CodeRate {
    /// Keep-mask over one puncturing period of the rate-1/2 mother code output.
    pub fn pattern(self) -> &'static [bool] {
        match self {
            CodeRate::Half => &[true, true],
            CodeRate::TwoThirds => &[true, true, true, false],
            CodeRate::ThreeQuarters => &[true, true, true, false, false, true],
        }
    }

    pub fn period(self) -> usize {
        self.pattern().len()
    }

    pub fn kept_per_period(self) -> usize {
        self.pattern().iter().filter(|&&k| k).count()
    }

    /// (numerator, denominator)
    pub fn ratio(self) -> (usize, usize) {
        match self {
            CodeRate::Half => (1, 2),
            CodeRate::TwoThirds => (2, 3),
            CodeRate::ThreeQuarters => (3, 4),
        }
    }
}

/// Expand bytes into bits, least significant bit first.
pub fn bytes_to_bits(bytes: &[u8]) -> Vec<u8> {
    bytes.iter().flat_map(|&b| (0..8).map(move |i| (b >> i) & 1)).collect()
}

/// Pack bits (LSB first) into bytes. A trailing partial byte is zero-padded.
pub fn bits_to_bytes(bits: &[u8]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| c.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | ((b & 1) << i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_bit_order_is_lsb_first() {
        assert_eq!(bytes_to_bits(&[0x01]), vec![1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(bits_to_bytes(&bytes_to_bits(&[0xA5, 0x3C])), vec![0xA5, 0x3C]);
    }

    #[test]
    fn rates_keep_expected_fraction() {
        assert_eq!(CodeRate::Half.kept_per_period(), 2);
        assert_eq!(CodeRate::TwoThirds.kept_per_period(), 3);
        assert_eq!(CodeRate::ThreeQuarters.kept_per_period(), 4);
    }
}
