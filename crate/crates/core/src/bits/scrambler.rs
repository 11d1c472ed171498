//! Frame-synchronous additive scrambler, polynomial x^7 + x^4 + 1.

use crate::error::{Error, Result};

/// Seed 1011101 (x7 first), overridable per packet.
pub const DEFAULT_SEED: u8 = 0b101_1101;

/// Seven-bit LFSR. Bit 6 of the state holds x7, bit 3 holds x4.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scrambler {
    state: u8,
}

impl Scrambler {
    pub fn new(seed: u8) -> Result<Self> {
        if seed == 0 || seed > 0x7f {
            return Err(Error::InvalidSeed(seed));
        }
        Ok(Self { state: seed })
    }

    /// Rebuild the register from seven consecutive sequence bits.
    ///
    /// After seven clocks the register contents are exactly the last seven
    /// output bits, so a receiver that knows the first seven plaintext bits
    /// (all-zero SERVICE bits) can resynchronise from the ciphertext.
    pub fn from_sequence(first7: &[u8]) -> Option<Self> {
        if first7.len() < 7 {
            return None;
        }
        let state = first7[..7].iter().fold(0u8, |acc, &b| (acc << 1) | (b & 1));
        (state != 0).then_some(Self { state })
    }

    pub fn state(&self) -> u8 {
        self.state
    }

    /// Clock once and return the sequence bit.
    pub fn next_bit(&mut self) -> u8 {
        let fb = ((self.state >> 6) ^ (self.state >> 3)) & 1;
        self.state = ((self.state << 1) | fb) & 0x7f;
        fb
    }

    pub fn apply(&mut self, bits: &mut [u8]) {
        for b in bits {
            *b ^= self.next_bit();
        }
    }
}

/// Scramble (or descramble) a bit sequence starting from `seed`.
pub fn scramble(data: &[u8], seed: u8) -> Result<Vec<u8>> {
    let mut s = Scrambler::new(seed)?;
    let mut out = data.to_vec();
    s.apply(&mut out);
    Ok(out)
}
