//! Rate-1/2, K=7 convolutional code (generators 133, 171 octal) and its
//! full-traceback soft-decision Viterbi decoder.

use super::{depuncture, CodeRate, SoftBit};
use crate::error::{Error, Result};

pub const CONSTRAINT_LENGTH: usize = 7;
/// Zero bits appended by the caller to flush the encoder.
pub const TAIL_BITS: usize = CONSTRAINT_LENGTH - 1;

const G0: u8 = 0o133;
const G1: u8 = 0o171;
const N_STATES: usize = 1 << TAIL_BITS;

#[inline]
fn parity(x: u8) -> u8 {
    (x.count_ones() & 1) as u8
}

/// Encoder outputs (A, B) for register contents `reg` (bit 6 = current input).
#[inline]
fn outputs(reg: u8) -> (u8, u8) {
    (parity(reg & G0), parity(reg & G1))
}

/// Encode starting from the all-zero state. Output is A0 B0 A1 B1 ...
pub fn conv_encode(data: &[u8]) -> Vec<u8> {
    let mut state = 0u8;
    let mut out = Vec::with_capacity(2 * data.len());
    for &bit in data {
        let reg = ((bit & 1) << 6) | state;
        let (a, b) = outputs(reg);
        out.push(a);
        out.push(b);
        state = reg >> 1;
    }
    out
}

/// Decode a punctured soft stream produced from `data ‖ 6 zero tail bits`.
/// Returns `data` (tail stripped).
pub fn viterbi_decode(punctured: &[SoftBit], rate: CodeRate) -> Result<Vec<u8>> {
    let mother = depuncture(punctured, rate)?;
    if mother.len() < 2 * TAIL_BITS {
        return Err(Error::BadLength {
            len: punctured.len(),
            period: rate.kept_per_period(),
        });
    }
    let n = mother.len() / 2;
    let mut bits = run(&mother, true)?;
    bits.truncate(n - TAIL_BITS);
    Ok(bits)
}

/// Decode a depunctured (rate-1/2) soft stream without assuming the trellis
/// ends in state zero. Returns one bit per pair of soft values.
pub fn viterbi_decode_unterminated(mother: &[SoftBit]) -> Result<Vec<u8>> {
    run(mother, false)
}

fn run(mother: &[SoftBit], terminated: bool) -> Result<Vec<u8>> {
    if !mother.len().is_multiple_of(2) {
        return Err(Error::BadLength {
            len: mother.len(),
            period: 2,
        });
    }
    let steps = mother.len() / 2;
    if steps == 0 {
        return Ok(Vec::new());
    }

    // Branch sign table: for each (next_state, predecessor choice) the
    // expected encoder outputs mapped to ±1.
    let mut expect = [[(0i32, 0i32); 2]; N_STATES];
    for (ns, e) in expect.iter_mut().enumerate() {
        let u = (ns >> 5) as u8;
        for b in 0..2u8 {
            let s = (((ns as u8) & 0x1f) << 1) | b;
            let (oa, ob) = outputs((u << 6) | s);
            e[b as usize] = (2 * oa as i32 - 1, 2 * ob as i32 - 1);
        }
    }

    const NEG: i32 = i32::MIN / 4;
    let mut metric = [NEG; N_STATES];
    metric[0] = 0;
    let mut next = [0i32; N_STATES];
    let mut decisions: Vec<u64> = Vec::with_capacity(steps);

    for pair in mother.chunks_exact(2) {
        let (sa, sb) = (pair[0] as i32, pair[1] as i32);
        let mut dec = 0u64;
        for ns in 0..N_STATES {
            let base = (ns & 0x1f) << 1;
            let (e0a, e0b) = expect[ns][0];
            let (e1a, e1b) = expect[ns][1];
            let m0 = metric[base] + sa * e0a + sb * e0b;
            let m1 = metric[base | 1] + sa * e1a + sb * e1b;
            if m1 > m0 {
                next[ns] = m1;
                dec |= 1 << ns;
            } else {
                next[ns] = m0;
            }
        }
        // Keep metrics bounded; only differences matter.
        let top = *next.iter().max().unwrap();
        for (m, &v) in metric.iter_mut().zip(next.iter()) {
            *m = if v <= NEG / 2 { NEG } else { v - top };
        }
        decisions.push(dec);
    }

    let mut state = if terminated {
        0usize
    } else {
        // First maximum wins, keeping ties deterministic.
        let mut best = 0;
        for s in 1..N_STATES {
            if metric[s] > metric[best] {
                best = s;
            }
        }
        best
    };
    let mut bits = vec![0u8; steps];
    for t in (0..steps).rev() {
        bits[t] = (state >> 5) as u8;
        let b = ((decisions[t] >> state) & 1) as usize;
        state = ((state & 0x1f) << 1) | b;
    }
    Ok(bits)
}
