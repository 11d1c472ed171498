//! 20 MHz non-HT OFDM numerology, subcarrier maps, MCS table and
//! constellations shared by the transmitter and receiver.

use crate::bits::{CodeRate, Scrambler};
use crate::error::{Error, Result};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::sync::{Arc, OnceLock};

pub const SAMPLE_RATE: f64 = 20e6;
pub const FFT_LEN: usize = 64;
pub const CP_LEN: usize = 16;
pub const SYMBOL_LEN: usize = FFT_LEN + CP_LEN;
pub const N_DATA: usize = 48;
pub const N_OCCUPIED: usize = 52;
pub const STF_LEN: usize = 160;
pub const LTF_LEN: usize = 160;
pub const PREAMBLE_LEN: usize = STF_LEN + LTF_LEN;
pub const SERVICE_BITS: usize = 16;
pub const SUBCARRIER_SPACING: f64 = SAMPLE_RATE / FFT_LEN as f64;

pub const PILOT_SUBCARRIERS: [i32; 4] = [-21, -7, 7, 21];
pub const PILOT_VALUES: [f64; 4] = [1.0, 1.0, 1.0, -1.0];

/// Long training sequence on subcarriers -26..=26.
pub const LTF_SEQUENCE: [i8; 53] = [
    1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 0, 1, -1, -1, 1, 1, -1, 1,
    -1, 1, -1, -1, -1, -1, -1, 1, 1, -1, -1, 1, -1, 1, -1, 1, 1, 1, 1,
];

/// Short training subcarriers and the sign of their (1+j) value.
pub const STF_TONES: [(i32, f64); 12] = [
    (-24, 1.0),
    (-20, -1.0),
    (-16, 1.0),
    (-12, -1.0),
    (-8, -1.0),
    (-4, 1.0),
    (4, -1.0),
    (8, -1.0),
    (12, 1.0),
    (16, 1.0),
    (20, 1.0),
    (24, 1.0),
];

/// Complex baseband samples at a fixed rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqWaveform {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
}

impl IqWaveform {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Self {
        Self { samples, sample_rate }
    }

    pub fn empty(sample_rate: f64) -> Self {
        Self::new(Vec::new(), sample_rate)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean_power(&self) -> f64 {
        mean_power(&self.samples)
    }
}

pub fn mean_power(x: &[Complex64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|s| s.norm_sqr()).sum::<f64>() / x.len() as f64
}

/// FFT bin of logical subcarrier `k` (-32..32).
#[inline]
pub fn bin(k: i32) -> usize {
    k.rem_euclid(FFT_LEN as i32) as usize
}

/// The 48 data subcarriers in ascending order.
pub fn data_subcarriers() -> &'static [i32; N_DATA] {
    static SC: OnceLock<[i32; N_DATA]> = OnceLock::new();
    SC.get_or_init(|| {
        let mut out = [0; N_DATA];
        let it = (-26..=26).filter(|k| *k != 0 && !PILOT_SUBCARRIERS.contains(k));
        for (o, k) in out.iter_mut().zip(it) {
            *o = k;
        }
        out
    })
}

/// The 52 occupied subcarriers (-26..=26 without DC) in ascending order.
pub fn occupied_subcarriers() -> &'static [i32; N_OCCUPIED] {
    static SC: OnceLock<[i32; N_OCCUPIED]> = OnceLock::new();
    SC.get_or_init(|| {
        let mut out = [0; N_OCCUPIED];
        for (o, k) in out.iter_mut().zip((-26..=26).filter(|k| *k != 0)) {
            *o = k;
        }
        out
    })
}

/// Position of subcarrier `k` in [`occupied_subcarriers`].
#[inline]
pub fn occupied_index(k: i32) -> usize {
    if k < 0 {
        (k + 26) as usize
    } else {
        (k + 25) as usize
    }
}

pub fn ltf_value(k: i32) -> f64 {
    LTF_SEQUENCE[(k + 26) as usize] as f64
}

/// 127-periodic pilot polarity; symbol `n` of the packet (SIGNAL is 0)
/// uses `pilot_polarity(n)`.
pub fn pilot_polarity(n: usize) -> f64 {
    static P: OnceLock<[f64; 127]> = OnceLock::new();
    let p = P.get_or_init(|| {
        let mut s = Scrambler::new(0x7f).unwrap();
        let mut out = [0.0; 127];
        for v in out.iter_mut() {
            *v = if s.next_bit() == 0 { 1.0 } else { -1.0 };
        }
        out
    });
    p[n % 127]
}

type FftPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn planner() -> &'static FftPair {
    static P: OnceLock<FftPair> = OnceLock::new();
    P.get_or_init(|| {
        let mut p = FftPlanner::new();
        (p.plan_fft_forward(FFT_LEN), p.plan_fft_inverse(FFT_LEN))
    })
}

/// Unitary 64-point forward DFT.
pub fn fft64(time: &[Complex64]) -> [Complex64; FFT_LEN] {
    let mut buf = [Complex64::new(0.0, 0.0); FFT_LEN];
    buf.copy_from_slice(&time[..FFT_LEN]);
    planner().0.process(&mut buf);
    let s = 1.0 / (FFT_LEN as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= s);
    buf
}

/// Unitary 64-point inverse DFT.
pub fn ifft64(freq: &[Complex64; FFT_LEN]) -> [Complex64; FFT_LEN] {
    let mut buf = *freq;
    planner().1.process(&mut buf);
    let s = 1.0 / (FFT_LEN as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= s);
    buf
}

/// Frequency-domain grid → 80 samples with cyclic prefix.
pub fn ofdm_symbol(freq: &[Complex64; FFT_LEN]) -> Vec<Complex64> {
    let t = ifft64(freq);
    let mut out = Vec::with_capacity(SYMBOL_LEN);
    out.extend_from_slice(&t[FFT_LEN - CP_LEN..]);
    out.extend_from_slice(&t);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modulation {
    Bpsk,
    Qpsk,
    Qam16,
    Qam64,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
            Modulation::Qam64 => 6,
        }
    }

    /// Scale giving unit average energy.
    pub fn norm(self) -> f64 {
        match self {
            Modulation::Bpsk => 1.0,
            Modulation::Qpsk => 1.0 / 2f64.sqrt(),
            Modulation::Qam16 => 1.0 / 10f64.sqrt(),
            Modulation::Qam64 => 1.0 / 42f64.sqrt(),
        }
    }

    /// Gray-coded PAM levels on one axis, indexed by the axis bits read
    /// first-bit-most-significant.
    fn axis_levels(self) -> &'static [f64] {
        match self {
            Modulation::Bpsk | Modulation::Qpsk => &[-1.0, 1.0],
            Modulation::Qam16 => &[-3.0, -1.0, 3.0, 1.0],
            Modulation::Qam64 => &[-7.0, -5.0, -1.0, -3.0, 7.0, 5.0, 1.0, 3.0],
        }
    }

    fn axis_bits(self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            m => m.bits_per_symbol() / 2,
        }
    }

    pub fn map(self, bits: &[u8]) -> Complex64 {
        let nb = self.axis_bits();
        let idx = |b: &[u8]| b.iter().fold(0usize, |a, &x| (a << 1) | (x & 1) as usize);
        let lv = self.axis_levels();
        let c = match self {
            Modulation::Bpsk => Complex64::new(lv[idx(&bits[..1])], 0.0),
            _ => Complex64::new(lv[idx(&bits[..nb])], lv[idx(&bits[nb..2 * nb])]),
        };
        c * self.norm()
    }

    /// Every constellation point in bit-label order.
    pub fn points(self) -> Vec<Complex64> {
        let n = self.bits_per_symbol();
        (0..1usize << n)
            .map(|v| {
                let bits: Vec<u8> = (0..n).rev().map(|i| ((v >> i) & 1) as u8).collect();
                self.map(&bits)
            })
            .collect()
    }

    pub fn nearest(self, y: Complex64) -> Complex64 {
        let s = self.norm();
        let snap = |v: f64| {
            let lv = self.axis_levels();
            let mut best = lv[0];
            for &l in lv {
                if (v / s - l).abs() < (v / s - best).abs() {
                    best = l;
                }
            }
            best * s
        };
        match self {
            Modulation::Bpsk => Complex64::new(snap(y.re), 0.0),
            _ => Complex64::new(snap(y.re), snap(y.im)),
        }
    }

    /// Max-log LLRs for one equalized point, positive favouring 1. `weight`
    /// scales all outputs (channel power over noise).
    pub fn llr(self, y: Complex64, weight: f64, out: &mut Vec<f64>) {
        let nb = self.axis_bits();
        let s = self.norm();
        let lv = self.axis_levels();
        let axis = |v: f64, out: &mut Vec<f64>| {
            for bit in 0..nb {
                let shift = nb - 1 - bit;
                let (mut d0, mut d1) = (f64::INFINITY, f64::INFINITY);
                for (label, &l) in lv.iter().enumerate() {
                    let d = (v - l * s).powi(2);
                    if (label >> shift) & 1 == 0 {
                        d0 = d0.min(d);
                    } else {
                        d1 = d1.min(d);
                    }
                }
                out.push((d0 - d1) * weight);
            }
        };
        axis(y.re, out);
        if self != Modulation::Bpsk {
            axis(y.im, out);
        }
    }
}

/// Non-HT modulation and coding scheme 0..=7.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Mcs(u8);

impl TryFrom<u8> for Mcs {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        Mcs::new(v)
    }
}

impl From<Mcs> for u8 {
    fn from(m: Mcs) -> u8 {
        m.0
    }
}

impl std::fmt::Display for Mcs {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MCS{}", self.0)
    }
}

const RATE_BITS: [[u8; 4]; 8] = [
    [1, 1, 0, 1],
    [1, 1, 1, 1],
    [0, 1, 0, 1],
    [0, 1, 1, 1],
    [1, 0, 0, 1],
    [1, 0, 1, 1],
    [0, 0, 0, 1],
    [0, 0, 1, 1],
];

impl Mcs {
    pub fn new(index: u8) -> Result<Self> {
        if index > 7 {
            return Err(Error::InvalidMcs(index));
        }
        Ok(Self(index))
    }

    pub fn all() -> impl Iterator<Item = Mcs> {
        (0..8).map(Mcs)
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn modulation(self) -> Modulation {
        match self.0 {
            0 | 1 => Modulation::Bpsk,
            2 | 3 => Modulation::Qpsk,
            4 | 5 => Modulation::Qam16,
            _ => Modulation::Qam64,
        }
    }

    pub fn rate(self) -> CodeRate {
        match self.0 {
            0 | 2 | 4 => CodeRate::Half,
            6 => CodeRate::TwoThirds,
            _ => CodeRate::ThreeQuarters,
        }
    }

    pub fn bits_per_subcarrier(self) -> usize {
        self.modulation().bits_per_symbol()
    }

    pub fn coded_bits_per_symbol(self) -> usize {
        N_DATA * self.bits_per_subcarrier()
    }

    pub fn data_bits_per_symbol(self) -> usize {
        let (num, den) = self.rate().ratio();
        self.coded_bits_per_symbol() * num / den
    }

    /// Nominal PHY rate in Mb/s.
    pub fn rate_mbps(self) -> f64 {
        self.data_bits_per_symbol() as f64 / 4.0
    }

    /// SIGNAL field RATE bits R1..R4.
    pub fn rate_bits(self) -> [u8; 4] {
        RATE_BITS[self.0 as usize]
    }

    pub fn from_rate_bits(bits: &[u8]) -> Option<Mcs> {
        RATE_BITS.iter().position(|r| r[..] == bits[..4]).map(|i| Mcs(i as u8))
    }

    /// OFDM symbols in the DATA field for a PSDU of `len` bytes.
    pub fn n_symbols(self, len: usize) -> usize {
        (SERVICE_BITS + 8 * len + crate::bits::TAIL_BITS).div_ceil(self.data_bits_per_symbol())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subcarrier_maps() {
        assert_eq!(data_subcarriers().len(), 48);
        assert_eq!(data_subcarriers()[0], -26);
        assert_eq!(data_subcarriers()[5], -20);
        assert_eq!(occupied_subcarriers()[occupied_index(7)], 7);
        assert_eq!(occupied_subcarriers()[occupied_index(-26)], -26);
        assert_eq!(LTF_SEQUENCE[26], 0);
    }

    #[test]
    fn pilot_polarity_prefix() {
        let p: Vec<f64> = (0..16).map(pilot_polarity).collect();
        let want = [1., 1., 1., 1., -1., -1., -1., 1., -1., -1., -1., -1., 1., 1., -1., 1.];
        assert_eq!(p, want);
        assert_eq!(pilot_polarity(127), pilot_polarity(0));
    }

    #[test]
    fn mcs_table() {
        let dbps: Vec<usize> = Mcs::all().map(|m| m.data_bits_per_symbol()).collect();
        assert_eq!(dbps, vec![24, 36, 48, 72, 96, 144, 192, 216]);
        let mbps: Vec<f64> = Mcs::all().map(|m| m.rate_mbps()).collect();
        assert_eq!(mbps, vec![6., 9., 12., 18., 24., 36., 48., 54.]);
        for m in Mcs::all() {
            assert_eq!(Mcs::from_rate_bits(&m.rate_bits()), Some(m));
        }
        assert!(Mcs::new(8).is_err());
        assert_eq!(Mcs::new(7).unwrap().n_symbols(2312), 86);
    }

    #[test]
    fn unit_energy_constellations() {
        for m in [Modulation::Bpsk, Modulation::Qpsk, Modulation::Qam16, Modulation::Qam64] {
            let pts = m.points();
            let e = pts.iter().map(|p| p.norm_sqr()).sum::<f64>() / pts.len() as f64;
            assert!((e - 1.0).abs() < 1e-12, "{m:?} {e}");
        }
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        let m = Modulation::Qam64;
        let pts = m.points();
        let d = 2.0 * m.norm();
        for (a, pa) in pts.iter().enumerate() {
            for (b, pb) in pts.iter().enumerate() {
                if ((pa - pb).norm() - d).abs() < 1e-9 {
                    assert_eq!((a ^ b).count_ones(), 1);
                }
            }
        }
    }

    #[test]
    fn llr_sign_matches_bits() {
        for m in [Modulation::Bpsk, Modulation::Qpsk, Modulation::Qam16, Modulation::Qam64] {
            let n = m.bits_per_symbol();
            for v in 0..1usize << n {
                let bits: Vec<u8> = (0..n).rev().map(|i| ((v >> i) & 1) as u8).collect();
                let mut l = Vec::new();
                m.llr(m.map(&bits), 1.0, &mut l);
                for (b, x) in bits.iter().zip(&l) {
                    assert_eq!(*b == 1, *x > 0.0);
                }
                assert_eq!(m.nearest(m.map(&bits) * 1.01), m.map(&bits));
            }
        }
    }

    #[test]
    fn dft_is_unitary() {
        let mut f = [Complex64::new(0.0, 0.0); FFT_LEN];
        for (i, v) in f.iter_mut().enumerate() {
            *v = Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos());
        }
        let t = ifft64(&f);
        let ef: f64 = f.iter().map(|v| v.norm_sqr()).sum();
        let et: f64 = t.iter().map(|v| v.norm_sqr()).sum();
        assert!(((ef - et) / ef).abs() < 1e-9);
        let back = fft64(&t);
        for (a, b) in back.iter().zip(&f) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
