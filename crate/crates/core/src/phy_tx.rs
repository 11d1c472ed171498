//! Non-HT PPDU transmitter: L-STF, L-LTF, L-SIG and DATA symbols, plus
//! burst assembly with inter-packet idle time.

use crate::bits::{bytes_to_bits, conv_encode, interleave, puncture, scramble, TAIL_BITS};
use crate::error::{Error, Result};
use crate::framing::{Psdu, MAX_PSDU_LENGTH};
use crate::ofdm::*;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// PSDU plus the MCS it is sent at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonHtPacket {
    pub psdu: Psdu,
    pub mcs: Mcs,
}

/// DATA field of one packet.
#[derive(Debug, Clone, PartialEq)]
pub struct DataField {
    /// Time-domain symbols, 80 samples each.
    pub symbols: Vec<Vec<Complex64>>,
    /// The 48 data-subcarrier constellation points of every symbol, in
    /// symbol order then ascending subcarrier order.
    pub points: Vec<Complex64>,
}

/// A built PPDU together with the reference constellation points used for
/// data-aided EVM.
#[derive(Debug, Clone, PartialEq)]
pub struct TxPpdu {
    pub waveform: IqWaveform,
    pub data_points: Vec<Complex64>,
    pub n_data_symbols: usize,
}

fn check_rate(sample_rate: f64) -> Result<()> {
    if sample_rate != SAMPLE_RATE {
        return Err(Error::SampleRate(sample_rate));
    }
    Ok(())
}

pub fn stf_spectrum() -> [Complex64; FFT_LEN] {
    let a = (13.0f64 / 6.0).sqrt();
    let mut f = [ZERO; FFT_LEN];
    for &(k, s) in &STF_TONES {
        f[bin(k)] = Complex64::new(s, s) * a;
    }
    f
}

pub fn ltf_spectrum() -> [Complex64; FFT_LEN] {
    let mut f = [ZERO; FFT_LEN];
    for k in -26..=26 {
        f[bin(k)] = Complex64::new(ltf_value(k), 0.0);
    }
    f
}

/// Ten repetitions of the 16-sample short training pattern (8 µs).
pub fn build_lstf(sample_rate: f64) -> Result<IqWaveform> {
    check_rate(sample_rate)?;
    let t = ifft64(&stf_spectrum());
    let samples = (0..STF_LEN).map(|n| t[n % FFT_LEN]).collect();
    Ok(IqWaveform::new(samples, sample_rate))
}

/// 32-sample guard followed by two copies of the long training symbol.
pub fn build_lltf(sample_rate: f64) -> Result<IqWaveform> {
    check_rate(sample_rate)?;
    let t = ifft64(&ltf_spectrum());
    let mut samples = Vec::with_capacity(LTF_LEN);
    samples.extend_from_slice(&t[FFT_LEN - 32..]);
    samples.extend_from_slice(&t);
    samples.extend_from_slice(&t);
    Ok(IqWaveform::new(samples, sample_rate))
}

/// The 24 uncoded SIGNAL bits: RATE(4) reserved(1) LENGTH(12, LSB first)
/// parity(1) tail(6).
pub fn lsig_bits(mcs: Mcs, psdu_length: usize) -> Result<[u8; 24]> {
    if psdu_length == 0 || psdu_length > MAX_PSDU_LENGTH {
        return Err(Error::PsduLength(psdu_length));
    }
    let mut bits = [0u8; 24];
    bits[..4].copy_from_slice(&mcs.rate_bits());
    for i in 0..12 {
        bits[5 + i] = ((psdu_length >> i) & 1) as u8;
    }
    bits[17] = bits[..17].iter().fold(0, |a, &b| a ^ b);
    Ok(bits)
}

/// Map 48 coded bits per symbol group onto the data subcarriers and add
/// pilots with the polarity of symbol `symbol_index`.
pub(crate) fn symbol_grid(points: &[Complex64], symbol_index: usize) -> [Complex64; FFT_LEN] {
    let mut f = [ZERO; FFT_LEN];
    for (&k, &p) in data_subcarriers().iter().zip(points) {
        f[bin(k)] = p;
    }
    let pol = pilot_polarity(symbol_index);
    for (&k, &v) in PILOT_SUBCARRIERS.iter().zip(&PILOT_VALUES) {
        f[bin(k)] = Complex64::new(v * pol, 0.0);
    }
    f
}

fn map_symbols(coded: &[u8], mcs: Mcs) -> Result<Vec<Complex64>> {
    let ncbps = mcs.coded_bits_per_symbol();
    let nbpsc = mcs.bits_per_subcarrier();
    let m = mcs.modulation();
    let mut out = Vec::with_capacity(coded.len() / nbpsc);
    for block in coded.chunks(ncbps) {
        let il = interleave(block, nbpsc, ncbps)?;
        out.extend(il.chunks(nbpsc).map(|b| m.map(b)));
    }
    Ok(out)
}

/// SIGNAL symbol: BPSK rate 1/2, never scrambled, pilot polarity index 0.
pub fn build_lsig(mcs: Mcs, psdu_length: usize) -> Result<Vec<Complex64>> {
    Ok(lsig_symbol(&lsig_bits(mcs, psdu_length)?))
}

/// SIGNAL symbol for arbitrary field bits, including invalid ones.
pub fn lsig_symbol(bits: &[u8; 24]) -> Vec<Complex64> {
    let coded = conv_encode(bits);
    let points = map_symbols(&coded, Mcs::new(0).unwrap()).unwrap();
    ofdm_symbol(&symbol_grid(&points, 0))
}

/// SERVICE ‖ PSDU ‖ tail ‖ pad, scrambled, with the tail re-zeroed.
pub fn data_bits(psdu: &[u8], mcs: Mcs, scrambler_seed: u8) -> Result<Vec<u8>> {
    let n_sym = mcs.n_symbols(psdu.len());
    let n_data = n_sym * mcs.data_bits_per_symbol();
    let mut bits = vec![0u8; SERVICE_BITS];
    bits.extend(bytes_to_bits(psdu));
    let tail_at = bits.len();
    bits.resize(n_data, 0);
    let mut s = scramble(&bits, scrambler_seed)?;
    s[tail_at..tail_at + TAIL_BITS].fill(0);
    Ok(s)
}

/// Encode, puncture, interleave and map the DATA field.
pub fn modulate_data(psdu: &Psdu, mcs: Mcs, scrambler_seed: u8) -> Result<DataField> {
    let bits = data_bits(psdu.as_bytes(), mcs, scrambler_seed)?;
    let coded = puncture(&conv_encode(&bits), mcs.rate())?;
    let points = map_symbols(&coded, mcs)?;
    let symbols = points
        .chunks(N_DATA)
        .enumerate()
        .map(|(i, p)| ofdm_symbol(&symbol_grid(p, i + 1)))
        .collect();
    Ok(DataField { symbols, points })
}

pub fn build_ppdu_with_reference(packet: &NonHtPacket, scrambler_seed: u8) -> Result<TxPpdu> {
    let data = modulate_data(&packet.psdu, packet.mcs, scrambler_seed)?;
    let n = data.symbols.len();
    let mut samples = Vec::with_capacity(PREAMBLE_LEN + SYMBOL_LEN * (n + 1));
    samples.extend(build_lstf(SAMPLE_RATE)?.samples);
    samples.extend(build_lltf(SAMPLE_RATE)?.samples);
    samples.extend(build_lsig(packet.mcs, packet.psdu.len())?);
    for s in &data.symbols {
        samples.extend_from_slice(s);
    }
    Ok(TxPpdu {
        waveform: IqWaveform::new(samples, SAMPLE_RATE),
        data_points: data.points,
        n_data_symbols: n,
    })
}

/// L-STF ‖ L-LTF ‖ L-SIG ‖ DATA.
pub fn build_ppdu(packet: &NonHtPacket, scrambler_seed: u8) -> Result<IqWaveform> {
    Ok(build_ppdu_with_reference(packet, scrambler_seed)?.waveform)
}

pub fn idle_samples(idle_time: f64, sample_rate: f64) -> usize {
    (idle_time * sample_rate).round().max(0.0) as usize
}

/// Start index of each packet within a burst built by [`assemble_burst`].
pub fn burst_starts(lengths: &[usize], idle: usize) -> Vec<usize> {
    let mut at = idle;
    lengths
        .iter()
        .map(|&l| {
            let s = at;
            at += l + idle;
            s
        })
        .collect()
}

/// Concatenate PPDUs with `idle_time` of exact zeros before each one.
pub fn assemble_burst(ppdus: &[IqWaveform], idle_time: f64) -> Result<IqWaveform> {
    let Some(first) = ppdus.first() else {
        return Ok(IqWaveform::empty(SAMPLE_RATE));
    };
    let fs = first.sample_rate;
    if ppdus.iter().any(|p| p.sample_rate != fs) {
        return Err(Error::MixedSampleRates);
    }
    let idle = idle_samples(idle_time, fs);
    let total: usize = ppdus.iter().map(|p| p.len() + idle).sum();
    let mut samples = Vec::with_capacity(total);
    for p in ppdus {
        samples.resize(samples.len() + idle, ZERO);
        samples.extend_from_slice(&p.samples);
    }
    Ok(IqWaveform::new(samples, fs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn psdu(n: usize) -> Psdu {
        Psdu::new((0..n).map(|i| (i * 7 + 3) as u8).collect()).unwrap()
    }

    #[test]
    fn lstf_is_16_periodic() {
        let s = build_lstf(SAMPLE_RATE).unwrap();
        assert_eq!(s.len(), 160);
        let c: Complex64 = (0..144).map(|n| s.samples[n + 16] * s.samples[n].conj()).sum();
        let p: f64 = (0..144).map(|n| s.samples[n].norm_sqr()).sum();
        assert!((c.norm() / p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn preamble_field_powers_match() {
        let s = build_lstf(SAMPLE_RATE).unwrap().mean_power();
        let l = build_lltf(SAMPLE_RATE).unwrap().mean_power();
        assert!((10.0 * (s / l).log10()).abs() < 0.5);
        assert!((l - 52.0 / 64.0).abs() < 1e-9);
    }

    #[test]
    fn lltf_structure() {
        let l = build_lltf(SAMPLE_RATE).unwrap().samples;
        assert_eq!(l.len(), 160);
        assert_eq!(l[96..160], l[32..96]);
        assert_eq!(l[..32], l[64..96]);
        let f = fft64(&l[32..96]);
        for k in -32..32 {
            let v = f[bin(k)];
            if k == 0 || k.abs() > 26 {
                assert!(v.norm() < 1e-12);
            } else {
                assert!((v.re.abs() - 1.0).abs() < 1e-12 && v.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unsupported_rate() {
        assert!(build_lstf(40e6).is_err());
        assert!(build_lltf(10e6).is_err());
    }

    #[test]
    fn lsig_fields() {
        let b = lsig_bits(Mcs::new(0).unwrap(), 4095).unwrap();
        assert!(b[5..17].iter().all(|&x| x == 1));
        // RATE 1101 has three ones and LENGTH twelve: odd, so parity is 1.
        assert_eq!(b[17], 1);
        assert!(b[18..].iter().all(|&x| x == 0));
        assert!(lsig_bits(Mcs::new(0).unwrap(), 0).is_err());
        assert!(lsig_bits(Mcs::new(0).unwrap(), 4096).is_err());
    }

    #[test]
    fn lsig_parity_tracks_single_flips() {
        let base = lsig_bits(Mcs::new(3).unwrap(), 1234).unwrap();
        for i in (0..4).chain(5..17) {
            let mut b = base;
            b[i] ^= 1;
            let parity = b[..17].iter().fold(0, |a, &x| a ^ x);
            assert_ne!(parity, base[17]);
        }
    }

    #[test]
    fn lsig_rate_bits_reference() {
        // R1..R4 for 6, 9, 12, 18, 24, 36, 48, 54 Mb/s.
        let table = ["1101", "1111", "0101", "0111", "1001", "1011", "0001", "0011"];
        for (m, t) in Mcs::all().zip(table) {
            let b = lsig_bits(m, 100).unwrap();
            let s: String = b[..4].iter().map(|x| char::from(b'0' + x)).collect();
            assert_eq!(s, t);
        }
    }

    #[test]
    fn data_symbol_count() {
        let m7 = Mcs::new(7).unwrap();
        let d = modulate_data(&psdu(2312), m7, 0x5d).unwrap();
        assert_eq!(d.symbols.len(), 86);
        assert_eq!(d.points.len(), 86 * 48);
        assert!(d.symbols.iter().all(|s| s.len() == 80));
    }

    #[test]
    fn tail_bits_are_zero_after_scrambling() {
        let m = Mcs::new(2).unwrap();
        let p = psdu(10);
        let b = data_bits(p.as_bytes(), m, 0x5d).unwrap();
        assert!(b[16 + 80..16 + 86].iter().all(|&x| x == 0));
        assert_eq!(b.len() % 48, 0);
    }

    #[test]
    fn symbol_energy_preserved() {
        let d = modulate_data(&psdu(100), Mcs::new(5).unwrap(), 0x5d).unwrap();
        for (i, s) in d.symbols.iter().enumerate() {
            let grid = symbol_grid(&d.points[i * 48..(i + 1) * 48], i + 1);
            let ef: f64 = grid.iter().map(|v| v.norm_sqr()).sum();
            let et: f64 = s[16..].iter().map(|v| v.norm_sqr()).sum();
            assert!(((ef - et) / ef).abs() < 1e-9);
        }
    }

    #[test]
    fn ppdu_layout() {
        let pkt = NonHtPacket {
            psdu: psdu(1),
            mcs: Mcs::new(0).unwrap(),
        };
        let w = build_ppdu(&pkt, 0x5d).unwrap();
        assert_eq!(w.len(), 560);
        assert_eq!(w.samples[..160], build_lstf(SAMPLE_RATE).unwrap().samples[..]);
        assert_eq!(w, build_ppdu(&pkt, 0x5d).unwrap());
        let peak = w.samples.iter().map(|s| s.norm()).fold(0.0, f64::max);
        assert!(peak.is_finite());
    }

    #[test]
    fn burst_gaps() {
        let pkt = NonHtPacket {
            psdu: psdu(1),
            mcs: Mcs::new(0).unwrap(),
        };
        let w = build_ppdu(&pkt, 0x5d).unwrap();
        let b = assemble_burst(&[w.clone(), w.clone()], 20e-6).unwrap();
        assert_eq!(b.len(), 400 + 560 + 400 + 560);
        assert!(b.samples[960..1360].iter().all(|s| *s == ZERO));
        assert_eq!(burst_starts(&[560, 560], 400), vec![400, 1360]);
        assert!(assemble_burst(&[], 20e-6).unwrap().is_empty());
        let tight = assemble_burst(&[w.clone(), w.clone()], 0.0).unwrap();
        assert_eq!(tight.samples[560..], w.samples[..]);
        let other = IqWaveform::new(vec![ZERO; 4], 10e6);
        assert_eq!(assemble_burst(&[w, other], 20e-6), Err(Error::MixedSampleRates));
    }
}
