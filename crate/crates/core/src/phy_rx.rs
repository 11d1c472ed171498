//! Non-HT receiver: packet detection, coarse and fine CFO correction, LTF
//! timing, least-squares channel and noise estimation, SIGNAL decoding and
//! DATA recovery with pilot phase tracking.

use crate::bits::{
    bits_to_bytes, deinterleave, depuncture, viterbi_decode, viterbi_decode_unterminated, Scrambler, SoftBit,
    DEFAULT_SEED,
};
use crate::error::{Error, Result};
use crate::framing::{parse_mpdu, MAX_PSDU_LENGTH};
use crate::ofdm::*;
use crate::phy_tx::ltf_spectrum;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
/// Offset of the first L-LTF symbol from the start of the packet.
const LTF_SYMBOL_OFFSET: usize = STF_LEN + 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RxConfig {
    pub detection_threshold: f64,
    /// Samples the detection metric must stay above threshold.
    pub detection_sustain: usize,
    /// Window of the lag-16 autocorrelation detector.
    pub detection_window: usize,
    /// Half-width of the LTF cross-correlation timing search.
    pub timing_search: usize,
    /// Samples the FFT window is moved back into the cyclic prefix.
    pub timing_backoff: usize,
}

impl Default for RxConfig {
    fn default() -> Self {
        Self {
            detection_threshold: 0.6,
            detection_sustain: 96,
            detection_window: 32,
            timing_search: 16,
            timing_backoff: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncResult {
    pub start_index: usize,
    pub coarse_cfo_hz: f64,
    pub fine_cfo_hz: f64,
    /// Residual offset from the slope of the tracked pilot phase.
    pub pilot_cfo_hz: f64,
    pub timing_metric_peak: f64,
    /// Absolute index of the first L-LTF symbol's correlation peak.
    pub ltf_index: usize,
}

impl SyncResult {
    /// Coarse plus fine estimate.
    pub fn preamble_cfo_hz(&self) -> f64 {
        self.coarse_cfo_hz + self.fine_cfo_hz
    }

    /// Preamble estimate refined by pilot tracking.
    pub fn total_cfo_hz(&self) -> f64 {
        self.preamble_cfo_hz() + self.pilot_cfo_hz
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelEstimate {
    /// One gain per occupied subcarrier, ascending from -26.
    pub gains: Vec<Complex64>,
    pub noise_variance: f64,
}

impl ChannelEstimate {
    pub fn gain(&self, k: i32) -> Complex64 {
        self.gains[occupied_index(k)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeaderFail {
    Parity,
    InvalidRate,
    InvalidLength,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LsigInfo {
    pub mcs: Mcs,
    pub length: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PacketStatus {
    Ok,
    HeaderFail,
    FcsFail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvmPercent {
    pub rms_percent: f64,
    pub peak_percent: f64,
}

/// Everything learned about one detected packet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketResult {
    pub sync: SyncResult,
    pub lsig: std::result::Result<LsigInfo, HeaderFail>,
    pub estimate: ChannelEstimate,
    /// Pilot-rotated channel estimate per DATA symbol, 52 columns.
    pub csi_per_symbol: Vec<Vec<Complex64>>,
    pub equalized_symbols: Vec<Complex64>,
    /// Decision-directed EVM of the equalized DATA symbols.
    pub evm: Option<EvmPercent>,
    pub psdu: Option<Vec<u8>>,
    pub status: PacketStatus,
}

/// Output of DATA recovery for one packet.
#[derive(Debug, Clone, PartialEq)]
pub struct DataRecovery {
    pub psdu: Vec<u8>,
    pub equalized_symbols: Vec<Complex64>,
    pub csi_per_symbol: Vec<Vec<Complex64>>,
    /// Common phase of each DATA symbol, radians.
    pub pilot_phases: Vec<f64>,
}

fn segment(samples: &[Complex64], start: usize, len: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; len];
    if start < samples.len() {
        let n = len.min(samples.len() - start);
        out[..n].copy_from_slice(&samples[start..start + n]);
    }
    out
}

fn rotate(x: &mut [Complex64], cfo_hz: f64, first_index: usize, fs: f64) {
    if cfo_hz == 0.0 {
        return;
    }
    let w = -2.0 * PI * cfo_hz / fs;
    for (i, s) in x.iter_mut().enumerate() {
        *s *= Complex64::from_polar(1.0, w * (first_index + i) as f64);
    }
}

/// Delay-16 normalized autocorrelation at every start index.
pub fn detection_metric(samples: &[Complex64], window: usize) -> Vec<f64> {
    let lag = 16;
    if samples.len() < window + lag {
        return Vec::new();
    }
    (0..=samples.len() - window - lag)
        .map(|n| {
            let mut c = ZERO;
            let (mut e1, mut e2) = (0.0, 0.0);
            for m in n..n + window {
                let a = samples[m];
                let b = samples[m + lag];
                c += b * a.conj();
                e1 += a.norm_sqr();
                e2 += b.norm_sqr();
            }
            let e = e1.max(e2);
            if e < 1e-30 {
                0.0
            } else {
                c.norm() / e
            }
        })
        .collect()
}

/// Candidate packet starts with the peak detection metric of each plateau.
pub fn detect_with(samples: &[Complex64], cfg: &RxConfig) -> Vec<(usize, f64)> {
    let metric = detection_metric(samples, cfg.detection_window);
    let thr = cfg.detection_threshold;
    // The metric ramps up over the window before the true start; move the
    // leading edge back onto the packet start.
    let edge_shift = ((1.0 - thr) * cfg.detection_window as f64).round() as usize;
    let mut out = Vec::new();
    let mut next_allowed = 0usize;
    let mut n = 0;
    while n < metric.len() {
        if metric[n] <= thr || n < next_allowed {
            n += 1;
            continue;
        }
        let start = n;
        let mut peak = 0.0f64;
        while n < metric.len() && metric[n] > thr {
            peak = peak.max(metric[n]);
            n += 1;
        }
        if n - start >= cfg.detection_sustain {
            let cand = start + edge_shift;
            out.push((cand, peak));
            next_allowed = cand + PREAMBLE_LEN;
        }
    }
    out
}

/// Candidate packet start indices, ascending.
pub fn detect_packets(waveform: &IqWaveform, threshold: f64) -> Vec<usize> {
    let cfg = RxConfig {
        detection_threshold: threshold,
        ..RxConfig::default()
    };
    detect_with(&waveform.samples, &cfg)
        .into_iter()
        .map(|(i, _)| i)
        .collect()
}

/// Lag-16 autocorrelation estimate over the short training field.
/// Unambiguous over ±fs/32 (±625 kHz at 20 Msps).
pub fn coarse_cfo(lstf_region: &[Complex64], sample_rate: f64) -> Result<f64> {
    if lstf_region.len() < 144 {
        return Err(Error::TooFewSamples {
            needed: 144,
            got: lstf_region.len(),
        });
    }
    let c: Complex64 = (0..lstf_region.len() - 16)
        .map(|n| lstf_region[n + 16] * lstf_region[n].conj())
        .sum();
    Ok(c.arg() * sample_rate / (2.0 * PI * 16.0))
}

/// Lag-64 autocorrelation estimate over the 160-sample long training field
/// (guard plus both symbols). Unambiguous over ±fs/128.
pub fn fine_cfo(lltf_region: &[Complex64], sample_rate: f64) -> Result<f64> {
    if lltf_region.len() < LTF_LEN {
        return Err(Error::TooFewSamples {
            needed: LTF_LEN,
            got: lltf_region.len(),
        });
    }
    let c: Complex64 = (0..LTF_LEN - 64)
        .map(|n| lltf_region[n + 64] * lltf_region[n].conj())
        .sum();
    Ok(c.arg() * sample_rate / (2.0 * PI * 64.0))
}

/// FFT of a window that starts `backoff` samples early, with the resulting
/// linear phase removed.
fn window_fft(x: &[Complex64], backoff: usize) -> [Complex64; FFT_LEN] {
    let mut f = fft64(x);
    if backoff > 0 {
        for k in -32..32i32 {
            let ph = 2.0 * PI * (k as f64) * backoff as f64 / FFT_LEN as f64;
            f[bin(k)] *= Complex64::from_polar(1.0, ph);
        }
    }
    f
}

fn ltf_estimate_from_spectra(y1: &[Complex64; FFT_LEN], y2: &[Complex64; FFT_LEN]) -> ChannelEstimate {
    let mut gains = Vec::with_capacity(N_OCCUPIED);
    let mut diff = 0.0;
    for &k in occupied_subcarriers() {
        let (a, b) = (y1[bin(k)], y2[bin(k)]);
        gains.push((a + b) * 0.5 / ltf_value(k));
        diff += (a - b).norm_sqr();
    }
    ChannelEstimate {
        gains,
        noise_variance: 0.5 * diff / N_OCCUPIED as f64,
    }
}

/// Least-squares estimate from an aligned 160-sample L-LTF (32-sample
/// guard then two symbols).
pub fn estimate_channel(lltf_region: &[Complex64]) -> Result<ChannelEstimate> {
    if lltf_region.len() < LTF_LEN {
        return Err(Error::TooFewSamples {
            needed: LTF_LEN,
            got: lltf_region.len(),
        });
    }
    Ok(ltf_estimate_from_spectra(
        &fft64(&lltf_region[32..96]),
        &fft64(&lltf_region[96..160]),
    ))
}

/// Common phase of a symbol from its four pilots.
fn pilot_phase(y: &[Complex64; FFT_LEN], est: &ChannelEstimate, symbol_index: usize) -> f64 {
    let pol = pilot_polarity(symbol_index);
    let c: Complex64 = PILOT_SUBCARRIERS
        .iter()
        .zip(&PILOT_VALUES)
        .map(|(&k, &v)| y[bin(k)] * (est.gain(k) * v * pol).conj())
        .sum();
    c.arg()
}

/// Equalize the data subcarriers of one symbol after removing `phase`.
/// Appends equalized points and their LLR weights (|H|²).
fn equalize(
    y: &[Complex64; FFT_LEN],
    est: &ChannelEstimate,
    phase: f64,
    points: &mut Vec<Complex64>,
    weights: &mut Vec<f64>,
) {
    let rot = Complex64::from_polar(1.0, -phase);
    for &k in data_subcarriers() {
        let h = est.gain(k);
        let p = h.norm_sqr();
        if p > 1e-300 {
            points.push(y[bin(k)] * rot / h);
        } else {
            points.push(ZERO);
        }
        weights.push(p);
    }
}

fn quantize(llr: &[f64]) -> Vec<SoftBit> {
    let mean = llr.iter().map(|v| v.abs()).sum::<f64>() / llr.len().max(1) as f64;
    let scale = if mean > 0.0 && mean.is_finite() {
        24.0 / mean
    } else {
        0.0
    };
    llr.iter()
        .map(|&v| (v * scale).round().clamp(-127.0, 127.0) as SoftBit)
        .collect()
}

fn soft_bits(points: &[Complex64], weights: &[f64], mcs: Mcs) -> Result<Vec<SoftBit>> {
    let m = mcs.modulation();
    let mut llr = Vec::with_capacity(points.len() * m.bits_per_symbol());
    for (&p, &w) in points.iter().zip(weights) {
        m.llr(p, w, &mut llr);
    }
    let q = quantize(&llr);
    let ncbps = mcs.coded_bits_per_symbol();
    let mut out = Vec::with_capacity(q.len());
    for block in q.chunks(ncbps) {
        out.extend(deinterleave(block, mcs.bits_per_subcarrier(), ncbps)?);
    }
    Ok(out)
}

/// Decode the SIGNAL symbol from its (timing-compensated) spectrum.
pub fn decode_lsig(
    spectrum: &[Complex64; FFT_LEN],
    est: &ChannelEstimate,
) -> std::result::Result<LsigInfo, HeaderFail> {
    let phase = pilot_phase(spectrum, est, 0);
    let (mut pts, mut w) = (Vec::new(), Vec::new());
    equalize(spectrum, est, phase, &mut pts, &mut w);
    let bpsk = Mcs::new(0).unwrap();
    let soft = soft_bits(&pts, &w, bpsk).map_err(|_| HeaderFail::Parity)?;
    let bits = viterbi_decode(&soft, crate::bits::CodeRate::Half).map_err(|_| HeaderFail::Parity)?;
    check_lsig(&bits)
}

/// Validate the 18 decoded SIGNAL bits (tail stripped).
pub fn check_lsig(bits: &[u8]) -> std::result::Result<LsigInfo, HeaderFail> {
    if bits[..17].iter().fold(0, |a, &b| a ^ b) != bits[17] {
        return Err(HeaderFail::Parity);
    }
    let mcs = Mcs::from_rate_bits(&bits[..4]).ok_or(HeaderFail::InvalidRate)?;
    let length = (0..12).fold(0usize, |a, i| a | ((bits[5 + i] as usize) << i));
    if length == 0 || length > MAX_PSDU_LENGTH {
        return Err(HeaderFail::InvalidLength);
    }
    Ok(LsigInfo { mcs, length })
}

/// Recover the PSDU from the DATA field.
///
/// `region` starts at the cyclic prefix of the first DATA symbol; symbol
/// `i`'s FFT window begins at `i*80 + 16 - backoff`.
pub fn recover_psdu(
    region: &[Complex64],
    est: &ChannelEstimate,
    mcs: Mcs,
    length: usize,
    backoff: usize,
) -> Result<DataRecovery> {
    let n_sym = mcs.n_symbols(length);
    let mut points = Vec::with_capacity(n_sym * N_DATA);
    let mut weights = Vec::with_capacity(n_sym * N_DATA);
    let mut csi = Vec::with_capacity(n_sym);
    let mut phases = Vec::with_capacity(n_sym);
    for i in 0..n_sym {
        let start = i * SYMBOL_LEN + CP_LEN - backoff;
        let y = window_fft(&segment(region, start, FFT_LEN), backoff);
        let ph = pilot_phase(&y, est, i + 1);
        equalize(&y, est, ph, &mut points, &mut weights);
        let rot = Complex64::from_polar(1.0, ph);
        csi.push(est.gains.iter().map(|g| g * rot).collect());
        phases.push(ph);
    }
    let soft = soft_bits(&points, &weights, mcs)?;
    let mother = depuncture(&soft, mcs.rate())?;
    let decoded = viterbi_decode_unterminated(&mother)?;
    let mut scr = Scrambler::from_sequence(&decoded[..7]).unwrap_or(Scrambler::new(DEFAULT_SEED)?);
    let mut bits: Vec<u8> = decoded[7..SERVICE_BITS + 8 * length].to_vec();
    scr.apply(&mut bits);
    let psdu = bits_to_bytes(&bits[SERVICE_BITS - 7..]);
    Ok(DataRecovery {
        psdu,
        equalized_symbols: points,
        csi_per_symbol: csi,
        pilot_phases: phases,
    })
}

/// Least-squares slope of the unwrapped phase sequence, radians per step.
fn phase_slope(phases: &[f64]) -> f64 {
    if phases.len() < 2 {
        return 0.0;
    }
    let mut un = Vec::with_capacity(phases.len());
    let mut prev = phases[0];
    let mut acc = phases[0];
    un.push(acc);
    for &p in &phases[1..] {
        let mut d = p - prev;
        d -= (2.0 * PI) * (d / (2.0 * PI)).round();
        acc += d;
        un.push(acc);
        prev = p;
    }
    let n = un.len() as f64;
    let xm = (n - 1.0) / 2.0;
    let ym = un.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in un.iter().enumerate() {
        let dx = i as f64 - xm;
        sxy += dx * (y - ym);
        sxx += dx * dx;
    }
    sxy / sxx
}

fn decision_directed_evm(points: &[Complex64], m: Modulation) -> Option<EvmPercent> {
    if points.is_empty() {
        return None;
    }
    let (mut err, mut refp, mut peak) = (0.0, 0.0, 0.0f64);
    for &p in points {
        let s = m.nearest(p);
        let e = (p - s).norm_sqr();
        err += e;
        refp += s.norm_sqr();
        peak = peak.max(e);
    }
    let mean_ref = refp / points.len() as f64;
    Some(EvmPercent {
        rms_percent: 100.0 * (err / refp).sqrt(),
        peak_percent: 100.0 * (peak / mean_ref).sqrt(),
    })
}

/// Run the full chain for one detected candidate.
pub fn receive_packet(
    samples: &[Complex64],
    candidate: usize,
    metric_peak: f64,
    fs: f64,
    cfg: &RxConfig,
) -> PacketResult {
    let b = cfg.timing_backoff;
    // Stay clear of both STF edges so timing jitter of the candidate does
    // not pull idle or L-LTF samples into the lag-16 products.
    let raw_stf = segment(samples, candidate + 8, STF_LEN - 16);
    let coarse = coarse_cfo(&raw_stf, fs).unwrap_or(0.0);

    // Preamble and SIGNAL in one buffer, time-referenced to the candidate.
    let span = PREAMBLE_LEN + SYMBOL_LEN + 2 * cfg.timing_search + 64;
    let mut pre = segment(samples, candidate, span);
    rotate(&mut pre, coarse, 0, fs);

    let ltf_time = crate::ofdm::ifft64(&ltf_spectrum());
    let lo = LTF_SYMBOL_OFFSET.saturating_sub(cfg.timing_search);
    let hi = LTF_SYMBOL_OFFSET + cfg.timing_search;
    let mut best = (lo, -1.0);
    for tau in lo..=hi {
        let c: Complex64 = (0..FFT_LEN).map(|m| pre[tau + m] * ltf_time[m].conj()).sum();
        if c.norm() > best.1 {
            best = (tau, c.norm());
        }
    }
    let peak = best.0;

    let fine = fine_cfo(&pre[peak - 32..peak - 32 + LTF_LEN], fs).unwrap_or(0.0);
    rotate(&mut pre, fine, 0, fs);
    let cfo = coarse + fine;

    let t1 = peak - b;
    let y1 = window_fft(&pre[t1..t1 + FFT_LEN], b);
    let y2 = window_fft(&pre[t1 + FFT_LEN..t1 + 2 * FFT_LEN], b);
    let estimate = ltf_estimate_from_spectra(&y1, &y2);

    let sig_start = peak + 2 * FFT_LEN + CP_LEN - b;
    let ysig = window_fft(&pre[sig_start..sig_start + FFT_LEN], b);
    let lsig = decode_lsig(&ysig, &estimate);

    let mut sync = SyncResult {
        start_index: candidate,
        coarse_cfo_hz: coarse,
        fine_cfo_hz: fine,
        pilot_cfo_hz: 0.0,
        timing_metric_peak: metric_peak,
        ltf_index: candidate + peak,
    };

    let info = match lsig {
        Ok(info) => info,
        Err(_) => {
            return PacketResult {
                sync,
                lsig,
                estimate,
                csi_per_symbol: Vec::new(),
                equalized_symbols: Vec::new(),
                evm: None,
                psdu: None,
                status: PacketStatus::HeaderFail,
            }
        }
    };

    let data_offset = peak + 2 * FFT_LEN + SYMBOL_LEN;
    let n_sym = info.mcs.n_symbols(info.length);
    let mut data = segment(samples, candidate + data_offset, n_sym * SYMBOL_LEN);
    rotate(&mut data, cfo, data_offset, fs);
    let rec = match recover_psdu(&data, &estimate, info.mcs, info.length, b) {
        Ok(r) => r,
        Err(_) => {
            return PacketResult {
                sync,
                lsig,
                estimate,
                csi_per_symbol: Vec::new(),
                equalized_symbols: Vec::new(),
                evm: None,
                psdu: None,
                status: PacketStatus::FcsFail,
            }
        }
    };
    let mut phases = Vec::with_capacity(n_sym + 1);
    phases.push(pilot_phase(&ysig, &estimate, 0));
    phases.extend_from_slice(&rec.pilot_phases);
    sync.pilot_cfo_hz = phase_slope(&phases) * fs / (2.0 * PI * SYMBOL_LEN as f64);

    let status = if parse_mpdu(&rec.psdu).is_ok() {
        PacketStatus::Ok
    } else {
        PacketStatus::FcsFail
    };
    PacketResult {
        sync,
        lsig,
        estimate,
        evm: decision_directed_evm(&rec.equalized_symbols, info.mcs.modulation()),
        csi_per_symbol: rec.csi_per_symbol,
        equalized_symbols: rec.equalized_symbols,
        psdu: Some(rec.psdu),
        status,
    }
}

/// Detect and decode every packet in a capture; failures are reported as
/// statuses, one result per detection.
pub fn receive_burst(waveform: &IqWaveform, cfg: &RxConfig) -> Vec<PacketResult> {
    detect_with(&waveform.samples, cfg)
        .into_iter()
        .map(|(c, peak)| receive_packet(&waveform.samples, c, peak, waveform.sample_rate, cfg))
        .collect()
}
