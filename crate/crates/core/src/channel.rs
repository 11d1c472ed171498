//! Statistical model of a loaded metal enclosure: a tapped delay line with
//! a Rician direct tap and an exponentially decaying diffuse tail whose
//! decay constant follows the cavity Q.

use crate::error::Result;
use crate::ofdm::{bin, mean_power, occupied_subcarriers, IqWaveform, FFT_LEN, N_OCCUPIED};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Carrier used to convert Q into a decay constant (2.4 GHz channel 5).
pub const CENTER_FREQUENCY: f64 = 2.432e9;
pub const EMPTY_Q: f64 = 10_000.0;
pub const SIDE_LOADED_Q: f64 = 1_000.0;
pub const CORNER_LOADED_Q: f64 = 500.0;
/// Scattered taps extend to this many decay constants.
pub const TAIL_SPAN: f64 = 5.0;

/// Energy decay constant of a cavity with quality factor `q` at `f0`.
pub fn decay_constant(q: f64, f0: f64) -> f64 {
    q / (2.0 * PI * f0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Distance {
    #[serde(rename = "25mm")]
    Near25mm,
    #[serde(rename = "125mm")]
    Far125mm,
}

impl Distance {
    /// Direct-to-diffuse power ratio of the empty enclosure.
    pub fn empty_k_factor(self) -> f64 {
        match self {
            Distance::Near25mm => 2.0,
            Distance::Far125mm => 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PresetName {
    Empty,
    SideLoaded,
    CornerLoaded,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadingPreset {
    pub name: PresetName,
    /// Power decay constant of the diffuse field, seconds.
    pub decay_constant_tau: f64,
    /// Direct-path to scattered power ratio (linear).
    pub k_factor: f64,
}

impl LoadingPreset {
    /// Preset for a cavity of quality factor `q`. The diffuse power of a
    /// reverberant cavity scales with Q while the direct coupling does not,
    /// so K grows as the enclosure is loaded.
    pub fn from_q(name: PresetName, q: f64, distance: Distance) -> Self {
        Self {
            name,
            decay_constant_tau: decay_constant(q, CENTER_FREQUENCY),
            k_factor: distance.empty_k_factor() * EMPTY_Q / q,
        }
    }

    pub fn empty(distance: Distance) -> Self {
        Self::from_q(PresetName::Empty, EMPTY_Q, distance)
    }

    pub fn side_loaded(distance: Distance) -> Self {
        Self::from_q(PresetName::SideLoaded, SIDE_LOADED_Q, distance)
    }

    pub fn corner_loaded(distance: Distance) -> Self {
        Self::from_q(PresetName::CornerLoaded, CORNER_LOADED_Q, distance)
    }

    pub fn custom(decay_constant_tau: f64, k_factor: f64) -> Self {
        Self {
            name: PresetName::Custom,
            decay_constant_tau,
            k_factor,
        }
    }

    pub fn named(name: PresetName, distance: Distance) -> Option<Self> {
        match name {
            PresetName::Empty => Some(Self::empty(distance)),
            PresetName::SideLoaded => Some(Self::side_loaded(distance)),
            PresetName::CornerLoaded => Some(Self::corner_loaded(distance)),
            PresetName::Custom => None,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.decay_constant_tau > 0.0 && self.decay_constant_tau.is_finite() && self.k_factor >= 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    /// Delay in samples.
    pub delay: usize,
    pub re: f64,
    pub im: f64,
}

impl Tap {
    pub fn gain(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// One draw of the enclosure impulse response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub taps: Vec<Tap>,
    pub preset: LoadingPreset,
    pub seed: u64,
    pub sample_rate: f64,
}

impl ChannelRealization {
    /// Single unit tap.
    pub fn identity(sample_rate: f64) -> Self {
        Self::from_taps(&[(0, Complex64::new(1.0, 0.0))], sample_rate)
    }

    /// Fixed tap list (delays in samples, need not be normalized).
    pub fn from_taps(taps: &[(usize, Complex64)], sample_rate: f64) -> Self {
        Self {
            taps: taps
                .iter()
                .map(|&(delay, g)| Tap {
                    delay,
                    re: g.re,
                    im: g.im,
                })
                .collect(),
            preset: LoadingPreset::custom(f64::MIN_POSITIVE, 0.0),
            seed: 0,
            sample_rate,
        }
    }

    pub fn total_power(&self) -> f64 {
        self.taps.iter().map(|t| t.gain().norm_sqr()).sum()
    }

    pub fn max_delay(&self) -> usize {
        self.taps.iter().map(|t| t.delay).max().unwrap_or(0)
    }

    /// RMS delay spread in seconds.
    pub fn rms_delay_spread(&self) -> f64 {
        let p = self.total_power();
        if p == 0.0 {
            return 0.0;
        }
        let ts = 1.0 / self.sample_rate;
        let m1: f64 = self
            .taps
            .iter()
            .map(|t| t.gain().norm_sqr() * t.delay as f64 * ts)
            .sum::<f64>()
            / p;
        let m2: f64 = self
            .taps
            .iter()
            .map(|t| t.gain().norm_sqr() * (t.delay as f64 * ts).powi(2))
            .sum::<f64>()
            / p;
        (m2 - m1 * m1).max(0.0).sqrt()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("realization serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| crate::Error::Config(e.to_string()))
    }
}

fn gaussian(rng: &mut ChaCha8Rng, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// Draw one realization at 20 Msps.
pub fn draw_channel(preset: &LoadingPreset, seed: u64) -> ChannelRealization {
    draw_channel_at(preset, seed, crate::ofdm::SAMPLE_RATE)
}

pub fn draw_channel_at(preset: &LoadingPreset, seed: u64, sample_rate: f64) -> ChannelRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ts = 1.0 / sample_rate;
    let tau = preset.decay_constant_tau;
    let k = preset.k_factor;
    let last = ((TAIL_SPAN * tau / ts) + 1e-9).floor() as usize;
    let weights: Vec<f64> = (0..=last).map(|n| (-(n as f64) * ts / tau).exp()).collect();
    let wsum: f64 = weights.iter().sum();
    let diffuse = 1.0 / (k + 1.0);
    let mut gains: Vec<Complex64> = weights.iter().map(|w| gaussian(&mut rng, diffuse * w / wsum)).collect();
    gains[0] += Complex64::new((k / (k + 1.0)).sqrt(), 0.0);
    let p: f64 = gains.iter().map(|g| g.norm_sqr()).sum();
    let scale = 1.0 / p.sqrt();
    ChannelRealization {
        taps: gains
            .iter()
            .enumerate()
            .map(|(delay, g)| Tap {
                delay,
                re: g.re * scale,
                im: g.im * scale,
            })
            .collect(),
        preset: *preset,
        seed,
        sample_rate,
    }
}

/// Channel transfer function sampled on an `n_bins` DFT grid.
pub fn frequency_response(realization: &ChannelRealization, n_bins: usize) -> Vec<Complex64> {
    (0..n_bins)
        .map(|b| {
            realization
                .taps
                .iter()
                .map(|t| t.gain() * Complex64::from_polar(1.0, -2.0 * PI * (b * t.delay) as f64 / n_bins as f64))
                .sum()
        })
        .collect()
}

/// Ground-truth gains on the 52 occupied subcarriers, ascending order.
pub fn subcarrier_response(realization: &ChannelRealization) -> [Complex64; N_OCCUPIED] {
    let h = frequency_response(realization, FFT_LEN);
    let mut out = [Complex64::new(0.0, 0.0); N_OCCUPIED];
    for (o, &k) in out.iter_mut().zip(occupied_subcarriers()) {
        *o = h[bin(k)];
    }
    out
}

/// Grid used for the frequency autocorrelation.
pub const COHERENCE_GRID: usize = 1024;

/// Envelope correlation of the transfer function at a shift of `m` bins of
/// the dense grid, normalized to 1 at zero shift.
///
/// The circular autocorrelation of the DFT of the taps equals the DFT of
/// the tap power profile, so only the taps are needed.
pub fn frequency_correlation(realization: &ChannelRealization, m: usize) -> f64 {
    let p0 = realization.total_power();
    if p0 == 0.0 {
        return 0.0;
    }
    let a: Complex64 = realization
        .taps
        .iter()
        .map(|t| {
            t.gain().norm_sqr() * Complex64::from_polar(1.0, 2.0 * PI * (m * t.delay) as f64 / COHERENCE_GRID as f64)
        })
        .sum();
    (a / p0).norm_sqr()
}

/// Smallest frequency shift at which the envelope correlation of the
/// transfer function drops below `threshold`; the full sample-rate
/// bandwidth if it never does.
pub fn coherence_bandwidth(realization: &ChannelRealization, threshold: f64) -> f64 {
    let df = realization.sample_rate / COHERENCE_GRID as f64;
    (1..=COHERENCE_GRID / 2)
        .find(|&m| frequency_correlation(realization, m) < threshold)
        .map(|m| m as f64 * df)
        .unwrap_or(realization.sample_rate)
}

/// Noise, frequency offset and delay applied after the multipath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Impairments {
    /// `f64::INFINITY` disables noise.
    pub snr_db: f64,
    pub cfo_hz: f64,
    pub timing_offset: usize,
    pub noise_seed: u64,
}

impl Impairments {
    pub fn none() -> Self {
        Self {
            snr_db: f64::INFINITY,
            cfo_hz: 0.0,
            timing_offset: 0,
            noise_seed: 0,
        }
    }
}

impl Default for Impairments {
    fn default() -> Self {
        Self::none()
    }
}

/// Add circularly-symmetric white Gaussian noise of the given variance.
pub fn add_awgn(samples: &mut [Complex64], variance: f64, seed: u64) {
    if variance <= 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for s in samples.iter_mut() {
        *s += gaussian(&mut rng, variance);
    }
}

pub fn convolve(x: &[Complex64], realization: &ChannelRealization) -> Vec<Complex64> {
    if x.is_empty() {
        return Vec::new();
    }
    let mut y = vec![Complex64::new(0.0, 0.0); x.len() + realization.max_delay()];
    for t in &realization.taps {
        let g = t.gain();
        for (yo, &xi) in y[t.delay..].iter_mut().zip(x) {
            *yo += g * xi;
        }
    }
    y
}

/// Multipath, then CFO rotation, then leading delay, then AWGN scaled to
/// the mean power of the convolved signal over the non-idle input samples.
pub fn apply_channel(waveform: &IqWaveform, realization: &ChannelRealization, imp: &Impairments) -> IqWaveform {
    let fs = waveform.sample_rate;
    let mut y = convolve(&waveform.samples, realization);
    if imp.cfo_hz != 0.0 {
        let w = 2.0 * PI * imp.cfo_hz / fs;
        for (n, s) in y.iter_mut().enumerate() {
            *s *= Complex64::from_polar(1.0, w * n as f64);
        }
    }
    let active: Vec<Complex64> = waveform
        .samples
        .iter()
        .zip(&y)
        .filter(|(x, _)| x.norm_sqr() > 0.0)
        .map(|(_, &v)| v)
        .collect();
    let signal_power = mean_power(&active);
    let mut out = vec![Complex64::new(0.0, 0.0); imp.timing_offset];
    out.extend(y);
    if imp.snr_db.is_finite() {
        let var = signal_power / 10f64.powf(imp.snr_db / 10.0);
        add_awgn(&mut out, var, imp.noise_seed);
    }
    IqWaveform::new(out, fs)
}
