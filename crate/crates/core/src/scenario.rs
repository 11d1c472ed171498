//! Experiment runner and file boundary: scenario configuration, end-to-end
//! simulation over (MCS, seed) work items, capture analysis and the cf32le
//! I/Q format.
//!
//! A scenario config is a flat TOML document; every key is optional and
//! defaults to the values of the reference measurement setup:
//!
//! ```toml
//! label = "corner"
//! preset = "CornerLoaded"   # Empty | SideLoaded | CornerLoaded | Custom
//! distance = "25mm"
//! mcs_list = [7]
//! seeds = [1, 2, 3]
//! snr_db = 25.0
//! output_dir = "out/corner"
//! ```

use crate::bits::{bytes_to_bits, DEFAULT_SEED};
use crate::channel::{
    apply_channel, coherence_bandwidth, draw_channel, ChannelRealization, Distance, Impairments, LoadingPreset,
    PresetName, CENTER_FREQUENCY,
};
use crate::error::{Error, Result};
use crate::framing::{build_mpdu, fragment, parse_mpdu, reassemble, serialize_mpdu, Mpdu, DEFAULT_MSDU_LENGTH};
use crate::imaging::{compare_images, decode_image, encode_image, test_image, Integrity};
use crate::metrics::{
    ber, cfo_csv, cfo_summary, csi_matrix, evm, evm_csv, median, Ber, CfoStats, CsiMatrix, EvmAccumulator, EvmReport,
    DEFAULT_CSI_ROWS,
};
use crate::ofdm::{IqWaveform, Mcs, PREAMBLE_LEN, SAMPLE_RATE, STF_LEN};
use crate::phy_rx::{receive_burst, HeaderFail, PacketResult, PacketStatus, RxConfig};
use crate::phy_tx::{assemble_burst, build_ppdu_with_reference, burst_starts, idle_samples, NonHtPacket, TxPpdu};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Free-form name written into every report row.
    pub label: String,
    pub mcs_list: Vec<Mcs>,
    pub msdu_length: usize,
    pub bandwidth_hz: f64,
    /// Metadata only; the simulation is at baseband.
    pub center_frequency_hz: f64,
    pub idle_time_s: f64,
    pub preset: PresetName,
    /// Overrides the preset decay constant; required for `Custom`.
    pub decay_constant_tau_s: Option<f64>,
    /// Overrides the preset K-factor; required for `Custom`.
    pub k_factor: Option<f64>,
    /// Bypass the enclosure model with a single unit tap.
    pub ideal_channel: bool,
    /// `inf` disables noise.
    pub snr_db: f64,
    pub cfo_hz: f64,
    pub timing_offset: usize,
    pub distance: Distance,
    pub seeds: Vec<u64>,
    /// Payload file; the built-in test card when absent.
    pub image_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Times the whole fragment sequence is sent within one burst.
    pub packet_repeat: usize,
    pub scrambler_seed: u8,
    pub csi_rows: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            label: "scenario".into(),
            mcs_list: Mcs::all().collect(),
            msdu_length: DEFAULT_MSDU_LENGTH,
            bandwidth_hz: SAMPLE_RATE,
            center_frequency_hz: CENTER_FREQUENCY,
            idle_time_s: 20e-6,
            preset: PresetName::Empty,
            decay_constant_tau_s: None,
            k_factor: None,
            ideal_channel: false,
            snr_db: 25.0,
            cfo_hz: 0.0,
            timing_offset: 0,
            distance: Distance::Near25mm,
            seeds: vec![1],
            image_path: None,
            output_dir: PathBuf::from("out"),
            packet_repeat: 1,
            scrambler_seed: DEFAULT_SEED,
            csi_rows: DEFAULT_CSI_ROWS,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.mcs_list.is_empty() {
            return bad("mcs_list is empty");
        }
        if self.seeds.is_empty() {
            return bad("seeds is empty");
        }
        if self.msdu_length == 0 || self.msdu_length > crate::framing::MAX_PSDU_LENGTH - 8 {
            return bad("msdu_length must be 1..=4087");
        }
        if self.bandwidth_hz != SAMPLE_RATE {
            return bad("only 20 MHz bandwidth is supported");
        }
        if !(self.idle_time_s >= 0.0 && self.idle_time_s.is_finite()) {
            return bad("idle_time_s must be finite and non-negative");
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY || !self.cfo_hz.is_finite() {
            return bad("snr_db and cfo_hz must be numbers");
        }
        if self.packet_repeat == 0 {
            return bad("packet_repeat must be at least 1");
        }
        if self.scrambler_seed == 0 || self.scrambler_seed > 0x7f {
            return bad("scrambler_seed must be 1..=127");
        }
        if self.csi_rows == 0 {
            return bad("csi_rows must be at least 1");
        }
        if !self.loading_preset()?.is_valid() {
            return bad("decay constant must be positive and k_factor non-negative");
        }
        Ok(())
    }

    /// Preset with any configured overrides applied.
    pub fn loading_preset(&self) -> Result<LoadingPreset> {
        let mut p = match LoadingPreset::named(self.preset, self.distance) {
            Some(p) => p,
            None => match (self.decay_constant_tau_s, self.k_factor) {
                (Some(t), Some(k)) => LoadingPreset::custom(t, k),
                _ => {
                    return Err(Error::Config(
                        "Custom preset needs decay_constant_tau_s and k_factor".into(),
                    ))
                }
            },
        };
        if let Some(t) = self.decay_constant_tau_s {
            p.decay_constant_tau = t;
        }
        if let Some(k) = self.k_factor {
            p.k_factor = k;
        }
        Ok(p)
    }

    pub fn payload_file(&self) -> Result<Vec<u8>> {
        match &self.image_path {
            None => Ok(test_image()),
            Some(p) => std::fs::read(p).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        }
    }

    pub fn realization(&self, seed: u64) -> Result<ChannelRealization> {
        if self.ideal_channel {
            return Ok(ChannelRealization::identity(self.bandwidth_hz));
        }
        Ok(draw_channel(&self.loading_preset()?, seed))
    }

    pub fn impairments(&self, mcs: Mcs, seed: u64) -> Impairments {
        Impairments {
            snr_db: self.snr_db,
            cfo_hz: self.cfo_hz,
            timing_offset: self.timing_offset,
            noise_seed: noise_seed(seed, mcs),
        }
    }
}

/// Noise differs per MCS; the channel draw depends on the seed alone so
/// every MCS of a seed sees the same enclosure.
fn noise_seed(seed: u64, mcs: Mcs) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (u64::from(mcs.index()) + 1).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvmMode {
    DataAided,
    DecisionDirected,
}

/// Summary of one detected packet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketReport {
    pub start_index: usize,
    /// Index of the transmitted packet this detection was matched to.
    pub matched_tx: Option<usize>,
    pub status: PacketStatus,
    pub header_fail: Option<HeaderFail>,
    pub mcs: Option<Mcs>,
    pub length: Option<usize>,
    pub coarse_cfo_hz: f64,
    pub fine_cfo_hz: f64,
    pub pilot_cfo_hz: f64,
    pub total_cfo_hz: f64,
    pub evm: Option<EvmReport>,
    pub ber: Ber,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageOutcome {
    /// `None` when reassembly failed.
    pub integrity: Option<Integrity>,
    pub missing_fragments: Vec<usize>,
    pub byte_errors: usize,
    pub error_ratio: f64,
    #[serde(skip)]
    pub bytes: Option<Vec<u8>>,
}

impl ImageOutcome {
    pub fn is_exact(&self) -> bool {
        self.integrity == Some(Integrity::Exact)
    }
}

/// One (MCS, seed) work item, or one capture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mcs: Option<Mcs>,
    pub seed: Option<u64>,
    pub transmitted_packets: usize,
    pub packets: Vec<PacketReport>,
    pub ok_count: usize,
    pub header_fail_count: usize,
    pub fcs_fail_count: usize,
    pub missed_count: usize,
    pub false_alarm_count: usize,
    pub ber: Ber,
    /// Pooled over the run's packets.
    pub rms_evm_percent: Option<f64>,
    /// Largest per-packet peak EVM of the run.
    pub peak_evm_percent: Option<f64>,
    pub evm_symbols: usize,
    /// Ground truth from the channel model.
    pub coherence_bandwidth_hz: Option<f64>,
    pub csi_spread_db: Option<f64>,
    pub image: Option<ImageOutcome>,
    #[serde(skip)]
    pub csi: CsiMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McsSummary {
    pub mcs: Mcs,
    pub runs: usize,
    pub median_rms_evm_percent: Option<f64>,
    pub median_peak_evm_percent: Option<f64>,
    pub median_csi_spread_db: Option<f64>,
    pub ok_count: usize,
    pub header_fail_count: usize,
    pub fcs_fail_count: usize,
    pub image_exact_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    pub scenario: String,
    pub evm_mode: EvmMode,
    pub sample_rate_hz: f64,
    pub center_frequency_hz: f64,
    pub config: Option<ScenarioConfig>,
    pub preset: Option<LoadingPreset>,
    pub packet_count: usize,
    pub ok_count: usize,
    pub header_fail_count: usize,
    pub fcs_fail_count: usize,
    pub ber: Ber,
    /// One row per run.
    pub evm: Vec<EvmReport>,
    pub avg_coarse_cfo: Vec<CfoStats>,
    pub per_mcs: Vec<McsSummary>,
    pub csi: CsiMatrix,
    pub runs: Vec<RunReport>,
    pub warnings: Vec<String>,
}

/// Transmit side of one run.
pub struct Burst {
    pub waveform: IqWaveform,
    pub ppdus: Vec<TxPpdu>,
    pub psdus: Vec<Vec<u8>>,
    pub starts: Vec<usize>,
}

pub fn build_burst(payload: &[u8], mcs: Mcs, cfg: &ScenarioConfig) -> Result<Burst> {
    let msdus = fragment(payload, cfg.msdu_length)?;
    let mut ppdus = Vec::new();
    let mut psdus = Vec::new();
    for _ in 0..cfg.packet_repeat {
        for m in &msdus {
            let psdu = serialize_mpdu(&build_mpdu(m, 0)?)?;
            psdus.push(psdu.0.clone());
            ppdus.push(build_ppdu_with_reference(
                &NonHtPacket { psdu, mcs },
                cfg.scrambler_seed,
            )?);
        }
    }
    let waves: Vec<IqWaveform> = ppdus.iter().map(|p| p.waveform.clone()).collect();
    let waveform = assemble_burst(&waves, cfg.idle_time_s)?;
    let lens: Vec<usize> = waves.iter().map(|w| w.len()).collect();
    let starts = burst_starts(&lens, idle_samples(cfg.idle_time_s, cfg.bandwidth_hz));
    Ok(Burst {
        waveform,
        ppdus,
        psdus,
        starts,
    })
}

/// Pair detections with transmitted packets by the L-LTF position.
fn match_detections(results: &[PacketResult], starts: &[usize], offset: usize) -> Vec<Option<usize>> {
    const LTF_AT: usize = STF_LEN + 32;
    let mut used = vec![false; starts.len()];
    results
        .iter()
        .map(|r| {
            let best = starts
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .map(|(i, &s)| (i, (r.sync.ltf_index as i64 - (s + offset + LTF_AT) as i64).abs()))
                .min_by_key(|&(_, d)| d)
                .filter(|&(_, d)| d <= PREAMBLE_LEN as i64 / 2);
            best.map(|(i, _)| {
                used[i] = true;
                i
            })
        })
        .collect()
}

fn packet_report(r: &PacketResult, matched: Option<usize>, evm_row: Option<EvmReport>, ber_value: Ber) -> PacketReport {
    PacketReport {
        start_index: r.sync.start_index,
        matched_tx: matched,
        status: r.status,
        header_fail: r.lsig.err(),
        mcs: r.lsig.ok().map(|l| l.mcs),
        length: r.lsig.ok().map(|l| l.length),
        coarse_cfo_hz: r.sync.coarse_cfo_hz,
        fine_cfo_hz: r.sync.fine_cfo_hz,
        pilot_cfo_hz: r.sync.pilot_cfo_hz,
        total_cfo_hz: r.sync.total_cfo_hz(),
        evm: evm_row,
        ber: ber_value,
    }
}

/// Rebuild the payload file from the FCS-valid packets of a run.
pub fn recover_image(results: &[PacketResult], original: &[u8]) -> ImageOutcome {
    let mpdus: Vec<Mpdu> = results
        .iter()
        .filter(|r| r.status == PacketStatus::Ok)
        .filter_map(|r| r.psdu.as_deref().and_then(|p| parse_mpdu(p).ok()))
        .collect();
    match reassemble(&mpdus) {
        Ok(payload) => {
            let (bytes, integrity) = decode_image(&payload);
            let (byte_errors, error_ratio) = compare_images(original, &bytes);
            ImageOutcome {
                integrity: Some(integrity),
                missing_fragments: Vec::new(),
                byte_errors,
                error_ratio,
                bytes: Some(bytes),
            }
        }
        Err(e) => ImageOutcome {
            integrity: None,
            missing_fragments: match e {
                Error::MissingFragments(v) => v,
                _ => Vec::new(),
            },
            byte_errors: original.len(),
            error_ratio: 1.0,
            bytes: None,
        },
    }
}

/// Counters and aggregates shared by simulated runs and captures.
fn summarize(
    mcs: Option<Mcs>,
    seed: Option<u64>,
    results: &[PacketResult],
    packets: Vec<PacketReport>,
    acc: EvmAccumulator,
    csi_rows: usize,
) -> RunReport {
    let count = |s| results.iter().filter(|r| r.status == s).count();
    let (mut errors, mut bits) = (0usize, 0usize);
    for p in &packets {
        if let (Ber::Ratio(r), Some(l)) = (p.ber, p.length) {
            errors += (r * (l * 8) as f64).round() as usize;
            bits += l * 8;
        }
    }
    let csi = csi_matrix(results, csi_rows);
    RunReport {
        mcs,
        seed,
        transmitted_packets: 0,
        ok_count: count(PacketStatus::Ok),
        header_fail_count: count(PacketStatus::HeaderFail),
        fcs_fail_count: count(PacketStatus::FcsFail),
        missed_count: 0,
        false_alarm_count: 0,
        ber: if bits == 0 {
            Ber::NotApplicable
        } else {
            Ber::Ratio(errors as f64 / bits as f64)
        },
        rms_evm_percent: acc.finish().map(|e| e.rms_percent),
        peak_evm_percent: packets
            .iter()
            .filter_map(|p| p.evm.as_ref().map(|e| e.peak_percent))
            .reduce(f64::max),
        evm_symbols: acc.count(),
        coherence_bandwidth_hz: None,
        csi_spread_db: csi.spread_db(),
        image: None,
        packets,
        csi,
    }
}

/// Simulate one (MCS, seed) work item end to end.
pub fn simulate_run(cfg: &ScenarioConfig, file: &[u8], mcs: Mcs, seed: u64) -> Result<RunReport> {
    let payload = encode_image(file)?;
    let burst = build_burst(&payload, mcs, cfg)?;
    let realization = cfg.realization(seed)?;
    let rx = apply_channel(&burst.waveform, &realization, &cfg.impairments(mcs, seed));
    let results = receive_burst(&rx, &RxConfig::default());
    let matches = match_detections(&results, &burst.starts, cfg.timing_offset);

    let mut acc = EvmAccumulator::default();
    let mut packets = Vec::with_capacity(results.len());
    for (r, &m) in results.iter().zip(&matches) {
        let tx = m.map(|i| (&burst.ppdus[i], &burst.psdus[i]));
        let header_ok = match (r.lsig, tx) {
            (Ok(l), Some((_, psdu))) => l.mcs == mcs && l.length == psdu.len(),
            (Ok(_), None) => true,
            (Err(_), _) => false,
        };
        let mut evm_row = None;
        let mut ber_value = Ber::NotApplicable;
        if let (true, Some((ppdu, psdu)), Some(rx_psdu)) = (header_ok, tx, r.psdu.as_ref()) {
            if r.equalized_symbols.len() == ppdu.data_points.len() {
                let e = evm(&r.equalized_symbols, &ppdu.data_points)?;
                acc.add(&r.equalized_symbols, &ppdu.data_points);
                evm_row = Some(EvmReport {
                    scenario: cfg.label.clone(),
                    mcs,
                    rms_percent: e.rms_percent,
                    peak_percent: e.peak_percent,
                    n_symbols: ppdu.n_data_symbols,
                });
            }
            ber_value = ber(&bytes_to_bits(psdu), &bytes_to_bits(rx_psdu), true)?;
        }
        packets.push(packet_report(r, m, evm_row, ber_value));
    }

    let mut run = summarize(Some(mcs), Some(seed), &results, packets, acc, cfg.csi_rows);
    let matched = matches.iter().flatten().count();
    run.transmitted_packets = burst.starts.len();
    run.missed_count = burst.starts.len() - matched;
    run.false_alarm_count = results.len() - matched;
    run.coherence_bandwidth_hz = Some(coherence_bandwidth(&realization, 0.5));
    run.image = Some(recover_image(&results, file));
    Ok(run)
}

fn aggregate(label: &str, mode: EvmMode, fs: f64, runs: Vec<RunReport>) -> LinkReport {
    let mut warnings = Vec::new();
    let evm_rows: Vec<EvmReport> = runs
        .iter()
        .filter_map(|r| {
            Some(EvmReport {
                scenario: label.to_string(),
                mcs: r.mcs?,
                rms_percent: r.rms_evm_percent?,
                peak_percent: r.peak_evm_percent?,
                n_symbols: r.evm_symbols,
            })
        })
        .collect();
    let cfo = cfo_summary(runs.iter().flat_map(|r| {
        r.packets
            .iter()
            .filter_map(move |p| r.mcs.or(p.mcs).map(|m| (m, p.coarse_cfo_hz)))
    }));
    let csi = runs
        .iter()
        .find(|r| !r.csi.is_empty())
        .map(|r| r.csi.clone())
        .unwrap_or_default();
    if csi.is_empty() {
        warnings.push("no decoded packets: CSI matrix is empty".into());
    }
    let packet_count: usize = runs.iter().map(|r| r.packets.len()).sum();
    if packet_count == 0 {
        warnings.push("no packets detected".into());
    }

    let mut mcs_seen: Vec<Mcs> = runs.iter().filter_map(|r| r.mcs).collect();
    mcs_seen.sort_by_key(|m| m.index());
    mcs_seen.dedup();
    let per_mcs = mcs_seen
        .into_iter()
        .map(|m| {
            let rs: Vec<&RunReport> = runs.iter().filter(|r| r.mcs == Some(m)).collect();
            McsSummary {
                mcs: m,
                runs: rs.len(),
                median_rms_evm_percent: median(rs.iter().filter_map(|r| r.rms_evm_percent)),
                median_peak_evm_percent: median(rs.iter().filter_map(|r| r.peak_evm_percent)),
                median_csi_spread_db: median(rs.iter().filter_map(|r| r.csi_spread_db)),
                ok_count: rs.iter().map(|r| r.ok_count).sum(),
                header_fail_count: rs.iter().map(|r| r.header_fail_count).sum(),
                fcs_fail_count: rs.iter().map(|r| r.fcs_fail_count).sum(),
                image_exact_runs: rs
                    .iter()
                    .filter(|r| r.image.as_ref().is_some_and(|i| i.is_exact()))
                    .count(),
            }
        })
        .collect();

    let (mut errors, mut bits) = (0.0, 0.0);
    for r in &runs {
        for p in &r.packets {
            if let (Ber::Ratio(x), Some(l)) = (p.ber, p.length) {
                errors += x * (l * 8) as f64;
                bits += (l * 8) as f64;
            }
        }
    }

    LinkReport {
        scenario: label.to_string(),
        evm_mode: mode,
        sample_rate_hz: fs,
        center_frequency_hz: CENTER_FREQUENCY,
        config: None,
        preset: None,
        packet_count,
        ok_count: runs.iter().map(|r| r.ok_count).sum(),
        header_fail_count: runs.iter().map(|r| r.header_fail_count).sum(),
        fcs_fail_count: runs.iter().map(|r| r.fcs_fail_count).sum(),
        ber: if bits == 0.0 {
            Ber::NotApplicable
        } else {
            Ber::Ratio(errors / bits)
        },
        evm: evm_rows,
        avg_coarse_cfo: cfo,
        per_mcs,
        csi,
        runs,
        warnings,
    }
}

/// Run every (MCS, seed) combination in parallel; results keep config order.
pub fn simulate(cfg: &ScenarioConfig) -> Result<LinkReport> {
    cfg.validate()?;
    let file = cfg.payload_file()?;
    let items: Vec<(Mcs, u64)> = cfg
        .mcs_list
        .iter()
        .flat_map(|&m| cfg.seeds.iter().map(move |&s| (m, s)))
        .collect();
    let runs = items
        .par_iter()
        .map(|&(m, s)| simulate_run(cfg, &file, m, s))
        .collect::<Result<Vec<_>>>()?;
    let mut report = aggregate(&cfg.label, EvmMode::DataAided, cfg.bandwidth_hz, runs);
    report.center_frequency_hz = cfg.center_frequency_hz;
    report.preset = if cfg.ideal_channel {
        None
    } else {
        Some(cfg.loading_preset()?)
    };
    report.config = Some(cfg.clone());
    Ok(report)
}

/// Simulate and write the report files into `output_dir`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<LinkReport> {
    let report = simulate(cfg)?;
    write_report(&report, &cfg.output_dir)?;
    Ok(report)
}

/// Receive an arbitrary waveform with decision-directed EVM.
pub fn analyze_waveform(waveform: &IqWaveform, label: &str, csi_rows: usize) -> LinkReport {
    let results = receive_burst(waveform, &RxConfig::default());
    let mut acc = EvmAccumulator::default();
    let packets = results
        .iter()
        .map(|r| {
            let row = match (r.lsig, r.evm) {
                (Ok(l), Some(e)) => {
                    let reference: Vec<Complex64> = r
                        .equalized_symbols
                        .iter()
                        .map(|&p| l.mcs.modulation().nearest(p))
                        .collect();
                    acc.add(&r.equalized_symbols, &reference);
                    Some(EvmReport {
                        scenario: label.to_string(),
                        mcs: l.mcs,
                        rms_percent: e.rms_percent,
                        peak_percent: e.peak_percent,
                        n_symbols: r.csi_per_symbol.len(),
                    })
                }
                _ => None,
            };
            packet_report(r, None, row, Ber::NotApplicable)
        })
        .collect();
    let run = summarize(None, None, &results, packets, acc, csi_rows);
    let mut report = aggregate(label, EvmMode::DecisionDirected, waveform.sample_rate, vec![run]);
    report.evm = report.runs[0].packets.iter().filter_map(|p| p.evm.clone()).collect();
    report
}

/// Analyze an I/Q capture on disk.
pub fn analyze_capture(path: impl AsRef<Path>, cfg: &ScenarioConfig) -> Result<LinkReport> {
    let (w, header) = read_iq(path)?;
    if w.sample_rate != SAMPLE_RATE {
        return Err(Error::SampleRate(w.sample_rate));
    }
    let mut report = analyze_waveform(&w, &cfg.label, cfg.csi_rows);
    report.center_frequency_hz = header.center_frequency_hz;
    Ok(report)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Write evm.csv, csi.csv, cfo.csv, summary.json and any recovered images.
pub fn write_report(report: &LinkReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    write_file(&dir.join("evm.csv"), evm_csv(&report.evm).as_bytes())?;
    write_file(&dir.join("csi.csv"), report.csi.to_csv().as_bytes())?;
    write_file(&dir.join("cfo.csv"), cfo_csv(&report.avg_coarse_cfo).as_bytes())?;
    write_file(&dir.join("summary.json"), summary_json(report).as_bytes())?;
    let ext = report
        .config
        .as_ref()
        .and_then(|c| c.image_path.as_ref())
        .and_then(|p| p.extension())
        .map(|e| e.to_string_lossy().into_owned())
        .unwrap_or_else(|| "pgm".into());
    for run in &report.runs {
        if let (Some(m), Some(s), Some(bytes)) = (run.mcs, run.seed, run.image.as_ref().and_then(|i| i.bytes.as_ref()))
        {
            write_file(&dir.join(format!("recovered_mcs{}_seed{s}.{ext}", m.index())), bytes)?;
        }
    }
    Ok(())
}

pub fn summary_json(report: &LinkReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// Sidecar document stored next to a cf32le capture as `<file>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqFileHeader {
    pub sample_rate_hz: f64,
    pub center_frequency_hz: f64,
    pub format: String,
    pub length_samples: usize,
}

pub const IQ_FORMAT: &str = "cf32le";

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Interleaved little-endian f32 I/Q pairs plus the JSON sidecar. Samples
/// are rounded to f32.
pub fn write_iq(waveform: &IqWaveform, path: impl AsRef<Path>, center_frequency_hz: f64) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = Vec::with_capacity(8 * waveform.len());
    for s in &waveform.samples {
        bytes.extend_from_slice(&(s.re as f32).to_le_bytes());
        bytes.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    write_file(path, &bytes)?;
    let header = IqFileHeader {
        sample_rate_hz: waveform.sample_rate,
        center_frequency_hz,
        format: IQ_FORMAT.into(),
        length_samples: waveform.len(),
    };
    let json = serde_json::to_string_pretty(&header).expect("header serializes");
    write_file(&sidecar_path(path), json.as_bytes())
}

pub fn read_iq(path: impl AsRef<Path>) -> Result<(IqWaveform, IqFileHeader)> {
    let path = path.as_ref();
    let side = sidecar_path(path);
    let text =
        std::fs::read_to_string(&side).map_err(|e| Error::IqFormat(format!("sidecar {}: {e}", side.display())))?;
    let header: IqFileHeader = serde_json::from_str(&text).map_err(|e| Error::IqFormat(format!("sidecar: {e}")))?;
    if header.format != IQ_FORMAT {
        return Err(Error::IqFormat(format!("unsupported format {:?}", header.format)));
    }
    if !(header.sample_rate_hz > 0.0 && header.sample_rate_hz.is_finite()) {
        return Err(Error::IqFormat("invalid sample rate".into()));
    }
    let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::IqFormat(format!(
            "{} bytes is not a whole number of samples",
            bytes.len()
        )));
    }
    if bytes.len() / 8 != header.length_samples {
        return Err(Error::IqFormat(format!(
            "sidecar says {} samples, file holds {}",
            header.length_samples,
            bytes.len() / 8
        )));
    }
    let f = |b: &[u8]| f64::from(f32::from_le_bytes(b.try_into().unwrap()));
    let samples = bytes
        .chunks_exact(8)
        .map(|c| Complex64::new(f(&c[..4]), f(&c[4..])))
        .collect();
    Ok((IqWaveform::new(samples, header.sample_rate_hz), header))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_reference_setup() {
        let c = ScenarioConfig::default();
        assert_eq!(c.msdu_length, 2304);
        assert_eq!(c.mcs_list.len(), 8);
        assert_eq!(c.bandwidth_hz, 20e6);
        assert_eq!(c.center_frequency_hz, 2.432e9);
        assert_eq!(c.idle_time_s, 20e-6);
        assert_eq!(c.scrambler_seed, 0b1011101);
        assert_eq!(ScenarioConfig::from_toml_str("").unwrap(), c);
    }

    #[test]
    fn parses_flat_toml() {
        let c = ScenarioConfig::from_toml_str(
            "preset = \"CornerLoaded\"\ndistance = \"125mm\"\nmcs_list = [0, 7]\nseeds = [4, 5]\nsnr_db = inf\n",
        )
        .unwrap();
        assert_eq!(c.preset, PresetName::CornerLoaded);
        assert_eq!(c.distance, Distance::Far125mm);
        assert_eq!(c.mcs_list, vec![Mcs::new(0).unwrap(), Mcs::new(7).unwrap()]);
        assert!(c.snr_db.is_infinite());
    }

    #[test]
    fn rejects_bad_configs() {
        for s in [
            "seeds = []",
            "mcs_list = [8]",
            "bandwidth_hz = 40e6",
            "msdu_length = 0",
            "preset = \"Custom\"",
            "scrambler_seed = 0",
            "no_such_key = 1",
        ] {
            assert!(matches!(ScenarioConfig::from_toml_str(s), Err(Error::Config(_))), "{s}");
        }
        assert!(
            ScenarioConfig::from_toml_str("preset = \"Custom\"\ndecay_constant_tau_s = 1e-7\nk_factor = 1.0").is_ok()
        );
    }

    #[test]
    fn ideal_run_is_exact() {
        let cfg = ScenarioConfig {
            ideal_channel: true,
            snr_db: f64::INFINITY,
            ..Default::default()
        };
        let r = simulate_run(&cfg, &test_image(), Mcs::new(5).unwrap(), 1).unwrap();
        assert_eq!(r.transmitted_packets, 2);
        assert_eq!(r.ok_count, 2);
        assert!(r.image.as_ref().unwrap().is_exact());
        assert!(r.rms_evm_percent.unwrap() < 0.1);
        assert_eq!(r.ber, Ber::Ratio(0.0));
    }
}
