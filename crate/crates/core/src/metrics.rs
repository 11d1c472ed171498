//! Link observables: RMS and peak EVM, BER with the header-discard rule,
//! per-MCS CFO statistics and CSI matrices, plus their CSV forms.

use crate::error::{Error, Result};
use crate::ofdm::{occupied_subcarriers, Mcs, Modulation};
use crate::phy_rx::{PacketResult, PacketStatus};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

pub use crate::phy_rx::EvmPercent;

/// Data-aided EVM against the transmitted constellation points, normalized
/// by the mean reference power. Peak EVM can exceed 100%.
pub fn evm(equalized: &[Complex64], reference: &[Complex64]) -> Result<EvmPercent> {
    if equalized.len() != reference.len() {
        return Err(Error::LengthMismatch(equalized.len(), reference.len()));
    }
    if equalized.is_empty() {
        return Err(Error::EmptyInput);
    }
    let acc = EvmAccumulator::default().with(equalized, reference);
    Ok(acc.finish().unwrap())
}

/// Decision-directed EVM: the reference is the nearest constellation point.
pub fn evm_decision_directed(equalized: &[Complex64], modulation: Modulation) -> Result<EvmPercent> {
    let reference: Vec<Complex64> = equalized.iter().map(|&p| modulation.nearest(p)).collect();
    evm(equalized, &reference)
}

/// Pools error and reference energy over several packets; the peak is the
/// largest single error vector seen.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvmAccumulator {
    err: f64,
    reference: f64,
    peak_err: f64,
    n: usize,
}

impl EvmAccumulator {
    pub fn with(mut self, equalized: &[Complex64], reference: &[Complex64]) -> Self {
        self.add(equalized, reference);
        self
    }

    pub fn add(&mut self, equalized: &[Complex64], reference: &[Complex64]) {
        for (r, s) in equalized.iter().zip(reference) {
            let e = (r - s).norm_sqr();
            self.err += e;
            self.reference += s.norm_sqr();
            self.peak_err = self.peak_err.max(e);
            self.n += 1;
        }
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn finish(&self) -> Option<EvmPercent> {
        if self.n == 0 || self.reference == 0.0 {
            return None;
        }
        let mean_ref = self.reference / self.n as f64;
        Some(EvmPercent {
            rms_percent: 100.0 * (self.err / self.reference).sqrt(),
            peak_percent: 100.0 * (self.peak_err / mean_ref).sqrt(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ber {
    Ratio(f64),
    NotApplicable,
}

impl Ber {
    pub fn ratio(self) -> Option<f64> {
        match self {
            Ber::Ratio(r) => Some(r),
            Ber::NotApplicable => None,
        }
    }
}

pub fn bit_errors(tx_bits: &[u8], rx_bits: &[u8]) -> usize {
    tx_bits.iter().zip(rx_bits).filter(|(a, b)| (*a ^ *b) & 1 == 1).count()
}

/// Payload bit error ratio. A packet whose header failed is discarded and
/// has no BER.
pub fn ber(tx_bits: &[u8], rx_bits: &[u8], header_ok: bool) -> Result<Ber> {
    if !header_ok {
        return Ok(Ber::NotApplicable);
    }
    if tx_bits.len() != rx_bits.len() {
        return Err(Error::LengthMismatch(tx_bits.len(), rx_bits.len()));
    }
    if tx_bits.is_empty() {
        return Ok(Ber::Ratio(0.0));
    }
    Ok(Ber::Ratio(bit_errors(tx_bits, rx_bits) as f64 / tx_bits.len() as f64))
}

/// Per-symbol, per-subcarrier channel estimates (52 columns).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CsiMatrix {
    pub rows: Vec<Vec<Complex64>>,
}

/// Symbols in a default CSI matrix.
pub const DEFAULT_CSI_ROWS: usize = 12;

impl CsiMatrix {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.iter().map(|v| v.norm()).collect()).collect()
    }

    /// Ratio in dB between the strongest and weakest subcarrier of the
    /// symbol-averaged magnitude.
    pub fn spread_db(&self) -> Option<f64> {
        if self.rows.is_empty() {
            return None;
        }
        let cols = self.rows[0].len();
        let mean: Vec<f64> = (0..cols)
            .map(|c| self.rows.iter().map(|r| r[c].norm()).sum::<f64>() / self.rows.len() as f64)
            .collect();
        let max = mean.iter().cloned().fold(f64::MIN, f64::max);
        let min = mean.iter().cloned().fold(f64::MAX, f64::min);
        Some(20.0 * (max / min.max(1e-300)).log10())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("symbol,subcarrier,magnitude_db,phase_rad\n");
        for (i, row) in self.rows.iter().enumerate() {
            for (v, k) in row.iter().zip(occupied_subcarriers()) {
                let db = 20.0 * v.norm().max(1e-300).log10();
                writeln!(s, "{i},{k},{db},{}", v.arg()).unwrap();
            }
        }
        s
    }
}

/// First `n_rows` CSI rows from decoded packets, in packet order.
pub fn csi_matrix(results: &[PacketResult], n_rows: usize) -> CsiMatrix {
    let rows = results
        .iter()
        .filter(|r| r.status != PacketStatus::HeaderFail)
        .flat_map(|r| r.csi_per_symbol.iter().cloned())
        .take(n_rows)
        .collect();
    CsiMatrix { rows }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfoStats {
    pub mcs: Mcs,
    pub mean_hz: f64,
    pub std_hz: f64,
    pub count: usize,
}

/// Mean and (population) standard deviation of per-packet coarse CFO,
/// grouped by MCS and sorted by MCS index.
pub fn cfo_summary<I: IntoIterator<Item = (Mcs, f64)>>(samples: I) -> Vec<CfoStats> {
    let mut groups: std::collections::BTreeMap<u8, Vec<f64>> = Default::default();
    for (m, f) in samples {
        groups.entry(m.index()).or_default().push(f);
    }
    groups
        .into_iter()
        .map(|(m, v)| {
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            CfoStats {
                mcs: Mcs::new(m).unwrap(),
                mean_hz: mean,
                std_hz: var.sqrt(),
                count: v.len(),
            }
        })
        .collect()
}

pub fn cfo_csv(stats: &[CfoStats]) -> String {
    let mut s = String::from("mcs,mean_hz,std_hz\n");
    for c in stats {
        writeln!(s, "{},{},{}", c.mcs.index(), c.mean_hz, c.std_hz).unwrap();
    }
    s
}

/// One EVM row of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvmReport {
    pub scenario: String,
    pub mcs: Mcs,
    pub rms_percent: f64,
    pub peak_percent: f64,
    pub n_symbols: usize,
}

pub fn evm_csv(rows: &[EvmReport]) -> String {
    let mut s = String::from("scenario,mcs,rms_percent,peak_percent\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{}",
            r.scenario,
            r.mcs.index(),
            r.rms_percent,
            r.peak_percent
        )
        .unwrap();
    }
    s
}

/// Median of finite values; `None` when there are none.
pub fn median(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}
