//! EVM, CSI spread and coherence bandwidth for each absorber loading at
//! 25 dB SNR and MCS7.
//!
//! cargo run --release --example loading_sweep [n_seeds] [first_seed]

use nflink::channel::PresetName;
use nflink::scenario::{simulate, ScenarioConfig};
use nflink::Mcs;

fn main() -> nflink::Result<()> {
    let n: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let first: u64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    println!(
        "{:<14}{:>10}{:>11}{:>11}{:>12}{:>8}",
        "preset", "rms_evm%", "peak_evm%", "csi_dB", "Bc_kHz", "ok"
    );
    for preset in [PresetName::Empty, PresetName::SideLoaded, PresetName::CornerLoaded] {
        let cfg = ScenarioConfig {
            label: format!("{preset:?}"),
            preset,
            mcs_list: vec![Mcs::new(7)?],
            seeds: (first..first + n).collect(),
            snr_db: 25.0,
            ..Default::default()
        };
        let report = simulate(&cfg)?;
        let s = &report.per_mcs[0];
        let bc = nflink::metrics::median(report.runs.iter().filter_map(|r| r.coherence_bandwidth_hz)).unwrap();
        println!(
            "{:<14}{:>10.2}{:>11.2}{:>11.2}{:>12.0}{:>8}",
            cfg.label,
            s.median_rms_evm_percent.unwrap_or(f64::NAN),
            s.median_peak_evm_percent.unwrap_or(f64::NAN),
            s.median_csi_spread_db.unwrap_or(f64::NAN),
            bc / 1e3,
            format!(
                "{}/{}",
                s.ok_count,
                report.runs.iter().map(|r| r.transmitted_packets).sum::<usize>()
            ),
        );
    }
    Ok(())
}
