//! Write a simulated burst as a cf32le capture, then analyze it as an
//! external recording would be.
//!
//! cargo run --release --example iq_capture [path]

use nflink::channel::apply_channel;
use nflink::imaging::{encode_image, test_image};
use nflink::scenario::{analyze_capture, build_burst, write_iq, ScenarioConfig};
use nflink::Mcs;

fn main() -> nflink::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("nflink_burst.cf32"));
    let cfg = ScenarioConfig {
        msdu_length: 1000,
        cfo_hz: 12e3,
        timing_offset: 500,
        ..Default::default()
    };
    let mcs = Mcs::new(4)?;
    let burst = build_burst(&encode_image(&test_image())?, mcs, &cfg)?;
    let rx = apply_channel(&burst.waveform, &cfg.realization(3)?, &cfg.impairments(mcs, 3));
    write_iq(&rx, &path, cfg.center_frequency_hz)?;
    println!("wrote {} samples to {}", rx.len(), path.display());

    let report = analyze_capture(&path, &cfg)?;
    for p in &report.runs[0].packets {
        println!(
            "start {:>6}  {:?}  coarse {:>8.0} Hz  total {:>8.0} Hz  EVM {}",
            p.start_index,
            p.status,
            p.coarse_cfo_hz,
            p.total_cfo_hz,
            p.evm.as_ref().map_or("-".into(), |e| format!("{:.2}%", e.rms_percent))
        );
    }
    Ok(())
}
