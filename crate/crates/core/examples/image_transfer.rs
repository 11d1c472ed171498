//! Send an image file across the enclosure and write what came back.
//!
//! cargo run --release --example image_transfer [image] [preset] [snr_db]

use nflink::channel::PresetName;
use nflink::scenario::{simulate_run, ScenarioConfig};
use nflink::Mcs;

fn main() -> nflink::Result<()> {
    let mut args = std::env::args().skip(1);
    let image_path = args.next().filter(|s| s != "-").map(Into::into);
    let preset = match args.next().as_deref() {
        Some("Empty") => PresetName::Empty,
        Some("SideLoaded") => PresetName::SideLoaded,
        _ => PresetName::CornerLoaded,
    };
    let snr_db = args.next().and_then(|s| s.parse().ok()).unwrap_or(25.0);
    let cfg = ScenarioConfig {
        preset,
        snr_db,
        image_path,
        ..Default::default()
    };
    let file = cfg.payload_file()?;
    println!("{} bytes, {preset:?}, {snr_db} dB", file.len());
    for mcs in Mcs::all() {
        let run = simulate_run(&cfg, &file, mcs, 1)?;
        let img = run.image.as_ref().unwrap();
        println!(
            "{mcs}: {}/{} packets ok, integrity {:?}, {} byte errors",
            run.ok_count, run.transmitted_packets, img.integrity, img.byte_errors
        );
        if let Some(bytes) = &img.bytes {
            let out = std::env::temp_dir().join(format!("nflink_rx_mcs{}.pgm", mcs.index()));
            std::fs::write(&out, bytes)?;
        }
    }
    Ok(())
}
