//! Inject a carrier frequency offset and compare the coarse, coarse+fine
//! and pilot-refined estimates.
//!
//! cargo run --release --example cfo_recovery [trials]

use nflink::bits::DEFAULT_SEED;
use nflink::channel::{apply_channel, ChannelRealization, Impairments};
use nflink::framing::Psdu;
use nflink::metrics::{evm, median};
use nflink::ofdm::SAMPLE_RATE;
use nflink::phy_rx::{receive_burst, RxConfig};
use nflink::phy_tx::{build_ppdu_with_reference, NonHtPacket};
use nflink::Mcs;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> nflink::Result<()> {
    let trials: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let ideal = ChannelRealization::identity(SAMPLE_RATE);
    println!(
        "{:>10}{:>12}{:>12}{:>12}{:>10}{:>10}",
        "cfo_hz", "coarse_err", "fine_err", "total_err", "<500Hz", "evm%"
    );
    for cfo in [0.0, 1e3, 50e3, 156.25e3] {
        let (mut coarse, mut pre, mut total, mut evms) = (vec![], vec![], vec![], vec![]);
        for t in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(t);
            let bytes: Vec<u8> = (0..1000).map(|_| rng.random()).collect();
            let packet = NonHtPacket {
                psdu: Psdu::new(bytes)?,
                mcs: Mcs::new(7)?,
            };
            let tx = build_ppdu_with_reference(&packet, DEFAULT_SEED)?;
            let imp = Impairments {
                snr_db: 25.0,
                cfo_hz: cfo,
                timing_offset: 200,
                noise_seed: t,
            };
            let rx = apply_channel(&tx.waveform, &ideal, &imp);
            let Some(r) = receive_burst(&rx, &RxConfig::default()).into_iter().next() else {
                continue;
            };
            coarse.push((r.sync.coarse_cfo_hz - cfo).abs());
            pre.push((r.sync.preamble_cfo_hz() - cfo).abs());
            total.push((r.sync.total_cfo_hz() - cfo).abs());
            if r.equalized_symbols.len() == tx.data_points.len() {
                evms.push(evm(&r.equalized_symbols, &tx.data_points)?.rms_percent);
            }
        }
        let within = total.iter().filter(|&&e| e < 500.0).count();
        println!(
            "{:>10.0}{:>12.0}{:>12.0}{:>12.0}{:>10}{:>10.3}",
            cfo,
            median(coarse).unwrap(),
            median(pre).unwrap(),
            median(total.clone()).unwrap(),
            format!("{within}/{trials}"),
            median(evms).unwrap()
        );
    }
    Ok(())
}
