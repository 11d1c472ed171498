//! Send one packet per MCS through an ideal channel and check it comes
//! back bit-exact.
//!
//! cargo run --release --example loopback

use nflink::bits::DEFAULT_SEED;
use nflink::channel::{apply_channel, ChannelRealization, Impairments};
use nflink::framing::{build_mpdu, fragment, parse_mpdu, serialize_mpdu};
use nflink::metrics::evm;
use nflink::ofdm::SAMPLE_RATE;
use nflink::phy_rx::{receive_burst, RxConfig};
use nflink::phy_tx::{build_ppdu_with_reference, NonHtPacket};
use nflink::Mcs;

fn main() -> nflink::Result<()> {
    let msg = b"near-field link inside a metal box";
    let msdu = &fragment(msg, 2304)?[0];
    let psdu = serialize_mpdu(&build_mpdu(msdu, 1)?)?;
    for mcs in Mcs::all() {
        let tx = build_ppdu_with_reference(
            &NonHtPacket {
                psdu: psdu.clone(),
                mcs,
            },
            DEFAULT_SEED,
        )?;
        let rx = apply_channel(
            &tx.waveform,
            &ChannelRealization::identity(SAMPLE_RATE),
            &Impairments::none(),
        );
        let r = &receive_burst(&rx, &RxConfig::default())[0];
        let body = parse_mpdu(r.psdu.as_deref().unwrap_or_default())?.body;
        let e = evm(&r.equalized_symbols, &tx.data_points)?;
        println!(
            "{mcs} {:>4.0} Mb/s {:>3} symbols {:>6} samples  {:?}  EVM {:.1e}%  {:?}",
            mcs.rate_mbps(),
            tx.n_data_symbols,
            tx.waveform.len(),
            r.status,
            e.rms_percent,
            String::from_utf8_lossy(&body)
        );
    }
    Ok(())
}
