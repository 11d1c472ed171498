//! The bit-level chain on a short message: scrambler, convolutional code,
//! puncturing, interleaving and Viterbi decoding.
//!
//! cargo run --example codec_tour

use nflink::bits::*;

fn show(name: &str, bits: &[u8]) {
    let s: String = bits.iter().take(48).map(|b| char::from(b'0' + b)).collect();
    println!(
        "{name:<12}{:>5}  {s}{}",
        bits.len(),
        if bits.len() > 48 { "..." } else { "" }
    );
}

fn main() -> nflink::Result<()> {
    let data = bytes_to_bits(b"OFDM");
    show("data", &data);
    let scr = scramble(&data, DEFAULT_SEED)?;
    show("scrambled", &scr);
    let mut tailed = scr.clone();
    tailed.extend([0; TAIL_BITS]);
    // Whole puncturing periods for every rate.
    tailed.resize(tailed.len().div_ceil(6) * 6, 0);
    let coded = conv_encode(&tailed);
    show("coded 1/2", &coded);
    for rate in [CodeRate::Half, CodeRate::TwoThirds, CodeRate::ThreeQuarters] {
        let punct = puncture(&coded, rate)?;
        let mut soft = hard_to_soft(&punct);
        soft[3] = -soft[3];
        let decoded = viterbi_decode(&soft, rate)?;
        let ok = decoded[..scr.len()] == scr[..];
        println!("{rate:?}: {} coded bits, one flipped, decoded ok = {ok}", punct.len());
    }
    let perm = interleave_permutation(4)?;
    println!("16-QAM interleaver first 8: {:?}", &perm[..8]);
    println!("descrambled == data: {}", scramble(&scr, DEFAULT_SEED)? == data);
    println!("crc32(\"123456789\") = {:#010x}", crc32(b"123456789"));
    Ok(())
}
