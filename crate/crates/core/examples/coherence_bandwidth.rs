//! Coherence bandwidth and RMS delay spread of the enclosure model versus
//! the decay constant, alongside 1/(2 pi tau).
//!
//! cargo run --release --example coherence_bandwidth

use nflink::channel::{coherence_bandwidth, draw_channel, Distance, LoadingPreset, PresetName};
use nflink::metrics::median;
use std::f64::consts::PI;

fn main() {
    println!(
        "{:<14}{:>9}{:>7}{:>12}{:>12}{:>12}{:>12}",
        "preset", "tau_ns", "K", "Bc_MHz", "Bc_K0_MHz", "1/2pi_tau", "rms_ds_ns"
    );
    for name in [PresetName::Empty, PresetName::SideLoaded, PresetName::CornerLoaded] {
        let p = LoadingPreset::named(name, Distance::Near25mm).unwrap();
        let diffuse = LoadingPreset::custom(p.decay_constant_tau, 0.0);
        let bc = median((0..200).map(|s| coherence_bandwidth(&draw_channel(&p, s), 0.5))).unwrap();
        let bc0 = median((0..200).map(|s| coherence_bandwidth(&draw_channel(&diffuse, s), 0.5))).unwrap();
        let ds = median((0..200).map(|s| draw_channel(&diffuse, s).rms_delay_spread())).unwrap();
        println!(
            "{:<14}{:>9.1}{:>7.0}{:>12.3}{:>12.3}{:>12.3}{:>12.1}",
            format!("{name:?}"),
            p.decay_constant_tau * 1e9,
            p.k_factor,
            bc / 1e6,
            bc0 / 1e6,
            1.0 / (2.0 * PI * p.decay_constant_tau) / 1e6,
            ds * 1e9
        );
    }
}
