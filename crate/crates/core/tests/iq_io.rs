use nflink::channel::{add_awgn, apply_channel};
use nflink::imaging::encode_image;
use nflink::ofdm::{IqWaveform, SAMPLE_RATE};
use nflink::phy_rx::{receive_burst, RxConfig};
use nflink::scenario::{analyze_capture, build_burst, read_iq, sidecar_path, write_iq, ScenarioConfig};
use nflink::{Error, Mcs};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn f32_waveform(n: usize, seed: u64) -> IqWaveform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = (0..n)
        .map(|_| {
            Complex64::new(
                f64::from(rng.random::<f32>() - 0.5),
                f64::from(rng.random::<f32>() - 0.5),
            )
        })
        .collect();
    IqWaveform::new(s, SAMPLE_RATE)
}

fn quantize(w: &IqWaveform) -> IqWaveform {
    let s = w
        .samples
        .iter()
        .map(|c| Complex64::new(f64::from(c.re as f32), f64::from(c.im as f32)))
        .collect();
    IqWaveform::new(s, w.sample_rate)
}

#[test]
fn round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cap.cf32");
    let w = f32_waveform(10_000, 1);
    write_iq(&w, &path, 2.432e9).unwrap();
    let (back, header) = read_iq(&path).unwrap();
    assert_eq!(back, w);
    assert_eq!(header.format, "cf32le");
    assert_eq!(header.length_samples, 10_000);
    assert_eq!(header.sample_rate_hz, 20e6);
    assert_eq!(std::fs::metadata(&path).unwrap().len(), 80_000);
}

#[test]
fn sidecar_sample_rate_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cap.cf32");
    write_iq(&IqWaveform::new(f32_waveform(8, 2).samples, 10e6), &path, 0.0).unwrap();
    assert_eq!(read_iq(&path).unwrap().0.sample_rate, 10e6);
    assert!(matches!(
        analyze_capture(&path, &ScenarioConfig::default()),
        Err(Error::SampleRate(_))
    ));
}

#[test]
fn truncated_and_missing_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cap.cf32");
    write_iq(&f32_waveform(100, 3), &path, 2.432e9).unwrap();

    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(matches!(read_iq(&path), Err(Error::IqFormat(_))));
    std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
    assert!(matches!(read_iq(&path), Err(Error::IqFormat(_))));

    std::fs::write(&path, &bytes).unwrap();
    std::fs::remove_file(sidecar_path(&path)).unwrap();
    assert!(matches!(read_iq(&path), Err(Error::IqFormat(_))));
    std::fs::write(sidecar_path(&path), "{\"format\": 1}").unwrap();
    assert!(matches!(read_iq(&path), Err(Error::IqFormat(_))));
}

#[test]
fn capture_path_matches_in_memory_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("burst.cf32");
    let cfg = ScenarioConfig {
        msdu_length: 800,
        ..Default::default()
    };
    let payload = encode_image(&nflink::imaging::test_image()).unwrap();
    let burst = build_burst(&payload, Mcs::new(6).unwrap(), &cfg).unwrap();
    let rx = apply_channel(
        &burst.waveform,
        &cfg.realization(4).unwrap(),
        &cfg.impairments(Mcs::new(6).unwrap(), 4),
    );
    let rx = quantize(&rx);
    write_iq(&rx, &path, cfg.center_frequency_hz).unwrap();

    let in_memory = receive_burst(&rx, &RxConfig::default());
    let (captured, _) = read_iq(&path).unwrap();
    assert_eq!(receive_burst(&captured, &RxConfig::default()), in_memory);

    let report = analyze_capture(&path, &cfg).unwrap();
    assert_eq!(report.packet_count, 6);
    assert_eq!(report.runs[0].packets.len(), in_memory.len());
    assert!(report.evm.iter().all(|e| e.rms_percent <= e.peak_percent));
    assert_eq!(serde_json::to_value(report.evm_mode).unwrap(), "decision_directed");
}

#[test]
fn noise_only_capture_has_no_packets() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("noise.cf32");
    let mut s = vec![Complex64::new(0.0, 0.0); 50_000];
    add_awgn(&mut s, 1.0, 5);
    write_iq(&IqWaveform::new(s, SAMPLE_RATE), &path, 2.432e9).unwrap();
    let report = analyze_capture(&path, &ScenarioConfig::default()).unwrap();
    assert_eq!(report.packet_count, 0);
    assert!(report.csi.is_empty());
    assert!(!report.warnings.is_empty());
}
