use nflink::channel::{apply_channel, ChannelRealization, PresetName};
use nflink::imaging::{test_image, Integrity};
use nflink::metrics::median;
use nflink::ofdm::SAMPLE_RATE;
use nflink::phy_rx::{receive_burst, PacketStatus, RxConfig};
use nflink::scenario::{build_burst, run_scenario, simulate, simulate_run, ScenarioConfig};
use nflink::Mcs;

fn mcs(i: u8) -> Mcs {
    Mcs::new(i).unwrap()
}

#[test]
fn image_over_ideal_channel_is_exact_for_every_mcs() {
    let cfg = ScenarioConfig {
        ideal_channel: true,
        snr_db: f64::INFINITY,
        seeds: vec![1],
        ..Default::default()
    };
    let report = simulate(&cfg).unwrap();
    assert_eq!(report.runs.len(), 8);
    for run in &report.runs {
        let img = run.image.as_ref().unwrap();
        assert_eq!(img.integrity, Some(Integrity::Exact), "{:?}", run.mcs);
        assert_eq!(img.byte_errors, 0);
        assert!(run.rms_evm_percent.unwrap() < 0.1);
    }
    assert!(report.warnings.is_empty());
}

#[test]
fn burst_sizes_and_isolation() {
    let cfg = ScenarioConfig {
        ideal_channel: true,
        snr_db: 30.0,
        msdu_length: 800,
        ..Default::default()
    };
    let payload = nflink::imaging::encode_image(&test_image()).unwrap();

    let two = build_burst(&payload[..1500], mcs(3), &cfg).unwrap();
    assert_eq!(two.starts.len(), 2);
    let six = build_burst(&payload, mcs(5), &cfg).unwrap();
    assert_eq!(six.starts.len(), 6);

    for (burst, n) in [(two, 2), (six, 6)] {
        let rx = apply_channel(
            &burst.waveform,
            &ChannelRealization::identity(SAMPLE_RATE),
            &cfg.impairments(mcs(5), 9),
        );
        let r = receive_burst(&rx, &RxConfig::default());
        assert_eq!(r.len(), n);
        assert!(r.iter().all(|p| p.status == PacketStatus::Ok));
        for (p, tx) in r.iter().zip(&burst.psdus) {
            assert_eq!(p.psdu.as_ref(), Some(tx));
        }
    }
}

#[test]
fn corner_decodes_better_than_empty() {
    let run = |preset| {
        let cfg = ScenarioConfig {
            preset,
            mcs_list: vec![mcs(7)],
            seeds: (1..=20).collect(),
            ..Default::default()
        };
        let r = simulate(&cfg).unwrap();
        r.ok_count as f64 / r.runs.iter().map(|x| x.transmitted_packets).sum::<usize>() as f64
    };
    let corner = run(PresetName::CornerLoaded);
    let empty = run(PresetName::Empty);
    assert!(corner >= 0.95, "{corner}");
    assert!(empty < corner, "{empty} vs {corner}");
}

#[test]
fn evm_falls_with_snr() {
    let evm_at = |snr| {
        let cfg = ScenarioConfig {
            preset: PresetName::CornerLoaded,
            mcs_list: vec![mcs(4)],
            seeds: (1..=10).collect(),
            snr_db: snr,
            ..Default::default()
        };
        simulate(&cfg).unwrap().per_mcs[0].median_rms_evm_percent.unwrap()
    };
    let e: Vec<f64> = [15.0, 25.0, 35.0].into_iter().map(evm_at).collect();
    assert!(e[0] > e[1] && e[1] > e[2], "{e:?}");
}

#[test]
fn cfo_summary_tracks_injected_offset() {
    // Per-packet coarse CFO std is about 60 Hz at 40 dB and 350 Hz at 25 dB.
    for (cfo, snr, tol) in [(0.0, 40.0, 100.0), (5e3, 25.0, 300.0)] {
        let cfg = ScenarioConfig {
            ideal_channel: true,
            snr_db: snr,
            cfo_hz: cfo,
            seeds: (1..=20).collect(),
            ..Default::default()
        };
        let r = simulate(&cfg).unwrap();
        assert_eq!(r.avg_coarse_cfo.len(), 8);
        for s in &r.avg_coarse_cfo {
            assert!((s.mean_hz - cfo).abs() < tol, "{cfo}: {s:?}");
        }
    }
}

#[test]
fn header_failures_carry_no_ber() {
    let cfg = ScenarioConfig {
        preset: PresetName::Empty,
        mcs_list: vec![mcs(7)],
        snr_db: 4.0,
        ..Default::default()
    };
    let file = test_image();
    let mut saw_fail = false;
    for seed in 1..=20 {
        let run = simulate_run(&cfg, &file, mcs(7), seed).unwrap();
        for p in &run.packets {
            if p.status == PacketStatus::HeaderFail {
                saw_fail = true;
                assert_eq!(p.ber, nflink::metrics::Ber::NotApplicable);
                assert!(p.evm.is_none());
            }
        }
        assert_eq!(
            run.ok_count + run.header_fail_count + run.fcs_fail_count,
            run.packets.len()
        );
    }
    assert!(saw_fail);
}

#[test]
fn run_scenario_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ScenarioConfig {
        preset: PresetName::SideLoaded,
        mcs_list: vec![mcs(2), mcs(6)],
        seeds: vec![3, 4],
        output_dir: dir.path().join("out"),
        ..Default::default()
    };
    let report = run_scenario(&cfg).unwrap();
    let out = dir.path().join("out");
    let evm = std::fs::read_to_string(out.join("evm.csv")).unwrap();
    assert!(evm.starts_with("scenario,mcs,rms_percent,peak_percent\n"));
    assert_eq!(evm.lines().count(), 1 + report.evm.len());
    let csi = std::fs::read_to_string(out.join("csi.csv")).unwrap();
    assert_eq!(csi.lines().count(), 1 + 12 * 52);
    let cfo = std::fs::read_to_string(out.join("cfo.csv")).unwrap();
    assert_eq!(cfo.lines().count(), 3);
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["runs"].as_array().unwrap().len(), 4);
    assert_eq!(summary["center_frequency_hz"], 2.432e9);
    for s in [3, 4] {
        assert_eq!(
            std::fs::read(out.join(format!("recovered_mcs6_seed{s}.pgm"))).unwrap(),
            test_image()
        );
    }
    let bcs: Vec<f64> = report.runs.iter().filter_map(|r| r.coherence_bandwidth_hz).collect();
    assert_eq!(bcs.len(), 4);
    assert!(median(bcs).unwrap() > 1e6);
}

#[test]
fn unreadable_image_is_an_error() {
    let cfg = ScenarioConfig {
        image_path: Some("/nonexistent/picture.png".into()),
        ..Default::default()
    };
    assert!(matches!(simulate(&cfg), Err(nflink::Error::Io(_))));
}

#[test]
fn impairment_free_enclosure_run() {
    let cfg = ScenarioConfig {
        preset: PresetName::CornerLoaded,
        snr_db: f64::INFINITY,
        ..Default::default()
    };
    let run = simulate_run(&cfg, &test_image(), mcs(7), 2).unwrap();
    assert!(run.image.unwrap().is_exact());
}
