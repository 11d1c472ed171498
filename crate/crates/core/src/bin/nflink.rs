use clap::{Parser, Subcommand};
use nflink::scenario::{analyze_capture, run_scenario, write_report, ScenarioConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(version, about = "802.11a non-HT near-field enclosure link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write reports to its output_dir.
    Simulate { config: PathBuf },
    /// Decode a cf32le capture (with its .json sidecar).
    Analyze { iqfile: PathBuf, config: PathBuf },
    /// Write the built-in 64x64 PGM test image.
    MakeTestimage { path: PathBuf },
}

fn run(cli: Cli) -> nflink::Result<()> {
    match cli.command {
        Command::Simulate { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            let report = run_scenario(&cfg)?;
            for s in &report.per_mcs {
                println!(
                    "{}: runs {} ok {} header_fail {} fcs_fail {} median_rms_evm {} image_exact {}",
                    s.mcs,
                    s.runs,
                    s.ok_count,
                    s.header_fail_count,
                    s.fcs_fail_count,
                    s.median_rms_evm_percent.map_or("n/a".into(), |v| format!("{v:.2}%")),
                    s.image_exact_runs
                );
            }
            report.warnings.iter().for_each(|w| eprintln!("warning: {w}"));
            println!("reports written to {}", cfg.output_dir.display());
        }
        Command::Analyze { iqfile, config } => {
            let cfg = ScenarioConfig::load(&config)?;
            let report = analyze_capture(&iqfile, &cfg)?;
            write_report(&report, &cfg.output_dir)?;
            println!(
                "packets {} ok {} header_fail {} fcs_fail {}",
                report.packet_count, report.ok_count, report.header_fail_count, report.fcs_fail_count
            );
            report.warnings.iter().for_each(|w| eprintln!("warning: {w}"));
            println!("reports written to {}", cfg.output_dir.display());
        }
        Command::MakeTestimage { path } => {
            std::fs::write(&path, nflink::imaging::test_image())
                .map_err(|e| nflink::Error::Io(format!("{}: {e}", path.display())))?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
