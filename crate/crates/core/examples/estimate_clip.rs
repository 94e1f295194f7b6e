//! Estimates heart rate from a clip on disk with both forehead methods.
//!
//! ```text
//! cargo run --example estimate_clip -- [MANIFEST [SIDECAR]]
//! ```
//!
//! Without arguments a 72 bpm clip is synthesized into a temporary directory
//! first.

use std::path::PathBuf;

use rppg::sidecar::read_sidecar;
use rppg::synth::{self, SynthConfig};
use rppg::{
    estimate_hr, extract_trace, generate_clip, load_manifest, BandLimits, ExtractOptions,
    ForeheadSpec, Method, DEFAULT_N_FFT,
};

fn main() -> rppg::Result<()> {
    let mut args = std::env::args().skip(1).map(PathBuf::from);
    let manifest_path = match args.next() {
        Some(path) => path,
        None => {
            let dir = std::env::temp_dir().join("rppg-estimate-clip");
            generate_clip(&SynthConfig::default(), &dir)?;
            dir.join(synth::MANIFEST_FILE)
        }
    };
    let manifest = load_manifest(&manifest_path)?;
    let sidecar = args
        .next()
        .unwrap_or_else(|| manifest.base_dir.join(synth::SIDECAR_FILE));
    let geometry = read_sidecar(&sidecar)?;

    let beside = manifest.base_dir.join(synth::FOREHEAD_FILE);
    let spec = if beside.exists() {
        ForeheadSpec::load(&beside)?
    } else {
        ForeheadSpec::default()
    };

    println!(
        "{}: {} frames, {:.2} s",
        manifest_path.display(),
        manifest.frame_count,
        manifest.duration_s()
    );
    for method in Method::ALL {
        let trace = extract_trace(
            &manifest,
            &geometry,
            method,
            &spec,
            &ExtractOptions::default(),
        )?;
        let estimate = estimate_hr(&trace, method, &BandLimits::default(), DEFAULT_N_FFT)?;
        println!(
            "{:<16} {:>8.3} bpm  peak {:.6} Hz  snr {:>6.2} dB  skipped {}",
            method.title(),
            estimate.bpm,
            estimate.peak_hz,
            estimate.snr_db,
            estimate.skipped_frames.len()
        );
        println!("  {}", estimate.to_json().trim_end().replace('\n', "\n  "));
    }
    Ok(())
}
