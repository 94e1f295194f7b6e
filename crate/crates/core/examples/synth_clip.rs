//! Writes a synthetic clip with a known heart rate to disk.
//!
//! ```text
//! cargo run --example synth_clip -- [OUT_DIR] [BPM]
//! ```

use std::path::PathBuf;

use rppg::sidecar::read_sidecar;
use rppg::synth::{self, SynthConfig};
use rppg::{generate_clip, load_frame, load_manifest};

fn main() -> rppg::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("rppg-synth-clip"));
    let bpm = args
        .next()
        .map_or(72.0, |s| s.parse().expect("BPM must be a number"));

    let config = SynthConfig {
        bpm,
        bbox_jitter_sigma: 0.01,
        landmark_jitter_sigma: 0.002,
        seed: 42,
        ..SynthConfig::default()
    };
    let manifest = generate_clip(&config, &out)?;
    println!(
        "wrote {} frames of {}x{} at {} fps to {}",
        manifest.frame_count,
        manifest.width,
        manifest.height,
        manifest.fps,
        out.display()
    );

    // Everything on disk reads back through the public loaders.
    let manifest = load_manifest(out.join(synth::MANIFEST_FILE))?;
    let geometry = read_sidecar(out.join(synth::SIDECAR_FILE))?;
    let first = load_frame(&manifest, 0)?;
    let face = geometry[0].face_box.expect("synth always emits a box");
    let (cx, cy) = (
        ((face.x + 0.5 * face.w) * manifest.width as f64) as u32,
        ((face.y + 0.2 * face.h) * manifest.height as f64) as u32,
    );
    println!(
        "frame 0 forehead pixel ({cx}, {cy}) = {:?}",
        first.rgb(cx, cy)
    );
    println!(
        "frame 0 box = ({:.4}, {:.4}, {:.4}, {:.4}), {} landmarks",
        face.x,
        face.y,
        face.w,
        face.h,
        geometry[0].landmarks.as_ref().map_or(0, |l| l.len())
    );

    let expected = rppg::expected_trace(&config);
    println!(
        "ground truth: {bpm} bpm, noise-free green {:.3} .. {:.3}",
        expected.iter().cloned().fold(f64::INFINITY, f64::min),
        expected.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    );
    Ok(())
}
