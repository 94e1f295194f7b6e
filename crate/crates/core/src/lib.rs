//! Remote photoplethysmography: heart rate from the green-channel variation
//! of a forehead region across a clip's frames.
//!
//! The pipeline is
//!
//! 1. [`ingest`]: load a clip manifest and decode PPM or raw RGB24 frames;
//! 2. [`roi`]: turn per-frame detector output ([`sidecar`]) into a forehead
//!    pixel mask, either a sub-rectangle of the face box or a landmark
//!    polygon;
//! 3. [`signal`]: reduce each mask to a mean green value;
//! 4. [`spectral`]: pick the strongest frequency in the 1.0 to 4.0 Hz band;
//! 5. [`stats`]: summarize estimates per method and render the comparison.
//!
//! [`synth`] generates clips with a known heart rate for closed-loop checks,
//! and [`cli`] wires everything into the `rppg` binary.

pub mod cli;
pub mod error;
pub mod ingest;
pub mod roi;
pub mod sidecar;
pub mod signal;
pub mod spectral;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use ingest::{
    load_frame, load_manifest, ClipManifest, Frame, FrameSource, MemoryClip, PixelFormat,
};
pub use roi::{
    forehead_polygon, forehead_rect, rasterize_polygon, BoxFractions, FaceBox, FaceGeometry,
    ForeheadSpec, LandmarkSet, Method, RoiMask,
};
pub use signal::{extract_trace, spatial_mean_green, ExtractOptions, GreenTrace};
pub use spectral::{
    estimate_hr, pick_peak, power_spectrum, preprocess, BandLimits, HrEstimate, Spectrum,
    DEFAULT_N_FFT,
};
pub use stats::{render_comparison, render_distribution, summarize, RunSet, RunStats};
pub use synth::{expected_trace, generate_clip, SynthConfig};
