use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed JSON: {message}")]
    Json { path: PathBuf, message: String },

    #[error("manifest field `{field}`: {message}")]
    Manifest {
        field: &'static str,
        message: String,
    },

    #[error("frame index {index} out of range (clip has {frame_count} frames)")]
    FrameOutOfRange { index: usize, frame_count: usize },

    #[error("{path}: truncated: need {needed} bytes, file has {actual}")]
    Truncated {
        path: PathBuf,
        needed: u64,
        actual: u64,
    },

    #[error("{path}: bad PPM: {message}")]
    Ppm { path: PathBuf, message: String },

    #[error("empty ROI in frame {frame}")]
    EmptyRoi { frame: usize },

    #[error("landmark index {index} out of range for a {count}-point landmark set")]
    LandmarkIndex { index: usize, count: usize },

    #[error("forehead polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),

    #[error("invalid forehead spec: {0}")]
    ForeheadSpec(String),

    #[error("geometry/frame count mismatch: {geometry} geometry records for {frames} frames")]
    GeometryMismatch { geometry: usize, frames: usize },

    #[error("geometry sidecar line {line}: {message}")]
    Sidecar { line: usize, message: String },

    #[error("insufficient geometry coverage: {usable} of {total} frames usable")]
    InsufficientCoverage { usable: usize, total: usize },

    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),

    #[error("trace too short: {duration_s:.3} s, need at least {required_s:.3} s")]
    TraceTooShort { duration_s: f64, required_s: f64 },

    #[error("n_fft {n_fft} is invalid: {message}")]
    FftLength { n_fft: usize, message: String },

    #[error("invalid band [{low}, {high}] Hz")]
    InvalidBand { low: f64, high: f64 },

    #[error("band [{low}, {high}] Hz holds fewer than 3 bins at {bin_hz} Hz/bin")]
    BandEmpty { low: f64, high: f64, bin_hz: f64 },

    #[error("no spectral peak: all in-band power is zero")]
    NoSpectralPeak,

    #[error("empty run set")]
    EmptyRunSet,

    #[error("run set invalid: {0}")]
    RunSet(String),

    #[error("results have mismatched bands: [{a_low:.3}, {a_high:.3}] Hz vs [{b_low:.3}, {b_high:.3}] Hz")]
    BandMismatch {
        a_low: f64,
        a_high: f64,
        b_low: f64,
        b_high: f64,
    },

    #[error("no result files in {0}")]
    NoResults(PathBuf),

    #[error("invalid synth config: {0}")]
    SynthConfig(String),

    #[error("invalid argument: {0}")]
    Usage(String),

    #[error("clip {clip}: {source}")]
    Clip {
        clip: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable identifier, emitted by the CLI on failure.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Json { .. } => "malformed_json",
            Error::Manifest { .. } => "invalid_manifest",
            Error::FrameOutOfRange { .. } => "frame_out_of_range",
            Error::Truncated { .. } => "truncated_file",
            Error::Ppm { .. } => "bad_ppm",
            Error::EmptyRoi { .. } => "empty_roi",
            Error::LandmarkIndex { .. } => "landmark_index_out_of_range",
            Error::TooFewVertices(_) => "too_few_vertices",
            Error::ForeheadSpec(_) => "invalid_forehead_spec",
            Error::GeometryMismatch { .. } => "geometry_frame_count_mismatch",
            Error::Sidecar { .. } => "bad_sidecar",
            Error::InsufficientCoverage { .. } => "insufficient_geometry_coverage",
            Error::TooFewSamples(_) => "too_few_samples",
            Error::TraceTooShort { .. } => "trace_too_short",
            Error::FftLength { .. } => "invalid_n_fft",
            Error::InvalidBand { .. } => "invalid_band",
            Error::BandEmpty { .. } => "band_empty",
            Error::NoSpectralPeak => "no_spectral_peak",
            Error::EmptyRunSet => "empty_run_set",
            Error::RunSet(_) => "invalid_run_set",
            Error::BandMismatch { .. } => "band_mismatch",
            Error::NoResults(_) => "no_results",
            Error::SynthConfig(_) => "invalid_synth_config",
            Error::Usage(_) => "usage",
            Error::Clip { source, .. } => source.code(),
        }
    }

    pub(crate) fn in_clip(self, clip: impl Into<String>) -> Self {
        Error::Clip {
            clip: clip.into(),
            source: Box::new(self),
        }
    }
}
