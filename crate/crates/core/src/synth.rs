//! Synthetic clips with a known pulse frequency.
//!
//! Each frame shows a flat face on a white background. Every skin pixel's
//! green value is
//!
//! ```text
//! G(t, p) = clamp_round(base_g + A sin(2 pi f t) + drift t + sum tones + eta(p, t))
//! ```
//!
//! with `eta ~ N(0, noise_sigma^2)` drawn per pixel and frame. Hair above the
//! forehead and the brows below it are unmodulated, so an ROI that wanders over
//! them picks up spurious intensity changes. Detector geometry is written to
//! the sidecar with optional Gaussian jitter on the box and on each landmark.
//!
//! All randomness comes from one `ChaCha8Rng` stream seeded with
//! [`SynthConfig::seed`] via `seed_from_u64`. Per frame, the box jitter (x, y,
//! w, h) is drawn first, then the landmark jitter (x, y per point), then one
//! noise sample per pixel in row-major order. The same seed and config always
//! produce byte-identical files.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ClipManifest, ClipWriter, Frame, MemoryClip, PixelFormat};
use crate::roi::{FaceBox, FaceGeometry, ForeheadSpec, LandmarkSet};
use crate::sidecar;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SIDECAR_FILE: &str = "geometry.ndjson";
pub const FOREHEAD_FILE: &str = "forehead.json";
pub const CONFIG_FILE: &str = "synth.json";

/// Forehead spec matching [`LANDMARK_TEMPLATE`].
pub const TEMPLATE_FOREHEAD_CONFIG: &str = include_str!("../config/forehead_synth12.json");

/// Face box in normalized frame coordinates.
pub const FACE_BOX: FaceBox = FaceBox {
    x: 0.30,
    y: 0.15,
    w: 0.40,
    h: 0.70,
};

/// Hairline: face-relative rows above this are hair.
pub const HAIRLINE: f64 = 0.08;
/// Brow band, face-relative rows.
pub const BROW_ROWS: (f64, f64) = (0.34, 0.40);
/// Brow extents, face-relative columns.
pub const BROWS: [(f64, f64); 2] = [(0.12, 0.44), (0.56, 0.88)];

pub const HAIR_RGB: [u8; 3] = [70, 55, 45];
pub const BROW_RGB: [u8; 3] = [90, 70, 55];
pub const BACKGROUND_RGB: [u8; 3] = [255, 255, 255];

/// Twelve landmarks in face-box-relative coordinates. Points 0..4 outline
/// the forehead clockwise from its top-left corner.
pub const LANDMARK_TEMPLATE: [(f64, f64); 12] = [
    (0.28, 0.16), // forehead top-left
    (0.72, 0.16), // forehead top-right
    (0.72, 0.29), // forehead bottom-right
    (0.28, 0.29), // forehead bottom-left
    (0.30, 0.46), // left eye
    (0.70, 0.46), // right eye
    (0.50, 0.62), // nose tip
    (0.36, 0.78), // mouth left
    (0.64, 0.78), // mouth right
    (0.50, 0.97), // chin
    (0.06, 0.60), // left cheek
    (0.94, 0.60), // right cheek
];

pub fn template_forehead_spec() -> ForeheadSpec {
    ForeheadSpec::from_json(TEMPLATE_FOREHEAD_CONFIG).expect("bundled template config is valid")
}

/// Extra sinusoid added to the skin green channel, e.g. a slow illumination
/// flicker outside the heart-rate band.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    pub hz: f64,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub bpm: f64,
    pub fps: f64,
    pub duration_s: f64,
    pub width: u32,
    pub height: u32,
    pub base_rgb: [u8; 3],
    pub amplitude: f64,
    pub noise_sigma: f64,
    pub drift_per_s: f64,
    pub bbox_jitter_sigma: f64,
    pub landmark_jitter_sigma: f64,
    pub seed: u64,
    pub pixel_format: PixelFormat,
    pub tones: Vec<Tone>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            bpm: 72.0,
            fps: 30.0,
            duration_s: 10.0,
            width: 320,
            height: 240,
            base_rgb: [200, 140, 110],
            amplitude: 1.5,
            noise_sigma: 2.0,
            drift_per_s: 0.0,
            bbox_jitter_sigma: 0.0,
            landmark_jitter_sigma: 0.0,
            seed: 0,
            pixel_format: PixelFormat::PpmSequence,
            tones: Vec::new(),
        }
    }
}

impl SynthConfig {
    pub fn frame_count(&self) -> usize {
        (self.duration_s * self.fps).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::SynthConfig(m));
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return bad(format!("fps must be positive, got {}", self.fps));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return bad(format!(
                "duration_s must be positive, got {}",
                self.duration_s
            ));
        }
        if self.frame_count() < 2 {
            return bad("duration * fps must give at least 2 frames".into());
        }
        if !(self.bpm.is_finite() && self.bpm >= 0.0) {
            return bad(format!("bpm must be non-negative, got {}", self.bpm));
        }
        for (name, v) in [
            ("amplitude", self.amplitude),
            ("noise_sigma", self.noise_sigma),
            ("bbox_jitter_sigma", self.bbox_jitter_sigma),
            ("landmark_jitter_sigma", self.landmark_jitter_sigma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        if !self.drift_per_s.is_finite() {
            return bad("drift_per_s must be finite".into());
        }
        if self.width == 0 || self.height == 0 {
            return bad("width and height must be positive".into());
        }
        Ok(())
    }

    /// Noise-free skin green intensity at time `t` seconds.
    pub fn skin_green(&self, t: f64) -> f64 {
        let pulse = self.amplitude * (2.0 * PI * (self.bpm / 60.0) * t).sin();
        let tones: f64 = self
            .tones
            .iter()
            .map(|tone| tone.amplitude * (2.0 * PI * tone.hz * t).sin())
            .sum();
        self.base_rgb[1] as f64 + pulse + self.drift_per_s * t + tones
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_owned(),
            message: e.to_string(),
        })
    }
}

/// Noise-free spatial-mean skin green for every frame.
pub fn expected_trace(config: &SynthConfig) -> Vec<f64> {
    (0..config.frame_count())
        .map(|i| config.skin_green(i as f64 / config.fps))
        .collect()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Region {
    Background,
    Skin,
    Hair,
    Brow,
}

/// Streaming frame generator; frames come out in order from a single PRNG
/// stream.
pub struct Synthesizer {
    config: SynthConfig,
    regions: Vec<Region>,
    rng: ChaCha8Rng,
    pixel_noise: Normal<f64>,
    box_jitter: Normal<f64>,
    landmark_jitter: Normal<f64>,
    next: usize,
}

fn face_regions(width: u32, height: u32) -> Vec<Region> {
    let (w, h) = (width as f64, height as f64);
    let px = |v: f64, extent: f64| (v * extent).round() as u32;
    let c0 = px(FACE_BOX.x, w);
    let c1 = px(FACE_BOX.x + FACE_BOX.w, w);
    let r0 = px(FACE_BOX.y, h);
    let r1 = px(FACE_BOX.y + FACE_BOX.h, h);
    let face_w = FACE_BOX.w * w;
    let face_h = FACE_BOX.h * h;
    let face_x = FACE_BOX.x * w;
    let face_y = FACE_BOX.y * h;

    let mut regions = vec![Region::Background; (width * height) as usize];
    for r in r0..r1 {
        let v = (r as f64 + 0.5 - face_y) / face_h;
        for c in c0..c1 {
            let u = (c as f64 + 0.5 - face_x) / face_w;
            let region = if v < HAIRLINE {
                Region::Hair
            } else if v >= BROW_ROWS.0
                && v < BROW_ROWS.1
                && BROWS.iter().any(|&(a, b)| u >= a && u < b)
            {
                Region::Brow
            } else {
                Region::Skin
            };
            regions[(r * width + c) as usize] = region;
        }
    }
    regions
}

fn normal(sigma: f64) -> Normal<f64> {
    Normal::new(0.0, sigma).expect("sigma validated as finite and non-negative")
}

impl Synthesizer {
    pub fn new(config: SynthConfig) -> Result<Self> {
        config.validate()?;
        let regions = face_regions(config.width, config.height);
        if !regions.contains(&Region::Skin) {
            return Err(Error::SynthConfig(format!(
                "zero-area face region at {}x{}",
                config.width, config.height
            )));
        }
        Ok(Synthesizer {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            pixel_noise: normal(config.noise_sigma),
            box_jitter: normal(config.bbox_jitter_sigma),
            landmark_jitter: normal(config.landmark_jitter_sigma),
            regions,
            config,
            next: 0,
        })
    }

    pub fn config(&self) -> &SynthConfig {
        &self.config
    }

    pub fn manifest(&self, base_dir: &Path) -> Result<ClipManifest> {
        let source = match self.config.pixel_format {
            PixelFormat::PpmSequence => "frames/{index}.ppm",
            PixelFormat::RawRgb24 => "clip.rgb",
        };
        ClipManifest::new(
            self.config.width,
            self.config.height,
            self.config.fps,
            self.config.frame_count(),
            self.config.pixel_format,
            source,
            base_dir,
        )
    }

    fn geometry(&mut self, index: usize) -> FaceGeometry {
        let mut jitter = [0.0; 4];
        for j in &mut jitter {
            *j = self.box_jitter.sample(&mut self.rng);
        }
        let face_box = FaceBox::clamped(
            FACE_BOX.x + jitter[0],
            FACE_BOX.y + jitter[1],
            FACE_BOX.w + jitter[2],
            FACE_BOX.h + jitter[3],
        );
        let mut points = Vec::with_capacity(LANDMARK_TEMPLATE.len());
        for &(u, v) in &LANDMARK_TEMPLATE {
            let dx = self.landmark_jitter.sample(&mut self.rng);
            let dy = self.landmark_jitter.sample(&mut self.rng);
            points.push((
                FACE_BOX.x + u * FACE_BOX.w + dx,
                FACE_BOX.y + v * FACE_BOX.h + dy,
            ));
        }
        FaceGeometry {
            frame_index: index,
            face_box,
            landmarks: Some(LandmarkSet::clamped(points)),
        }
    }

    fn pixels(&mut self, index: usize) -> Vec<u8> {
        let skin_g = self.config.skin_green(index as f64 / self.config.fps);
        let [sr, _, sb] = self.config.base_rgb;
        let mut out = Vec::with_capacity(self.regions.len() * 3);
        for &region in &self.regions {
            let eta = self.pixel_noise.sample(&mut self.rng);
            let (r, g, b) = match region {
                Region::Skin => (sr, skin_g, sb),
                Region::Hair => (HAIR_RGB[0], HAIR_RGB[1] as f64, HAIR_RGB[2]),
                Region::Brow => (BROW_RGB[0], BROW_RGB[1] as f64, BROW_RGB[2]),
                Region::Background => (
                    BACKGROUND_RGB[0],
                    BACKGROUND_RGB[1] as f64,
                    BACKGROUND_RGB[2],
                ),
            };
            out.extend_from_slice(&[r, (g + eta).round().clamp(0.0, 255.0) as u8, b]);
        }
        out
    }
}

impl Iterator for Synthesizer {
    type Item = (Frame, FaceGeometry);

    fn next(&mut self) -> Option<Self::Item> {
        let index = self.next;
        if index >= self.config.frame_count() {
            return None;
        }
        self.next += 1;
        let geometry = self.geometry(index);
        let frame = Frame::new(
            index,
            self.config.width,
            self.config.height,
            self.pixels(index),
        );
        Some((frame, geometry))
    }
}

/// Renders a whole clip in memory.
pub fn render(config: &SynthConfig) -> Result<(MemoryClip, Vec<FaceGeometry>)> {
    let (frames, geometry) = Synthesizer::new(config.clone())?.unzip();
    Ok((
        MemoryClip {
            frames,
            fps: config.fps,
        },
        geometry,
    ))
}

/// Writes manifest, frames, geometry sidecar, template forehead spec and the
/// config itself under `out_dir`.
pub fn generate_clip(config: &SynthConfig, out_dir: impl AsRef<Path>) -> Result<ClipManifest> {
    let out_dir = out_dir.as_ref();
    let mut synth = Synthesizer::new(config.clone())?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let manifest = synth.manifest(out_dir)?;
    let mut writer = ClipWriter::create(manifest)?;
    let mut geometry = Vec::with_capacity(config.frame_count());
    for (frame, g) in &mut synth {
        writer.push(&frame)?;
        geometry.push(g);
    }
    let manifest = writer.finish()?;
    manifest.save(out_dir.join(MANIFEST_FILE))?;
    sidecar::write_sidecar(out_dir.join(SIDECAR_FILE), &geometry)?;

    let forehead = out_dir.join(FOREHEAD_FILE);
    fs::write(&forehead, TEMPLATE_FOREHEAD_CONFIG).map_err(|e| Error::io(&forehead, e))?;
    let config_path = out_dir.join(CONFIG_FILE);
    let mut text = serde_json::to_string_pretty(config).expect("config serializes");
    text.push('\n');
    fs::write(&config_path, text).map_err(|e| Error::io(&config_path, e))?;
    Ok(manifest)
}
