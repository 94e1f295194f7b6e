//! Clip manifests and frame decoding.
//!
//! A clip is a `manifest.json` plus either a numbered sequence of binary PPM
//! files or one headerless RGB24 file holding every frame back to back. The
//! manifest is the only source of dimensional truth: PPM headers are checked
//! against it and raw offsets are computed from it.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const INDEX_PLACEHOLDER: &str = "{index}";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PixelFormat {
    PpmSequence,
    RawRgb24,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClipManifest {
    pub width: u32,
    pub height: u32,
    pub fps: f64,
    pub frame_count: usize,
    pub pixel_format: PixelFormat,
    /// `{index}` pattern for PPM sequences, file path for raw RGB24. Relative
    /// to `base_dir`.
    pub source: String,
    /// Directory the manifest was loaded from.
    pub base_dir: PathBuf,
}

#[derive(Deserialize)]
struct RawManifest {
    width: Option<serde_json::Value>,
    height: Option<serde_json::Value>,
    fps: Option<serde_json::Value>,
    frame_count: Option<serde_json::Value>,
    pixel_format: Option<serde_json::Value>,
    source: Option<serde_json::Value>,
}

#[derive(Serialize)]
struct ManifestDoc<'a> {
    width: u32,
    height: u32,
    fps: f64,
    frame_count: usize,
    pixel_format: PixelFormat,
    source: &'a str,
}

fn manifest_err(field: &'static str, message: impl Into<String>) -> Error {
    Error::Manifest {
        field,
        message: message.into(),
    }
}

fn required<'a>(
    field: &'static str,
    value: &'a Option<serde_json::Value>,
) -> Result<&'a serde_json::Value> {
    value.as_ref().ok_or_else(|| manifest_err(field, "missing"))
}

fn positive_int(field: &'static str, value: &Option<serde_json::Value>) -> Result<u64> {
    let value = required(field, value)?;
    if let Some(n) = value.as_u64() {
        if n == 0 {
            return Err(manifest_err(field, format!("{field} must be positive")));
        }
        return Ok(n);
    }
    match value.as_f64() {
        Some(v) if v <= 0.0 => Err(manifest_err(field, format!("{field} must be positive"))),
        _ => Err(manifest_err(
            field,
            format!("expected a positive integer, got {value}"),
        )),
    }
}

impl ClipManifest {
    pub fn new(
        width: u32,
        height: u32,
        fps: f64,
        frame_count: usize,
        pixel_format: PixelFormat,
        source: impl Into<String>,
        base_dir: impl Into<PathBuf>,
    ) -> Result<Self> {
        let manifest = ClipManifest {
            width,
            height,
            fps,
            frame_count,
            pixel_format,
            source: source.into(),
            base_dir: base_dir.into(),
        };
        manifest.validate()?;
        Ok(manifest)
    }

    fn validate(&self) -> Result<()> {
        if self.width == 0 {
            return Err(manifest_err("width", "width must be positive"));
        }
        if self.height == 0 {
            return Err(manifest_err("height", "height must be positive"));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(manifest_err("fps", "fps must be positive"));
        }
        if self.frame_count < 2 {
            return Err(manifest_err("frame_count", "need at least 2 frames"));
        }
        if self.source.is_empty() {
            return Err(manifest_err("source", "must not be empty"));
        }
        if self.pixel_format == PixelFormat::PpmSequence && !self.source.contains(INDEX_PLACEHOLDER)
        {
            return Err(manifest_err(
                "source",
                format!("ppm_sequence pattern must contain {INDEX_PLACEHOLDER}"),
            ));
        }
        Ok(())
    }

    pub fn frame_len(&self) -> usize {
        self.width as usize * self.height as usize * 3
    }

    pub fn duration_s(&self) -> f64 {
        self.frame_count as f64 / self.fps
    }

    /// Path of the file holding frame `index`.
    pub fn frame_path(&self, index: usize) -> PathBuf {
        match self.pixel_format {
            PixelFormat::PpmSequence => self.base_dir.join(
                self.source
                    .replace(INDEX_PLACEHOLDER, &format!("{index:06}")),
            ),
            PixelFormat::RawRgb24 => self.base_dir.join(&self.source),
        }
    }

    pub fn to_json(&self) -> String {
        let doc = ManifestDoc {
            width: self.width,
            height: self.height,
            fps: self.fps,
            frame_count: self.frame_count,
            pixel_format: self.pixel_format,
            source: &self.source,
        };
        let mut out = serde_json::to_string_pretty(&doc).expect("manifest serializes");
        out.push('\n');
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<ClipManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: RawManifest = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_owned(),
        message: e.to_string(),
    })?;

    let width = positive_int("width", &raw.width)?;
    let height = positive_int("height", &raw.height)?;
    let width = u32::try_from(width).map_err(|_| manifest_err("width", "too large"))?;
    let height = u32::try_from(height).map_err(|_| manifest_err("height", "too large"))?;

    let fps = required("fps", &raw.fps)?
        .as_f64()
        .ok_or_else(|| manifest_err("fps", "expected a number"))?;

    let frame_count = required("frame_count", &raw.frame_count)?;
    let frame_count = match frame_count.as_u64() {
        Some(n) => n as usize,
        None => return Err(manifest_err("frame_count", "need at least 2 frames")),
    };

    let pixel_format: PixelFormat = serde_json::from_value(
        required("pixel_format", &raw.pixel_format)?.clone(),
    )
    .map_err(|_| manifest_err("pixel_format", "expected \"ppm_sequence\" or \"raw_rgb24\""))?;
    let source = required("source", &raw.source)?
        .as_str()
        .ok_or_else(|| manifest_err("source", "expected a string"))?
        .to_owned();

    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    ClipManifest::new(
        width,
        height,
        fps,
        frame_count,
        pixel_format,
        source,
        base_dir,
    )
}

/// One decoded RGB24 frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub index: usize,
    pub width: u32,
    pub height: u32,
    /// Row-major RGB triples.
    pub pixels: Vec<u8>,
}

impl Frame {
    pub fn new(index: usize, width: u32, height: u32, pixels: Vec<u8>) -> Self {
        assert_eq!(
            pixels.len(),
            width as usize * height as usize * 3,
            "pixel buffer must hold width*height RGB triples"
        );
        Frame {
            index,
            width,
            height,
            pixels,
        }
    }

    #[inline]
    pub fn green(&self, col: u32, row: u32) -> u8 {
        self.pixels[(row as usize * self.width as usize + col as usize) * 3 + 1]
    }

    pub fn rgb(&self, col: u32, row: u32) -> [u8; 3] {
        let at = (row as usize * self.width as usize + col as usize) * 3;
        [self.pixels[at], self.pixels[at + 1], self.pixels[at + 2]]
    }
}

/// Anything that can hand out frames of one clip by index.
pub trait FrameSource: Sync {
    fn frame_count(&self) -> usize;
    fn dimensions(&self) -> (u32, u32);
    fn fps(&self) -> f64;
    fn frame(&self, index: usize) -> Result<Frame>;
}

impl FrameSource for ClipManifest {
    fn frame_count(&self) -> usize {
        self.frame_count
    }

    fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    fn fps(&self) -> f64 {
        self.fps
    }

    fn frame(&self, index: usize) -> Result<Frame> {
        load_frame(self, index)
    }
}

/// Frames held in memory, e.g. straight from the synthesizer.
#[derive(Clone, Debug)]
pub struct MemoryClip {
    pub frames: Vec<Frame>,
    pub fps: f64,
}

impl FrameSource for MemoryClip {
    fn frame_count(&self) -> usize {
        self.frames.len()
    }

    fn dimensions(&self) -> (u32, u32) {
        self.frames.first().map_or((0, 0), |f| (f.width, f.height))
    }

    fn fps(&self) -> f64 {
        self.fps
    }

    fn frame(&self, index: usize) -> Result<Frame> {
        self.frames
            .get(index)
            .cloned()
            .ok_or(Error::FrameOutOfRange {
                index,
                frame_count: self.frames.len(),
            })
    }
}

pub fn load_frame(manifest: &ClipManifest, index: usize) -> Result<Frame> {
    if index >= manifest.frame_count {
        return Err(Error::FrameOutOfRange {
            index,
            frame_count: manifest.frame_count,
        });
    }
    let path = manifest.frame_path(index);
    let pixels = match manifest.pixel_format {
        PixelFormat::PpmSequence => {
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            decode_ppm(&bytes, manifest.width, manifest.height)
                .map_err(|message| Error::Ppm {
                    path: path.clone(),
                    message,
                })?
                .to_vec()
        }
        PixelFormat::RawRgb24 => read_raw_frame(&path, manifest, index)?,
    };
    Ok(Frame::new(index, manifest.width, manifest.height, pixels))
}

fn read_raw_frame(path: &Path, manifest: &ClipManifest, index: usize) -> Result<Vec<u8>> {
    let frame_len = manifest.frame_len() as u64;
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let actual = file.metadata().map_err(|e| Error::io(path, e))?.len();
    let needed = (index as u64 + 1) * frame_len;
    if actual < needed {
        return Err(Error::Truncated {
            path: path.to_owned(),
            needed,
            actual,
        });
    }
    file.seek(SeekFrom::Start(index as u64 * frame_len))
        .map_err(|e| Error::io(path, e))?;
    let mut pixels = vec![0u8; frame_len as usize];
    file.read_exact(&mut pixels)
        .map_err(|e| Error::io(path, e))?;
    Ok(pixels)
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self, what: &str) -> std::result::Result<&[u8], String> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(format!("header ended before {what}"));
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> std::result::Result<u32, String> {
        let token = self.token(what)?;
        std::str::from_utf8(token)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("{what} is not a number"))
    }
}

/// Decodes a binary P6 image with maxval 255 and returns its payload.
///
/// `#` comments are accepted anywhere in the header. Exactly one whitespace
/// byte separates the maxval from the payload.
pub fn decode_ppm(
    bytes: &[u8],
    expect_width: u32,
    expect_height: u32,
) -> std::result::Result<&[u8], String> {
    let mut cursor = HeaderCursor { bytes, pos: 0 };
    if cursor.token("magic")? != b"P6" {
        return Err("not a binary P6 file".into());
    }
    let width = cursor.number("width")?;
    let height = cursor.number("height")?;
    let maxval = cursor.number("maxval")?;
    if maxval != 255 {
        return Err(format!("maxval {maxval} unsupported, expected 255"));
    }
    if (width, height) != (expect_width, expect_height) {
        return Err(format!(
            "header says {width}x{height}, manifest says {expect_width}x{expect_height}"
        ));
    }
    match bytes.get(cursor.pos) {
        Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
        _ => return Err("missing whitespace after maxval".into()),
    }
    let len = width as usize * height as usize * 3;
    let payload = &bytes[cursor.pos..];
    if payload.len() < len {
        return Err(format!(
            "truncated payload: {} of {len} bytes",
            payload.len()
        ));
    }
    Ok(&payload[..len])
}

pub fn encode_ppm(frame: &Frame) -> Vec<u8> {
    let mut out = format!("P6 {} {} 255\n", frame.width, frame.height).into_bytes();
    out.extend_from_slice(&frame.pixels);
    out
}

/// Writes `frame` at the location `manifest` assigns to it. Raw RGB24 frames
/// are written in place at their offset, so frames may arrive in any order.
pub fn write_frame(manifest: &ClipManifest, frame: &Frame) -> Result<()> {
    if frame.index >= manifest.frame_count {
        return Err(Error::FrameOutOfRange {
            index: frame.index,
            frame_count: manifest.frame_count,
        });
    }
    let path = manifest.frame_path(frame.index);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    match manifest.pixel_format {
        PixelFormat::PpmSequence => {
            fs::write(&path, encode_ppm(frame)).map_err(|e| Error::io(&path, e))
        }
        PixelFormat::RawRgb24 => {
            let mut file = fs::OpenOptions::new()
                .create(true)
                .truncate(false)
                .write(true)
                .open(&path)
                .map_err(|e| Error::io(&path, e))?;
            file.seek(SeekFrom::Start(
                frame.index as u64 * manifest.frame_len() as u64,
            ))
            .map_err(|e| Error::io(&path, e))?;
            file.write_all(&frame.pixels)
                .map_err(|e| Error::io(&path, e))
        }
    }
}

/// Sequential writer for a whole clip; cheaper than [`write_frame`] for raw
/// files because the output stays open.
pub struct ClipWriter {
    manifest: ClipManifest,
    raw: Option<BufWriter<File>>,
    next: usize,
}

impl ClipWriter {
    pub fn create(manifest: ClipManifest) -> Result<Self> {
        let raw = match manifest.pixel_format {
            PixelFormat::RawRgb24 => {
                let path = manifest.frame_path(0);
                if let Some(dir) = path.parent() {
                    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                }
                let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
                Some(BufWriter::new(file))
            }
            PixelFormat::PpmSequence => None,
        };
        Ok(ClipWriter {
            manifest,
            raw,
            next: 0,
        })
    }

    pub fn push(&mut self, frame: &Frame) -> Result<()> {
        if frame.index != self.next {
            return Err(Error::Usage(format!(
                "frames must be written in order: expected {}, got {}",
                self.next, frame.index
            )));
        }
        match &mut self.raw {
            Some(out) => out
                .write_all(&frame.pixels)
                .map_err(|e| Error::io(self.manifest.frame_path(0), e))?,
            None => write_frame(&self.manifest, frame)?,
        }
        self.next += 1;
        Ok(())
    }

    pub fn finish(self) -> Result<ClipManifest> {
        if let Some(mut out) = self.raw {
            out.flush()
                .map_err(|e| Error::io(self.manifest.frame_path(0), e))?;
        }
        if self.next != self.manifest.frame_count {
            return Err(Error::Usage(format!(
                "clip incomplete: wrote {} of {} frames",
                self.next, self.manifest.frame_count
            )));
        }
        Ok(self.manifest)
    }
}
