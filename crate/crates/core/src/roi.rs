//! Forehead regions of interest.
//!
//! Two routes produce a [`RoiMask`] for a frame:
//!
//! * [`forehead_rect`]: a fixed fractional sub-rectangle of the detected face
//!   box.
//! * [`forehead_polygon`]: a polygon through selected face landmarks,
//!   rasterized with [`rasterize_polygon`].
//!
//! Masks are stored as sorted, merged horizontal spans, so two masks compare
//! equal exactly when they cover the same pixel set.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Face box in normalized frame coordinates, top-left origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FaceBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl FaceBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        let b = FaceBox { x, y, w, h };
        let finite = [x, y, w, h].iter().all(|v| v.is_finite());
        if finite && x >= 0.0 && y >= 0.0 && w > 0.0 && h > 0.0 && x + w <= 1.0 && y + h <= 1.0 {
            Ok(b)
        } else {
            Err(Error::Usage(format!("invalid face box {b:?}")))
        }
    }

    /// Clips arbitrary detector output to the unit square. Returns `None` when
    /// nothing with positive area is left.
    pub fn clamped(x: f64, y: f64, w: f64, h: f64) -> Option<Self> {
        if ![x, y, w, h].iter().all(|v| v.is_finite()) {
            return None;
        }
        let x0 = x.clamp(0.0, 1.0);
        let y0 = y.clamp(0.0, 1.0);
        let x1 = (x + w).clamp(0.0, 1.0);
        let y1 = (y + h).clamp(0.0, 1.0);
        if x1 > x0 && y1 > y0 {
            // Keep the detector's extent untouched when nothing was clipped.
            let w = if x0 == x && x1 == x + w { w } else { x1 - x0 };
            let h = if y0 == y && y1 == y + h { h } else { y1 - y0 };
            Some(FaceBox { x: x0, y: y0, w, h })
        } else {
            None
        }
    }
}

/// Normalized landmark coordinates, in detector order.
#[derive(Clone, Debug, PartialEq)]
pub struct LandmarkSet {
    pub points: Vec<(f64, f64)>,
}

impl LandmarkSet {
    /// Builds a set, clamping every coordinate into `[0, 1]`.
    pub fn clamped(points: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let clamp = |v: f64| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        LandmarkSet {
            points: points
                .into_iter()
                .map(|(x, y)| (clamp(x), clamp(y)))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Detector output for one frame. Either field may be absent when detection
/// failed; such frames are skipped during trace extraction.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceGeometry {
    pub frame_index: usize,
    pub face_box: Option<FaceBox>,
    pub landmarks: Option<LandmarkSet>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Bbox,
    Landmark,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Bbox, Method::Landmark];

    pub fn name(self) -> &'static str {
        match self {
            Method::Bbox => "bbox",
            Method::Landmark => "landmark",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Method::Bbox => "Bounding Box Method",
            Method::Landmark => "Landmark Method",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bbox" => Ok(Method::Bbox),
            "landmark" => Ok(Method::Landmark),
            other => Err(Error::Usage(format!(
                "unknown method `{other}`, expected bbox or landmark"
            ))),
        }
    }
}

/// Fractions of the face box that bound the forehead.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxFractions {
    pub left: f64,
    pub right: f64,
    pub top: f64,
    pub bottom: f64,
}

impl Default for BoxFractions {
    fn default() -> Self {
        BoxFractions {
            left: 0.25,
            right: 0.75,
            top: 0.10,
            bottom: 0.30,
        }
    }
}

/// Forehead region configuration for both ROI routes.
#[derive(Clone, Debug, PartialEq)]
pub struct ForeheadSpec {
    pub fractions: BoxFractions,
    /// Landmark ordinals tracing the forehead outline, in polygon order.
    pub polygon_indices: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct ForeheadDoc {
    bbox_fracs: [f64; 4],
    polygon_indices: Vec<usize>,
}

/// Forehead outline on the 468-point face mesh: along the upper face oval
/// from the crown, then back across the top of the brows.
pub const FACE_MESH_FOREHEAD_CONFIG: &str = include_str!("../config/forehead_facemesh468.json");

impl Default for ForeheadSpec {
    fn default() -> Self {
        ForeheadSpec::from_json(FACE_MESH_FOREHEAD_CONFIG)
            .expect("bundled forehead config is valid")
    }
}

impl ForeheadSpec {
    pub fn new(fractions: BoxFractions, polygon_indices: Vec<usize>) -> Result<Self> {
        let spec = ForeheadSpec {
            fractions,
            polygon_indices,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        let BoxFractions {
            left,
            right,
            top,
            bottom,
        } = self.fractions;
        let ordered = |lo: f64, hi: f64| 0.0 <= lo && lo < hi && hi <= 1.0;
        if !ordered(left, right) {
            return Err(Error::ForeheadSpec(format!(
                "need 0 <= left < right <= 1, got left={left} right={right}"
            )));
        }
        if !ordered(top, bottom) {
            return Err(Error::ForeheadSpec(format!(
                "need 0 <= top < bottom <= 1, got top={top} bottom={bottom}"
            )));
        }
        if self.polygon_indices.len() < 3 {
            return Err(Error::ForeheadSpec(format!(
                "polygon_indices needs at least 3 entries, got {}",
                self.polygon_indices.len()
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ForeheadDoc =
            serde_json::from_str(text).map_err(|e| Error::ForeheadSpec(e.to_string()))?;
        let [left, right, top, bottom] = doc.bbox_fracs;
        ForeheadSpec::new(
            BoxFractions {
                left,
                right,
                top,
                bottom,
            },
            doc.polygon_indices,
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ForeheadSpec::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let f = self.fractions;
        let doc = ForeheadDoc {
            bbox_fracs: [f.left, f.right, f.top, f.bottom],
            polygon_indices: self.polygon_indices.clone(),
        };
        let mut out = serde_json::to_string_pretty(&doc).expect("forehead spec serializes");
        out.push('\n');
        out
    }
}

/// A run of pixels `[start, end)` on one row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Span {
    pub row: u32,
    pub start: u32,
    pub end: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoiMask {
    pub frame_index: usize,
    spans: Vec<Span>,
    pixel_count: usize,
}

impl RoiMask {
    /// Normalizes arbitrary spans: empty ones dropped, overlapping or touching
    /// ones on the same row merged.
    pub fn from_spans(frame_index: usize, mut spans: Vec<Span>) -> Self {
        spans.retain(|s| s.end > s.start);
        spans.sort_unstable();
        let mut merged: Vec<Span> = Vec::with_capacity(spans.len());
        for s in spans {
            match merged.last_mut() {
                Some(last) if last.row == s.row && s.start <= last.end => {
                    last.end = last.end.max(s.end);
                }
                _ => merged.push(s),
            }
        }
        let pixel_count = merged.iter().map(|s| (s.end - s.start) as usize).sum();
        RoiMask {
            frame_index,
            spans: merged,
            pixel_count,
        }
    }

    pub fn from_pixels(frame_index: usize, pixels: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let spans = pixels
            .into_iter()
            .map(|(col, row)| Span {
                row,
                start: col,
                end: col + 1,
            })
            .collect();
        RoiMask::from_spans(frame_index, spans)
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn pixel_count(&self) -> usize {
        self.pixel_count
    }

    pub fn is_empty(&self) -> bool {
        self.pixel_count == 0
    }

    /// `(col, row)` pairs in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.spans
            .iter()
            .flat_map(|s| (s.start..s.end).map(move |c| (c, s.row)))
    }

    pub fn contains(&self, col: u32, row: u32) -> bool {
        let at = self.spans.partition_point(|s| (s.row, s.end) <= (row, col));
        self.spans
            .get(at)
            .is_some_and(|s| s.row == row && s.start <= col && col < s.end)
    }
}

/// Pixel bounds `[c0, c1) x [r0, r1)` of the forehead sub-rectangle, clamped to
/// the frame.
pub fn forehead_bounds(
    face_box: &FaceBox,
    fractions: &BoxFractions,
    width: u32,
    height: u32,
) -> (u32, u32, u32, u32) {
    let to_px = |v: f64, extent: u32| (v * extent as f64).round().clamp(0.0, extent as f64) as u32;
    let c0 = to_px(face_box.x + fractions.left * face_box.w, width);
    let c1 = to_px(face_box.x + fractions.right * face_box.w, width);
    let r0 = to_px(face_box.y + fractions.top * face_box.h, height);
    let r1 = to_px(face_box.y + fractions.bottom * face_box.h, height);
    (c0, c1, r0, r1)
}

pub fn forehead_rect(
    frame_index: usize,
    face_box: &FaceBox,
    spec: &ForeheadSpec,
    width: u32,
    height: u32,
) -> Result<RoiMask> {
    let (c0, c1, r0, r1) = forehead_bounds(face_box, &spec.fractions, width, height);
    if c1 <= c0 || r1 <= r0 {
        return Err(Error::EmptyRoi { frame: frame_index });
    }
    let spans = (r0..r1)
        .map(|row| Span {
            row,
            start: c0,
            end: c1,
        })
        .collect();
    Ok(RoiMask::from_spans(frame_index, spans))
}

pub fn forehead_polygon(
    frame_index: usize,
    landmarks: &LandmarkSet,
    spec: &ForeheadSpec,
    width: u32,
    height: u32,
) -> Result<RoiMask> {
    if spec.polygon_indices.len() < 3 {
        return Err(Error::TooFewVertices(spec.polygon_indices.len()));
    }
    let mut vertices = Vec::with_capacity(spec.polygon_indices.len());
    for &index in &spec.polygon_indices {
        let &(x, y) = landmarks.points.get(index).ok_or(Error::LandmarkIndex {
            index,
            count: landmarks.len(),
        })?;
        vertices.push((x * width as f64, y * height as f64));
    }
    let mask = rasterize_polygon(frame_index, &vertices, width, height);
    if mask.is_empty() {
        return Err(Error::EmptyRoi { frame: frame_index });
    }
    Ok(mask)
}

/// Even-odd fill of a pixel-space polygon, sampled at pixel centers.
///
/// A pixel `(c, r)` is set iff a horizontal ray from `(c + 0.5, r + 0.5)` to
/// +inf crosses the boundary an odd number of times. An edge counts as
/// crossing row `y` iff exactly one endpoint lies strictly below `y`, so
/// vertices on the scanline and shared edges are never double counted.
pub fn rasterize_polygon(
    frame_index: usize,
    vertices: &[(f64, f64)],
    width: u32,
    height: u32,
) -> RoiMask {
    if vertices.len() < 3 {
        return RoiMask::from_spans(frame_index, Vec::new());
    }
    let (y_min, y_max) = vertices
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, y)| {
            (lo.min(y), hi.max(y))
        });
    if !(y_min.is_finite() && y_max.is_finite()) {
        return RoiMask::from_spans(frame_index, Vec::new());
    }
    let first_row = (y_min - 0.5).floor().max(0.0) as u32;
    let last_row = ((y_max - 0.5).ceil().max(-1.0) as i64).min(height as i64 - 1);

    let mut spans = Vec::new();
    let mut crossings: Vec<f64> = Vec::new();
    let mut row = first_row as i64;
    while row <= last_row {
        let y = row as f64 + 0.5;
        crossings.clear();
        let mut prev = vertices[vertices.len() - 1];
        for &cur in vertices {
            let (xi, yi) = cur;
            let (xj, yj) = prev;
            if (yi > y) != (yj > y) {
                crossings.push((xj - xi) * (y - yi) / (yj - yi) + xi);
            }
            prev = cur;
        }
        crossings.sort_unstable_by(f64::total_cmp);
        for pair in crossings.chunks_exact(2) {
            let start = first_center_at_or_after(pair[0], width);
            let end = first_center_at_or_after(pair[1], width);
            if end > start {
                spans.push(Span {
                    row: row as u32,
                    start,
                    end,
                });
            }
        }
        row += 1;
    }
    RoiMask::from_spans(frame_index, spans)
}

/// Smallest column `c` in `[0, width]` whose center `c + 0.5` is `>= x`.
fn first_center_at_or_after(x: f64, width: u32) -> u32 {
    if x <= 0.5 {
        return 0;
    }
    let w = width as f64;
    if x > w - 0.5 {
        return width;
    }
    let mut c = (x - 0.5).ceil() as u32;
    // `x - 0.5` may round; settle on the exact comparison.
    while c > 0 && (c - 1) as f64 + 0.5 >= x {
        c -= 1;
    }
    while c < width && (c as f64 + 0.5) < x {
        c += 1;
    }
    c
}

/// Builds the method's mask for one frame. `Ok(None)` means the geometry the
/// method needs is missing from this record.
pub fn mask_for(
    method: Method,
    geometry: &FaceGeometry,
    spec: &ForeheadSpec,
    width: u32,
    height: u32,
) -> Result<Option<RoiMask>> {
    let frame = geometry.frame_index;
    match method {
        Method::Bbox => geometry
            .face_box
            .as_ref()
            .map(|b| forehead_rect(frame, b, spec, width, height))
            .transpose(),
        Method::Landmark => geometry
            .landmarks
            .as_ref()
            .map(|l| forehead_polygon(frame, l, spec, width, height))
            .transpose(),
    }
}
