//! Per-frame geometry sidecar: newline-delimited JSON, one record per frame.
//!
//! ```text
//! {"frame": 0, "bbox": [x, y, w, h], "landmarks": [[x, y], ...]}
//! {"frame": 1, "bbox": null, "landmarks": null}
//! ```
//!
//! Coordinates are normalized to the frame. Out-of-range detector values are
//! clamped on read; a box with no area left after clamping reads as `null`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::roi::{FaceBox, FaceGeometry, LandmarkSet};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    frame: usize,
    bbox: Option<[f64; 4]>,
    landmarks: Option<Vec<[f64; 2]>>,
}

pub fn parse_sidecar(text: &str) -> Result<Vec<FaceGeometry>> {
    let mut out = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(line).map_err(|e| Error::Sidecar {
            line: line_no + 1,
            message: e.to_string(),
        })?;
        if record.frame != out.len() {
            return Err(Error::Sidecar {
                line: line_no + 1,
                message: format!(
                    "expected frame {}, found frame {}; records must cover every frame once, in order",
                    out.len(),
                    record.frame
                ),
            });
        }
        out.push(FaceGeometry {
            frame_index: record.frame,
            face_box: record
                .bbox
                .and_then(|[x, y, w, h]| FaceBox::clamped(x, y, w, h)),
            landmarks: record
                .landmarks
                .map(|pts| LandmarkSet::clamped(pts.into_iter().map(|[x, y]| (x, y)))),
        });
    }
    Ok(out)
}

pub fn read_sidecar(path: impl AsRef<Path>) -> Result<Vec<FaceGeometry>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sidecar(&text)
}

/// Serializes records with 6 decimals per coordinate.
pub fn format_sidecar(records: &[FaceGeometry]) -> String {
    let mut out = String::new();
    for g in records {
        write!(out, "{{\"frame\":{},\"bbox\":", g.frame_index).unwrap();
        match &g.face_box {
            Some(b) => write!(out, "[{:.6},{:.6},{:.6},{:.6}]", b.x, b.y, b.w, b.h).unwrap(),
            None => out.push_str("null"),
        }
        out.push_str(",\"landmarks\":");
        match &g.landmarks {
            Some(l) => {
                out.push('[');
                for (i, (x, y)) in l.points.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    write!(out, "[{x:.6},{y:.6}]").unwrap();
                }
                out.push(']');
            }
            None => out.push_str("null"),
        }
        out.push_str("}\n");
    }
    out
}

pub fn write_sidecar(path: impl AsRef<Path>, records: &[FaceGeometry]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_sidecar(records)).map_err(|e| Error::io(path, e))
}
