//! Per-frame ROI reduction to a green-channel time series.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::{Frame, FrameSource};
use crate::roi::{mask_for, FaceGeometry, ForeheadSpec, Method, RoiMask};

/// Per-frame spatial green means of one clip under one ROI method.
#[derive(Clone, Debug, PartialEq)]
pub struct GreenTrace {
    pub samples: Vec<f64>,
    /// Frame ordinal of each sample.
    pub frames: Vec<usize>,
    pub fps: f64,
    pub skipped_frames: Vec<usize>,
}

impl GreenTrace {
    /// Uniformly sampled trace with no gaps, frames numbered from 0.
    pub fn from_samples(samples: Vec<f64>, fps: f64) -> Self {
        GreenTrace {
            frames: (0..samples.len()).collect(),
            samples,
            fps,
            skipped_frames: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fps
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame,t_seconds,green_mean\n");
        for (&frame, &g) in self.frames.iter().zip(&self.samples) {
            writeln!(out, "{frame},{:.6},{g:.6}", frame as f64 / self.fps).unwrap();
        }
        out
    }
}

/// Mean green value over the mask, by exact integer summation and a single
/// division.
pub fn spatial_mean_green(frame: &Frame, mask: &RoiMask) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::EmptyRoi {
            frame: mask.frame_index,
        });
    }
    let stride = frame.width as usize * 3;
    let mut sum: u64 = 0;
    for span in mask.spans() {
        assert!(
            span.row < frame.height && span.end <= frame.width,
            "mask exceeds frame bounds"
        );
        let row = &frame.pixels[span.row as usize * stride..][..stride];
        sum += row[span.start as usize * 3..span.end as usize * 3]
            .iter()
            .skip(1)
            .step_by(3)
            .map(|&g| g as u64)
            .sum::<u64>();
    }
    Ok(sum as f64 / mask.pixel_count() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtractOptions {
    /// Minimum fraction of frames that must yield a sample.
    pub min_coverage: f64,
    pub parallel: bool,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            min_coverage: 0.8,
            parallel: true,
        }
    }
}

fn frame_sample(
    source: &impl FrameSource,
    geometry: &FaceGeometry,
    method: Method,
    spec: &ForeheadSpec,
) -> Result<Option<f64>> {
    let (width, height) = source.dimensions();
    let mask = match mask_for(method, geometry, spec, width, height) {
        Ok(Some(mask)) => mask,
        Ok(None) | Err(Error::EmptyRoi { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let frame = source.frame(geometry.frame_index)?;
    spatial_mean_green(&frame, &mask).map(Some)
}

/// Builds the green trace for `method`. Frames whose geometry is missing or
/// whose mask comes out empty are listed in `skipped_frames`.
pub fn extract_trace(
    source: &impl FrameSource,
    geometry: &[FaceGeometry],
    method: Method,
    spec: &ForeheadSpec,
    options: &ExtractOptions,
) -> Result<GreenTrace> {
    let total = source.frame_count();
    if geometry.len() != total {
        return Err(Error::GeometryMismatch {
            geometry: geometry.len(),
            frames: total,
        });
    }
    if let Some((i, g)) = geometry
        .iter()
        .enumerate()
        .find(|(i, g)| g.frame_index != *i)
    {
        return Err(Error::Sidecar {
            line: i + 1,
            message: format!("record for frame {} at position {i}", g.frame_index),
        });
    }

    let per_frame: Vec<Option<f64>> = if options.parallel {
        geometry
            .par_iter()
            .map(|g| frame_sample(source, g, method, spec))
            .collect::<Result<_>>()?
    } else {
        geometry
            .iter()
            .map(|g| frame_sample(source, g, method, spec))
            .collect::<Result<_>>()?
    };

    let mut trace = GreenTrace {
        samples: Vec::with_capacity(total),
        frames: Vec::with_capacity(total),
        fps: source.fps(),
        skipped_frames: Vec::new(),
    };
    for (index, sample) in per_frame.into_iter().enumerate() {
        match sample {
            Some(v) => {
                trace.samples.push(v);
                trace.frames.push(index);
            }
            None => trace.skipped_frames.push(index),
        }
    }

    let usable = trace.samples.len();
    if (usable as f64) + 1e-9 < options.min_coverage * total as f64 {
        return Err(Error::InsufficientCoverage { usable, total });
    }
    Ok(trace)
}
