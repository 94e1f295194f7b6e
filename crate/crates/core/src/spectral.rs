//! Heart-rate estimation from a green trace.
//!
//! The trace is mean-centred, Hann-windowed, zero-padded to `n_fft` and
//! transformed; the strongest bin inside the heart-rate band is refined by a
//! three-point parabola on log power.

use std::fmt::Write as _;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::roi::Method;
use crate::signal::GreenTrace;

pub const DEFAULT_N_FFT: usize = 8192;

/// Frequency window searched for the pulse peak.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandLimits {
    pub low_hz: f64,
    pub high_hz: f64,
}

impl Default for BandLimits {
    /// 1.0 to 4.0 Hz, i.e. 60 to 240 bpm.
    fn default() -> Self {
        BandLimits {
            low_hz: 1.0,
            high_hz: 4.0,
        }
    }
}

impl BandLimits {
    pub fn new(low_hz: f64, high_hz: f64) -> Result<Self> {
        if low_hz.is_finite() && high_hz.is_finite() && 0.0 < low_hz && low_hz < high_hz {
            Ok(BandLimits { low_hz, high_hz })
        } else {
            Err(Error::InvalidBand {
                low: low_hz,
                high: high_hz,
            })
        }
    }
}

impl std::str::FromStr for BandLimits {
    type Err = Error;

    /// Parses `low:high` in Hz.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Usage(format!("band must look like `1.0:4.0`, got `{s}`"));
        let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        BandLimits::new(lo, hi)
    }
}

/// One-sided power spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub bin_hz: f64,
    /// `|X_k|^2` for `k = 0..=n_fft/2`.
    pub power: Vec<f64>,
    pub n_fft: usize,
}

impl Spectrum {
    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_hz
    }
}

/// Mean removal followed by a symmetric Hann window
/// `w_k = 0.5 (1 - cos(2 pi k / (N - 1)))`.
pub fn preprocess(samples: &[f64]) -> Result<Vec<f64>> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let denom = (n - 1) as f64;
    Ok(samples
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let w = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * k as f64 / denom).cos());
            (x - mean) * w
        })
        .collect())
}

pub fn power_spectrum(signal: &[f64], fps: f64, n_fft: usize) -> Result<Spectrum> {
    if !n_fft.is_power_of_two() {
        return Err(Error::FftLength {
            n_fft,
            message: "must be a power of two".into(),
        });
    }
    if n_fft < signal.len() {
        return Err(Error::FftLength {
            n_fft,
            message: format!("shorter than the {}-sample signal", signal.len()),
        });
    }
    let mut buffer: Vec<Complex<f64>> = signal
        .iter()
        .map(|&x| Complex::new(x, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(n_fft)
        .collect();
    FftPlanner::new()
        .plan_fft_forward(n_fft)
        .process(&mut buffer);

    #[cfg(debug_assertions)]
    {
        let time: f64 = signal.iter().map(|x| x * x).sum::<f64>() * n_fft as f64;
        let freq: f64 = buffer.iter().map(|c| c.norm_sqr()).sum();
        let scale = time.abs().max(freq.abs());
        debug_assert!(
            scale == 0.0 || (time - freq).abs() <= 1e-9 * scale,
            "Parseval violated: {time} vs {freq}"
        );
    }

    let power = buffer[..=n_fft / 2].iter().map(|c| c.norm_sqr()).collect();
    Ok(Spectrum {
        bin_hz: fps / n_fft as f64,
        power,
        n_fft,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    pub bin: usize,
    pub peak_hz: f64,
    pub snr_db: f64,
}

/// Inclusive range of bins whose centre frequency lies in the band.
pub fn band_bins(spectrum: &Spectrum, band: &BandLimits) -> Option<(usize, usize)> {
    let last = spectrum.power.len().checked_sub(1)?;
    let mut lo = (band.low_hz / spectrum.bin_hz).ceil().max(0.0) as usize;
    while lo > 0 && spectrum.frequency(lo - 1) >= band.low_hz {
        lo -= 1;
    }
    while lo <= last && spectrum.frequency(lo) < band.low_hz {
        lo += 1;
    }
    let mut hi = ((band.high_hz / spectrum.bin_hz).floor().max(0.0) as usize).min(last);
    while hi < last && spectrum.frequency(hi + 1) <= band.high_hz {
        hi += 1;
    }
    while hi > 0 && spectrum.frequency(hi) > band.high_hz {
        hi -= 1;
    }
    (lo <= hi && lo <= last).then_some((lo, hi))
}

pub fn pick_peak(spectrum: &Spectrum, band: &BandLimits) -> Result<Peak> {
    let empty = || Error::BandEmpty {
        low: band.low_hz,
        high: band.high_hz,
        bin_hz: spectrum.bin_hz,
    };
    let (lo, hi) = band_bins(spectrum, band).ok_or_else(empty)?;
    if hi - lo + 1 < 3 {
        return Err(empty());
    }
    let power = &spectrum.power;

    let mut k = lo;
    for i in lo + 1..=hi {
        // Strict comparison keeps the lowest-frequency bin on ties.
        if power[i] > power[k] {
            k = i;
        }
    }
    if power[k] <= 0.0 {
        return Err(Error::NoSpectralPeak);
    }

    let mut offset = 0.0;
    if k > lo && k < hi && power[k - 1] > 0.0 && power[k + 1] > 0.0 {
        let (a, b, c) = (power[k - 1].ln(), power[k].ln(), power[k + 1].ln());
        let curvature = a - 2.0 * b + c;
        if curvature < 0.0 {
            offset = (0.5 * (a - c) / curvature).clamp(-0.5, 0.5);
        }
    }
    let peak_hz = ((k as f64 + offset) * spectrum.bin_hz).clamp(band.low_hz, band.high_hz);

    let others = hi - lo;
    let rest: f64 = power[lo..=hi].iter().sum::<f64>() - power[k];
    let mean_rest = rest / others as f64;
    let snr_db = if mean_rest > 0.0 {
        10.0 * (power[k] / mean_rest).log10()
    } else {
        f64::INFINITY
    };
    Ok(Peak {
        bin: k,
        peak_hz,
        snr_db,
    })
}

/// One clip's heart-rate estimate under one ROI method.
#[derive(Clone, Debug, PartialEq)]
pub struct HrEstimate {
    pub method: Method,
    pub bpm: f64,
    pub peak_hz: f64,
    /// Peak power over mean power of the other in-band bins. Not finite when
    /// the peak is the only non-zero bin.
    pub snr_db: f64,
    pub band: BandLimits,
    pub fps: f64,
    pub n_samples: usize,
    pub n_fft: usize,
    pub skipped_frames: Vec<usize>,
}

pub fn estimate_hr(
    trace: &GreenTrace,
    method: Method,
    band: &BandLimits,
    n_fft: usize,
) -> Result<HrEstimate> {
    let required_s = 2.0 / band.low_hz;
    if trace.len() >= 2 && trace.duration_s() < required_s {
        return Err(Error::TraceTooShort {
            duration_s: trace.duration_s(),
            required_s,
        });
    }
    let signal = preprocess(&trace.samples)?;
    let spectrum = power_spectrum(&signal, trace.fps, n_fft)?;
    let peak = pick_peak(&spectrum, band)?;
    Ok(HrEstimate {
        method,
        bpm: 60.0 * peak.peak_hz,
        peak_hz: peak.peak_hz,
        snr_db: peak.snr_db,
        band: *band,
        fps: trace.fps,
        n_samples: trace.len(),
        n_fft,
        skipped_frames: trace.skipped_frames.clone(),
    })
}

fn json_number(value: f64, decimals: usize) -> String {
    if value.is_finite() {
        format!("{value:.decimals$}")
    } else {
        "null".to_owned()
    }
}

#[derive(Deserialize)]
struct ResultDoc {
    method: Method,
    bpm: f64,
    peak_hz: f64,
    snr_db: Option<f64>,
    band: [f64; 2],
    fps: f64,
    n_samples: usize,
    n_fft: usize,
    skipped_frames: Vec<usize>,
}

impl HrEstimate {
    /// Result document with fixed formatting: 3 decimals for bpm and dB, 6 for
    /// frequencies.
    pub fn to_json(&self) -> String {
        let mut out = String::from("{\n");
        writeln!(out, "  \"method\": \"{}\",", self.method).unwrap();
        writeln!(out, "  \"bpm\": {},", json_number(self.bpm, 3)).unwrap();
        writeln!(out, "  \"peak_hz\": {},", json_number(self.peak_hz, 6)).unwrap();
        writeln!(out, "  \"snr_db\": {},", json_number(self.snr_db, 3)).unwrap();
        writeln!(
            out,
            "  \"band\": [{}, {}],",
            json_number(self.band.low_hz, 6),
            json_number(self.band.high_hz, 6)
        )
        .unwrap();
        writeln!(out, "  \"fps\": {},", json_number(self.fps, 6)).unwrap();
        writeln!(out, "  \"n_samples\": {},", self.n_samples).unwrap();
        writeln!(out, "  \"n_fft\": {},", self.n_fft).unwrap();
        let skipped: Vec<String> = self.skipped_frames.iter().map(|f| f.to_string()).collect();
        writeln!(out, "  \"skipped_frames\": [{}]", skipped.join(", ")).unwrap();
        out.push_str("}\n");
        out
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        let doc: ResultDoc = serde_json::from_str(text)?;
        Ok(HrEstimate {
            method: doc.method,
            bpm: doc.bpm,
            peak_hz: doc.peak_hz,
            snr_db: doc.snr_db.unwrap_or(f64::INFINITY),
            band: BandLimits {
                low_hz: doc.band[0],
                high_hz: doc.band[1],
            },
            fps: doc.fps,
            n_samples: doc.n_samples,
            n_fft: doc.n_fft,
            skipped_frames: doc.skipped_frames,
        })
    }
}
