//! Walks through the spectral stage on a hand-made trace: windowing,
//! zero-padded power spectrum, band-limited peak and its sub-bin refinement.

use std::f64::consts::TAU;

use rppg::spectral::band_bins;
use rppg::{estimate_hr, pick_peak, power_spectrum, preprocess, BandLimits, GreenTrace, Method};

fn main() -> rppg::Result<()> {
    let fps = 30.0;
    let pulse_hz = 1.23;
    // A pulse, a stronger slow sway below the band, and an offset.
    let samples: Vec<f64> = (0..300)
        .map(|i| {
            let t = i as f64 / fps;
            140.0 + 0.8 * (TAU * pulse_hz * t).sin() + 3.0 * (TAU * 0.4 * t).sin()
        })
        .collect();

    let band = BandLimits::default();
    for n_fft in [512, 2048, 8192] {
        let spectrum = power_spectrum(&preprocess(&samples)?, fps, n_fft)?;
        let (lo, hi) = band_bins(&spectrum, &band).expect("band has bins");
        let peak = pick_peak(&spectrum, &band)?;
        let whole = (0..spectrum.power.len())
            .max_by(|&a, &b| spectrum.power[a].total_cmp(&spectrum.power[b]))
            .unwrap();
        println!(
            "n_fft {n_fft:>5}: bin {:.4} Hz, band bins {lo}..={hi}, global max {:.3} Hz, \
             in-band bin {:.4} Hz -> refined {:.4} Hz (snr {:.1} dB)",
            spectrum.bin_hz,
            spectrum.frequency(whole),
            spectrum.frequency(peak.bin),
            peak.peak_hz,
            peak.snr_db
        );
    }

    let estimate = estimate_hr(
        &GreenTrace::from_samples(samples, fps),
        Method::Bbox,
        &band,
        8192,
    )?;
    println!(
        "estimate: {:.3} bpm (truth {:.3})",
        estimate.bpm,
        pulse_hz * 60.0
    );
    Ok(())
}
