//! A pulse smaller than one intensity step is invisible in clean 8-bit frames
//! but reappears in the spatial mean once per-pixel noise dithers the
//! quantizer.

use rppg::synth::{render, template_forehead_spec};
use rppg::{
    estimate_hr, expected_trace, extract_trace, BandLimits, ExtractOptions, Method, SynthConfig,
};

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov / (va * vb).sqrt()
}

fn main() -> rppg::Result<()> {
    let spec = template_forehead_spec();
    println!("amplitude 0.4 intensity units on 800x600 frames, landmark ROI");
    for noise_sigma in [0.0, 0.5, 1.0, 2.0, 4.0] {
        let config = SynthConfig {
            width: 800,
            height: 600,
            amplitude: 0.4,
            noise_sigma,
            seed: 9,
            ..SynthConfig::default()
        };
        let (clip, geometry) = render(&config)?;
        let trace = extract_trace(
            &clip,
            &geometry,
            Method::Landmark,
            &spec,
            &ExtractOptions::default(),
        )?;
        let r = correlation(&trace.samples, &expected_trace(&config));
        let bpm = match estimate_hr(&trace, Method::Landmark, &BandLimits::default(), 8192) {
            Ok(e) => format!("{:.3} bpm", e.bpm),
            Err(e) => format!("({e})"),
        };
        println!("noise sigma {noise_sigma:>3.1}: r = {r:>6.3}, estimate {bpm}");
    }
    Ok(())
}
