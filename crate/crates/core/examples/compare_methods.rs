//! Reproduces the method comparison on ten seeded clips with jittery
//! detectors: per-method summary table, CSV and distribution plot.
//!
//! ```text
//! cargo run --release --example compare_methods -- [OUT_DIR]
//! ```

use std::path::PathBuf;

use rayon::prelude::*;
use rppg::stats::points_csv;
use rppg::synth::{render, template_forehead_spec};
use rppg::{
    estimate_hr, extract_trace, render_comparison, render_distribution, summarize, BandLimits,
    ExtractOptions, HrEstimate, Method, RunSet, SynthConfig, DEFAULT_N_FFT,
};

fn main() -> rppg::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("rppg-compare"));
    std::fs::create_dir_all(&out).expect("create output directory");

    let spec = template_forehead_spec();
    let per_clip: Vec<(String, Vec<HrEstimate>)> = (1..=10u64)
        .into_par_iter()
        .map(|seed| {
            let config = SynthConfig {
                bbox_jitter_sigma: 0.02,
                landmark_jitter_sigma: 0.004,
                seed,
                ..SynthConfig::default()
            };
            let (clip, geometry) = render(&config)?;
            let estimates = Method::ALL
                .iter()
                .map(|&m| {
                    let trace =
                        extract_trace(&clip, &geometry, m, &spec, &ExtractOptions::default())?;
                    estimate_hr(&trace, m, &BandLimits::default(), DEFAULT_N_FFT)
                })
                .collect::<rppg::Result<Vec<_>>>()?;
            Ok((format!("seed{seed:02}"), estimates))
        })
        .collect::<rppg::Result<_>>()?;

    let sets: Vec<RunSet> = Method::ALL
        .iter()
        .enumerate()
        .map(|(i, &method)| {
            let estimates = per_clip.iter().map(|(_, e)| e[i].clone()).collect();
            let labels = per_clip.iter().map(|(l, _)| l.clone()).collect();
            RunSet::new(method, estimates, labels)
        })
        .collect::<rppg::Result<_>>()?;

    let columns = sets
        .iter()
        .map(|s| summarize(s).map(|st| (s.method, st)))
        .collect::<rppg::Result<Vec<_>>>()?;
    let report = render_comparison(&columns);
    print!("{}", report.text);

    std::fs::write(out.join("summary.csv"), &report.csv).expect("write summary");
    let points = render_distribution(&sets, out.join("distribution.svg"))?;
    println!("\nplot: {}", out.join("distribution.svg").display());
    println!("points: {}", points.display());
    print!("{}", points_csv(&sets));
    Ok(())
}
