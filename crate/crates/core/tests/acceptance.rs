//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rppg::roi::{forehead_bounds, BoxFractions, FaceBox, ForeheadSpec, RoiMask};
use rppg::sidecar::read_sidecar;
use rppg::spectral::{power_spectrum, preprocess, BandLimits};
use rppg::stats::{render_comparison, summarize_values};
use rppg::synth::{self, Tone};
use rppg::{
    estimate_hr, extract_trace, forehead_rect, generate_clip, load_manifest, rasterize_polygon,
    spatial_mean_green, ExtractOptions, Frame, HrEstimate, Method, PixelFormat, SynthConfig,
    DEFAULT_N_FFT,
};

type Outcome = Result<String, String>;

/// Every bpm estimate produced by the clip-based criteria, checked against the
/// default band at the end of the band criterion.
#[derive(Default)]
struct Ledger {
    estimates: Vec<(String, f64)>,
}

fn scratch() -> tempfile::TempDir {
    tempfile::Builder::new()
        .prefix("rppg-accept")
        .tempdir()
        .expect("tempdir")
}

/// Writes `config` to disk, reads it back like the CLI does, and estimates
/// both methods.
fn estimate_on_disk(config: &SynthConfig, dir: &Path) -> rppg::Result<Vec<HrEstimate>> {
    let manifest = generate_clip(config, dir)?;
    let manifest = load_manifest(manifest.base_dir.join(synth::MANIFEST_FILE))?;
    let geometry = read_sidecar(dir.join(synth::SIDECAR_FILE))?;
    let spec = ForeheadSpec::load(dir.join(synth::FOREHEAD_FILE))?;
    Method::ALL
        .iter()
        .map(|&method| {
            let trace = extract_trace(
                &manifest,
                &geometry,
                method,
                &spec,
                &ExtractOptions::default(),
            )?;
            estimate_hr(&trace, method, &BandLimits::default(), DEFAULT_N_FFT)
        })
        .collect()
}

fn loop_closure(ledger: &mut Ledger) -> Outcome {
    let tmp = scratch();
    let mut worst: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    let mut failures = Vec::new();
    for (i, bpm) in [60.0, 72.0, 90.0, 120.0, 180.0].into_iter().enumerate() {
        let config = SynthConfig {
            bpm,
            fps: 30.0,
            duration_s: 10.0,
            amplitude: 1.5,
            noise_sigma: 2.0,
            seed: 1000 + i as u64,
            ..SynthConfig::default()
        };
        let dir = tmp.path().join(format!("bpm{bpm}"));
        let start = Instant::now();
        let estimates = estimate_on_disk(&config, &dir).map_err(|e| e.to_string())?;
        slowest = slowest.max(start.elapsed().as_secs_f64());
        for e in estimates {
            let err = (e.bpm - bpm).abs();
            worst = worst.max(err);
            ledger
                .estimates
                .push((format!("loop {bpm} {}", e.method), e.bpm));
            if err > 2.0 {
                failures.push(format!("{} at {bpm}: {:.3}", e.method, e.bpm));
            }
        }
        fs::remove_dir_all(&dir).ok();
    }
    if failures.is_empty() {
        Ok(format!(
            "max |error| {worst:.3} bpm (tol 2.0); slowest clip {slowest:.2} s at 320x240"
        ))
    } else {
        Err(failures.join(", "))
    }
}

fn variance_ordering(ledger: &mut Ledger) -> Outcome {
    let tmp = scratch();
    let mut by_method: BTreeMap<Method, Vec<f64>> = BTreeMap::new();
    for seed in 1..=10u64 {
        let config = SynthConfig {
            bbox_jitter_sigma: 0.02,
            landmark_jitter_sigma: 0.004,
            seed,
            pixel_format: PixelFormat::RawRgb24,
            ..SynthConfig::default()
        };
        let dir = tmp.path().join(format!("seed{seed}"));
        for e in estimate_on_disk(&config, &dir).map_err(|e| e.to_string())? {
            ledger
                .estimates
                .push((format!("jitter seed {seed} {}", e.method), e.bpm));
            by_method.entry(e.method).or_default().push(e.bpm);
        }
        fs::remove_dir_all(&dir).ok();
    }
    let sd = |m: Method| summarize_values(&by_method[&m]).map(|s| s.stdev_bpm);
    let bbox = sd(Method::Bbox).map_err(|e| e.to_string())?;
    let landmark = sd(Method::Landmark).map_err(|e| e.to_string())?;
    let detail = format!("stdev landmark {landmark:.3} vs bbox {bbox:.3} over 10 clips");
    if landmark < bbox {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn band_enforcement(ledger: &mut Ledger) -> Outcome {
    let tmp = scratch();
    let config = SynthConfig {
        bpm: 72.0,
        amplitude: 1.5,
        noise_sigma: 2.0,
        drift_per_s: 0.2,
        tones: vec![Tone {
            hz: 0.5,
            amplitude: 6.0,
        }],
        seed: 2024,
        pixel_format: PixelFormat::RawRgb24,
        ..SynthConfig::default()
    };
    let mut failures = Vec::new();
    for e in estimate_on_disk(&config, tmp.path()).map_err(|e| e.to_string())? {
        ledger
            .estimates
            .push((format!("0.5 Hz tone {}", e.method), e.bpm));
        if (e.bpm - 72.0).abs() > 2.0 {
            failures.push(format!(
                "{} estimated {:.3} with a 0.5 Hz tone",
                e.method, e.bpm
            ));
        }
    }
    for (what, bpm) in &ledger.estimates {
        if !(60.0..=240.0).contains(bpm) {
            failures.push(format!("{what}: {bpm:.3} outside 60..240"));
        }
    }
    if failures.is_empty() {
        Ok(format!(
            "72 +/- 2 with a 4x stronger 0.5 Hz tone; {} estimates all in [60, 240]",
            ledger.estimates.len()
        ))
    } else {
        Err(failures.join(", "))
    }
}

fn spectral_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_bin: f64 = 0.0;
    let mut worst_parseval: f64 = 0.0;
    for _ in 0..40 {
        let n = rng.random_range(2..=512usize);
        let n_fft = n.next_power_of_two() << rng.random_range(0..2u32);
        let signal: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fast = power_spectrum(&signal, 30.0, n_fft).map_err(|e| e.to_string())?;
        let slow = common::naive_dft_power(&signal, n_fft);
        for (a, b) in fast.power.iter().zip(&slow) {
            worst_bin = worst_bin.max((a - b).abs() / b.abs().max(f64::MIN_POSITIVE));
        }
        let energy: f64 = signal.iter().map(|x| x * x).sum();
        let parseval = common::two_sided_energy(&fast.power, n_fft) / n_fft as f64;
        worst_parseval = worst_parseval.max((parseval - energy).abs() / energy);
    }

    let mut worst_hz: f64 = 0.0;
    for _ in 0..50 {
        let hz = rng.random_range(1.0..4.0);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let signal: Vec<f64> = (0..300)
            .map(|i| (std::f64::consts::TAU * hz * i as f64 / 30.0 + phase).cos())
            .collect();
        let spectrum = power_spectrum(&preprocess(&signal).map_err(|e| e.to_string())?, 30.0, 8192)
            .map_err(|e| e.to_string())?;
        let peak = rppg::pick_peak(&spectrum, &BandLimits::default()).map_err(|e| e.to_string())?;
        worst_hz = worst_hz.max((peak.peak_hz - hz).abs());
    }

    let detail = format!(
        "per-bin rel {worst_bin:.1e} (tol 1e-9); Parseval rel {worst_parseval:.1e} (tol 1e-9); \
         peak error {worst_hz:.1e} Hz over 50 tones (tol 0.02)"
    );
    if worst_bin <= 1e-9 && worst_parseval <= 1e-9 && worst_hz <= 0.02 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn reduction_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..100 {
        let (w, h) = (rng.random_range(1..=48u32), rng.random_range(1..=48u32));
        let pixels: Vec<u8> = (0..w * h * 3).map(|_| rng.random()).collect();
        let count = rng.random_range(1..=(w * h) as usize);
        let coords: Vec<(u32, u32)> = (0..count)
            .map(|_| (rng.random_range(0..w), rng.random_range(0..h)))
            .collect();
        let mask = RoiMask::from_pixels(0, coords.iter().copied());
        let mut unique: Vec<(u32, u32)> = mask.pixels().collect();
        unique.reverse();
        let frame = Frame::new(0, w, h, pixels);
        let got = spatial_mean_green(&frame, &mask).map_err(|e| e.to_string())?;
        let want = common::brute_force_green_mean(&frame.pixels, w, &unique);
        if got.to_bits() != want.to_bits() {
            return Err(format!("case {case}: {got} != {want}"));
        }
    }

    let config = SynthConfig {
        duration_s: 4.0,
        bbox_jitter_sigma: 0.01,
        landmark_jitter_sigma: 0.004,
        seed: 6,
        ..SynthConfig::default()
    };
    let (clip, geometry) = synth::render(&config).map_err(|e| e.to_string())?;
    let spec = synth::template_forehead_spec();
    for method in Method::ALL {
        let run = |parallel| {
            let options = ExtractOptions {
                parallel,
                ..ExtractOptions::default()
            };
            extract_trace(&clip, &geometry, method, &spec, &options)
        };
        let (seq, par) = (run(false), run(true));
        let (seq, par) = (
            seq.map_err(|e| e.to_string())?,
            par.map_err(|e| e.to_string())?,
        );
        let same = seq.frames == par.frames
            && seq
                .samples
                .iter()
                .zip(&par.samples)
                .all(|(a, b)| a.to_bits() == b.to_bits());
        if !same {
            return Err(format!("{method}: sequential and parallel traces differ"));
        }
    }
    Ok("100 random frame/mask pairs bit-exact; sequential == parallel for both methods".into())
}

fn geometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..50 {
        let n = rng.random_range(3..=9);
        let vertices: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random_range(-4.0..36.0), rng.random_range(-4.0..36.0)))
            .collect();
        let got: Vec<(u32, u32)> = rasterize_polygon(0, &vertices, 32, 32).pixels().collect();
        let mut want = common::brute_force_mask(&vertices, 32, 32);
        want.sort_by_key(|&(c, r)| (r, c));
        if got != want {
            return Err(format!(
                "polygon {case} {vertices:?}: mask differs from oracle"
            ));
        }
    }

    let spec = ForeheadSpec::default();
    for case in 0..200 {
        let (x, y) = (rng.random_range(0.0..0.9), rng.random_range(0.0..0.9));
        let face = FaceBox::new(
            x,
            y,
            rng.random_range(0.01..1.0 - x),
            rng.random_range(0.01..1.0 - y),
        )
        .map_err(|e| e.to_string())?;
        let (w, h) = (rng.random_range(8..=96u32), rng.random_range(8..=96u32));
        let fractions: &BoxFractions = &spec.fractions;
        let (c0, c1, r0, r1) = forehead_bounds(&face, fractions, w, h);
        let corners = [
            (c0 as f64, r0 as f64),
            (c1 as f64, r0 as f64),
            (c1 as f64, r1 as f64),
            (c0 as f64, r1 as f64),
        ];
        let poly = rasterize_polygon(0, &corners, w, h);
        match forehead_rect(0, &face, &spec, w, h) {
            Ok(rect) if rect.spans() == poly.spans() => {}
            Err(_) if poly.is_empty() => {}
            _ => {
                return Err(format!(
                    "rect case {case}: rectangle and polygon paths differ"
                ))
            }
        }
    }
    Ok("50 random polygons on 32x32 equal the oracle; 200 rect/polygon pairs equal".into())
}

fn statistics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..=1000);
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(55.0..95.0)).collect();
        let stats = summarize_values(&values).map_err(|e| e.to_string())?;
        let (mean, sd) = common::two_pass(&values);
        worst = worst
            .max((stats.mean_bpm - mean).abs())
            .max((stats.stdev_bpm - sd).abs());
    }
    if worst > 1e-12 {
        return Err(format!("max deviation from two-pass oracle {worst:.1e}"));
    }

    let column = |mean, stdev| rppg::RunStats {
        n: 10,
        mean_bpm: mean,
        stdev_bpm: stdev,
        min_bpm: mean,
        max_bpm: mean,
    };
    let report = render_comparison(&[
        (Method::Bbox, column(79.472, 18.720)),
        (Method::Landmark, column(66.660, 4.171)),
    ]);
    for needle in ["79.472", "18.720", "66.660", "4.171"] {
        if !report.text.contains(needle) || !report.csv.contains(needle) {
            return Err(format!("report is missing {needle}"));
        }
    }
    if !report.csv.contains("mean,79.472,66.660") || !report.csv.contains("stdev,18.720,4.171") {
        return Err(format!("unexpected CSV rows:\n{}", report.csv));
    }
    Ok(format!(
        "max oracle deviation {worst:.1e} (tol 1e-12); table renders 79.472/18.720/66.660/4.171"
    ))
}

fn rppg_bin(args: &[&str]) -> Result<Vec<u8>, String> {
    let output = Command::new(env!("CARGO_BIN_EXE_rppg"))
        .args(args)
        .env_remove("RPPG_CONFIG")
        .output()
        .map_err(|e| e.to_string())?;
    if !output.status.success() {
        return Err(format!(
            "rppg {}: {}",
            args.join(" "),
            String::from_utf8_lossy(&output.stderr)
        ));
    }
    Ok(output.stdout)
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).expect("read_dir").flatten() {
            let path = entry.path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).expect("prefix").to_path_buf();
                out.insert(rel, fs::read(&path).expect("read"));
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

fn determinism() -> Outcome {
    let tmp = scratch();
    let p = |name: &str| tmp.path().join(name).to_string_lossy().into_owned();
    let synth_args = |out: &str| {
        vec![
            "synth",
            "--bpm",
            "72",
            "--fps",
            "30",
            "--duration",
            "10",
            "--seed",
            "1",
            "--bbox-jitter",
            "0.02",
            "--landmark-jitter",
            "0.004",
            "--out",
        ]
        .into_iter()
        .map(str::to_owned)
        .chain([out.to_owned()])
        .collect::<Vec<_>>()
    };
    let run = |args: Vec<String>| rppg_bin(&args.iter().map(String::as_str).collect::<Vec<_>>());

    run(synth_args(&p("clip_a")))?;
    run(synth_args(&p("clip_b")))?;
    let (a, b) = (
        tree(&tmp.path().join("clip_a")),
        tree(&tmp.path().join("clip_b")),
    );
    if a.is_empty() || a != b {
        return Err("two synth runs with the same seed differ".into());
    }
    let clip_files = a.len();

    let manifest = tmp.path().join("clip_a").join(synth::MANIFEST_FILE);
    let manifest = manifest.to_string_lossy().into_owned();
    for out in ["res_a", "res_b"] {
        rppg_bin(&[
            "estimate",
            "--clip",
            &manifest,
            "--method",
            "both",
            "--trace-csv",
            "--out",
            &p(out),
        ])?;
    }
    let (ra, rb) = (
        tree(&tmp.path().join("res_a")),
        tree(&tmp.path().join("res_b")),
    );
    if ra.len() != 4 || ra != rb {
        return Err(format!(
            "estimate outputs differ ({} vs {} files)",
            ra.len(),
            rb.len()
        ));
    }

    let mut stdouts = Vec::new();
    for out in ["cmp_a", "cmp_b"] {
        stdouts.push(rppg_bin(&[
            "compare",
            "--results",
            &p("res_a"),
            "--out",
            &p(out),
        ])?);
    }
    let (ca, cb) = (
        tree(&tmp.path().join("cmp_a")),
        tree(&tmp.path().join("cmp_b")),
    );
    if ca.is_empty() || ca != cb || stdouts[0] != stdouts[1] {
        return Err("compare outputs differ".into());
    }
    Ok(format!(
        "synth x2: {clip_files} files identical; estimate x2: {} files identical; compare x2: {} files + stdout identical",
        ra.len(),
        ca.len()
    ))
}

/// Runs one criterion and prints its line. Returns whether it passed.
fn check(name: &str, criterion: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome =
        catch_unwind(AssertUnwindSafe(criterion)).unwrap_or_else(|_| Err("panicked".to_owned()));
    let secs = start.elapsed().as_secs_f64();
    let (tag, detail, ok) = match outcome {
        Ok(detail) => ("PASS", detail, true),
        Err(detail) => ("FAIL", detail, false),
    };
    println!("{tag}  {name:<20} {detail} [{secs:.1} s]");
    ok
}

fn main() {
    let mut ledger = Ledger::default();
    // Band enforcement sweeps the estimates recorded by the two clip criteria
    // before it, so it runs third.
    let results = [
        check("loop closure", || loop_closure(&mut ledger)),
        check("variance ordering", || variance_ordering(&mut ledger)),
        check("band enforcement", || band_enforcement(&mut ledger)),
        check("spectral oracle", spectral_oracle),
        check("reduction exactness", reduction_exactness),
        check("geometry", geometry),
        check("statistics", statistics),
        check("determinism", determinism),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
