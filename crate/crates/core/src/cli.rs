//! `rppg` command-line front end.
//!
//! Subcommands:
//!
//! * `estimate`: clip manifest + geometry sidecar to one result JSON per method
//! * `compare`: result directory to comparison table (stdout + CSV) and SVG
//! * `synth`: synthetic clip with a known heart rate
//! * `plot`: result directory to distribution SVG + points CSV
//!
//! Failures are reported on stderr as `{"code": ..., "message": ...}`.
//! `RPPG_CONFIG` may name a JSON file of defaults for `band`, `n_fft`,
//! `method`, `forehead` and `min_coverage`; flags override it.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::ingest::{load_manifest, PixelFormat};
use crate::roi::{ForeheadSpec, Method};
use crate::sidecar::read_sidecar;
use crate::signal::{extract_trace, ExtractOptions};
use crate::spectral::{estimate_hr, BandLimits, HrEstimate, DEFAULT_N_FFT};
use crate::stats::{render_comparison, render_distribution, summarize, RunSet};
use crate::synth::{self, SynthConfig};

pub const CONFIG_ENV: &str = "RPPG_CONFIG";

#[derive(Parser, Debug)]
#[command(
    name = "rppg",
    version,
    about = "Video heart-rate estimation from forehead green-channel variation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Estimate heart rate for one or more clips.
    Estimate(EstimateArgs),
    /// Compare per-method result sets.
    Compare(CompareArgs),
    /// Generate a synthetic clip with a known heart rate.
    Synth(SynthArgs),
    /// Plot the distribution of estimates per method.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Bbox,
    Landmark,
    Both,
}

impl MethodChoice {
    fn methods(self) -> &'static [Method] {
        match self {
            MethodChoice::Bbox => &[Method::Bbox],
            MethodChoice::Landmark => &[Method::Landmark],
            MethodChoice::Both => &Method::ALL,
        }
    }
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    /// Clip manifest; repeat for several clips.
    #[arg(long = "clip", required = true)]
    pub clips: Vec<PathBuf>,
    /// Geometry sidecar per clip, in the same order. Defaults to
    /// `geometry.ndjson` next to each manifest.
    #[arg(long = "coords")]
    pub coords: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<MethodChoice>,
    /// Heart-rate band in Hz as `low:high`.
    #[arg(long)]
    pub band: Option<BandLimits>,
    /// FFT length, a power of two.
    #[arg(long = "n-fft")]
    pub n_fft: Option<usize>,
    /// Forehead ROI config. Defaults to `forehead.json` next to the manifest,
    /// then to the bundled face-mesh config.
    #[arg(long)]
    pub forehead: Option<PathBuf>,
    /// Minimum fraction of frames with usable geometry.
    #[arg(long = "min-coverage")]
    pub min_coverage: Option<f64>,
    /// Also write each green trace as CSV.
    #[arg(long = "trace-csv")]
    pub trace_csv: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Directory of result JSON files.
    #[arg(long)]
    pub results: PathBuf,
    /// Output directory; defaults to the results directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    #[arg(long)]
    pub results: PathBuf,
    /// SVG path; the points CSV is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FormatChoice {
    Ppm,
    Raw,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// JSON synth config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub bpm: Option<f64>,
    #[arg(long)]
    pub fps: Option<f64>,
    /// Clip length in seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    /// Green modulation half-range, intensity units.
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Per-pixel Gaussian noise std, intensity units.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Linear green drift, units per second.
    #[arg(long)]
    pub drift: Option<f64>,
    /// Detector box jitter std, normalized units.
    #[arg(long = "bbox-jitter")]
    pub bbox_jitter: Option<f64>,
    /// Landmark jitter std, normalized units.
    #[arg(long = "landmark-jitter")]
    pub landmark_jitter: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<FormatChoice>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Defaults {
    band: Option<[f64; 2]>,
    n_fft: Option<usize>,
    method: Option<MethodChoice>,
    forehead: Option<PathBuf>,
    min_coverage: Option<f64>,
}

fn load_defaults() -> Result<Defaults> {
    let Some(path) = std::env::var_os(CONFIG_ENV) else {
        return Ok(Defaults::default());
    };
    let path = PathBuf::from(path);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path,
        message: e.to_string(),
    })
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status.
pub fn run(
    args: impl IntoIterator<Item = impl Into<OsString> + Clone>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(stdout, "{e}");
            return 0;
        }
        Err(e) => {
            report_error(stderr, "usage", &e.to_string());
            return 2;
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            report_error(stderr, e.code(), &e.to_string());
            1
        }
    }
}

fn report_error(stderr: &mut dyn Write, code: &str, message: &str) {
    let doc = serde_json::json!({ "code": code, "message": message.trim_end() });
    let _ = writeln!(stderr, "{doc}");
}

pub fn execute(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match command {
        Command::Estimate(args) => cmd_estimate(&args, &load_defaults()?),
        Command::Compare(args) => cmd_compare(&args, stdout),
        Command::Synth(args) => cmd_synth(&args, stderr),
        Command::Plot(args) => cmd_plot(&args),
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn clip_label(manifest: &Path) -> String {
    let stem = manifest
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    if stem != "manifest" && !stem.is_empty() {
        return stem;
    }
    manifest
        .canonicalize()
        .ok()
        .and_then(|p| {
            p.parent()
                .and_then(|d| d.file_name())
                .map(|n| n.to_string_lossy().into_owned())
        })
        .unwrap_or_else(|| "clip".to_owned())
}

struct ClipJob {
    label: String,
    manifest: PathBuf,
    coords: PathBuf,
}

struct ClipOutput {
    label: String,
    results: Vec<(HrEstimate, String)>,
}

fn cmd_estimate(args: &EstimateArgs, defaults: &Defaults) -> Result<()> {
    if !args.coords.is_empty() && args.coords.len() != args.clips.len() {
        return Err(Error::Usage(format!(
            "{} --coords for {} --clip",
            args.coords.len(),
            args.clips.len()
        )));
    }
    let band = match (args.band, defaults.band) {
        (Some(b), _) => b,
        (None, Some([lo, hi])) => BandLimits::new(lo, hi)?,
        (None, None) => BandLimits::default(),
    };
    let n_fft = args.n_fft.or(defaults.n_fft).unwrap_or(DEFAULT_N_FFT);
    if !n_fft.is_power_of_two() {
        return Err(Error::FftLength {
            n_fft,
            message: "must be a power of two".into(),
        });
    }
    let methods = args
        .method
        .or(defaults.method)
        .unwrap_or(MethodChoice::Both)
        .methods();
    let options = ExtractOptions {
        min_coverage: args
            .min_coverage
            .or(defaults.min_coverage)
            .unwrap_or(ExtractOptions::default().min_coverage),
        ..ExtractOptions::default()
    };
    let forehead_override = match args.forehead.as_ref().or(defaults.forehead.as_ref()) {
        Some(path) => Some(ForeheadSpec::load(path)?),
        None => None,
    };

    let jobs: Vec<ClipJob> = args
        .clips
        .iter()
        .enumerate()
        .map(|(i, manifest)| ClipJob {
            label: clip_label(manifest),
            manifest: manifest.clone(),
            coords: args.coords.get(i).cloned().unwrap_or_else(|| {
                manifest
                    .parent()
                    .unwrap_or(Path::new(""))
                    .join(synth::SIDECAR_FILE)
            }),
        })
        .collect();
    let mut seen = std::collections::BTreeSet::new();
    for job in &jobs {
        if !seen.insert(&job.label) {
            return Err(Error::Usage(format!(
                "two clips share the label `{}`",
                job.label
            )));
        }
    }

    let outputs: Vec<ClipOutput> = jobs
        .par_iter()
        .map(|job| {
            estimate_clip(
                job,
                methods,
                &band,
                n_fft,
                forehead_override.as_ref(),
                &options,
            )
            .map_err(|e| e.in_clip(&job.label))
        })
        .collect::<Result<_>>()?;

    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    for output in outputs {
        for (estimate, trace_csv) in output.results {
            let stem = format!("{}.{}", output.label, estimate.method);
            write_file(&args.out.join(format!("{stem}.json")), estimate.to_json())?;
            if args.trace_csv {
                write_file(&args.out.join(format!("{stem}.trace.csv")), trace_csv)?;
            }
        }
    }
    Ok(())
}

fn estimate_clip(
    job: &ClipJob,
    methods: &[Method],
    band: &BandLimits,
    n_fft: usize,
    forehead_override: Option<&ForeheadSpec>,
    options: &ExtractOptions,
) -> Result<ClipOutput> {
    let manifest = load_manifest(&job.manifest)?;
    let geometry = read_sidecar(&job.coords)?;
    let spec = match forehead_override {
        Some(spec) => spec.clone(),
        None => {
            let beside = manifest.base_dir.join(synth::FOREHEAD_FILE);
            if beside.exists() {
                ForeheadSpec::load(beside)?
            } else {
                ForeheadSpec::default()
            }
        }
    };
    let mut results = Vec::with_capacity(methods.len());
    for &method in methods {
        let trace = extract_trace(&manifest, &geometry, method, &spec, options)?;
        let estimate = estimate_hr(&trace, method, band, n_fft)?;
        results.push((estimate, trace.to_csv()));
    }
    Ok(ClipOutput {
        label: job.label.clone(),
        results,
    })
}

/// Reads every `<clip>.<method>.json` result in `dir`, grouped by method and
/// ordered by file name.
pub fn load_results(dir: &Path) -> Result<Vec<RunSet>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();

    let mut grouped: BTreeMap<Method, (Vec<HrEstimate>, Vec<String>)> = BTreeMap::new();
    let mut band: Option<BandLimits> = None;
    for path in paths {
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let estimate = HrEstimate::from_json(&text).map_err(|e| Error::Json {
            path: path.clone(),
            message: e.to_string(),
        })?;
        match band {
            None => band = Some(estimate.band),
            Some(b) if b != estimate.band => {
                return Err(Error::BandMismatch {
                    a_low: b.low_hz,
                    a_high: b.high_hz,
                    b_low: estimate.band.low_hz,
                    b_high: estimate.band.high_hz,
                })
            }
            Some(_) => {}
        }
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let suffix = format!(".{}", estimate.method);
        let label = name.strip_suffix(&suffix).unwrap_or(&name).to_owned();
        let entry = grouped.entry(estimate.method).or_default();
        entry.0.push(estimate);
        entry.1.push(label);
    }
    if grouped.is_empty() {
        return Err(Error::NoResults(dir.to_owned()));
    }
    grouped
        .into_iter()
        .map(|(method, (estimates, labels))| RunSet::new(method, estimates, labels))
        .collect()
}

pub const SUMMARY_FILE: &str = "summary.csv";
pub const DISTRIBUTION_FILE: &str = "distribution.svg";

fn cmd_compare(args: &CompareArgs, stdout: &mut dyn Write) -> Result<()> {
    let sets = load_results(&args.results)?;
    let columns = sets
        .iter()
        .map(|s| summarize(s).map(|st| (s.method, st)))
        .collect::<Result<Vec<_>>>()?;
    let report = render_comparison(&columns);
    let out = args.out.as_deref().unwrap_or(&args.results);
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_file(&out.join(SUMMARY_FILE), &report.csv)?;
    render_distribution(&sets, out.join(DISTRIBUTION_FILE))?;
    stdout
        .write_all(report.text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

fn cmd_plot(args: &PlotArgs) -> Result<()> {
    let sets = load_results(&args.results)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    render_distribution(&sets, &args.out)?;
    Ok(())
}

fn cmd_synth(args: &SynthArgs, stderr: &mut dyn Write) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => SynthConfig::load(path)?,
        None => SynthConfig::default(),
    };
    macro_rules! apply {
        ($($flag:ident => $field:ident),*) => {
            $(if let Some(v) = args.$flag { config.$field = v; })*
        };
    }
    apply!(
        bpm => bpm, fps => fps, duration => duration_s, width => width, height => height,
        amplitude => amplitude, noise => noise_sigma, drift => drift_per_s,
        bbox_jitter => bbox_jitter_sigma, landmark_jitter => landmark_jitter_sigma, seed => seed
    );
    if let Some(format) = args.format {
        config.pixel_format = match format {
            FormatChoice::Ppm => PixelFormat::PpmSequence,
            FormatChoice::Raw => PixelFormat::RawRgb24,
        };
    }
    let band = BandLimits::default();
    if config.bpm > band.high_hz * 60.0 {
        let _ = writeln!(
            stderr,
            "warning: target {:.3} bpm exceeds the default band's {:.0} bpm ceiling",
            config.bpm,
            band.high_hz * 60.0
        );
    } else if config.bpm < band.low_hz * 60.0 {
        let _ = writeln!(
            stderr,
            "warning: target {:.3} bpm is below the default band's {:.0} bpm floor",
            config.bpm,
            band.low_hz * 60.0
        );
    }
    synth::generate_clip(&config, &args.out)?;
    Ok(())
}
