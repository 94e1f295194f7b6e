//! Per-method aggregation of clip estimates and the comparison reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::roi::Method;
use crate::spectral::HrEstimate;

#[derive(Clone, Debug, PartialEq)]
pub struct RunSet {
    pub method: Method,
    pub estimates: Vec<HrEstimate>,
    pub labels: Vec<String>,
}

impl RunSet {
    pub fn new(method: Method, estimates: Vec<HrEstimate>, labels: Vec<String>) -> Result<Self> {
        if estimates.is_empty() {
            return Err(Error::EmptyRunSet);
        }
        if labels.len() != estimates.len() {
            return Err(Error::RunSet(format!(
                "{} labels for {} estimates",
                labels.len(),
                estimates.len()
            )));
        }
        if let Some(e) = estimates.iter().find(|e| e.method != method) {
            return Err(Error::RunSet(format!(
                "{} estimate in a {method} set",
                e.method
            )));
        }
        let mut sorted: Vec<&String> = labels.iter().collect();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::RunSet(format!("duplicate label `{}`", w[0])));
        }
        Ok(RunSet {
            method,
            estimates,
            labels,
        })
    }

    pub fn bpms(&self) -> Vec<f64> {
        self.estimates.iter().map(|e| e.bpm).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunStats {
    pub n: usize,
    pub mean_bpm: f64,
    /// Sample standard deviation (n - 1 denominator), 0 for a single run.
    pub stdev_bpm: f64,
    pub min_bpm: f64,
    pub max_bpm: f64,
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            carry += (sum - t) + x;
        } else {
            carry += (x - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Summary statistics over raw bpm values.
pub fn summarize_values(values: &[f64]) -> Result<RunStats> {
    if values.is_empty() {
        return Err(Error::EmptyRunSet);
    }
    let n = values.len();
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let mean = compensated_sum(values.iter().copied()) / n as f64;
    let stdev = if n > 1 {
        let ss = compensated_sum(values.iter().map(|&x| (x - mean) * (x - mean)));
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(RunStats {
        n,
        // Rounding can push the mean a hair outside the extremes.
        mean_bpm: mean.clamp(min, max),
        stdev_bpm: stdev,
        min_bpm: min,
        max_bpm: max,
    })
}

pub fn summarize(set: &RunSet) -> Result<RunStats> {
    summarize_values(&set.bpms())
}

/// Rendered comparison table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub text: String,
    pub csv: String,
}

const STDEV_NOTE: &str = "stdev uses the sample (n-1) denominator";

type Cell = fn(&RunStats) -> String;

/// Side-by-side table of per-method statistics, one column per entry.
pub fn render_comparison(columns: &[(Method, RunStats)]) -> Report {
    let rows: [(&str, Cell); 5] = [
        ("n", |s| s.n.to_string()),
        ("mean", |s| format!("{:.3}", s.mean_bpm)),
        ("stdev", |s| format!("{:.3}", s.stdev_bpm)),
        ("min", |s| format!("{:.3}", s.min_bpm)),
        ("max", |s| format!("{:.3}", s.max_bpm)),
    ];

    let mut csv = String::from("statistic");
    for (method, _) in columns {
        write!(csv, ",{method}").unwrap();
    }
    csv.push('\n');
    for (name, cell) in &rows {
        csv.push_str(name);
        for (_, stats) in columns {
            write!(csv, ",{}", cell(stats)).unwrap();
        }
        csv.push('\n');
    }

    let headers: Vec<String> = columns
        .iter()
        .map(|(m, s)| format!("{} (n={})", m.title(), s.n))
        .collect();
    let label_width = "Statistic".len();
    let widths: Vec<usize> = headers
        .iter()
        .zip(columns)
        .map(|(h, (_, s))| {
            rows.iter()
                .map(|(_, cell)| cell(s).len())
                .chain([h.len()])
                .max()
                .unwrap_or(0)
        })
        .collect();

    let mut text = format!("{:<label_width$}", "Statistic");
    for (h, w) in headers.iter().zip(&widths) {
        write!(text, "  {h:>w$}").unwrap();
    }
    text.push('\n');
    for (name, cell) in &rows {
        write!(text, "{name:<label_width$}").unwrap();
        for ((_, stats), w) in columns.iter().zip(&widths) {
            write!(text, "  {:>w$}", cell(stats)).unwrap();
        }
        text.push('\n');
    }
    writeln!(text, "({STDEV_NOTE})").unwrap();
    Report { text, csv }
}

/// Lower hinge, median, upper hinge. Halves include the median when the
/// count is odd.
pub fn quartiles(values: &[f64]) -> Option<(f64, f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    fn median(s: &[f64]) -> f64 {
        let n = s.len();
        if n % 2 == 1 {
            s[n / 2]
        } else {
            (s[n / 2 - 1] + s[n / 2]) / 2.0
        }
    }
    let n = v.len();
    let half = n.div_ceil(2);
    Some((median(&v[..half]), median(&v), median(&v[n - half..])))
}

pub fn points_csv(sets: &[RunSet]) -> String {
    let mut out = String::from("method,clip,bpm\n");
    for set in sets {
        for (label, e) in set.labels.iter().zip(&set.estimates) {
            writeln!(out, "{},{label},{:.3}", set.method, e.bpm).unwrap();
        }
    }
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

const SVG_WIDTH: f64 = 160.0;
const SVG_HEIGHT: f64 = 360.0;
const PLOT_TOP: f64 = 40.0;
const PLOT_BOTTOM: f64 = 320.0;
const AXIS_X: f64 = 60.0;

/// Strip plot with a quartile box per method.
pub fn distribution_svg(sets: &[RunSet]) -> Result<String> {
    if sets.is_empty() || sets.iter().any(|s| s.estimates.is_empty()) {
        return Err(Error::EmptyRunSet);
    }
    let all: Vec<f64> = sets.iter().flat_map(|s| s.bpms()).collect();
    let mut lo = all.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    lo = (lo / 10.0).floor() * 10.0;
    hi = (hi / 10.0).ceil() * 10.0;
    if hi <= lo {
        hi = lo + 10.0;
    }
    let y = |bpm: f64| PLOT_BOTTOM - (bpm - lo) / (hi - lo) * (PLOT_BOTTOM - PLOT_TOP);
    let width = AXIS_X + SVG_WIDTH * sets.len() as f64 + 20.0;

    let mut svg = String::new();
    writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{SVG_HEIGHT:.0}\" viewBox=\"0 0 {width:.0} {SVG_HEIGHT:.0}\">"
    )
    .unwrap();
    writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">Distribution of heart rate estimates</text>",
        width / 2.0
    )
    .unwrap();
    writeln!(
        svg,
        "<line class=\"axis\" x1=\"{AXIS_X}\" y1=\"{PLOT_TOP}\" x2=\"{AXIS_X}\" y2=\"{PLOT_BOTTOM}\" stroke=\"black\"/>"
    )
    .unwrap();
    let mut tick = lo;
    while tick <= hi + 1e-9 {
        writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">{tick:.0}</text>",
            AXIS_X - 6.0,
            y(tick) + 3.0
        )
        .unwrap();
        tick += 10.0;
    }
    writeln!(
        svg,
        "<text x=\"14\" y=\"{:.1}\" transform=\"rotate(-90 14 {:.1})\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">bpm</text>",
        (PLOT_TOP + PLOT_BOTTOM) / 2.0,
        (PLOT_TOP + PLOT_BOTTOM) / 2.0
    )
    .unwrap();

    for (i, set) in sets.iter().enumerate() {
        let cx = AXIS_X + SVG_WIDTH * (i as f64 + 0.5);
        let bpms = set.bpms();
        let (q1, median, q3) = quartiles(&bpms).expect("non-empty");
        writeln!(svg, "<g class=\"method\" data-method=\"{}\">", set.method).unwrap();
        if q3 > q1 {
            writeln!(
                svg,
                "<rect class=\"box\" x=\"{:.2}\" y=\"{:.2}\" width=\"60\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>",
                cx - 30.0,
                y(q3),
                y(q1) - y(q3)
            )
            .unwrap();
        } else {
            writeln!(
                svg,
                "<line class=\"box\" x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>",
                cx - 30.0,
                y(q1),
                cx + 30.0,
                y(q1)
            )
            .unwrap();
        }
        writeln!(
            svg,
            "<line class=\"median\" x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\" stroke-width=\"2\"/>",
            cx - 30.0,
            y(median),
            cx + 30.0,
            y(median)
        )
        .unwrap();
        for (j, (label, bpm)) in set.labels.iter().zip(&bpms).enumerate() {
            // Deterministic horizontal spread so coincident points stay visible.
            let dx = ((j % 7) as f64 - 3.0) * 4.0;
            writeln!(
                svg,
                "<circle class=\"mark\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"steelblue\" fill-opacity=\"0.7\"><title>{}: {bpm:.3}</title></circle>",
                cx + dx,
                y(*bpm),
                xml_escape(label)
            )
            .unwrap();
        }
        writeln!(
            svg,
            "<text x=\"{cx:.2}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{} (n={})</text>",
            PLOT_BOTTOM + 20.0,
            set.method.title(),
            bpms.len()
        )
        .unwrap();
        svg.push_str("</g>\n");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Writes the SVG to `out` and the points CSV next to it with a `.csv`
/// extension. Returns the CSV path.
pub fn render_distribution(sets: &[RunSet], out: impl AsRef<Path>) -> Result<PathBuf> {
    let out = out.as_ref();
    let svg = distribution_svg(sets)?;
    fs::write(out, svg).map_err(|e| Error::io(out, e))?;
    let csv_path = out.with_extension("csv");
    fs::write(&csv_path, points_csv(sets)).map_err(|e| Error::io(&csv_path, e))?;
    Ok(csv_path)
}
