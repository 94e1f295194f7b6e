//! Reference implementations used to check the library. Each one takes the
//! slow, obvious route and shares no code with `rppg`.

#![allow(dead_code)]

use std::f64::consts::PI;

/// `|X_k|^2` for `k = 0..=n_fft/2` by direct summation over the zero-padded
/// signal.
pub fn naive_dft_power(signal: &[f64], n_fft: usize) -> Vec<f64> {
    (0..=n_fft / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0f64, 0.0f64);
            for (n, &x) in signal.iter().enumerate() {
                // Reduce the phase index first so the angle stays accurate.
                let phase = ((k * n) % n_fft) as f64 / n_fft as f64;
                let angle = -2.0 * PI * phase;
                re += x * angle.cos();
                im += x * angle.sin();
            }
            re * re + im * im
        })
        .collect()
}

/// Full two-sided energy from a one-sided power spectrum of a real signal.
pub fn two_sided_energy(one_sided: &[f64], n_fft: usize) -> f64 {
    let mut total = one_sided[0];
    for (k, &p) in one_sided.iter().enumerate().skip(1) {
        total += if k == n_fft / 2 { p } else { 2.0 * p };
    }
    total
}

/// Parabolic refinement on log power around bin `k`, as a frequency.
pub fn parabolic_peak_hz(power: &[f64], k: usize, bin_hz: f64) -> f64 {
    let (a, b, c) = (power[k - 1].ln(), power[k].ln(), power[k + 1].ln());
    let delta = 0.5 * (a - c) / (a - 2.0 * b + c);
    (k as f64 + delta) * bin_hz
}

/// Even-odd point-in-polygon at every pixel center.
pub fn brute_force_mask(vertices: &[(f64, f64)], width: u32, height: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for r in 0..height {
        for c in 0..width {
            let (px, py) = (c as f64 + 0.5, r as f64 + 0.5);
            let mut inside = false;
            let mut j = vertices.len() - 1;
            for i in 0..vertices.len() {
                let (xi, yi) = vertices[i];
                let (xj, yj) = vertices[j];
                if (yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi {
                    inside = !inside;
                }
                j = i;
            }
            if inside {
                out.push((c, r));
            }
        }
    }
    out
}

/// Mean green over an explicit pixel list, one pixel at a time.
pub fn brute_force_green_mean(pixels: &[u8], width: u32, coords: &[(u32, u32)]) -> f64 {
    let mut total: u64 = 0;
    for &(c, r) in coords {
        total += pixels[((r * width + c) * 3 + 1) as usize] as u64;
    }
    total as f64 / coords.len() as f64
}

/// Textbook two-pass mean and sample standard deviation.
pub fn two_pass(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Pearson correlation.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}
