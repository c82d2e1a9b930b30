//! Windowed Fourier analysis of trajectories.

use std::f64::consts::PI;

use penning_core::dynamics::Trajectory;
use penning_core::units::Axis;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{AppError, AppResult};

pub const MIN_SAMPLES: usize = 1024;

/// Peaks below this fraction of the strongest one are dropped.
pub const PEAK_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPeak {
    /// Hz
    pub frequency: f64,
    /// Sinusoid amplitude in the units of the signal.
    pub amplitude: f64,
    /// Hz
    pub bin_width: f64,
}

/// One-sided Hann-windowed spectrum of a mean-free signal.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// |X_k| for k = 0..=N/2.
    pub magnitude: Vec<f64>,
    pub bin_width: f64,
    /// Mean square of the mean-free signal.
    pub variance: f64,
    /// The same quantity from the windowed transform, `Σ|X|² / (N Σw²)`.
    pub spectral_power: f64,
    window_sum: f64,
}

fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|k| 0.5 * (1.0 - (2.0 * PI * k as f64 / n as f64).cos())).collect()
}

impl Spectrum {
    pub fn new(signal: &[f64], dt: f64) -> AppResult<Self> {
        let n = signal.len();
        if n < MIN_SAMPLES {
            return Err(AppError::TooShort { got: n, need: MIN_SAMPLES });
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(AppError::config("sample interval must be positive"));
        }
        let mean = signal.iter().sum::<f64>() / n as f64;
        let w = hann(n);
        let mut buf: Vec<Complex<f64>> = signal
            .iter()
            .zip(&w)
            .map(|(x, w)| Complex::new((x - mean) * w, 0.0))
            .collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let variance = signal.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let w2: f64 = w.iter().map(|w| w * w).sum();
        let spectral_power = buf.iter().map(|c| c.norm_sqr()).sum::<f64>() / (n as f64 * w2);
        Ok(Spectrum {
            magnitude: buf[..=n / 2].iter().map(|c| c.norm()).collect(),
            bin_width: 1.0 / (n as f64 * dt),
            variance,
            spectral_power,
            window_sum: w.iter().sum(),
        })
    }

    /// Local maxima with log-parabolic interpolation, strongest first.
    pub fn peaks(&self) -> Vec<SpectrumPeak> {
        let m = &self.magnitude;
        let top = m.iter().skip(1).copied().fold(0.0, f64::max);
        if top <= 0.0 {
            return Vec::new();
        }
        let mut out = Vec::new();
        for k in 1..m.len() - 1 {
            if !(m[k] > m[k - 1] && m[k] >= m[k + 1] && m[k] >= PEAK_FLOOR * top) {
                continue;
            }
            let (a, b, c) = (m[k - 1].max(1e-300).ln(), m[k].ln(), m[k + 1].max(1e-300).ln());
            let den = a - 2.0 * b + c;
            let delta = if den < 0.0 { (0.5 * (a - c) / den).clamp(-0.5, 0.5) } else { 0.0 };
            let log_peak = b - 0.25 * (a - c) * delta;
            out.push(SpectrumPeak {
                frequency: (k as f64 + delta) * self.bin_width,
                amplitude: 2.0 * log_peak.exp() / self.window_sum,
                bin_width: self.bin_width,
            });
        }
        out.sort_by(|x, y| y.amplitude.total_cmp(&x.amplitude));
        out
    }
}

/// Recorded coordinate along `axis`, trimmed to the uniformly spaced prefix.
pub fn axis_signal(traj: &Trajectory, axis: Axis) -> AppResult<(Vec<f64>, f64)> {
    let dt = traj.sample_interval;
    let s = &traj.samples;
    let mut n = s.len();
    for k in 1..s.len() {
        if ((s[k].t - s[k - 1].t) - dt).abs() > 1e-6 * dt {
            n = k;
            break;
        }
    }
    Ok((s[..n].iter().map(|st| st.r.component(axis)).collect(), dt))
}

/// Peaks of the motion along `axis`, strongest first.
pub fn extract_frequencies(traj: &Trajectory, axis: Axis) -> AppResult<Vec<SpectrumPeak>> {
    let (x, dt) = axis_signal(traj, axis)?;
    Ok(Spectrum::new(&x, dt)?.peaks())
}
