//! Spectral lines of `<n>(t)` and conversion of eigenphase differences to Hz.

use std::f64::consts::{PI, TAU};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::propagator::TimeSeries;

pub const MIN_SERIES_LEN: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralPeak {
    pub freq_hz: f64,
    /// Fraction of the total (window-corrected) spectral power in the peak bin.
    pub power: f64,
}

/// One-sided power spectrum of a mean-subtracted, Hann-windowed series.
///
/// Bin powers are scaled so that their sum equals `sum((x w)^2) / sum(w^2)`,
/// the window-corrected variance of the series.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSpectrum {
    pub bin_width_hz: f64,
    pub power: Vec<f64>,
    pub windowed_variance: f64,
}

impl PowerSpectrum {
    pub fn freq(&self, bin: f64) -> f64 {
        bin * self.bin_width_hz
    }

    pub fn total(&self) -> f64 {
        self.power.iter().sum()
    }
}

fn hann(len: usize) -> Vec<f64> {
    // periodic Hann
    (0..len)
        .map(|k| 0.5 - 0.5 * (TAU * k as f64 / len as f64).cos())
        .collect()
}

pub fn power_spectrum(series: &TimeSeries) -> Result<PowerSpectrum> {
    let len = series.values.len();
    if len < MIN_SERIES_LEN {
        return Err(Error::SeriesTooShort {
            len,
            min: MIN_SERIES_LEN,
        });
    }
    let mean = series.values.iter().sum::<f64>() / len as f64;
    let window = hann(len);
    let mut buf: Vec<Complex<f64>> = series
        .values
        .iter()
        .zip(&window)
        .map(|(x, w)| Complex::new((x - mean) * w, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);

    let w2: f64 = window.iter().map(|w| w * w).sum();
    let windowed_variance = buf.iter().map(|c| c.norm_sqr()).sum::<f64>() / (len as f64 * w2);
    let scale = 1.0 / (len as f64 * w2);
    let half = len / 2;
    let power = (0..=half)
        .map(|k| {
            let p = buf[k].norm_sqr() * scale;
            if k == 0 || (len.is_multiple_of(2) && k == half) {
                p
            } else {
                2.0 * p
            }
        })
        .collect();
    Ok(PowerSpectrum {
        bin_width_hz: series.sample_rate_hz() / len as f64,
        power,
        windowed_variance,
    })
}

/// Strongest local maxima of the power spectrum, refined by a parabola through
/// the log power of the peak bin and its neighbours.
pub fn peak_frequencies(series: &TimeSeries, max_peaks: usize) -> Result<Vec<SpectralPeak>> {
    let spec = power_spectrum(series)?;
    let p = &spec.power;
    let total = spec.total();
    if total <= 0.0 {
        return Ok(Vec::new());
    }
    let mut bins: Vec<usize> = (1..p.len() - 1)
        .filter(|&k| p[k] > p[k - 1] && p[k] >= p[k + 1])
        .collect();
    bins.sort_by(|&a, &b| p[b].total_cmp(&p[a]));
    bins.truncate(max_peaks);
    let nyquist = 0.5 * series.sample_rate_hz();
    Ok(bins
        .into_iter()
        .map(|k| {
            let (a, b, c) = (p[k - 1].ln(), p[k].ln(), p[k + 1].ln());
            let denom = a - 2.0 * b + c;
            let offset = if denom.is_finite() && denom < 0.0 {
                (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            SpectralPeak {
                freq_hz: spec.freq(k as f64 + offset).clamp(0.0, nyquist),
                power: p[k] / total,
            }
        })
        .collect())
}

/// Folds a frequency difference into `[0, mod_freq_hz / 2]`.
pub fn fold_frequency(delta_hz: f64, mod_freq_hz: f64) -> f64 {
    let d = delta_hz.abs().rem_euclid(mod_freq_hz);
    d.min(mod_freq_hz - d)
}

/// Observable frequency of the beat between two eigenphases (radians per period).
pub fn phase_diff_to_hz(theta_i: f64, theta_j: f64, mod_freq_hz: f64) -> Result<f64> {
    if !(mod_freq_hz > 0.0) {
        return Err(invalid("mod_freq_hz", "must be > 0"));
    }
    let cycles = (theta_j - theta_i).rem_euclid(TAU) / TAU;
    Ok(fold_frequency(cycles * mod_freq_hz, mod_freq_hz))
}

/// Eigenphase difference equivalent to a frequency, for testing the inverse map.
pub fn hz_to_phase(freq_hz: f64, mod_freq_hz: f64) -> f64 {
    2.0 * PI * freq_hz / mod_freq_hz
}
