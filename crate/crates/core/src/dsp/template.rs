//! Beat windows, the averaged pulse and its second derivative.

use serde::{Deserialize, Serialize};

use super::peaks::{intervals, median};
use super::stats::zscore;
use crate::error::{Error, Result};

pub const TEMPLATE_LEN: usize = 240;
/// Window around each peak, as fractions of the beat period.
pub const WINDOW: [f64; 2] = [-0.3, 0.7];
pub const MIN_PULSES: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseTemplate {
    pub samples: Vec<f64>,
    pub n_pulses: usize,
    pub period_s: f64,
}

impl PulseTemplate {
    pub fn dt(&self) -> f64 {
        self.period_s / self.samples.len() as f64
    }
}

/// Linear interpolation at fractional sample positions `start + k·step`.
fn resample(x: &[f64], start: f64, step: f64, len: usize) -> Vec<f64> {
    (0..len)
        .map(|k| {
            let t = start + k as f64 * step;
            let i = (t.floor() as usize).min(x.len() - 2);
            let f = t - i as f64;
            x[i] * (1.0 - f) + x[i + 1] * f
        })
        .collect()
}

/// Per-beat windows (−0.3 T .. +0.7 T around each peak, T = median
/// interval) resampled to `len` points. Windows running off either end of
/// the trace are dropped. Returns the windows, their peak indices and T in
/// samples.
pub fn beat_windows(x: &[f64], peaks: &[usize], len: usize) -> Result<(Vec<Vec<f64>>, Vec<usize>, f64)> {
    if peaks.len() < 2 {
        return Err(Error::domain("need at least 2 peaks to window beats"));
    }
    let period = median(&intervals(peaks));
    let step = period / len as f64;
    let last = (x.len() - 1) as f64;
    let mut windows = Vec::new();
    let mut used = Vec::new();
    for &p in peaks {
        let start = p as f64 + WINDOW[0] * period;
        let end = start + (len - 1) as f64 * step;
        if start < 0.0 || end > last {
            continue;
        }
        windows.push(resample(x, start, step, len));
        used.push(p);
    }
    Ok((windows, used, period))
}

/// Mean of all complete beat windows, z-scored.
pub fn average_pulse(x: &[f64], fs: f64, peaks: &[usize]) -> Result<PulseTemplate> {
    if peaks.len() < MIN_PULSES {
        return Err(Error::domain(format!(
            "{} peaks found; pulse averaging needs at least {MIN_PULSES}",
            peaks.len()
        )));
    }
    let (windows, _, period) = beat_windows(x, peaks, TEMPLATE_LEN)?;
    if windows.len() < MIN_PULSES {
        return Err(Error::domain(format!(
            "only {} complete beat windows; pulse averaging needs at least {MIN_PULSES}",
            windows.len()
        )));
    }
    let mut avg = vec![0.0; TEMPLATE_LEN];
    for w in &windows {
        for (a, v) in avg.iter_mut().zip(w) {
            *a += v;
        }
    }
    let n = windows.len() as f64;
    avg.iter_mut().for_each(|a| *a /= n);
    Ok(PulseTemplate {
        samples: zscore(&avg)?,
        n_pulses: windows.len(),
        period_s: period / fs,
    })
}

/// Second differences divided by dt²; the end points reuse the nearest
/// interior stencil (exact for quadratics).
pub fn second_difference(x: &[f64], dt: f64) -> Vec<f64> {
    let n = x.len();
    let inv = 1.0 / (dt * dt);
    let d2 = |i: usize| (x[i + 1] - 2.0 * x[i] + x[i - 1]) * inv;
    (0..n).map(|i| d2(i.clamp(1, n - 2))).collect()
}

/// Acceleration waveform of a template, z-scored.
pub fn second_derivative(t: &PulseTemplate) -> Result<PulseTemplate> {
    if t.samples.len() < 5 {
        return Err(Error::domain("second derivative needs a template of at least 5 points"));
    }
    Ok(PulseTemplate {
        samples: zscore(&second_difference(&t.samples, t.dt()))?,
        n_pulses: t.n_pulses,
        period_s: t.period_s,
    })
}
