//! Two-channel pulse processing: filtering, normalization, pulse
//! averaging, agreement statistics and a synthetic recording generator.

pub mod filter;
pub mod peaks;
pub mod pipeline;
pub mod stats;
pub mod synth;
pub mod template;
pub mod trace_io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use filter::Bandpass;
pub use peaks::{detect_pulses, PeakParams};
pub use pipeline::{run_pipeline, AgreementReport, PipelineOutput, SegmentResult};
pub use stats::{bland_altman, pearson, zscore, BlandAltmanReport};
pub use synth::{synth_pulse_train, SynthConfig};
pub use template::{average_pulse, second_derivative, PulseTemplate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Magnetic,
    Vibration,
}

/// Uniformly sampled trace; volts for the magnetic channel, metres for the
/// vibrometer (or dimensionless once normalized).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseTrace {
    pub samples: Vec<f64>,
    pub fs: f64,
    pub channel: Channel,
}

impl PulseTrace {
    pub fn new(samples: Vec<f64>, fs: f64, channel: Channel) -> Result<Self> {
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(Error::config(format!("sampling rate must be positive, got {fs}")));
        }
        if samples.len() < 2 {
            return Err(Error::domain("a trace needs at least 2 samples"));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("sample {i} is not finite")));
        }
        Ok(PulseTrace { samples, fs, channel })
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }

    fn with_samples(&self, samples: Vec<f64>) -> PulseTrace {
        PulseTrace {
            samples,
            fs: self.fs,
            channel: self.channel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub segment_s: f64,
    pub band: [f64; 2],
    pub fs: f64,
    /// Order of the analog lowpass prototype.
    pub filter_order: usize,
    pub min_prominence: f64,
    pub min_peak_distance_s: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            segment_s: 30.0,
            band: [0.8, 10.0],
            fs: 240.0,
            filter_order: 4,
            min_prominence: 0.5,
            min_peak_distance_s: 0.33,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.segment_s > 0.0 && self.segment_s.is_finite()) {
            return Err(Error::config("segment_s must be positive"));
        }
        if !(self.min_prominence >= 0.0 && self.min_peak_distance_s >= 0.0) {
            return Err(Error::config("peak thresholds must be non-negative"));
        }
        self.filter().map(|_| ())
    }

    pub fn filter(&self) -> Result<Bandpass> {
        Bandpass::butterworth(self.filter_order, self.band, self.fs)
    }

    pub fn peak_params(&self) -> PeakParams {
        PeakParams {
            min_prominence: self.min_prominence,
            min_peak_distance_s: self.min_peak_distance_s,
        }
    }
}

/// Zero-phase bandpass of a trace sampled at `cfg.fs`.
pub fn bandpass(trace: &PulseTrace, cfg: &PipelineConfig) -> Result<PulseTrace> {
    if trace.fs != cfg.fs {
        return Err(Error::config(format!(
            "trace is sampled at {} Hz but the filter is designed for {} Hz",
            trace.fs, cfg.fs
        )));
    }
    Ok(trace.with_samples(cfg.filter()?.filtfilt(&trace.samples)?))
}

pub fn zscore_trace(trace: &PulseTrace) -> Result<PulseTrace> {
    Ok(trace.with_samples(zscore(&trace.samples)?))
}
