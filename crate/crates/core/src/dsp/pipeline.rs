//! Segment → bandpass → z-score → detect → average, per channel, plus
//! agreement between the two channels.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::peaks::{check_period_consistency, detect_pulses};
use super::stats::{bland_altman, mean, pearson, zscore, BlandAltmanReport};
use super::template::{average_pulse, beat_windows, second_derivative, PulseTemplate, TEMPLATE_LEN};
use super::{bandpass, zscore_trace, PipelineConfig, PulseTrace};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentResult {
    pub index: usize,
    pub heart_rate_bpm: f64,
    pub r_trace: f64,
    pub r_template: f64,
    pub magnetic: PulseTemplate,
    pub vibration: PulseTemplate,
    pub magnetic_d2: PulseTemplate,
    pub vibration_d2: PulseTemplate,
    /// Per-beat normalized windows, both aligned on the magnetic peaks.
    #[serde(skip)]
    pub beat_pairs: Vec<(Vec<f64>, Vec<f64>)>,
}

/// Bland-Altman summary plus correlations, averaged over segments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    #[serde(flatten)]
    pub bland_altman: BlandAltmanReport,
    pub r_trace: f64,
    pub r_template: f64,
    pub heart_rate_bpm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub segments: Vec<SegmentResult>,
    pub report: AgreementReport,
}

fn process_segment(index: usize, mag: &PulseTrace, vib: &PulseTrace, cfg: &PipelineConfig) -> Result<SegmentResult> {
    let zm = zscore_trace(&bandpass(mag, cfg)?)?;
    let zv = zscore_trace(&bandpass(vib, cfg)?)?;
    let params = cfg.peak_params();
    let pm = detect_pulses(&zm.samples, cfg.fs, &params)?;
    let pv = detect_pulses(&zv.samples, cfg.fs, &params)?;
    let period = check_period_consistency(&pm)?;
    check_period_consistency(&pv)?;

    // Both templates use the magnetic beats so their samples line up in time.
    let magnetic = average_pulse(&zm.samples, cfg.fs, &pm)?;
    let vibration = average_pulse(&zv.samples, cfg.fs, &pm)?;
    let (wm, _, _) = beat_windows(&zm.samples, &pm, TEMPLATE_LEN)?;
    let (wv, _, _) = beat_windows(&zv.samples, &pm, TEMPLATE_LEN)?;
    let beat_pairs = wm
        .iter()
        .zip(&wv)
        .map(|(a, b)| Ok((zscore(a)?, zscore(b)?)))
        .collect::<Result<Vec<_>>>()?;

    Ok(SegmentResult {
        index,
        heart_rate_bpm: 60.0 * cfg.fs / period,
        r_trace: pearson(&zm.samples, &zv.samples)?,
        r_template: pearson(&magnetic.samples, &vibration.samples)?,
        magnetic_d2: second_derivative(&magnetic)?,
        vibration_d2: second_derivative(&vibration)?,
        magnetic,
        vibration,
        beat_pairs,
    })
}

/// Splits both traces into `segment_s` blocks (a trailing partial block is
/// dropped), processes each block independently and pools the per-beat
/// windows of all blocks for the Bland-Altman analysis.
pub fn run_pipeline(mag: &PulseTrace, vib: &PulseTrace, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    if mag.fs != vib.fs || mag.samples.len() != vib.samples.len() {
        return Err(Error::domain("channels differ in sampling rate or length"));
    }
    let seg_len = (cfg.segment_s * cfg.fs).round() as usize;
    let n_seg = mag.samples.len() / seg_len;
    if n_seg == 0 {
        return Err(Error::domain(format!(
            "recording of {:.3} s is shorter than one {} s segment",
            mag.duration_s(),
            cfg.segment_s
        )));
    }
    let slice = |t: &PulseTrace, i: usize| PulseTrace::new(t.samples[i * seg_len..(i + 1) * seg_len].to_vec(), t.fs, t.channel);
    let segments = (0..n_seg)
        .into_par_iter()
        .map(|i| {
            process_segment(i, &slice(mag, i)?, &slice(vib, i)?, cfg).map_err(|e| Error::Segment {
                segment: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let (mut m, mut v) = (Vec::new(), Vec::new());
    let mut n_pulses = 0;
    for s in &segments {
        n_pulses += s.beat_pairs.len();
        for (a, b) in &s.beat_pairs {
            m.extend_from_slice(a);
            v.extend_from_slice(b);
        }
    }
    let ba = bland_altman(&m, &v, n_pulses)?;
    let avg = |f: fn(&SegmentResult) -> f64| mean(&segments.iter().map(f).collect::<Vec<_>>());
    let report = AgreementReport {
        bland_altman: ba,
        r_trace: avg(|s| s.r_trace),
        r_template: avg(|s| s.r_template),
        heart_rate_bpm: avg(|s| s.heart_rate_bpm),
    };
    Ok(PipelineOutput { segments, report })
}
