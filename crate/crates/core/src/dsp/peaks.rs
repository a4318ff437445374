//! Beat detection on filtered, z-scored traces.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakParams {
    /// Minimum prominence in units of the trace's SD.
    pub min_prominence: f64,
    /// Minimum spacing between accepted peaks, s.
    pub min_peak_distance_s: f64,
}

impl Default for PeakParams {
    fn default() -> Self {
        PeakParams {
            min_prominence: 0.5,
            min_peak_distance_s: 0.33,
        }
    }
}

/// Strict local maxima; a flat top counts once, at its middle sample.
fn local_maxima(x: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < x.len() {
        if x[i - 1] < x[i] {
            let mut j = i;
            while j + 1 < x.len() && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 < x.len() && x[j + 1] < x[i] {
                out.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Height above the higher of the two bases reached before a taller sample
/// (or the trace end) on each side.
fn prominence(x: &[f64], p: usize) -> f64 {
    let h = x[p];
    let mut left = h;
    for &v in x[..p].iter().rev() {
        if v > h {
            break;
        }
        left = left.min(v);
    }
    let mut right = h;
    for &v in &x[p + 1..] {
        if v > h {
            break;
        }
        right = right.min(v);
    }
    h - left.max(right)
}

/// Peak indices, strictly increasing. Prominence is measured in units of
/// the trace's own SD, so scaling the input does not change the result.
/// When two candidates are closer than the minimum distance, the taller wins.
pub fn detect_pulses(x: &[f64], fs: f64, params: &PeakParams) -> Result<Vec<usize>> {
    let sd = super::stats::std_pop(x);
    if !(sd > 0.0) {
        return Err(Error::domain("peak detection on a constant trace"));
    }
    let thresh = params.min_prominence * sd;
    let candidates: Vec<usize> = local_maxima(x)
        .into_iter()
        .filter(|&p| prominence(x, p) >= thresh)
        .collect();

    let dist = (params.min_peak_distance_s * fs).ceil() as usize;
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| x[candidates[b]].total_cmp(&x[candidates[a]]).then(a.cmp(&b)));
    let mut keep = vec![true; candidates.len()];
    for &k in &order {
        if !keep[k] {
            continue;
        }
        let p = candidates[k];
        for j in (0..k).rev() {
            if p - candidates[j] >= dist {
                break;
            }
            keep[j] = false;
        }
        for j in k + 1..candidates.len() {
            if candidates[j] - p >= dist {
                break;
            }
            keep[j] = false;
        }
    }
    let peaks: Vec<usize> = candidates
        .into_iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(p))
        .collect();
    if peaks.len() < 2 {
        return Err(Error::domain(format!(
            "found {} pulse peak(s); at least 2 are needed to establish a period",
            peaks.len()
        )));
    }
    Ok(peaks)
}

pub fn intervals(peaks: &[usize]) -> Vec<f64> {
    peaks.windows(2).map(|w| (w[1] - w[0]) as f64).collect()
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Maximum allowed coefficient of variation of the inter-peak intervals.
pub const MAX_INTERVAL_CV: f64 = 0.2;

/// Rejects peak trains whose spacing is too irregular to be a heartbeat.
pub fn check_period_consistency(peaks: &[usize]) -> Result<f64> {
    let iv = intervals(peaks);
    if iv.is_empty() {
        return Err(Error::domain("need at least 2 peaks for a period"));
    }
    let cv = super::stats::std_pop(&iv) / super::stats::mean(&iv);
    if cv > MAX_INTERVAL_CV {
        return Err(Error::domain(format!(
            "inter-peak intervals are irregular (CV {cv:.2} > {MAX_INTERVAL_CV})"
        )));
    }
    Ok(median(&iv))
}
