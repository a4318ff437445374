//! CSV traces: `t,value` for one channel, `t,magnetic,vibration` for two.

use std::path::Path;

use super::{Channel, PulseTrace};
use crate::error::{Error, Result};
use crate::io::write_atomic;

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Sampling rate implied by a uniformly spaced time column.
fn sampling_rate(path: &Path, t: &[f64]) -> Result<f64> {
    if t.len() < 2 {
        return Err(parse_err(path, "need at least 2 samples"));
    }
    let span = t[t.len() - 1] - t[0];
    let dt = span / (t.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(parse_err(path, "time column must increase"));
    }
    for (i, w) in t.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt {
            return Err(parse_err(path, format!("non-uniform sampling at row {}", i + 3)));
        }
    }
    Ok(1.0 / dt)
}

fn read_columns(path: &Path, wanted: &[&str]) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = r.headers().map_err(|e| parse_err(path, e.to_string()))?.clone();
    let idx: Vec<usize> = wanted
        .iter()
        .map(|w| {
            headers
                .iter()
                .position(|h| h == *w)
                .ok_or_else(|| parse_err(path, format!("missing column {w:?}")))
        })
        .collect::<Result<_>>()?;
    let mut cols = vec![Vec::new(); wanted.len()];
    for (row, rec) in r.records().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| parse_err(path, format!("line {line}: {e}")))?;
        for (c, &i) in idx.iter().enumerate() {
            let cell = rec.get(i).unwrap_or("");
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(path, format!("line {line}: column {:?} is not a number: {cell:?}", wanted[c])))?;
            if !v.is_finite() {
                return Err(parse_err(path, format!("line {line}: non-finite value")));
            }
            cols[c].push(v);
        }
    }
    Ok(cols)
}

pub fn read_two_channel_csv(path: &Path) -> Result<(PulseTrace, PulseTrace)> {
    let cols = read_columns(path, &["t", "magnetic", "vibration"])?;
    let fs = sampling_rate(path, &cols[0])?;
    let mut it = cols.into_iter().skip(1);
    let mag = it.next().unwrap_or_default();
    let vib = it.next().unwrap_or_default();
    Ok((
        PulseTrace::new(mag, fs, Channel::Magnetic)?,
        PulseTrace::new(vib, fs, Channel::Vibration)?,
    ))
}

pub fn read_trace_csv(path: &Path, channel: Channel) -> Result<PulseTrace> {
    let cols = read_columns(path, &["t", "value"])?;
    let fs = sampling_rate(path, &cols[0])?;
    PulseTrace::new(cols.into_iter().nth(1).unwrap_or_default(), fs, channel)
}

pub fn two_channel_csv(mag: &PulseTrace, vib: &PulseTrace) -> Result<String> {
    if mag.samples.len() != vib.samples.len() || mag.fs != vib.fs {
        return Err(Error::domain("channels differ in length or sampling rate"));
    }
    let mut out = String::with_capacity(mag.samples.len() * 48);
    out.push_str("t,magnetic,vibration\n");
    for (i, (m, v)) in mag.samples.iter().zip(&vib.samples).enumerate() {
        out.push_str(&format!("{},{m},{v}\n", i as f64 / mag.fs));
    }
    Ok(out)
}

pub fn write_two_channel_csv(path: &Path, mag: &PulseTrace, vib: &PulseTrace) -> Result<()> {
    write_atomic(path, two_channel_csv(mag, vib)?.as_bytes())
}

pub fn write_trace_csv(path: &Path, trace: &PulseTrace) -> Result<()> {
    let mut out = String::from("t,value\n");
    for (i, v) in trace.samples.iter().enumerate() {
        out.push_str(&format!("{},{v}\n", i as f64 / trace.fs));
    }
    write_atomic(path, out.as_bytes())
}
