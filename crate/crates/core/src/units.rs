//! Unit boundary. Everything inside the crate is SI; oersted and mV/Oe only
//! appear when reading configuration and writing reports.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A/m per oersted, exactly 10³/(4π).
pub const AM_PER_OERSTED: f64 = 1.0e3 / (4.0 * PI);

pub fn oersted(field_am: f64) -> f64 {
    field_am / AM_PER_OERSTED
}

pub fn from_oersted(field_oe: f64) -> f64 {
    field_oe * AM_PER_OERSTED
}

/// Converts a sensitivity in mV/Oe to V per (A/m).
pub fn sensitivity_from_mv_per_oe(mv_per_oe: f64) -> f64 {
    mv_per_oe * 1e-3 / AM_PER_OERSTED
}

pub fn sensitivity_to_mv_per_oe(v_per_am: f64) -> f64 {
    v_per_am * AM_PER_OERSTED * 1e3
}

/// Rounds to `digits` significant digits (used for human-readable report
/// columns only).
pub fn round_sig(value: f64, digits: i32) -> f64 {
    if value == 0.0 || !value.is_finite() {
        return value;
    }
    let magnitude = value.abs().log10().floor() as i32;
    let scale = 10f64.powi(digits - 1 - magnitude);
    if scale.is_finite() && scale > 0.0 {
        (value * scale).round() / scale
    } else {
        value
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    /// Field strength or magnetization, A/m.
    Field,
    /// Sensor sensitivity, V per (A/m).
    Sensitivity,
    Angle,
}

impl Dimension {
    fn scale(self, unit: &str) -> Option<f64> {
        let unit = unit.trim();
        let s = match self {
            Dimension::Length => match unit {
                "m" => 1.0,
                "cm" => 1e-2,
                "mm" => 1e-3,
                "um" | "μm" | "µm" => 1e-6,
                "nm" => 1e-9,
                _ => return None,
            },
            Dimension::Field => match unit {
                "A/m" => 1.0,
                "kA/m" => 1e3,
                "MA/m" => 1e6,
                "Oe" => AM_PER_OERSTED,
                "mOe" => 1e-3 * AM_PER_OERSTED,
                "kOe" => 1e3 * AM_PER_OERSTED,
                _ => return None,
            },
            Dimension::Sensitivity => match unit {
                "V/(A/m)" | "V/A/m" | "V*m/A" => 1.0,
                "V/Oe" => 1.0 / AM_PER_OERSTED,
                "mV/Oe" => 1e-3 / AM_PER_OERSTED,
                _ => return None,
            },
            Dimension::Angle => match unit {
                "rad" => 1.0,
                "mrad" => 1e-3,
                "deg" => PI / 180.0,
                _ => return None,
            },
        };
        Some(s)
    }
}

/// A configuration value: either a bare number (already SI) or a string with
/// an explicit unit suffix such as `"5 mm"`, `"100 Oe"` or `"1.28 mV/Oe"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Si(f64),
    Text(String),
}

impl Quantity {
    pub fn si(&self, dim: Dimension) -> Result<f64> {
        match self {
            Quantity::Si(v) => finite(*v, &v.to_string()),
            Quantity::Text(s) => parse_quantity(s, dim),
        }
    }
}

impl From<f64> for Quantity {
    fn from(v: f64) -> Self {
        Quantity::Si(v)
    }
}

impl From<&str> for Quantity {
    fn from(s: &str) -> Self {
        Quantity::Text(s.to_string())
    }
}

fn finite(v: f64, text: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(format!("value {text:?} is not finite")))
    }
}

/// Parses `"<number> <unit>"` (the space is optional) into SI units.
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64> {
    let t = text.trim();
    let split = t
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit()
                || c == '.'
                || c == '+'
                || c == '-'
                || ((c == 'e' || c == 'E')
                    && t[i + 1..].starts_with(|n: char| n.is_ascii_digit() || n == '-' || n == '+')))
        })
        .map(|(i, _)| i)
        .unwrap_or(t.len());
    let (num, unit) = t.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| Error::config(format!("cannot parse number in {text:?}")))?;
    let unit = unit.trim();
    if unit.is_empty() {
        return finite(value, text);
    }
    let scale = dim
        .scale(unit)
        .ok_or_else(|| Error::config(format!("unit {unit:?} in {text:?} is not a {dim:?} unit")))?;
    // Divide by decimal submultiples so "9 mm" is exactly 0.009.
    let inv = 1.0 / scale;
    let si = if scale < 1.0 && inv == inv.round() {
        value / inv
    } else {
        value * scale
    };
    finite(si, text)
}
