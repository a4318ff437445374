//! Run configuration from TOML or JSON.
//!
//! Lengths, fields and sensitivities accept either bare SI numbers or
//! strings with a unit suffix (`"5 mm"`, `"962.9 kA/m"`, `"1.28 mV/Oe"`,
//! `"100 Oe"`). Every section and key is optional; missing values fall back
//! to the reference device.
//!
//! ```toml
//! [magnet]
//! radius = "5 mm"
//! thickness = "5 mm"
//! ms = "962.9 kA/m"
//! surface_gap = "9 mm"
//!
//! [finger]
//! half_extents = ["10 mm", "5 mm", "4.5 mm"]
//!
//! [sensor]
//! position = ["15 mm", 0, "7 mm"]
//! axis = [1, 0, 0]
//! sensitivity = "1.28 mV/Oe"
//! dynamic_range = "100 Oe"
//!
//! [grid]
//! x_range = ["6 mm", "30 mm"]
//! z_range = ["0 mm", "16 mm"]
//! nx = 121
//! nz = 81
//!
//! [sweep]
//! x = ["10 mm", "15 mm", "20 mm", "25 mm"]
//! dz = ["0 um", "10 um", "25 um", "50 um", "100 um"]
//! beta = [0, 1e-3, 2e-3, 3.3e-3, 5e-3]
//! ```
//!
//! `[quadrature]`, `[synth]` and `[pipeline]` take plain numbers with the
//! field names of [`QuadratureSpec`], [`SynthConfig`] and [`PipelineConfig`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dsp::{PipelineConfig, SynthConfig};
use crate::error::{Error, Result};
use crate::magnetostatics::{FingerRegion, MagnetAssembly, QuadratureSpec, SensorSpec};
use crate::placement::GridSpec;
use crate::units::{Dimension, Quantity};
use crate::vec3::Vec3;

fn q(s: &str) -> Quantity {
    Quantity::from(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MagnetSection {
    pub radius: Quantity,
    pub thickness: Quantity,
    pub ms: Quantity,
    pub surface_gap: Quantity,
}

impl Default for MagnetSection {
    fn default() -> Self {
        MagnetSection {
            radius: q("5 mm"),
            thickness: q("5 mm"),
            ms: q("962.9 kA/m"),
            surface_gap: q("9 mm"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FingerSection {
    pub half_extents: [Quantity; 3],
    pub center: [Quantity; 3],
    pub chi: f64,
}

impl Default for FingerSection {
    fn default() -> Self {
        FingerSection {
            half_extents: [q("10 mm"), q("5 mm"), q("4.5 mm")],
            center: [0.0.into(), 0.0.into(), 0.0.into()],
            chi: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorSection {
    pub position: [Quantity; 3],
    pub axis: [f64; 3],
    pub sensitivity: Quantity,
    pub dynamic_range: Quantity,
}

impl Default for SensorSection {
    fn default() -> Self {
        SensorSection {
            position: [q("15 mm"), 0.0.into(), q("7 mm")],
            axis: [1.0, 0.0, 0.0],
            sensitivity: q("1.28 mV/Oe"),
            dynamic_range: q("100 Oe"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub x_range: [Quantity; 2],
    pub z_range: [Quantity; 2],
    pub nx: usize,
    pub nz: usize,
    pub y_plane: Quantity,
}

impl Default for GridSection {
    fn default() -> Self {
        let g = GridSpec::default();
        GridSection {
            x_range: [q("6 mm"), q("30 mm")],
            z_range: [q("0 mm"), q("16 mm")],
            nx: g.nx,
            nz: g.nz,
            y_plane: 0.0.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub x: Vec<Quantity>,
    pub dz: Vec<Quantity>,
    pub beta: Vec<Quantity>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            x: ["10 mm", "15 mm", "20 mm", "25 mm"].map(q).to_vec(),
            dz: ["0 um", "10 um", "25 um", "50 um", "100 um"].map(q).to_vec(),
            beta: [0.0, 1e-3, 2e-3, 3.3e-3, 5e-3].map(Quantity::from).to_vec(),
        }
    }
}

/// The file as written, before unit conversion.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub magnet: MagnetSection,
    pub finger: FingerSection,
    pub sensor: SensorSection,
    pub grid: GridSection,
    pub quadrature: QuadratureSpec,
    pub sweep: SweepSection,
    pub synth: SynthConfig,
    pub pipeline: PipelineConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub x: Vec<f64>,
    pub dz: Vec<f64>,
    pub beta: Vec<f64>,
}

/// Validated configuration in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub assembly: MagnetAssembly,
    pub finger: FingerRegion,
    pub sensor: SensorSpec,
    pub grid: GridSpec,
    pub quadrature: QuadratureSpec,
    pub sweep: SweepSpec,
    pub synth: SynthConfig,
    pub pipeline: PipelineConfig,
}

impl Default for Config {
    fn default() -> Self {
        ConfigFile::default().resolve().expect("built-in defaults are valid")
    }
}

/// Prefixes an error with the offending key.
fn at<T>(field: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| {
        let msg = match e {
            Error::Config(m) | Error::Domain(m) => m,
            other => other.to_string(),
        };
        Error::config(format!("{field}: {msg}"))
    })
}

fn vec3(field: &str, v: &[Quantity; 3], dim: Dimension) -> Result<Vec3> {
    let c = |i: usize| at(&format!("{field}[{i}]"), v[i].si(dim));
    Ok(Vec3::new(c(0)?, c(1)?, c(2)?))
}

fn list(field: &str, v: &[Quantity], dim: Dimension) -> Result<Vec<f64>> {
    v.iter()
        .enumerate()
        .map(|(i, x)| at(&format!("{field}[{i}]"), x.si(dim)))
        .collect()
}

impl ConfigFile {
    pub fn resolve(&self) -> Result<Config> {
        use Dimension::*;
        let m = &self.magnet;
        let assembly = at(
            "magnet",
            MagnetAssembly::symmetric(
                at("magnet.radius", m.radius.si(Length))?,
                at("magnet.thickness", m.thickness.si(Length))?,
                at("magnet.ms", m.ms.si(Field))?,
                at("magnet.surface_gap", m.surface_gap.si(Length))?,
            ),
        )?;
        let f = &self.finger;
        let finger = at(
            "finger",
            FingerRegion::new(
                vec3("finger.half_extents", &f.half_extents, Length)?,
                vec3("finger.center", &f.center, Length)?,
                f.chi,
            ),
        )?;
        let s = &self.sensor;
        let axis = Vec3::from(s.axis)
            .normalized()
            .ok_or_else(|| Error::config("sensor.axis: must be a non-zero vector"))?;
        let sensor = at(
            "sensor",
            SensorSpec::new(
                vec3("sensor.position", &s.position, Length)?,
                axis,
                at("sensor.sensitivity", s.sensitivity.si(Sensitivity))?,
                at("sensor.dynamic_range", s.dynamic_range.si(Field))?,
            ),
        )?;
        if assembly.contains(sensor.position) {
            return Err(Error::config("sensor.position: inside a magnet"));
        }
        let g = &self.grid;
        let grid = GridSpec {
            x_range: [at("grid.x_range[0]", g.x_range[0].si(Length))?, at("grid.x_range[1]", g.x_range[1].si(Length))?],
            z_range: [at("grid.z_range[0]", g.z_range[0].si(Length))?, at("grid.z_range[1]", g.z_range[1].si(Length))?],
            nx: g.nx,
            nz: g.nz,
            y_plane: at("grid.y_plane", g.y_plane.si(Length))?,
        };
        at("grid", grid.validate())?;
        at("quadrature", self.quadrature.validate())?;
        let sweep = SweepSpec {
            x: list("sweep.x", &self.sweep.x, Length)?,
            dz: list("sweep.dz", &self.sweep.dz, Length)?,
            beta: list("sweep.beta", &self.sweep.beta, Angle)?,
        };
        if let Some(x) = sweep.x.iter().find(|&&x| x < assembly.top.radius) {
            return Err(Error::config(format!(
                "sweep.x: {x} m is inside the magnet radius {} m",
                assembly.top.radius
            )));
        }
        at("synth", self.synth.validate())?;
        at("pipeline", self.pipeline.validate())?;
        Ok(Config {
            assembly,
            finger,
            sensor,
            grid,
            quadrature: self.quadrature,
            sweep,
            synth: self.synth.clone(),
            pipeline: self.pipeline.clone(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigFormat {
    Toml,
    Json,
}

impl ConfigFormat {
    pub fn from_path(path: &Path) -> ConfigFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => ConfigFormat::Json,
            _ => ConfigFormat::Toml,
        }
    }
}

/// Parses config text; syntax errors carry line and column.
pub fn parse_config(text: &str, format: ConfigFormat) -> std::result::Result<ConfigFile, String> {
    match format {
        ConfigFormat::Toml => toml::from_str(text).map_err(|e| e.to_string()),
        ConfigFormat::Json => serde_json::from_str(text).map_err(|e| e.to_string()),
    }
}

pub fn load_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse = |message: String| Error::Parse {
        path: PathBuf::from(path),
        message,
    };
    let file = parse_config(&text, ConfigFormat::from_path(path)).map_err(parse)?;
    file.resolve().map_err(|e| parse(e.to_string()))
}
