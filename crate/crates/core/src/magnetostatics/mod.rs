//! Magnetostatic fields of point dipoles, axially magnetized cylinders, the
//! two-magnet assembly and the weak field induced in a susceptible finger.
//!
//! World frame: origin midway between the two magnet body centers, z along
//! the common magnet axis, x along the finger. All quantities are SI.

mod assembly;
mod cylinder;
mod dipole;
mod susceptibility;

pub use assembly::{assembly_field, MagnetAssembly};
pub use cylinder::{cylinder_field, CylindricalMagnet, QuadratureSpec};
pub use dipole::{dipole_field, dipole_moment};
pub use susceptibility::{induced_susceptibility_field, FingerRegion, InducedSource};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units;
use crate::vec3::Vec3;

/// Single-axis magnetic field sensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    pub position: Vec3,
    pub axis: Vec3,
    /// V per (A/m).
    pub sensitivity: f64,
    /// A/m; fields with `|axis·H|` at or above this saturate the sensor.
    pub dynamic_range: f64,
}

impl SensorSpec {
    pub fn new(position: Vec3, axis: Vec3, sensitivity: f64, dynamic_range: f64) -> Result<Self> {
        if !position.is_finite() {
            return Err(Error::config("sensor position must be finite"));
        }
        if !axis.is_finite() || (axis.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::config("sensor axis must be a unit vector"));
        }
        if !(sensitivity > 0.0 && sensitivity.is_finite()) {
            return Err(Error::config("sensor sensitivity must be positive"));
        }
        if !(dynamic_range > 0.0 && dynamic_range.is_finite()) {
            return Err(Error::config("sensor dynamic range must be positive"));
        }
        Ok(SensorSpec {
            position,
            axis,
            sensitivity,
            dynamic_range,
        })
    }

    /// x-axis TMR sensor with 1.28 mV/Oe sensitivity and a 100 Oe range.
    pub fn reference(position: Vec3) -> Self {
        SensorSpec {
            position,
            axis: Vec3::X,
            sensitivity: units::sensitivity_from_mv_per_oe(1.28),
            dynamic_range: units::from_oersted(100.0),
        }
    }

    /// Point expressed in the sensor-centered frame (same axes, origin at
    /// the sensor).
    pub fn to_sensor_frame(&self, world: Vec3) -> Vec3 {
        world - self.position
    }

    pub fn to_world_frame(&self, local: Vec3) -> Vec3 {
        local + self.position
    }

    pub fn in_range(&self, field: Vec3) -> bool {
        self.axis.dot(field).abs() < self.dynamic_range
    }
}
