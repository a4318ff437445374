//! First-order sensor signals for the three ways the pulse can reach the
//! magnetic sensor: the movable magnet translating, the magnet tilting, and
//! the susceptibility of the blood changing.
//!
//! Closed forms are written in the sensor-centered frame with the magnet at
//! `r = (x, y, z)` relative to the sensor, and only for the configuration
//! they were derived for: sensing axis along x and moment along z. Other
//! configurations go through [`displacement_signal_generic`] or
//! [`numeric_field_delta`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::magnetostatics::{
    assembly_field, dipole_field, FingerRegion, InducedSource, MagnetAssembly, QuadratureSpec, SensorSpec,
};
pub use crate::rotation::{rotation_matrix, RotationAngles};
use crate::vec3::Vec3;

/// Largest angle accepted by the small-angle helpers, rad.
pub const SMALL_ANGLE_LIMIT: f64 = 0.1;

const ALIGN_TOL: f64 = 1e-12;

/// Voltage change of a sensor together with the field change behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalDelta {
    pub volts: f64,
    pub field_delta: Vec3,
}

/// Laser vibrometer aimed at the movable magnet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VibrometerSpec {
    /// Laser spot relative to the rotation center, m.
    pub spot: Vec3,
    pub beam_axis: Vec3,
}

impl VibrometerSpec {
    pub fn new(spot: Vec3, beam_axis: Vec3) -> Result<Self> {
        if !spot.is_finite() {
            return Err(Error::config("vibrometer spot must be finite"));
        }
        if (beam_axis.norm() - 1.0).abs() > ALIGN_TOL {
            return Err(Error::config("vibrometer beam axis must be a unit vector"));
        }
        Ok(VibrometerSpec { spot, beam_axis })
    }
}

/// Blood susceptibility relative to water, from hematocrit and oxygenation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BloodModel {
    /// Red-cell volume fraction.
    pub hct: f64,
    /// Oxygen saturation, 0 (deoxygenated) to 1.
    pub hbo2: f64,
    /// Fully oxygenated blood minus water.
    pub dchi_oxy: f64,
    /// Deoxygenated minus oxygenated red cells.
    pub dchi_do: f64,
    pub chi_water: f64,
}

impl Default for BloodModel {
    fn default() -> Self {
        BloodModel {
            hct: 0.45,
            hbo2: 1.0,
            dchi_oxy: -2e-8,
            dchi_do: 2.7e-7,
            chi_water: 7.18e-7,
        }
    }
}

impl BloodModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.hct) || !(0.0..=1.0).contains(&self.hbo2) {
            return Err(Error::config("hematocrit and oxygenation must lie in [0, 1]"));
        }
        if !(self.dchi_oxy.is_finite() && self.dchi_do.is_finite() && self.chi_water.is_finite()) {
            return Err(Error::config("susceptibility inputs must be finite"));
        }
        Ok(())
    }
}

/// `Δχ = Hct·(Δχ_do·(1 − HbO₂) + Δχ_oxy)`.
pub fn susceptibility_delta_chi(blood: &BloodModel) -> Result<f64> {
    blood.validate()?;
    Ok(blood.hct * (blood.dchi_do * (1.0 - blood.hbo2) + blood.dchi_oxy))
}

/// `S·(ŝ·ΔH)`; every signal path ends here.
pub fn sensor_voltage_delta(sensor: &SensorSpec, dh: Vec3) -> f64 {
    sensor.sensitivity * sensor.axis.dot(dh)
}

fn signal(sensor: &SensorSpec, field_delta: Vec3) -> SignalDelta {
    SignalDelta {
        volts: sensor_voltage_delta(sensor, field_delta),
        field_delta,
    }
}

fn require_closed_form_geometry(sensor: &SensorSpec, m: Vec3) -> Result<f64> {
    let axis_ok = (sensor.axis - Vec3::X).norm() <= ALIGN_TOL;
    let moment_ok = m.x.abs() <= ALIGN_TOL * m.norm() && m.y.abs() <= ALIGN_TOL * m.norm();
    if !axis_ok || !moment_ok {
        return Err(Error::config(
            "closed-form signals need the sensing axis along x and the moment along z; \
             use displacement_signal_generic or numeric_field_delta for other geometries",
        ));
    }
    Ok(m.z)
}

fn nonzero(r: Vec3) -> Result<f64> {
    let r2 = r.norm_squared();
    if !(r2 > 0.0) || !r.is_finite() {
        return Err(Error::domain("magnet and sensor positions coincide"));
    }
    Ok(r2)
}

/// Gradient of the dipole field at offset `r` applied to `dr`.
fn dipole_field_directional(m: Vec3, r: Vec3, dr: Vec3) -> Vec3 {
    let r2 = r.norm_squared();
    let inv_r = 1.0 / r2.sqrt();
    let inv_r5 = inv_r.powi(5);
    let inv_r7 = inv_r5 * inv_r * inv_r;
    let mr = m.dot(r);
    let rdr = r.dot(dr);
    let mdr = m.dot(dr);
    (dr * (3.0 * mr * inv_r5) + r * (3.0 * mdr * inv_r5) - r * (15.0 * mr * rdr * inv_r7)
        + m * (3.0 * rdr * inv_r5))
        * (1.0 / (4.0 * PI))
}

/// x-component of the field change when a z-moment `m` at `r` (relative to
/// the sensor) moves by `dr`, to first order:
/// `(3m/4π)·r⁻⁷·[(x³+xy²−4xz²)Δz + (z³+zy²−4zx²)Δx − 5xyzΔy]`.
pub fn displacement_field_delta_x(m: f64, r: Vec3, dr: Vec3) -> Result<f64> {
    let r2 = nonzero(r)?;
    let (x, y, z) = (r.x, r.y, r.z);
    let bracket = (x * x * x + x * y * y - 4.0 * x * z * z) * dr.z
        + (z * z * z + z * y * y - 4.0 * z * x * x) * dr.x
        - 5.0 * x * y * z * dr.y;
    Ok(3.0 * m / (4.0 * PI) * bracket / r2.powi(3) / r2.sqrt())
}

/// Sensor signal for a small translation `dr` of the magnet (moment `m`,
/// position `r` relative to the sensor).
pub fn displacement_signal(sensor: &SensorSpec, m: Vec3, r: Vec3, dr: Vec3) -> Result<SignalDelta> {
    let m_z = require_closed_form_geometry(sensor, m)?;
    let dhx = displacement_field_delta_x(m_z, r, dr)?;
    let mut dh = dipole_field_directional(m, r, dr);
    dh.x = dhx;
    Ok(SignalDelta {
        volts: sensor.sensitivity * dhx,
        field_delta: dh,
    })
}

/// Exact dipole-model field difference at the sensor when the magnet moves
/// from `r` to `r + dr`, for any sensor axis and moment direction.
pub fn displacement_signal_generic(sensor: &SensorSpec, m: Vec3, r: Vec3, dr: Vec3) -> Result<SignalDelta> {
    nonzero(r)?;
    let before = dipole_field(m, -r)?;
    let after = dipole_field(m, -(r + dr))?;
    Ok(signal(sensor, after - before))
}

/// `(3mS/4π)·Δz/x⁴`, the displacement signal for a sensor far out along x.
pub fn displacement_signal_farfield(sensor: &SensorSpec, m_magnitude: f64, x: f64, dz: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain("far-field distance must be positive"));
    }
    Ok(3.0 * m_magnitude * sensor.sensitivity / (4.0 * PI) * dz / x.powi(4))
}

/// x-component of the field change when the moment changes by `dm`:
/// `(3/4π)·r⁻⁵·[(x² − r²/3)Δm_x + xyΔm_y + xzΔm_z]`.
pub fn rotation_field_delta_x(dm: Vec3, r: Vec3) -> Result<f64> {
    let r2 = nonzero(r)?;
    let (x, y, z) = (r.x, r.y, r.z);
    let bracket = (x * x - r2 / 3.0) * dm.x + x * y * dm.y + x * z * dm.z;
    Ok(3.0 / (4.0 * PI) * bracket / (r2 * r2 * r2.sqrt()))
}

/// Sensor signal when the moment turns in place by `angles`.
pub fn rotation_signal(sensor: &SensorSpec, m: Vec3, r: Vec3, angles: RotationAngles) -> Result<SignalDelta> {
    require_closed_form_geometry(sensor, m)?;
    let dm = rotation_matrix(angles) * m - m;
    let dhx = rotation_field_delta_x(dm, r)?;
    let mut dh = dipole_field(dm, r)?;
    dh.x = dhx;
    Ok(SignalDelta {
        volts: sensor.sensitivity * dhx,
        field_delta: dh,
    })
}

/// `(S·m/2π)·β/x³`, the pitch signal for a sensor far out along x.
pub fn rotation_signal_farfield(sensor: &SensorSpec, m_magnitude: f64, x: f64, beta: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain("far-field distance must be positive"));
    }
    if !(beta.abs() < SMALL_ANGLE_LIMIT) {
        return Err(Error::domain(format!(
            "pitch {beta} rad is outside the small-angle regime (< {SMALL_ANGLE_LIMIT} rad)"
        )));
    }
    Ok(sensor.sensitivity * m_magnitude * beta / (2.0 * PI * x.powi(3)))
}

/// Displacement seen by the vibrometer: the rigid translation plus the
/// motion of the laser spot under the rotation, projected on the beam.
pub fn vibrometer_reading(vib: &VibrometerSpec, angles: RotationAngles, dz_translation: f64) -> f64 {
    let l = vib.spot;
    let moved = rotation_matrix(angles) * l - l;
    vib.beam_axis.dot(moved + Vec3::new(0.0, 0.0, dz_translation))
}

/// First-order form `Δz + γ·L_y − β·L_x` for a beam along +z.
pub fn vibrometer_reading_small_angle(
    vib: &VibrometerSpec,
    angles: RotationAngles,
    dz_translation: f64,
) -> Result<f64> {
    if (vib.beam_axis - Vec3::Z).norm() > ALIGN_TOL {
        return Err(Error::config("small-angle vibrometer form needs the beam along +z"));
    }
    if !(angles.max_abs() < SMALL_ANGLE_LIMIT) {
        return Err(Error::domain("rotation outside the small-angle regime"));
    }
    Ok(dz_translation + angles.gamma * vib.spot.y - angles.beta * vib.spot.x)
}

/// Field change at `p` between two assembly configurations.
pub fn numeric_field_delta(
    before: &MagnetAssembly,
    after: &MagnetAssembly,
    p: Vec3,
    q: &QuadratureSpec,
) -> Result<Vec3> {
    if before == after {
        assembly_field(before, p, q)?;
        return Ok(Vec3::ZERO);
    }
    Ok(assembly_field(after, p, q)? - assembly_field(before, p, q)?)
}

/// Sensor signal from a susceptibility change `dchi` of the finger region.
pub fn susceptibility_signal(
    sensor: &SensorSpec,
    region: &FingerRegion,
    asm: &MagnetAssembly,
    dchi: f64,
    q: &QuadratureSpec,
) -> Result<SignalDelta> {
    let source = InducedSource::new(&region.with_chi(dchi), asm, q)?;
    Ok(signal(sensor, source.field_at(sensor.position)?))
}
