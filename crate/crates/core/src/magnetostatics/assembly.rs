use serde::{Deserialize, Serialize};

use super::cylinder::{cylinder_field_outside, CylindricalMagnet, QuadratureSpec};
use crate::error::{Error, Result};
use crate::rotation::{rotation_matrix, RotationAngles};
use crate::vec3::Vec3;

/// A fixed bottom magnet and a movable top magnet on either side of the
/// fingertip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnetAssembly {
    pub bottom: CylindricalMagnet,
    pub top: CylindricalMagnet,
    /// Distance between the facing surfaces in the canonical configuration.
    pub surface_gap: f64,
}

impl MagnetAssembly {
    /// Two identical +z magnets centered at `z = ±(gap + T)/2`.
    pub fn symmetric(radius: f64, thickness: f64, ms: f64, surface_gap: f64) -> Result<Self> {
        if !(surface_gap > 0.0 && surface_gap.is_finite()) {
            return Err(Error::config("surface gap must be positive"));
        }
        let half = 0.5 * (surface_gap + thickness);
        Ok(MagnetAssembly {
            bottom: CylindricalMagnet::new(radius, thickness, ms, Vec3::new(0.0, 0.0, -half), Vec3::Z)?,
            top: CylindricalMagnet::new(radius, thickness, ms, Vec3::new(0.0, 0.0, half), Vec3::Z)?,
            surface_gap,
        })
    }

    /// Reference geometry: R = T = 5 mm, Ms = 962.9 kA/m, 9 mm gap
    /// (14 mm between body centers).
    pub fn reference() -> Self {
        MagnetAssembly::symmetric(5e-3, 5e-3, 962.9e3, 9e-3).expect("reference geometry is valid")
    }

    pub fn body_center_distance(&self) -> f64 {
        (self.top.center - self.bottom.center).norm()
    }

    pub fn magnets(&self) -> [&CylindricalMagnet; 2] {
        [&self.bottom, &self.top]
    }

    pub fn contains(&self, p: Vec3) -> bool {
        self.bottom.contains(p) || self.top.contains(p)
    }

    /// Copy with the top magnet translated by `dr`.
    pub fn with_top_shifted(&self, dr: Vec3) -> Self {
        let mut out = *self;
        out.top.center += dr;
        out
    }

    /// Copy with the top magnet rotated about the center of its bottom
    /// surface.
    pub fn with_top_rotated(&self, angles: RotationAngles) -> Self {
        let r = rotation_matrix(angles);
        let pivot = self.top.bottom_face_center();
        let mut out = *self;
        out.top.center = pivot + r * (self.top.center - pivot);
        out.top.axis = r * self.top.axis;
        out
    }
}

/// Superposed field of both magnets.
pub fn assembly_field(asm: &MagnetAssembly, p: Vec3, q: &QuadratureSpec) -> Result<Vec3> {
    q.validate()?;
    if !p.is_finite() {
        return Err(Error::domain("field point must be finite"));
    }
    if asm.contains(p) {
        return Err(Error::domain(format!(
            "point ({:.6e}, {:.6e}, {:.6e}) lies inside a magnet",
            p.x, p.y, p.z
        )));
    }
    Ok(assembly_field_outside(asm, p, q))
}

pub(crate) fn assembly_field_outside(asm: &MagnetAssembly, p: Vec3, q: &QuadratureSpec) -> Vec3 {
    cylinder_field_outside(&asm.bottom, p, q) + cylinder_field_outside(&asm.top, p, q)
}
