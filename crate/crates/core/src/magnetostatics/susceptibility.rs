use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assembly::{assembly_field, MagnetAssembly};
use super::cylinder::{gauss_legendre, QuadratureSpec};
use super::dipole::dipole_field_unchecked;
use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Cuboid of weakly susceptible tissue between the magnets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FingerRegion {
    pub half_extents: Vec3,
    pub center: Vec3,
    pub chi: f64,
}

impl FingerRegion {
    pub fn new(half_extents: Vec3, center: Vec3, chi: f64) -> Result<Self> {
        if !(half_extents.x > 0.0 && half_extents.y > 0.0 && half_extents.z > 0.0) || !half_extents.is_finite() {
            return Err(Error::config("finger half-extents must be positive"));
        }
        if !center.is_finite() {
            return Err(Error::config("finger center must be finite"));
        }
        if !(chi.abs() < 1e-3) {
            return Err(Error::config(format!(
                "susceptibility {chi} is outside the linear-response regime (|chi| < 1e-3)"
            )));
        }
        Ok(FingerRegion {
            half_extents,
            center,
            chi,
        })
    }

    /// |x| ≤ 10 mm, |y| ≤ 5 mm, |z| ≤ 4.5 mm around the origin.
    pub fn reference(chi: f64) -> Self {
        FingerRegion {
            half_extents: Vec3::new(10e-3, 5e-3, 4.5e-3),
            center: Vec3::ZERO,
            chi,
        }
    }

    /// Closed box test.
    pub fn contains(&self, p: Vec3) -> bool {
        let d = p - self.center;
        d.x.abs() <= self.half_extents.x && d.y.abs() <= self.half_extents.y && d.z.abs() <= self.half_extents.z
    }

    pub fn with_chi(&self, chi: f64) -> Self {
        FingerRegion { chi, ..*self }
    }
}

/// Discretized induced magnetization of a finger region: one dipole per
/// volume quadrature node, `m_j = w_j·chi·H_applied(r_j)`.
///
/// Building it evaluates the applied field once per node; afterwards the
/// induced field at any exterior point is a plain dipole sum. Induced
/// moments are linear in chi and the applied field is not updated by them.
#[derive(Debug, Clone)]
pub struct InducedSource {
    region: FingerRegion,
    dipoles: Vec<(Vec3, Vec3)>,
}

impl InducedSource {
    pub fn new(region: &FingerRegion, asm: &MagnetAssembly, q: &QuadratureSpec) -> Result<Self> {
        q.validate()?;
        let n = q.volume_nodes_per_axis;
        let rule = gauss_legendre(n);
        let rule: Vec<(f64, f64)> = rule.iter().copied().collect();
        let h = region.half_extents;
        let jac = h.x * h.y * h.z;
        let nodes: Vec<(Vec3, f64)> = (0..n * n * n)
            .map(|idx| {
                let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
                let pos = region.center
                    + Vec3::new(h.x * rule[i].0, h.y * rule[j].0, h.z * rule[k].0);
                (pos, jac * rule[i].1 * rule[j].1 * rule[k].1)
            })
            .collect();
        let dipoles = nodes
            .par_iter()
            .map(|&(pos, w)| {
                let applied = assembly_field(asm, pos, q)?;
                Ok((pos, applied * (region.chi * w)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(InducedSource {
            region: *region,
            dipoles,
        })
    }

    pub fn region(&self) -> &FingerRegion {
        &self.region
    }

    /// Total induced moment, A·m².
    pub fn total_moment(&self) -> Vec3 {
        self.dipoles.iter().map(|&(_, m)| m).sum()
    }

    pub fn field_at(&self, p: Vec3) -> Result<Vec3> {
        if self.region.contains(p) {
            return Err(Error::domain("field point lies inside the susceptible region"));
        }
        Ok(self
            .dipoles
            .iter()
            .map(|&(pos, m)| {
                let r = p - pos;
                dipole_field_unchecked(m, r, r.norm_squared())
            })
            .sum())
    }
}

/// Field induced at `p` by the susceptible region magnetized by the
/// assembly's field.
pub fn induced_susceptibility_field(
    region: &FingerRegion,
    asm: &MagnetAssembly,
    p: Vec3,
    q: &QuadratureSpec,
) -> Result<Vec3> {
    if region.contains(p) {
        return Err(Error::domain("field point lies inside the susceptible region"));
    }
    InducedSource::new(region, asm, q)?.field_at(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::oersted;

    fn probe() -> Vec3 {
        Vec3::new(17.5e-3, 0.0, 7.5e-3)
    }

    #[test]
    fn zero_chi_gives_zero_field() {
        let asm = MagnetAssembly::reference();
        let h = induced_susceptibility_field(&FingerRegion::reference(0.0), &asm, probe(), &QuadratureSpec::default())
            .unwrap();
        assert_eq!(h, Vec3::ZERO);
    }

    #[test]
    fn doubling_chi_doubles_field_exactly() {
        let asm = MagnetAssembly::reference();
        let q = QuadratureSpec::default();
        let a = induced_susceptibility_field(&FingerRegion::reference(1e-7), &asm, probe(), &q).unwrap();
        let b = induced_susceptibility_field(&FingerRegion::reference(2e-7), &asm, probe(), &q).unwrap();
        assert_eq!(b, a * 2.0);
    }

    #[test]
    fn tenth_ppm_change_is_of_order_ten_micro_oersted() {
        let asm = MagnetAssembly::reference();
        let h = induced_susceptibility_field(
            &FingerRegion::reference(1e-7),
            &asm,
            probe(),
            &QuadratureSpec::default(),
        )
        .unwrap();
        let oe = oersted(h.x).abs();
        assert!((1e-6..1e-4).contains(&oe), "{oe}");
    }

    #[test]
    fn inside_region_is_rejected() {
        let asm = MagnetAssembly::reference();
        let r = induced_susceptibility_field(
            &FingerRegion::reference(1e-7),
            &asm,
            Vec3::new(1e-3, 0.0, 0.0),
            &QuadratureSpec::default(),
        );
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn region_invariants() {
        assert!(FingerRegion::new(Vec3::new(1e-3, 0.0, 1e-3), Vec3::ZERO, 0.0).is_err());
        assert!(FingerRegion::new(Vec3::new(1e-3, 1e-3, 1e-3), Vec3::ZERO, 2e-3).is_err());
    }
}
