use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::num::NonZeroUsize;
use std::rc::Rc;

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Node counts for the field quadratures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    pub volume_nodes_per_axis: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            radial_nodes: 16,
            angular_nodes: 48,
            volume_nodes_per_axis: 16,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.radial_nodes < 2 || self.angular_nodes < 2 || self.volume_nodes_per_axis < 2 {
            return Err(Error::config(format!(
                "quadrature node counts must all be >= 2, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Every node count multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> QuadratureSpec {
        QuadratureSpec {
            radial_nodes: self.radial_nodes * factor,
            angular_nodes: self.angular_nodes * factor,
            volume_nodes_per_axis: self.volume_nodes_per_axis * factor,
        }
    }
}

/// Uniformly, axially magnetized cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylindricalMagnet {
    pub radius: f64,
    pub thickness: f64,
    /// Saturation magnetization, A/m. Zero stands for an absent magnet.
    pub ms: f64,
    pub center: Vec3,
    /// Unit magnetization direction.
    pub axis: Vec3,
}

impl CylindricalMagnet {
    pub fn new(radius: f64, thickness: f64, ms: f64, center: Vec3, axis: Vec3) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !(thickness > 0.0 && thickness.is_finite()) {
            return Err(Error::config("magnet radius and thickness must be positive"));
        }
        if !(ms >= 0.0 && ms.is_finite()) {
            return Err(Error::config("magnetization must be non-negative"));
        }
        if !center.is_finite() {
            return Err(Error::config("magnet center must be finite"));
        }
        if (axis.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::config("magnet axis must be a unit vector"));
        }
        Ok(CylindricalMagnet {
            radius,
            thickness,
            ms,
            center,
            axis,
        })
    }

    /// 5 mm × 5 mm NdFeB disk with Ms = 962.9 kA/m magnetized along +z.
    pub fn reference(center: Vec3) -> Self {
        CylindricalMagnet {
            radius: 5e-3,
            thickness: 5e-3,
            ms: 962.9e3,
            center,
            axis: Vec3::Z,
        }
    }

    /// Closed body test (surface points count as inside).
    pub fn contains(&self, p: Vec3) -> bool {
        let d = p - self.center;
        let axial = d.dot(self.axis);
        let radial = (d - self.axis * axial).norm();
        axial.abs() <= 0.5 * self.thickness && radial <= self.radius
    }

    pub fn top_face_center(&self) -> Vec3 {
        self.center + self.axis * (0.5 * self.thickness)
    }

    pub fn bottom_face_center(&self) -> Vec3 {
        self.center - self.axis * (0.5 * self.thickness)
    }
}

/// Field of an axially magnetized cylinder outside its body, from the
/// equivalent surface charges `±Ms` on the two end faces.
pub fn cylinder_field(mag: &CylindricalMagnet, p: Vec3, q: &QuadratureSpec) -> Result<Vec3> {
    q.validate()?;
    if !p.is_finite() {
        return Err(Error::domain("field point must be finite"));
    }
    if mag.contains(p) {
        return Err(Error::domain(format!(
            "point ({:.6e}, {:.6e}, {:.6e}) lies inside a magnet",
            p.x, p.y, p.z
        )));
    }
    Ok(cylinder_field_outside(mag, p, q))
}

pub(crate) fn cylinder_field_outside(mag: &CylindricalMagnet, p: Vec3, q: &QuadratureSpec) -> Vec3 {
    if mag.ms == 0.0 {
        return Vec3::ZERO;
    }
    let top = charged_disk_field(mag.top_face_center(), mag.axis, mag.radius, mag.ms, p, q);
    let bottom = charged_disk_field(mag.bottom_face_center(), mag.axis, mag.radius, -mag.ms, p, q);
    top + bottom
}

type Rule = Rc<Vec<(f64, f64)>>;

thread_local! {
    static RULES: RefCell<HashMap<usize, Rule>> = RefCell::new(HashMap::new());
}

/// Gauss-Legendre nodes and weights on [-1, 1], cached per thread.
pub(crate) fn gauss_legendre(n: usize) -> Rule {
    RULES.with(|cache| {
        cache
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| {
                let degree = NonZeroUsize::new(n).expect("node count validated >= 2");
                Rc::new(GaussLegendre::new(degree).as_node_weight_pairs().to_vec())
            })
            .clone()
    })
}

/// Field of a uniformly charged disk (surface density `sigma`, A/m) at `p`:
/// `H = σ/4π ∫ (p − r')/|p − r'|³ dA'`.
///
/// The area integral is taken in polar coordinates centered on the
/// projection of `p` onto the disk plane, so the kernel's near-singularity
/// sits at the origin of every ray. Along each ray `s = a·sinh(t)` with
/// `a` the height above the plane, which turns the radial integrand smooth;
/// `t` uses Gauss-Legendre. Angles use the periodic trapezoid rule when the
/// projection falls inside the disk and Gauss-Legendre over the subtended
/// wedge (with a sine substitution for the tangent endpoints) otherwise.
pub(crate) fn charged_disk_field(
    center: Vec3,
    normal: Vec3,
    radius: f64,
    sigma: f64,
    p: Vec3,
    q: &QuadratureSpec,
) -> Vec3 {
    let (u, v) = normal.orthonormal_basis();
    let d = p - center;
    let h = d.dot(normal);
    let qu = d.dot(u);
    let qv = d.dot(v);
    let rho_p = qu.hypot(qv);
    let scale = h.abs().max(1e-9 * radius);
    let radial = gauss_legendre(q.radial_nodes);

    // Returns (∫ s/(s²+h²)^{3/2} ds, ∫ s²/(s²+h²)^{3/2} ds) over [s_lo, s_hi].
    let ray = |s_lo: f64, s_hi: f64| -> (f64, f64) {
        let t_lo = (s_lo / scale).asinh();
        let t_hi = (s_hi / scale).asinh();
        let half = 0.5 * (t_hi - t_lo);
        let mid = 0.5 * (t_hi + t_lo);
        let (mut i1, mut i2) = (0.0, 0.0);
        for &(x, w) in radial.iter() {
            let t = mid + half * x;
            let s = scale * t.sinh();
            let ds = scale * t.cosh();
            let r2 = s * s + h * h;
            let g = s * ds / (r2 * r2.sqrt());
            i1 += w * g;
            i2 += w * g * s;
        }
        (half * i1, half * i2)
    };

    let (mut acc_n, mut acc_u, mut acc_v) = (0.0, 0.0, 0.0);
    if rho_p < radius {
        let n = q.angular_nodes;
        let dtheta = 2.0 * PI / n as f64;
        for k in 0..n {
            let theta = (k as f64 + 0.5) * dtheta;
            let (st, ct) = theta.sin_cos();
            let b = qu * ct + qv * st;
            let s_hi = -b + (radius * radius - rho_p * rho_p + b * b).sqrt();
            let (i1, i2) = ray(0.0, s_hi);
            acc_n += dtheta * h * i1;
            acc_u -= dtheta * ct * i2;
            acc_v -= dtheta * st * i2;
        }
    } else {
        let theta_c = (-qv).atan2(-qu);
        let theta_m = (radius / rho_p).min(1.0).asin();
        let angular = gauss_legendre(q.angular_nodes);
        for &(x, w) in angular.iter() {
            let tau = FRAC_PI_2 * x;
            let theta = theta_c + theta_m * tau.sin();
            let jac = FRAC_PI_2 * theta_m * tau.cos();
            let (st, ct) = theta.sin_cos();
            let b = -(qu * ct + qv * st);
            let disc = (radius * radius - rho_p * rho_p + b * b).max(0.0).sqrt();
            let s_lo = (b - disc).max(0.0);
            let s_hi = b + disc;
            if s_hi <= s_lo {
                continue;
            }
            let (i1, i2) = ray(s_lo, s_hi);
            acc_n += w * jac * h * i1;
            acc_u -= w * jac * ct * i2;
            acc_v -= w * jac * st * i2;
        }
    }
    let k = sigma / (4.0 * PI);
    (normal * acc_n + u * acc_u + v * acc_v) * k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::magnetostatics::{dipole_field, dipole_moment};

    fn mag() -> CylindricalMagnet {
        CylindricalMagnet::reference(Vec3::new(0.0, 0.0, 7e-3))
    }

    /// Exact on-axis field of a uniformly magnetized cylinder.
    fn on_axis_exact(m: &CylindricalMagnet, z_rel: f64) -> f64 {
        let f = |a: f64| a / (a * a + m.radius * m.radius).sqrt();
        0.5 * m.ms * (f(z_rel + 0.5 * m.thickness) - f(z_rel - 0.5 * m.thickness))
    }

    /// Independent disk integrator: radial integral in closed form along rays
    /// from the projected point, angles by a dense midpoint rule.
    fn disk_closed_form_radial(center: Vec3, radius: f64, sigma: f64, p: Vec3) -> Vec3 {
        let d = p - center;
        let h = d.z;
        let (qx, qy) = (d.x, d.y);
        let rho = qx.hypot(qy);
        let n = 20_000;
        let anti1 = |s: f64| -1.0 / (s * s + h * h).sqrt();
        let anti2 = |s: f64| {
            if h == 0.0 {
                s.ln()
            } else {
                (s / h.abs()).asinh() - s / (s * s + h * h).sqrt()
            }
        };
        let mut acc = Vec3::ZERO;
        let mut add = |theta: f64, weight: f64| {
            let (st, ct) = theta.sin_cos();
            let b = -(qx * ct + qy * st);
            let disc = (radius * radius - rho * rho + b * b).max(0.0).sqrt();
            let s_hi = b + disc;
            let s_lo = (b - disc).max(0.0);
            if s_hi > s_lo {
                let i1 = anti1(s_hi) - anti1(s_lo);
                let i2 = anti2(s_hi) - anti2(s_lo);
                acc += Vec3::new(-ct * i2, -st * i2, h * i1) * weight;
            }
        };
        if rho < radius {
            let dt = 2.0 * PI / n as f64;
            for k in 0..n {
                add((k as f64 + 0.5) * dt, dt);
            }
        } else {
            let c = (-qy).atan2(-qx);
            let m = (radius / rho).asin();
            let dt = PI / n as f64;
            for k in 0..n {
                let tau = -FRAC_PI_2 + (k as f64 + 0.5) * dt;
                add(c + m * tau.sin(), m * tau.cos() * dt);
            }
        }
        acc * (sigma / (4.0 * PI))
    }

    #[test]
    fn on_axis_matches_closed_form() {
        let m = mag();
        let q = QuadratureSpec::default();
        for dz in [3.0e-3, 4.0e-3, 8e-3, 20e-3, -6e-3] {
            let h = cylinder_field(&m, m.center + Vec3::new(0.0, 0.0, dz), &q).unwrap();
            let exact = on_axis_exact(&m, dz);
            assert!((h.z - exact).abs() < 1e-10 * exact.abs(), "dz={dz} {} {}", h.z, exact);
            assert!(h.x.abs() < 1e-9 * exact.abs());
        }
    }

    #[test]
    fn disk_matches_independent_integrator() {
        let q = QuadratureSpec::default();
        let c = Vec3::new(0.0, 0.0, 0.0);
        for p in [
            Vec3::new(15e-3, 0.0, 2e-3),
            Vec3::new(3e-3, 1e-3, 0.5e-3),
            Vec3::new(7e-3, -2e-3, -4e-3),
            Vec3::new(8e-3, 0.0, 0.0),
        ] {
            let a = charged_disk_field(c, Vec3::Z, 5e-3, 1e5, p, &q);
            let b = disk_closed_form_radial(c, 5e-3, 1e5, p);
            assert!((a - b).norm() < 1e-7 * b.norm(), "p={p:?} {a:?} {b:?}");
        }
    }

    #[test]
    fn far_axis_approaches_dipole() {
        // For T = R the leading correction is the octupole term, about
        // -(3R² - T²)/(2z²) on axis: 1.0% at 10R, 0.45% at 15R.
        let m = mag();
        let q = QuadratureSpec::default();
        let rel = |k: f64| {
            let p = m.center + Vec3::new(0.0, 0.0, k * m.radius);
            let h = cylinder_field(&m, p, &q).unwrap();
            let d = dipole_field(dipole_moment(&m), p - m.center).unwrap();
            (h - d).norm() / h.norm()
        };
        assert!((rel(10.0) - 0.010_08).abs() < 1e-4);
        assert!(rel(15.0) < 5e-3);
        assert!(rel(20.0) < rel(15.0));
    }

    #[test]
    fn mirror_symmetry_about_midplane() {
        let m = mag();
        let q = QuadratureSpec::default();
        for (x, dz) in [(8e-3, 1e-3), (15e-3, 3e-3), (12e-3, 6e-3)] {
            let a = cylinder_field(&m, Vec3::new(x, 0.0, m.center.z + dz), &q).unwrap();
            let b = cylinder_field(&m, Vec3::new(x, 0.0, m.center.z - dz), &q).unwrap();
            // H_z even, H_x odd about the midplane of an axially magnetized body.
            assert!((a.z - b.z).abs() < 1e-10 * a.norm());
            assert!((a.x + b.x).abs() < 1e-10 * a.norm());
            assert!(a.y.abs() < 1e-10 * a.norm());
        }
    }

    #[test]
    fn rotated_magnet_field_is_rotated() {
        use crate::rotation::{rotation_matrix, RotationAngles};
        let q = QuadratureSpec::default();
        let r = rotation_matrix(RotationAngles::new(0.3, -0.7, 0.2));
        let base = CylindricalMagnet::reference(Vec3::ZERO);
        let mut turned = base;
        turned.axis = r * Vec3::Z;
        let p = Vec3::new(9e-3, 4e-3, -6e-3);
        let h_turned = cylinder_field(&turned, r * p, &q).unwrap();
        let h_base = cylinder_field(&base, p, &q).unwrap();
        assert!((h_turned - r * h_base).norm() < 1e-9 * h_base.norm());
    }

    #[test]
    fn inside_points_and_bad_quadrature_are_rejected() {
        let m = mag();
        assert!(matches!(
            cylinder_field(&m, m.center, &QuadratureSpec::default()),
            Err(Error::Domain(_))
        ));
        let bad = QuadratureSpec {
            radial_nodes: 1,
            ..QuadratureSpec::default()
        };
        assert!(matches!(
            cylinder_field(&m, Vec3::new(0.1, 0.0, 0.0), &bad),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn reference_point_is_within_sensor_range() {
        let asm_top = mag();
        let h = cylinder_field(&asm_top, Vec3::new(15e-3, 0.0, 7.5e-3), &QuadratureSpec::default())
            .unwrap();
        assert!(h.x.is_finite() && h.x.abs() < 7957.7);
    }
}
