//! Sensor placement: grid scans of the static field and of the field
//! changes produced by each perturbation, feasibility against the sensor's
//! dynamic range, ranking, and the dipole-versus-cylinder validity sweep.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::magnetostatics::{
    assembly_field, dipole_moment, FingerRegion, InducedSource, MagnetAssembly, QuadratureSpec, SensorSpec,
};
use crate::perturbation::{displacement_field_delta_x, rotation_field_delta_x};
use crate::rotation::{rotation_matrix, RotationAngles};
use crate::units::{oersted, round_sig};
use crate::vec3::Vec3;

/// Rectangular grid in an xz plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_range: [f64; 2],
    pub z_range: [f64; 2],
    pub nx: usize,
    pub nz: usize,
    #[serde(default)]
    pub y_plane: f64,
}

impl Default for GridSpec {
    /// 121 × 81 nodes over x ∈ [6, 30] mm, z ∈ [0, 16] mm in the y = 0 plane.
    fn default() -> Self {
        GridSpec {
            x_range: [6e-3, 30e-3],
            z_range: [0.0, 16e-3],
            nx: 121,
            nz: 81,
            y_plane: 0.0,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let ok_range = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] < r[1];
        if !ok_range(self.x_range) || !ok_range(self.z_range) {
            return Err(Error::config("grid ranges need finite min < max"));
        }
        if self.nx < 2 || self.nz < 2 {
            return Err(Error::config("grid needs at least 2 nodes per axis"));
        }
        if !self.y_plane.is_finite() {
            return Err(Error::config("grid plane must be finite"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn coord(range: [f64; 2], n: usize, i: usize) -> f64 {
        if i + 1 == n {
            range[1]
        } else {
            range[0] + (range[1] - range[0]) * i as f64 / (n - 1) as f64
        }
    }

    /// Node position for flat index `idx` (z-major: x varies fastest).
    pub fn position(&self, idx: usize) -> Vec3 {
        let (ix, iz) = (idx % self.nx, idx / self.nx);
        Vec3::new(
            Self::coord(self.x_range, self.nx, ix),
            self.y_plane,
            Self::coord(self.z_range, self.nz, iz),
        )
    }
}

/// Perturbations applied to the top magnet and the finger for a scan.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Perturbations {
    /// Vertical shift of the top magnet, m.
    pub dz: f64,
    /// Rotation of the top magnet about the center of its bottom surface.
    pub angles: RotationAngles,
    /// Susceptibility change of the finger region.
    pub dchi: f64,
}

/// One grid node. Field deltas are components along the sensor axis, A/m.
/// Nodes inside a magnet or the finger are marked invalid and carry NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridNode {
    pub position: Vec3,
    pub valid: bool,
    pub h_static: Vec3,
    pub dhx_displacement: f64,
    pub dhx_rotation: f64,
    pub dhx_susceptibility: f64,
    pub feasible: bool,
}

impl GridNode {
    fn invalid(position: Vec3) -> Self {
        GridNode {
            position,
            valid: false,
            h_static: Vec3::new(f64::NAN, f64::NAN, f64::NAN),
            dhx_displacement: f64::NAN,
            dhx_rotation: f64::NAN,
            dhx_susceptibility: f64::NAN,
            feasible: false,
        }
    }

    /// NaN-aware equality (invalid nodes compare equal to each other).
    pub fn same_as(&self, o: &GridNode) -> bool {
        fn eq(a: f64, b: f64) -> bool {
            a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())
        }
        let v = |a: Vec3, b: Vec3| eq(a.x, b.x) && eq(a.y, b.y) && eq(a.z, b.z);
        v(self.position, o.position)
            && self.valid == o.valid
            && v(self.h_static, o.h_static)
            && eq(self.dhx_displacement, o.dhx_displacement)
            && eq(self.dhx_rotation, o.dhx_rotation)
            && eq(self.dhx_susceptibility, o.dhx_susceptibility)
            && self.feasible == o.feasible
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityGrid {
    pub grid: GridSpec,
    pub sensor_axis: Vec3,
    /// A/m.
    pub dynamic_range: f64,
    pub perturbations: Perturbations,
    /// z-major order, `nodes[iz * nx + ix]`.
    pub nodes: Vec<GridNode>,
}

impl SensitivityGrid {
    pub fn feasible_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.feasible).count()
    }

    /// Re-applies the feasibility mask for a different dynamic range.
    pub fn with_dynamic_range(&self, dynamic_range: f64) -> SensitivityGrid {
        let mut out = self.clone();
        out.dynamic_range = dynamic_range;
        for n in &mut out.nodes {
            n.feasible = n.valid && self.sensor_axis.dot(n.h_static).abs() < dynamic_range;
        }
        out
    }

    /// Valid nodes with `x_lo < x < x_hi` and `z_lo < z < z_hi`.
    pub fn nodes_in_window(&self, x: [f64; 2], z: [f64; 2]) -> impl Iterator<Item = &GridNode> {
        self.nodes.iter().filter(move |n| {
            n.valid && n.position.x > x[0] && n.position.x < x[1] && n.position.z > z[0] && n.position.z < z[1]
        })
    }
}

/// Evaluates the static field and every perturbation's field change at
/// each grid node.
pub fn scan_sensitivity(
    asm: &MagnetAssembly,
    region: &FingerRegion,
    sensor: &SensorSpec,
    grid: &GridSpec,
    perturbations: &Perturbations,
    q: &QuadratureSpec,
) -> Result<SensitivityGrid> {
    grid.validate()?;
    q.validate()?;
    let shifted = asm.with_top_shifted(Vec3::new(0.0, 0.0, perturbations.dz));
    let rotated = asm.with_top_rotated(perturbations.angles);
    let induced = if perturbations.dchi != 0.0 {
        Some(InducedSource::new(&region.with_chi(perturbations.dchi), asm, q)?)
    } else {
        None
    };
    let axis = sensor.axis;

    let nodes = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let p = grid.position(idx);
            if asm.contains(p) || shifted.contains(p) || rotated.contains(p) || region.contains(p) {
                return Ok(GridNode::invalid(p));
            }
            let h = assembly_field(asm, p, q)?;
            let hs = if perturbations.dz != 0.0 { assembly_field(&shifted, p, q)? } else { h };
            let hr = if perturbations.angles.is_zero() { h } else { assembly_field(&rotated, p, q)? };
            let chi = match &induced {
                Some(src) => axis.dot(src.field_at(p)?),
                None => 0.0,
            };
            Ok(GridNode {
                position: p,
                valid: true,
                h_static: h,
                dhx_displacement: axis.dot(hs - h),
                dhx_rotation: axis.dot(hr - h),
                dhx_susceptibility: chi,
                feasible: axis.dot(h).abs() < sensor.dynamic_range,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SensitivityGrid {
        grid: *grid,
        sensor_axis: axis,
        dynamic_range: sensor.dynamic_range,
        perturbations: *perturbations,
        nodes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub nodes: Vec<GridNode>,
    /// Set when nothing could be ranked.
    pub diagnostic: Option<String>,
}

/// Feasible nodes ordered by displacement response (largest |ΔH| first),
/// then by smaller static field, then by (x, z).
pub fn rank_placements(grid: &SensitivityGrid, k: usize) -> Ranking {
    let mut feasible: Vec<GridNode> = grid.nodes.iter().filter(|n| n.feasible).copied().collect();
    if feasible.is_empty() {
        let valid = grid.nodes.iter().filter(|n| n.valid).count();
        return Ranking {
            nodes: Vec::new(),
            diagnostic: Some(format!(
                "no feasible node: {valid} of {} nodes are outside the sources but all exceed the {:.3} Oe dynamic range",
                grid.nodes.len(),
                oersted(grid.dynamic_range)
            )),
        };
    }
    let axis = grid.sensor_axis;
    feasible.sort_by(|a, b| {
        b.dhx_displacement
            .abs()
            .total_cmp(&a.dhx_displacement.abs())
            .then(axis.dot(a.h_static).abs().total_cmp(&axis.dot(b.h_static).abs()))
            .then(a.position.x.total_cmp(&b.position.x))
            .then(a.position.z.total_cmp(&b.position.z))
    });
    feasible.truncate(k);
    Ranking {
        nodes: feasible,
        diagnostic: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Displacement,
    Rotation,
}

impl SweepKind {
    fn as_str(self) -> &'static str {
        match self {
            SweepKind::Displacement => "displacement",
            SweepKind::Rotation => "rotation",
        }
    }
}

/// One row of the dipole-versus-cylinder comparison. `value` is Δz (m) or
/// β (rad); field changes are ΔH_x in A/m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub kind: SweepKind,
    pub x: f64,
    pub value: f64,
    pub dh_dipole: f64,
    pub dh_numeric: f64,
    pub rel_err: f64,
}

fn rel_err(approx: f64, reference: f64) -> f64 {
    if approx == reference {
        0.0
    } else {
        (approx - reference).abs() / reference.abs()
    }
}

/// ΔH_x at `(x, 0, z_top)` from the dipole closed forms and from the finite
/// cylinders, for each vertical shift and each pitch of the top magnet.
/// `x` is measured from the top magnet's axis, in its mid-height plane.
pub fn dipole_validity_sweep(
    asm: &MagnetAssembly,
    x_list: &[f64],
    dz_list: &[f64],
    beta_list: &[f64],
    q: &QuadratureSpec,
) -> Result<Vec<SweepRow>> {
    q.validate()?;
    let m = dipole_moment(&asm.top);
    if m.x != 0.0 || m.y != 0.0 {
        return Err(Error::config("validity sweep needs the top magnet in its canonical +z pose"));
    }
    let mut jobs = Vec::new();
    for &x in x_list {
        if !(x >= asm.top.radius) {
            return Err(Error::domain(format!(
                "sweep position {x} m is inside the magnet radius {} m",
                asm.top.radius
            )));
        }
        jobs.extend(dz_list.iter().map(|&v| (SweepKind::Displacement, x, v)));
        jobs.extend(beta_list.iter().map(|&v| (SweepKind::Rotation, x, v)));
    }
    jobs.into_par_iter()
        .map(|(kind, x, value)| {
            let c = asm.top.center;
            let p = Vec3::new(c.x + x, c.y, c.z);
            let r = c - p;
            let (dh_dipole, after) = match kind {
                SweepKind::Displacement => (
                    displacement_field_delta_x(m.z, r, Vec3::new(0.0, 0.0, value))?,
                    asm.with_top_shifted(Vec3::new(0.0, 0.0, value)),
                ),
                SweepKind::Rotation => {
                    let angles = RotationAngles::pitch(value);
                    let dm = rotation_matrix(angles) * m - m;
                    (rotation_field_delta_x(dm, r)?, asm.with_top_rotated(angles))
                }
            };
            let dh_numeric = if value == 0.0 {
                0.0
            } else {
                assembly_field(&after, p, q)?.x - assembly_field(asm, p, q)?.x
            };
            Ok(SweepRow {
                kind,
                x,
                value,
                dh_dipole,
                dh_numeric,
                rel_err: rel_err(dh_dipole, dh_numeric),
            })
        })
        .collect()
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("kind,x,dz_or_beta,dH_dipole,dH_numeric,rel_err\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.kind.as_str(),
            r.x,
            r.value,
            r.dh_dipole,
            r.dh_numeric,
            r.rel_err
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::config(format!("unknown format {other:?} (csv|json)"))),
        }
    }
}

const GRID_HEADER: [&str; 18] = [
    "x_m",
    "y_m",
    "z_m",
    "Hx_Am",
    "Hy_Am",
    "Hz_Am",
    "Hx_Oe",
    "dHx_disp_Am",
    "dHx_disp_Oe",
    "dHx_rot_Am",
    "dHx_rot_Oe",
    "dHx_chi_Am",
    "dHx_chi_Oe",
    "dHx_chi_1e-4Oe",
    "valid",
    "feasible",
    "ix",
    "iz",
];

fn oe6(v: f64) -> f64 {
    round_sig(oersted(v), 6)
}

/// CSV text of a grid: SI columns at full precision, Oe columns rounded to
/// six significant digits, rows in z-major order.
pub fn grid_to_csv(grid: &SensitivityGrid) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::config(format!("csv encoding failed: {e}"));
    w.write_record(GRID_HEADER).map_err(csv_err)?;
    for (idx, n) in grid.nodes.iter().enumerate() {
        let h = n.h_static;
        let rec = [
            n.position.x.to_string(),
            n.position.y.to_string(),
            n.position.z.to_string(),
            h.x.to_string(),
            h.y.to_string(),
            h.z.to_string(),
            oe6(h.x).to_string(),
            n.dhx_displacement.to_string(),
            oe6(n.dhx_displacement).to_string(),
            n.dhx_rotation.to_string(),
            oe6(n.dhx_rotation).to_string(),
            n.dhx_susceptibility.to_string(),
            oe6(n.dhx_susceptibility).to_string(),
            round_sig(oersted(n.dhx_susceptibility) * 1e4, 6).to_string(),
            u8::from(n.valid).to_string(),
            u8::from(n.feasible).to_string(),
            (idx % grid.grid.nx).to_string(),
            (idx / grid.grid.nx).to_string(),
        ];
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::config(format!("csv encoding failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Parses node records written by [`grid_to_csv`] (SI columns only).
pub fn grid_nodes_from_csv(text: &str) -> Result<Vec<GridNode>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r
        .headers()
        .map_err(|e| Error::config(format!("bad grid csv header: {e}")))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::config(format!("grid csv is missing column {name:?}")))
    };
    let idx: Vec<usize> = [
        "x_m",
        "y_m",
        "z_m",
        "Hx_Am",
        "Hy_Am",
        "Hz_Am",
        "dHx_disp_Am",
        "dHx_rot_Am",
        "dHx_chi_Am",
        "valid",
        "feasible",
    ]
    .iter()
    .map(|c| col(c))
    .collect::<Result<_>>()?;
    let mut nodes = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::config(format!("grid csv row {}: {e}", line + 2)))?;
        let f = |i: usize| -> Result<f64> {
            rec.get(idx[i])
                .unwrap_or("")
                .parse::<f64>()
                .map_err(|e| Error::config(format!("grid csv row {}: {e}", line + 2)))
        };
        let flag = |i: usize| rec.get(idx[i]) == Some("1");
        nodes.push(GridNode {
            position: Vec3::new(f(0)?, f(1)?, f(2)?),
            h_static: Vec3::new(f(3)?, f(4)?, f(5)?),
            dhx_displacement: f(6)?,
            dhx_rotation: f(7)?,
            dhx_susceptibility: f(8)?,
            valid: flag(9),
            feasible: flag(10),
        });
    }
    Ok(nodes)
}

pub fn export_grid(grid: &SensitivityGrid, path: &Path, format: ExportFormat) -> Result<()> {
    let text = match format {
        ExportFormat::Csv => grid_to_csv(grid)?,
        ExportFormat::Json => serde_json::to_string_pretty(grid)
            .map_err(|e| Error::config(format!("json encoding failed: {e}")))?,
    };
    write_atomic(path, text.as_bytes())
}
