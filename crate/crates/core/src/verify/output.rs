use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::fem::FlowField;
use crate::problems::BoundaryLayerConstants;
use crate::{Error, Result};

use super::extension::ExtendedPressure;
use super::ConvergenceRecord;

/// Floats in output files: 12 significant digits.
pub fn fmt_value(v: f64) -> String {
    format!("{v:.11e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), fmt_value)
}

/// Comma-separated table with `# key=value` metadata lines on top.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    pub meta: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            meta: Vec::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn get(&self, row: usize, name: &str) -> Option<&str> {
        Some(self.rows.get(row)?.get(self.column(name)?)?.as_str())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# {k}={v}");
        }
        let _ = writeln!(s, "{}", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut t = CsvTable::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(m) = line.strip_prefix('#') {
                if let Some((k, v)) = m.trim().split_once('=') {
                    t.meta.push((k.trim().to_string(), v.trim().to_string()));
                }
                continue;
            }
            let cells: Vec<String> = line.split(',').map(|c| c.trim().to_string()).collect();
            if t.header.is_empty() {
                t.header = cells;
            } else if cells.len() != t.header.len() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected {} fields, found {}", t.header.len(), cells.len()),
                });
            } else {
                t.rows.push(cells);
            }
        }
        if t.header.is_empty() {
            return Err(Error::Parse {
                line: 0,
                message: "missing header".into(),
            });
        }
        Ok(t)
    }
}

/// DWR efficiency table: one row per mesh, errors against `reference`.
pub fn table1(rows: &[(usize, f64, f64)], reference: f64) -> CsvTable {
    let mut t = CsvTable::new(&["dofs", "value", "error", "eta", "ieff"]);
    for &(dofs, value, eta) in rows {
        let err = reference - value;
        t.push(vec![
            dofs.to_string(),
            fmt_value(value),
            fmt_value(err),
            fmt_value(eta),
            fmt_value(eta / err),
        ]);
    }
    t
}

/// Boundary-layer constants per inclusion and cut-off height.
pub fn table2(rows: &[(&str, &BoundaryLayerConstants)]) -> CsvTable {
    let mut t = CsvTable::new(&["inclusion", "k", "l", "c1bl", "eta_c1", "cwbl", "eta_cw"]);
    for (name, c) in rows {
        t.push(vec![
            name.to_string(),
            c.cutoff_k.to_string(),
            c.cutoff_l.to_string(),
            fmt_value(c.c1bl),
            fmt_opt(c.eta_c1),
            fmt_value(c.cwbl),
            fmt_opt(c.eta_cw),
        ]);
    }
    t
}

fn sorted(records: &[ConvergenceRecord]) -> Vec<&ConvergenceRecord> {
    let mut r: Vec<&ConvergenceRecord> = records.iter().collect();
    r.sort_by(|a, b| b.epsilon.ratio().cmp(&a.epsilon.ratio()));
    r
}

/// Domain norms, descending `ε`.
pub fn table3(records: &[ConvergenceRecord]) -> CsvTable {
    let mut t = CsvTable::new(&[
        "eps",
        "L2sq_vel_diff",
        "abs_massflow_diff",
        "L1_pressure_diff",
        "L1_grad_diff",
        "L2sq_porous_pressure_diff",
    ]);
    for r in sorted(records) {
        let mut row = vec![r.epsilon.to_string()];
        for (_, f) in super::DomainNorms::FIELDS {
            row.push(fmt_opt(r.domain.as_ref().map(f)));
        }
        t.push(row);
    }
    t
}

/// Interface residuals over `Γ`, descending `ε`.
pub fn table4(records: &[ConvergenceRecord]) -> CsvTable {
    let mut t = CsvTable::new(&["eps", "shear_residual", "p_below_residual", "jump_residual", "bj_residual"]);
    for r in sorted(records) {
        let mut row = vec![r.epsilon.to_string()];
        for (_, f) in super::InterfaceNorms::FIELDS {
            row.push(fmt_opt(r.gamma.as_ref().and_then(f)));
        }
        t.push(row);
    }
    t
}

/// Jump and slip residuals over `Γ` and `Γ̂`, descending `ε`.
pub fn table5(records: &[ConvergenceRecord]) -> CsvTable {
    let mut t = CsvTable::new(&["eps", "jump_residual", "bj_residual", "jump_residual_hat", "bj_residual_hat"]);
    for r in sorted(records) {
        t.push(vec![
            r.epsilon.to_string(),
            fmt_opt(r.gamma.and_then(|n| n.jump_residual)),
            fmt_opt(r.gamma.map(|n| n.bj_residual)),
            fmt_opt(r.gamma_hat.and_then(|n| n.jump_residual)),
            fmt_opt(r.gamma_hat.map(|n| n.bj_residual)),
        ]);
    }
    t
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// VTK node order of the biquadratic quad from the tensor numbering.
const VTK_ORDER: [usize; 9] = [0, 2, 8, 6, 1, 5, 7, 3, 4];
const VTK_BIQUADRATIC_QUAD: u8 = 28;
const VTK_POLYGON: u8 = 7;
const SOLID_SIDES: usize = 48;

/// Legacy-VTK unstructured grid of the geometry nodes with velocity and
/// pressure as point data. With an extension, every solid inclusion is added
/// as a polygon carrying its extended pressure.
pub fn write_vtk(field: &FlowField, extension: Option<&ExtendedPressure<'_>>) -> String {
    let mesh = field.mesh();
    let mut index: HashMap<(i64, i64), usize> = HashMap::new();
    let mut points: Vec<[f64; 2]> = Vec::new();
    let mut data: Vec<([f64; 2], f64)> = Vec::new();
    let mut cells: Vec<Vec<usize>> = Vec::new();
    let mut types: Vec<u8> = Vec::new();
    let mut region: Vec<i64> = Vec::new();
    let q = 1e12;
    for c in 0..mesh.n_cells() {
        let nodes = mesh.geometry_nodes(c);
        let ce = field.cell(c);
        let mut ids = Vec::with_capacity(9);
        for &i in &VTK_ORDER {
            let p = nodes[i];
            let key = ((p[0] * q).round() as i64, (p[1] * q).round() as i64);
            let id = *index.entry(key).or_insert_with(|| {
                let pv = ce.at((i % 3) as f64 / 2.0, (i / 3) as f64 / 2.0);
                points.push(p);
                data.push((pv.v, pv.p));
                points.len() - 1
            });
            ids.push(id);
        }
        cells.push(ids);
        types.push(VTK_BIQUADRATIC_QUAD);
        region.push(mesh.region(c).pore().map_or(-1, |p| p as i64));
    }
    if let Some(ext) = extension {
        for (pore, (info, mean)) in mesh.coarse().pores.iter().zip(&ext.pore_mean).enumerate() {
            let Some(mean) = mean else { continue };
            let mut ids = Vec::with_capacity(SOLID_SIDES);
            for s in 0..SOLID_SIDES {
                let t = 2.0 * std::f64::consts::PI * s as f64 / SOLID_SIDES as f64;
                points.push(info.placement.apply(info.inclusion.curve_point(t)));
                data.push(([0.0; 2], *mean));
                ids.push(points.len() - 1);
            }
            cells.push(ids);
            types.push(VTK_POLYGON);
            region.push(pore as i64);
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "flow field");
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", points.len());
    for p in &points {
        let _ = writeln!(s, "{} {} 0", fmt_value(p[0]), fmt_value(p[1]));
    }
    let size: usize = cells.iter().map(|c| c.len() + 1).sum();
    let _ = writeln!(s, "CELLS {} {size}", cells.len());
    for c in &cells {
        let ids: Vec<String> = c.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "{} {}", c.len(), ids.join(" "));
    }
    let _ = writeln!(s, "CELL_TYPES {}", cells.len());
    for t in &types {
        let _ = writeln!(s, "{t}");
    }
    let _ = writeln!(s, "CELL_DATA {}", cells.len());
    let _ = writeln!(s, "SCALARS pore int 1");
    let _ = writeln!(s, "LOOKUP_TABLE default");
    for r in &region {
        let _ = writeln!(s, "{r}");
    }
    let _ = writeln!(s, "POINT_DATA {}", points.len());
    let _ = writeln!(s, "VECTORS velocity double");
    for (v, _) in &data {
        let _ = writeln!(s, "{} {} 0", fmt_value(v[0]), fmt_value(v[1]));
    }
    let _ = writeln!(s, "SCALARS pressure double 1");
    let _ = writeln!(s, "LOOKUP_TABLE default");
    for (_, p) in &data {
        let _ = writeln!(s, "{}", fmt_value(*p));
    }
    s
}
