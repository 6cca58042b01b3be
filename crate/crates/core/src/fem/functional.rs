//! Linear functionals on velocity–pressure pairs: volume and line loads,
//! boundary pressures, and quadrature of derived quantities along mesh lines.

use std::collections::HashMap;

use crate::meshkit::{BoundaryTag, QuadMesh, Region};
use crate::{Error, Result};

use super::basis::{face_outward, face_point, gauss_legendre, geometry_at};
use super::constraints::VectorData;
use super::dofs::DofMap;
use super::field::{FlowField, PointValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionFilter {
    All,
    Free,
    Porous,
}

impl RegionFilter {
    pub fn contains(&self, r: Region) -> bool {
        match self {
            RegionFilter::All => true,
            RegionFilter::Free => r.is_free(),
            RegionFilter::Porous => !r.is_free(),
        }
    }
}

/// Which cells provide the trace on a line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineSide {
    Above,
    Below,
    /// Above when cells exist there, otherwise below.
    Auto,
}

/// Horizontal segment `{x_2 = y, x0 < x_1 < x1}` made of mesh faces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSpec {
    pub y: f64,
    pub x0: f64,
    pub x1: f64,
    pub side: LineSide,
}

impl LineSpec {
    pub fn new(y: f64, x0: f64, x1: f64) -> Self {
        Self {
            y,
            x0,
            x1,
            side: LineSide::Auto,
        }
    }

    pub fn side(mut self, side: LineSide) -> Self {
        self.side = side;
        self
    }
}

const LINE_TOL: f64 = 1e-10;

/// Faces `(cell, face)` covering the line exactly once, from the requested side.
pub fn line_faces(mesh: &QuadMesh, line: &LineSpec) -> Result<Vec<(usize, usize)>> {
    const FACE_NODES: [[usize; 3]; 4] = [[0, 1, 2], [2, 5, 8], [6, 7, 8], [0, 3, 6]];
    let mut above = Vec::new();
    let mut below = Vec::new();
    for c in 0..mesh.n_cells() {
        let nodes = mesh.geometry_nodes(c);
        for (f, fnodes) in FACE_NODES.iter().enumerate() {
            if !fnodes.iter().all(|&i| (nodes[i][1] - line.y).abs() <= LINE_TOL) {
                continue;
            }
            let (xa, xb) = (nodes[fnodes[0]][0], nodes[fnodes[2]][0]);
            let (lo, hi) = (xa.min(xb), xa.max(xb));
            if lo < line.x0 - LINE_TOL || hi > line.x1 + LINE_TOL {
                continue;
            }
            if nodes[4][1] > line.y {
                above.push((c, f));
            } else {
                below.push((c, f));
            }
        }
    }
    let faces = match line.side {
        LineSide::Above => above,
        LineSide::Below => below,
        LineSide::Auto => {
            if above.is_empty() {
                below
            } else {
                above
            }
        }
    };
    let covered: f64 = faces
        .iter()
        .map(|&(c, f)| {
            let n = mesh.geometry_nodes(c);
            let fnodes = FACE_NODES[f];
            (n[fnodes[2]][0] - n[fnodes[0]][0]).abs()
        })
        .sum();
    let want = line.x1 - line.x0;
    if faces.is_empty() || (covered - want).abs() > 1e-9 * want.max(1.0) {
        return Err(Error::LineNotAligned {
            y: line.y,
            reason: format!("faces cover {covered} of the requested length {want}"),
        });
    }
    Ok(faces)
}

/// Integrates `g` over the line using the traces of the selected cells.
pub fn integrate_line(
    field: &FlowField,
    line: &LineSpec,
    mut g: impl FnMut(&PointValue) -> f64,
) -> Result<f64> {
    let faces = line_faces(field.mesh(), line)?;
    let n = field.dofs().velocity_degree() + 2;
    let (tp, tw) = gauss_legendre(n);
    let mut total = 0.0;
    for (c, f) in faces {
        let ce = field.cell(c);
        for (t, w) in tp.iter().zip(&tw) {
            let (xi, eta) = face_point(f, *t);
            let geo = ce.geometry(xi, eta);
            let j = if f % 2 == 0 { 0 } else { 1 };
            let ds = (geo.jac[0][j].powi(2) + geo.jac[1][j].powi(2)).sqrt();
            total += w * ds * g(&ce.at_with(&geo, xi, eta));
        }
    }
    Ok(total)
}

/// Integrates `g` over the cells of a region with an `n × n` Gauss rule.
pub fn integrate_domain(
    field: &FlowField,
    region: RegionFilter,
    n: usize,
    mut g: impl FnMut(&PointValue) -> f64,
) -> f64 {
    let mesh = field.mesh();
    let (tp, tw) = gauss_legendre(n);
    let mut total = 0.0;
    for c in 0..mesh.n_cells() {
        if !region.contains(mesh.region(c)) {
            continue;
        }
        let ce = field.cell(c);
        let mut cell_sum = 0.0;
        for (j, wj) in tw.iter().enumerate() {
            for (i, wi) in tw.iter().enumerate() {
                let pv = ce.at(tp[i], tp[j]);
                cell_sum += wi * wj * pv.det * g(&pv);
            }
        }
        total += cell_sum;
    }
    total
}

/// Measure of a region of the mesh.
pub fn region_area(mesh: &QuadMesh, region: RegionFilter) -> f64 {
    let (tp, tw) = gauss_legendre(4);
    let mut total = 0.0;
    for c in 0..mesh.n_cells() {
        if !region.contains(mesh.region(c)) {
            continue;
        }
        let nodes = mesh.geometry_nodes(c);
        for (j, wj) in tw.iter().enumerate() {
            for (i, wi) in tw.iter().enumerate() {
                total += wi * wj * geometry_at(nodes, tp[i], tp[j]).det;
            }
        }
    }
    total
}

/// One term of a linear functional `L(v, p)`.
#[derive(Debug, Clone)]
pub enum Load {
    /// `∫_region f · v`
    Volume { region: RegionFilter, density: VectorData },
    /// `∫_region w p`
    VolumePressure { region: RegionFilter, weight: f64 },
    /// `∫_line g · v`
    Line { line: LineSpec, density: [f64; 2] },
    /// `∫_line w p`
    LinePressure { line: LineSpec, weight: f64 },
    /// `-∫_tag p_bc v · n`, the natural term of a prescribed boundary pressure.
    BoundaryPressure { tag: BoundaryTag, pressure: f64 },
}

#[derive(Debug, Clone, Default)]
pub struct LinearFunctional {
    pub loads: Vec<Load>,
}

impl LinearFunctional {
    pub fn new(loads: Vec<Load>) -> Self {
        Self { loads }
    }

    pub fn is_empty(&self) -> bool {
        self.loads.is_empty()
    }

    pub fn scaled(&self, a: f64) -> Self {
        let loads = self
            .loads
            .iter()
            .map(|l| match l {
                Load::Volume { region, density } => Load::Volume {
                    region: *region,
                    density: match density {
                        VectorData::Const(v) => VectorData::Const([a * v[0], a * v[1]]),
                        VectorData::Field(f) => {
                            let f = f.clone();
                            VectorData::Field(std::sync::Arc::new(move |x| {
                                let v = f(x);
                                [a * v[0], a * v[1]]
                            }))
                        }
                    },
                },
                Load::VolumePressure { region, weight } => Load::VolumePressure {
                    region: *region,
                    weight: a * weight,
                },
                Load::Line { line, density } => Load::Line {
                    line: *line,
                    density: [a * density[0], a * density[1]],
                },
                Load::LinePressure { line, weight } => Load::LinePressure {
                    line: *line,
                    weight: a * weight,
                },
                Load::BoundaryPressure { tag, pressure } => Load::BoundaryPressure {
                    tag: *tag,
                    pressure: a * pressure,
                },
            })
            .collect();
        Self { loads }
    }

    /// Resolves line and boundary faces on a mesh.
    pub fn prepare(&self, mesh: &QuadMesh) -> Result<PreparedFunctional<'_>> {
        let mut faces: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
        for (li, load) in self.loads.iter().enumerate() {
            match load {
                Load::Line { line, .. } | Load::LinePressure { line, .. } => {
                    for (c, f) in line_faces(mesh, line)? {
                        faces.entry(c).or_default().push((li, f));
                    }
                }
                Load::BoundaryPressure { tag, .. } => {
                    let mut any = false;
                    for c in 0..mesh.n_cells() {
                        for f in 0..4 {
                            if mesh.is_boundary_face(c, f) && mesh.face_tag(c, f) == Some(*tag) {
                                faces.entry(c).or_default().push((li, f));
                                any = true;
                            }
                        }
                    }
                    if !any {
                        return Err(Error::Invalid(format!(
                            "boundary pressure on tag `{}` without boundary faces",
                            tag.as_str()
                        )));
                    }
                }
                _ => {}
            }
        }
        Ok(PreparedFunctional { f: self, faces })
    }
}

/// A functional with its faces located on one mesh.
pub struct PreparedFunctional<'a> {
    f: &'a LinearFunctional,
    faces: HashMap<usize, Vec<(usize, usize)>>,
}

impl PreparedFunctional<'_> {
    /// Local load vector of cell `c` in the order of [`DofMap::cell_global_dofs`].
    /// Returns `false` when the functional does not touch the cell.
    pub fn cell_vector(&self, dofs: &DofMap, c: usize, out: &mut [f64]) -> bool {
        let mesh = dofs.mesh();
        let vb = dofs.velocity.basis;
        let pb = dofs.pressure.basis;
        let (nvl, npl) = (vb.n_local(), pb.n_local());
        out.iter_mut().for_each(|v| *v = 0.0);
        let region = mesh.region(c);
        let nodes = mesh.geometry_nodes(c);
        let n = vb.degree + 2;
        let mut touched = false;
        let mut val = [0.0; 16];
        let mut grad = [[0.0; 2]; 16];
        let mut pval = [0.0; 16];
        let mut pgrad = [[0.0; 2]; 16];
        let (tp, tw) = gauss_legendre(n);

        let has_volume = self.f.loads.iter().any(|l| match l {
            Load::Volume { region: r, .. } | Load::VolumePressure { region: r, .. } => r.contains(region),
            _ => false,
        });
        if has_volume {
            touched = true;
            for (j, wj) in tw.iter().enumerate() {
                for (i, wi) in tw.iter().enumerate() {
                    let (xi, eta) = (tp[i], tp[j]);
                    let g = geometry_at(nodes, xi, eta);
                    let w = wi * wj * g.det;
                    vb.eval(xi, eta, &mut val[..nvl], &mut grad[..nvl]);
                    pb.eval(xi, eta, &mut pval[..npl], &mut pgrad[..npl]);
                    for load in &self.f.loads {
                        match load {
                            Load::Volume { region: r, density } if r.contains(region) => {
                                let fv = density.at(g.x);
                                for a in 0..nvl {
                                    out[a] += w * fv[0] * val[a];
                                    out[nvl + a] += w * fv[1] * val[a];
                                }
                            }
                            Load::VolumePressure { region: r, weight } if r.contains(region) => {
                                for a in 0..npl {
                                    out[2 * nvl + a] += w * weight * pval[a];
                                }
                            }
                            _ => {}
                        }
                    }
                }
            }
        }
        if let Some(list) = self.faces.get(&c) {
            touched = true;
            for &(li, f) in list {
                for (t, wt) in tp.iter().zip(&tw) {
                    let (xi, eta) = face_point(f, *t);
                    let g = geometry_at(nodes, xi, eta);
                    let j = f % 2;
                    let tangent = [g.jac[0][j], g.jac[1][j]];
                    let ds = (tangent[0].powi(2) + tangent[1].powi(2)).sqrt();
                    let w = wt * ds;
                    vb.eval(xi, eta, &mut val[..nvl], &mut grad[..nvl]);
                    pb.eval(xi, eta, &mut pval[..npl], &mut pgrad[..npl]);
                    match &self.f.loads[li] {
                        Load::Line { density, .. } => {
                            for a in 0..nvl {
                                out[a] += w * density[0] * val[a];
                                out[nvl + a] += w * density[1] * val[a];
                            }
                        }
                        Load::LinePressure { weight, .. } => {
                            for a in 0..npl {
                                out[2 * nvl + a] += w * weight * pval[a];
                            }
                        }
                        Load::BoundaryPressure { pressure, .. } => {
                            let nrm = face_outward(f, tangent);
                            for a in 0..nvl {
                                out[a] -= w * pressure * nrm[0] * val[a];
                                out[nvl + a] -= w * pressure * nrm[1] * val[a];
                            }
                        }
                        _ => {}
                    }
                }
            }
        }
        touched
    }

    /// `F_T(φ)` for an arbitrary test function given on reference coordinates
    /// as `(velocity, pressure)`, with an `n`-point Gauss rule.
    pub fn cell_apply(
        &self,
        mesh: &QuadMesh,
        c: usize,
        n: usize,
        test: &mut dyn FnMut(f64, f64) -> ([f64; 2], f64),
    ) -> f64 {
        let region = mesh.region(c);
        let nodes = mesh.geometry_nodes(c);
        let (tp, tw) = gauss_legendre(n);
        let mut total = 0.0;
        let has_volume = self.f.loads.iter().any(|l| match l {
            Load::Volume { region: r, .. } | Load::VolumePressure { region: r, .. } => r.contains(region),
            _ => false,
        });
        if has_volume {
            for (j, wj) in tw.iter().enumerate() {
                for (i, wi) in tw.iter().enumerate() {
                    let (xi, eta) = (tp[i], tp[j]);
                    let g = geometry_at(nodes, xi, eta);
                    let w = wi * wj * g.det;
                    let (v, q) = test(xi, eta);
                    for load in &self.f.loads {
                        match load {
                            Load::Volume { region: r, density } if r.contains(region) => {
                                let fv = density.at(g.x);
                                total += w * (fv[0] * v[0] + fv[1] * v[1]);
                            }
                            Load::VolumePressure { region: r, weight } if r.contains(region) => {
                                total += w * weight * q;
                            }
                            _ => {}
                        }
                    }
                }
            }
        }
        if let Some(list) = self.faces.get(&c) {
            for &(li, f) in list {
                for (t, wt) in tp.iter().zip(&tw) {
                    let (xi, eta) = face_point(f, *t);
                    let g = geometry_at(nodes, xi, eta);
                    let tangent = [g.jac[0][f % 2], g.jac[1][f % 2]];
                    let w = wt * (tangent[0].powi(2) + tangent[1].powi(2)).sqrt();
                    let (v, q) = test(xi, eta);
                    total += w * match &self.f.loads[li] {
                        Load::Line { density, .. } => density[0] * v[0] + density[1] * v[1],
                        Load::LinePressure { weight, .. } => weight * q,
                        Load::BoundaryPressure { pressure, .. } => {
                            let nrm = face_outward(f, tangent);
                            -pressure * (nrm[0] * v[0] + nrm[1] * v[1])
                        }
                        _ => 0.0,
                    };
                }
            }
        }
        total
    }

    /// Full-length load vector over all dofs (constrained ones included).
    pub fn global_vector(&self, dofs: &DofMap) -> Vec<f64> {
        let mut out = vec![0.0; dofs.n_total()];
        let mut local = vec![0.0; dofs.n_local()];
        let mut gd = Vec::new();
        for c in 0..dofs.mesh().n_cells() {
            if self.cell_vector(dofs, c, &mut local) {
                dofs.cell_global_dofs(c, &mut gd);
                for (i, &d) in gd.iter().enumerate() {
                    out[d] += local[i];
                }
            }
        }
        out
    }

    /// `L(field)`.
    pub fn apply(&self, field: &FlowField) -> f64 {
        let dofs = field.dofs();
        self.global_vector(dofs)
            .iter()
            .zip(field.values())
            .map(|(a, b)| a * b)
            .sum()
    }
}
