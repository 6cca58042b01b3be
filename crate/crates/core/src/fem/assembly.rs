use std::sync::Arc;

use crate::{Error, Result};

use super::basis::{geometry_from_tables, QuadTables, TensorBasis};
use super::constraints::{ConstraintSet, Normalization};
use super::dofs::DofMap;
use super::functional::{Load, LinearFunctional};

const FREE: u32 = u32::MAX;

/// Compressed sparse column matrix with sorted row indices.
#[derive(Debug, Clone)]
pub struct CscMatrix {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CscMatrix {
    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn position(&self, row: usize, col: usize) -> Option<usize> {
        let (a, b) = (self.col_ptr[col], self.col_ptr[col + 1]);
        self.row_idx[a..b].binary_search(&row).ok().map(|p| a + p)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.position(row, col).map_or(0.0, |p| self.values[p])
    }

    /// `y = A x`
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (col, &xc) in x.iter().enumerate().take(self.n) {
            if xc == 0.0 {
                continue;
            }
            for p in self.col_ptr[col]..self.col_ptr[col + 1] {
                y[self.row_idx[p]] += self.values[p] * xc;
            }
        }
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Constrained saddle-point system over the unconstrained dofs, optionally
/// bordered by one pressure-normalization multiplier.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub dofs: Arc<DofMap>,
    pub constraints: Arc<ConstraintSet>,
    pub matrix: CscMatrix,
    pub rhs: Vec<f64>,
    /// Unknown index of each dof, `None` for constrained dofs.
    pub unknown_of: Vec<Option<usize>>,
    pub dof_of: Vec<usize>,
    pub multiplier: Option<usize>,
    pub n_velocity_unknowns: usize,
    pub n_pressure_unknowns: usize,
}

impl SaddleSystem {
    pub fn n_unknowns(&self) -> usize {
        self.rhs.len()
    }
}

/// Expansion of every dof through the closed constraints into unknowns.
struct Expansion {
    unknown: Vec<u32>,
    ptr: Vec<usize>,
    terms: Vec<(u32, f64)>,
    inhom: Vec<f64>,
}

impl Expansion {
    fn new(cons: &ConstraintSet, n: usize) -> (Self, Vec<usize>) {
        let mut unknown = vec![FREE; n];
        let mut dof_of = Vec::new();
        for (d, u) in unknown.iter_mut().enumerate() {
            if !cons.is_constrained(d) {
                *u = dof_of.len() as u32;
                dof_of.push(d);
            }
        }
        let mut ptr = vec![0usize; n + 1];
        let mut terms = Vec::new();
        let mut inhom = vec![0.0; n];
        for d in 0..n {
            if let Some(c) = cons.get(d) {
                for &(t, w) in &c.terms {
                    terms.push((unknown[t], w));
                }
                inhom[d] = c.inhom;
            }
            ptr[d + 1] = terms.len();
        }
        (
            Self {
                unknown,
                ptr,
                terms,
                inhom,
            },
            dof_of,
        )
    }

    fn for_each(&self, d: usize, mut f: impl FnMut(u32, f64)) {
        if self.unknown[d] != FREE {
            f(self.unknown[d], 1.0);
        } else {
            for &(u, w) in &self.terms[self.ptr[d]..self.ptr[d + 1]] {
                f(u, w);
            }
        }
    }
}

/// Element matrix of `∫(∇v+∇vᵀ):∇φ − ∫p ∇·φ − ∫ψ ∇·v` on one cell.
pub(crate) fn local_stokes(
    nodes: &[[f64; 2]; 9],
    vt: &QuadTables,
    pt: &QuadTables,
    gt: &QuadTables,
    k: &mut [f64],
    nl: usize,
) {
    let nvl = vt.val[0].len();
    let npl = pt.val[0].len();
    k.iter_mut().for_each(|v| *v = 0.0);
    let mut g = vec![[0.0; 2]; nvl];
    for q in 0..vt.points.len() {
        let geo = geometry_from_tables(nodes, &gt.val[q], &gt.grad[q]);
        let w = vt.weights[q] * geo.det;
        for a in 0..nvl {
            g[a] = geo.grad(vt.grad[q][a]);
        }
        for a in 0..nvl {
            for b in 0..nvl {
                let lap = w * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                for c in 0..2 {
                    for e in 0..2 {
                        let mut s = w * g[b][c] * g[a][e];
                        if c == e {
                            s += lap;
                        }
                        k[(c * nvl + a) * nl + e * nvl + b] += s;
                    }
                }
            }
            for j in 0..npl {
                let psi = pt.val[q][j];
                for c in 0..2 {
                    let s = -w * psi * g[a][c];
                    k[(c * nvl + a) * nl + 2 * nvl + j] += s;
                    k[(2 * nvl + j) * nl + c * nvl + a] += s;
                }
            }
        }
    }
}

/// Quadrature tables for a Taylor–Hood pair of velocity degree `k`.
pub(crate) fn tables(k: usize) -> (QuadTables, QuadTables, QuadTables) {
    let n = k + 2;
    (
        QuadTables::new(TensorBasis::new(k), n),
        QuadTables::new(TensorBasis::new(k - 1), n),
        QuadTables::new(TensorBasis::new(2), n),
    )
}

/// Assembles the constrained Stokes system with right-hand side `rhs`.
pub fn assemble_stokes(
    dofs: &Arc<DofMap>,
    constraints: &Arc<ConstraintSet>,
    rhs: &LinearFunctional,
) -> Result<SaddleSystem> {
    if !constraints.is_closed() {
        return Err(Error::Invalid("constraints must be closed before assembly".into()));
    }
    let mesh = dofs.mesh();
    let n_dofs = dofs.n_total();
    let (exp, dof_of) = Expansion::new(constraints, n_dofs);
    let n_free = dof_of.len();
    let n_vel_unknowns = dof_of.iter().filter(|&&d| !dofs.is_pressure(d)).count();

    // pressure normalization weights over unknowns
    let norm_weights: Option<Vec<f64>> = match &constraints.normalization {
        Normalization::None => None,
        other => {
            let load = match other {
                Normalization::MeanPressure(region) => Load::VolumePressure {
                    region: *region,
                    weight: 1.0,
                },
                Normalization::LinePressure(line) => Load::LinePressure {
                    line: *line,
                    weight: 1.0,
                },
                Normalization::None => unreachable!(),
            };
            let lf = LinearFunctional::new(vec![load]);
            let full = lf.prepare(mesh)?.global_vector(dofs);
            let mut w = vec![0.0; n_free];
            for (d, &m) in full.iter().enumerate() {
                if m != 0.0 {
                    exp.for_each(d, |u, wt| w[u as usize] += wt * m);
                }
            }
            Some(w)
        }
    };
    let n = n_free + norm_weights.is_some() as usize;
    let mult = norm_weights.as_ref().map(|_| n_free);

    // cell unknown lists
    let n_cells = mesh.n_cells();
    let mut gd = Vec::new();
    let mut cell_ptr = vec![0usize; n_cells + 1];
    let mut cell_unknowns: Vec<u32> = Vec::new();
    let mut scratch: Vec<u32> = Vec::new();
    for c in 0..n_cells {
        dofs.cell_global_dofs(c, &mut gd);
        scratch.clear();
        for &d in &gd {
            exp.for_each(d, |u, _| scratch.push(u));
        }
        scratch.sort_unstable();
        scratch.dedup();
        cell_unknowns.extend_from_slice(&scratch);
        cell_ptr[c + 1] = cell_unknowns.len();
    }

    // pattern: unknown -> cells, then per column union
    let mut counts = vec![0usize; n_free + 1];
    for &u in &cell_unknowns {
        counts[u as usize + 1] += 1;
    }
    for i in 0..n_free {
        counts[i + 1] += counts[i];
    }
    let mut u_cells = vec![0u32; cell_unknowns.len()];
    let mut fill = counts.clone();
    for c in 0..n_cells {
        for &u in &cell_unknowns[cell_ptr[c]..cell_ptr[c + 1]] {
            u_cells[fill[u as usize]] = c as u32;
            fill[u as usize] += 1;
        }
    }
    let mut col_ptr = Vec::with_capacity(n + 1);
    col_ptr.push(0usize);
    let mut row_idx: Vec<usize> = Vec::new();
    let mut marker = vec![usize::MAX; n_free];
    let mut col: Vec<usize> = Vec::new();
    for s in 0..n_free {
        col.clear();
        for &c in &u_cells[counts[s]..counts[s + 1]] {
            let c = c as usize;
            for &r in &cell_unknowns[cell_ptr[c]..cell_ptr[c + 1]] {
                if marker[r as usize] != s {
                    marker[r as usize] = s;
                    col.push(r as usize);
                }
            }
        }
        if let Some(w) = &norm_weights {
            if w[s] != 0.0 {
                col.push(n_free);
            }
        }
        col.sort_unstable();
        row_idx.extend_from_slice(&col);
        col_ptr.push(row_idx.len());
    }
    if let Some(w) = &norm_weights {
        for (r, &wr) in w.iter().enumerate() {
            if wr != 0.0 {
                row_idx.push(r);
            }
        }
        col_ptr.push(row_idx.len());
    }
    drop(u_cells);
    drop(marker);

    let mut matrix = CscMatrix {
        n,
        col_ptr,
        row_idx,
        values: Vec::new(),
    };
    matrix.values = vec![0.0; matrix.row_idx.len()];
    let mut b = vec![0.0; n];

    let k = dofs.velocity_degree();
    let (vt, pt, gt) = tables(k);
    let nl = dofs.n_local();
    let mut ke = vec![0.0; nl * nl];
    let mut fe = vec![0.0; nl];
    let prepared = rhs.prepare(mesh)?;
    let mut local_exp: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nl];
    let mut dense: Vec<f64> = Vec::new();
    for c in 0..n_cells {
        dofs.cell_global_dofs(c, &mut gd);
        let cu = &cell_unknowns[cell_ptr[c]..cell_ptr[c + 1]];
        let m = cu.len();
        for (i, &d) in gd.iter().enumerate() {
            local_exp[i].clear();
            exp.for_each(d, |u, w| {
                let idx = cu.binary_search(&u).expect("unknown listed for cell");
                local_exp[i].push((idx, w));
            });
        }
        local_stokes(mesh.geometry_nodes(c), &vt, &pt, &gt, &mut ke, nl);
        let has_load = prepared.cell_vector(dofs, c, &mut fe);
        dense.clear();
        dense.resize(m * m, 0.0);
        for i in 0..nl {
            let mut fi = if has_load { fe[i] } else { 0.0 };
            for j in 0..nl {
                let kij = ke[i * nl + j];
                if kij == 0.0 {
                    continue;
                }
                let g = exp.inhom[gd[j]];
                if g != 0.0 {
                    fi -= kij * g;
                }
                for &(ri, wi) in &local_exp[i] {
                    for &(sj, wj) in &local_exp[j] {
                        dense[sj * m + ri] += wi * wj * kij;
                    }
                }
            }
            if fi != 0.0 {
                for &(ri, wi) in &local_exp[i] {
                    b[cu[ri] as usize] += wi * fi;
                }
            }
        }
        for (sj, &s) in cu.iter().enumerate() {
            let s = s as usize;
            let (a, e) = (matrix.col_ptr[s], matrix.col_ptr[s + 1]);
            let rows = &matrix.row_idx[a..e];
            for (ri, &r) in cu.iter().enumerate() {
                let v = dense[sj * m + ri];
                if v != 0.0 {
                    let p = rows.binary_search(&(r as usize)).expect("pattern entry");
                    matrix.values[a + p] += v;
                }
            }
        }
    }
    if let (Some(w), Some(mi)) = (&norm_weights, mult) {
        for (r, &wr) in w.iter().enumerate() {
            if wr != 0.0 {
                let p = matrix.position(mi, r).expect("multiplier row");
                matrix.values[p] = wr;
                let p = matrix.position(r, mi).expect("multiplier column");
                matrix.values[p] = wr;
            }
        }
    }

    let system = SaddleSystem {
        dofs: dofs.clone(),
        constraints: constraints.clone(),
        matrix,
        rhs: b,
        unknown_of: exp
            .unknown
            .iter()
            .map(|&u| (u != FREE).then_some(u as usize))
            .collect(),
        dof_of,
        multiplier: mult,
        n_velocity_unknowns: n_vel_unknowns,
        n_pressure_unknowns: n_free - n_vel_unknowns,
    };
    if mult.is_none() {
        check_pressure_kernel(&system)?;
    }
    Ok(system)
}

/// Flags a constant-pressure null space left open by the boundary conditions.
fn check_pressure_kernel(system: &SaddleSystem) -> Result<()> {
    let nv = system.n_velocity_unknowns;
    let n = system.n_unknowns();
    if system.n_pressure_unknowns == 0 {
        return Ok(());
    }
    let mut e = vec![0.0; n];
    for v in e.iter_mut().skip(nv) {
        *v = 1.0;
    }
    let y = system.matrix.matvec(&e);
    let defect = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut coupling = 0.0f64;
    for col in nv..n {
        for p in system.matrix.col_ptr[col]..system.matrix.col_ptr[col + 1] {
            if system.matrix.row_idx[p] < nv {
                coupling = coupling.max(system.matrix.values[p].abs());
            }
        }
    }
    if defect <= 1e-10 * coupling {
        return Err(Error::SingularSystem(format!(
            "constant pressure lies in the kernel (defect {defect:e} vs coupling {coupling:e}); \
             a pressure normalization is required"
        )));
    }
    Ok(())
}
