//! Dual-weighted-residual estimation and goal-oriented refinement.

use std::fmt::Write as _;
use std::collections::HashSet;
use std::sync::Arc;

use crate::fem::{
    build_constraints, gauss_legendre, BcSpec, DirichletBc, DofMap, ScalarSpace, FlowField, LineSpec, LinearFunctional, Load,
    RegionFilter, StokesProblem, TensorBasis, VectorData,
};
use crate::meshkit::QuadMesh;
use crate::{Error, Result};

/// Functional whose discretization error is controlled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GoalKind {
    /// `∫₀¹ v₁(y₁, 0)`
    C1,
    /// `∫₀¹ p(y₁, a)`
    Cw { a: f64 },
    /// `∫ v_j` of the cell problem in direction `i`.
    Permeability { i: usize, j: usize },
    /// `∫_{Ω_f} v₁`
    MassFlow,
}

impl GoalKind {
    pub fn name(&self) -> String {
        match self {
            GoalKind::C1 => "c1bl".into(),
            GoalKind::Cw { a } => format!("cwbl(a={a})"),
            GoalKind::Permeability { i, j } => format!("K{}{}", i + 1, j + 1),
            GoalKind::MassFlow => "mass_flow".into(),
        }
    }

    pub fn functional(&self) -> LinearFunctional {
        let load = match *self {
            GoalKind::C1 => Load::Line {
                line: LineSpec::new(0.0, 0.0, 1.0),
                density: [1.0, 0.0],
            },
            GoalKind::Cw { a } => Load::LinePressure {
                line: LineSpec::new(a, 0.0, 1.0),
                weight: 1.0,
            },
            GoalKind::Permeability { j, .. } => {
                let mut e = [0.0; 2];
                e[j] = 1.0;
                Load::Volume {
                    region: RegionFilter::All,
                    density: VectorData::Const(e),
                }
            }
            GoalKind::MassFlow => Load::Volume {
                region: RegionFilter::Free,
                density: VectorData::Const([1.0, 0.0]),
            },
        };
        LinearFunctional::new(vec![load])
    }

    pub fn evaluate(&self, field: &FlowField) -> Result<f64> {
        let f = self.functional();
        Ok(f.prepare(field.mesh())?.apply(field))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptOptions {
    pub tol: f64,
    /// Fixed-fraction marking parameter.
    pub theta: f64,
    /// Largest primal system (dofs) the loop may solve.
    pub max_dofs: usize,
    pub max_cycles: usize,
}

impl AdaptOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            theta: 0.3,
            max_dofs: 400_000,
            max_cycles: 40,
        }
    }
}

/// Signed estimate `η ≈ J(u) − J(u_h)` with its cellwise split.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorEstimate {
    pub eta: f64,
    pub eta_cell: Vec<f64>,
    pub dofs: usize,
}

impl ErrorEstimate {
    pub fn abs_sum(&self) -> f64 {
        self.eta_cell.iter().map(|e| e.abs()).sum()
    }
}

/// Homogeneous version of the primal boundary conditions.
fn homogeneous(bc: &BcSpec) -> BcSpec {
    BcSpec {
        dirichlet: bc
            .dirichlet
            .iter()
            .map(|d| DirichletBc {
                tag: d.tag,
                components: d.components,
                value: VectorData::Const([0.0; 2]),
            })
            .collect(),
        normalization: bc.normalization.clone(),
    }
}

/// Adjoint solution in the enriched space (velocity degree + 1) with the goal as load.
pub fn solve_dual(mesh: &Arc<QuadMesh>, problem: &StokesProblem, goal: &LinearFunctional) -> Result<FlowField> {
    let dual = StokesProblem {
        bc: homogeneous(&problem.bc),
        rhs: goal.clone(),
        degree: problem.degree + 1,
    };
    dual.solve(mesh.clone())
}

/// Nodal interpolant of an enriched-space field into `dofs`, with the
/// homogeneous constraints of `bc` applied.
pub fn interpolate(field: &FlowField, dofs: &Arc<DofMap>, bc: &BcSpec) -> Result<FlowField> {
    let cons = build_constraints(dofs, &homogeneous(bc))?;
    let mut values = vec![0.0; dofs.n_total()];
    let vb = dofs.velocity.basis;
    let pb = dofs.pressure.basis;
    let nv = dofs.nv();
    let off = dofs.n_velocity();
    for c in 0..dofs.mesh().n_cells() {
        let ce = field.cell(c);
        for (i, &d) in dofs.velocity.cell_dofs(c).iter().enumerate() {
            let (x, y) = vb.node(i);
            let pv = ce.at(x, y);
            values[d as usize] = pv.v[0];
            values[nv + d as usize] = pv.v[1];
        }
        for (i, &d) in dofs.pressure.cell_dofs(c).iter().enumerate() {
            let (x, y) = pb.node(i);
            values[off + d as usize] = ce.at(x, y).p;
        }
    }
    cons.distribute(&mut values);
    Ok(FlowField::new(dofs.clone(), values))
}

/// Weighted residual `ρ(u_h)(z − I_h z)` localized with the continuous Q1
/// partition of unity `{Ψ_j}`: `η_j = F((z − I_h z)Ψ_j) − a(u_h, (z − I_h z)Ψ_j)`.
/// Node values are shared out equally among the cells having the node as a vertex.
pub fn dwr_estimate(primal: &FlowField, dual: &FlowField, problem: &StokesProblem) -> Result<ErrorEstimate> {
    let mesh = primal.mesh();
    if !Arc::ptr_eq(mesh, dual.mesh()) {
        return Err(Error::MeshMismatch {
            expected: mesh.hash(),
            found: dual.mesh().hash(),
        });
    }
    let k = primal.dofs().velocity_degree();
    if dual.dofs().velocity_degree() != k + 1 {
        return Err(Error::Invalid("dual must use the enriched space".into()));
    }
    let ihz = interpolate(dual, primal.dofs(), &problem.bc)?;
    let pu = ScalarSpace::new(mesh, 1);
    let n = k + 3;
    let (tp, tw) = gauss_legendre(n);
    let q1 = TensorBasis::new(1);
    let prepared = problem.rhs.prepare(mesh)?;
    let mut eta_node = vec![0.0; pu.n_dofs()];
    let mut psi = [0.0; 4];
    let mut dpsi = [[0.0; 2]; 4];
    for c in 0..mesh.n_cells() {
        let (cu, cz, ci) = (primal.cell(c), dual.cell(c), ihz.cell(c));
        let mut r = [0.0; 4];
        for (j, wj) in tw.iter().enumerate() {
            for (i, wi) in tw.iter().enumerate() {
                let (xi, eta) = (tp[i], tp[j]);
                let g = cu.geometry(xi, eta);
                let w = wi * wj * g.det;
                let u = cu.at_with(&g, xi, eta);
                let z = cz.at_with(&g, xi, eta);
                let iz = ci.at_with(&g, xi, eta);
                let wv = [z.v[0] - iz.v[0], z.v[1] - iz.v[1]];
                let wp = z.p - iz.p;
                let mut gw = [[0.0; 2]; 2];
                for a in 0..2 {
                    for b in 0..2 {
                        gw[a][b] = z.grad[a][b] - iz.grad[a][b];
                    }
                }
                q1.eval(xi, eta, &mut psi, &mut dpsi);
                let gu = u.grad;
                let div_u = gu[0][0] + gu[1][1];
                let div_w = gw[0][0] + gw[1][1];
                for a in 0..4 {
                    let dp = g.grad(dpsi[a]);
                    let mut visc = 0.0;
                    for ii in 0..2 {
                        for jj in 0..2 {
                            let phi = gw[ii][jj] * psi[a] + wv[ii] * dp[jj];
                            visc += (gu[ii][jj] + gu[jj][ii]) * phi;
                        }
                    }
                    let div_phi = div_w * psi[a] + wv[0] * dp[0] + wv[1] * dp[1];
                    r[a] -= w * (visc - u.p * div_phi - wp * psi[a] * div_u);
                }
            }
        }
        for (a, ra) in r.iter_mut().enumerate() {
            *ra += prepared.cell_apply(mesh, c, n, &mut |xi, eta| {
                let z = cz.at(xi, eta);
                let iz = ci.at(xi, eta);
                let mut psi = [0.0; 4];
                let mut dpsi = [[0.0; 2]; 4];
                q1.eval(xi, eta, &mut psi, &mut dpsi);
                (
                    [psi[a] * (z.v[0] - iz.v[0]), psi[a] * (z.v[1] - iz.v[1])],
                    psi[a] * (z.p - iz.p),
                )
            });
        }
        for (a, &d) in pu.cell_dofs(c).iter().enumerate() {
            eta_node[d as usize] += r[a];
        }
    }
    for (h, expr) in pu.hanging() {
        let v = std::mem::take(&mut eta_node[*h]);
        for &(j, wt) in expr {
            eta_node[j] += wt * v;
        }
    }
    let hanging: HashSet<usize> = pu.hanging().iter().map(|(h, _)| *h).collect();
    let mut count = vec![0u32; pu.n_dofs()];
    for c in 0..mesh.n_cells() {
        for &d in pu.cell_dofs(c) {
            count[d as usize] += 1;
        }
    }
    let eta_cell: Vec<f64> = (0..mesh.n_cells())
        .map(|c| {
            pu.cell_dofs(c)
                .iter()
                .filter(|&&d| !hanging.contains(&(d as usize)))
                .map(|&d| eta_node[d as usize] / count[d as usize] as f64)
                .sum()
        })
        .collect();
    let eta = eta_node.iter().sum();
    Ok(ErrorEstimate {
        eta,
        eta_cell,
        dofs: primal.dofs().n_total(),
    })
}

/// Smallest set of cells carrying at least `theta` of `Σ|η_T|`; ties by cell id.
pub fn mark_cells(eta_cell: &[f64], theta: f64) -> Result<Vec<bool>> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::Invalid(format!("marking fraction must lie in (0,1], got {theta}")));
    }
    let mut order: Vec<usize> = (0..eta_cell.len()).collect();
    order.sort_by(|&a, &b| {
        eta_cell[b]
            .abs()
            .partial_cmp(&eta_cell[a].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let total: f64 = eta_cell.iter().map(|e| e.abs()).sum();
    let mut marks = vec![false; eta_cell.len()];
    if total == 0.0 {
        return Ok(marks);
    }
    let target = theta * total * (1.0 - 1e-12);
    let mut acc = 0.0;
    for &c in &order {
        if eta_cell[c] == 0.0 || (acc >= target && theta < 1.0) {
            break;
        }
        marks[c] = true;
        acc += eta_cell[c].abs();
    }
    Ok(marks)
}

/// One iteration of the adaptive loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRow {
    pub dofs: usize,
    pub value: f64,
    pub eta: f64,
}

#[derive(Debug, Clone)]
pub struct AdaptResult {
    pub field: FlowField,
    pub estimate: ErrorEstimate,
    pub value: f64,
    pub history: Vec<HistoryRow>,
    /// `false` when the loop stopped on the budget before reaching the tolerance.
    pub converged: bool,
}

impl AdaptResult {
    pub fn history_csv(&self) -> String {
        let mut s = String::from("dofs,value,eta\n");
        for h in &self.history {
            let _ = writeln!(s, "{},{:.12e},{:.12e}", h.dofs, h.value, h.eta);
        }
        s
    }
}

/// Primal solve, dual solve and estimate on a fixed mesh; returns the primal
/// field, the estimate and the computed goal value.
pub fn estimate_on(
    mesh: &Arc<QuadMesh>,
    problem: &StokesProblem,
    goal: GoalKind,
) -> Result<(FlowField, ErrorEstimate, f64)> {
    let primal = problem.solve(mesh.clone())?;
    let dual = solve_dual(mesh, problem, &goal.functional())?;
    let est = dwr_estimate(&primal, &dual, problem)?;
    let value = goal.evaluate(&primal)?;
    Ok((primal, est, value))
}

/// Solve → dual → estimate → mark → refine until `|η| < tol` or the budget is hit.
pub fn adapt_to_tolerance(
    mesh: QuadMesh,
    problem: &StokesProblem,
    goal: GoalKind,
    opts: &AdaptOptions,
) -> Result<AdaptResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::Invalid(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let mut mesh = Arc::new(mesh);
    let mut history = Vec::new();
    for cycle in 0.. {
        let (primal, est, value) = estimate_on(&mesh, problem, goal)?;
        log::info!(
            "adapt {} cycle {cycle}: {} cells, {} dofs, J={value:.13} eta={:.3e}",
            goal.name(),
            mesh.n_cells(),
            est.dofs,
            est.eta
        );
        history.push(HistoryRow {
            dofs: est.dofs,
            value,
            eta: est.eta,
        });
        let done = |converged| AdaptResult {
            field: primal.clone(),
            estimate: est.clone(),
            value,
            history: history.clone(),
            converged,
        };
        if est.eta.abs() < opts.tol {
            return Ok(done(true));
        }
        if cycle + 1 >= opts.max_cycles {
            log::warn!("adaptive loop stopped after {} cycles with eta {:.3e}", cycle + 1, est.eta);
            return Ok(done(false));
        }
        let marks = mark_cells(&est.eta_cell, opts.theta)?;
        let next = Arc::new(mesh.refine(&marks)?);
        let next_dofs = DofMap::with_degree(next.clone(), problem.degree).n_total();
        if next_dofs > opts.max_dofs {
            log::warn!(
                "adaptive loop stopped: next mesh needs {next_dofs} dofs (budget {}), eta {:.3e}",
                opts.max_dofs,
                est.eta
            );
            return Ok(done(false));
        }
        mesh = next;
    }
    unreachable!()
}
