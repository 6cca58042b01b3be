use std::sync::Arc;

use crate::adaptivity::{adapt_to_tolerance, estimate_on, AdaptOptions, AdaptResult, ErrorEstimate, GoalKind, HistoryRow};
use crate::fem::{
    integrate_line, BcSpec, DirichletBc, FlowField, LineSide, LineSpec, LinearFunctional, Load,
    Normalization, StokesProblem,
};
use crate::meshkit::{build_bl_mesh, BoundaryTag, InclusionSpec};
use crate::{Error, Result};

/// How a driver discretizes: a fixed uniform level or a goal-oriented loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveMode {
    Uniform { refine: usize },
    Adaptive { goal: GoalKind, options: AdaptOptions },
}

/// Slip and pressure-jump constants of the Navier boundary layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryLayerConstants {
    pub c1bl: f64,
    pub cwbl: f64,
    pub eta_c1: Option<f64>,
    pub eta_cw: Option<f64>,
    pub cutoff_k: usize,
    pub cutoff_l: usize,
    /// Height of the line on which `cwbl` was evaluated.
    pub a: f64,
}

/// Stokes problem on the cut-off column `Z_l^k`: a unit shear load on `Σ`,
/// `v₂ = 0` on `Γ_k`, no-slip on `Γ_l` and the inclusions, `∫_{Γ_l} ω = 0`.
pub fn bl_problem(l: usize) -> StokesProblem {
    let bc = BcSpec {
        dirichlet: vec![
            DirichletBc::no_slip(BoundaryTag::Inclusion),
            DirichletBc::no_slip(BoundaryTag::BlBottom),
            DirichletBc::normal_zero(BoundaryTag::BlTop, 1),
        ],
        normalization: Normalization::LinePressure(LineSpec::new(-(l as f64), 0.0, 1.0)),
    };
    let rhs = LinearFunctional::new(vec![Load::Line {
        line: LineSpec::new(0.0, 0.0, 1.0),
        density: [-1.0, 0.0],
    }]);
    StokesProblem::new(bc, rhs)
}

/// `∫₀¹ β₁(y₁, 0)` and `∫₀¹ ω(y₁, a)`.
pub fn compute_constants(field: &FlowField, a: f64) -> Result<(f64, f64)> {
    let c1 = integrate_line(field, &LineSpec::new(0.0, 0.0, 1.0), |pv| pv.v[0])?;
    let cw = integrate_line(field, &LineSpec::new(a, 0.0, 1.0).side(LineSide::Auto), |pv| pv.p)?;
    Ok((c1, cw))
}

/// Result of one boundary-layer solve.
#[derive(Debug, Clone)]
pub struct BoundaryLayerRun {
    pub field: FlowField,
    pub constants: BoundaryLayerConstants,
    pub estimate: Option<ErrorEstimate>,
    pub adapt: Option<AdaptResult>,
}

pub fn solve_boundary_layer(
    inclusion: &InclusionSpec,
    k: usize,
    l: usize,
    mode: SolveMode,
) -> Result<BoundaryLayerRun> {
    let a = 1.0f64.min(k as f64);
    match mode {
        SolveMode::Uniform { refine } => {
            let mesh = Arc::new(build_bl_mesh(inclusion, k, l, refine)?);
            let field = bl_problem(l).solve(mesh)?;
            let (c1bl, cwbl) = compute_constants(&field, a)?;
            Ok(BoundaryLayerRun {
                field,
                constants: BoundaryLayerConstants {
                    c1bl,
                    cwbl,
                    eta_c1: None,
                    eta_cw: None,
                    cutoff_k: k,
                    cutoff_l: l,
                    a,
                },
                estimate: None,
                adapt: None,
            })
        }
        SolveMode::Adaptive { goal, options } => {
            let goal = match goal {
                GoalKind::C1 | GoalKind::Cw { .. } => goal,
                other => {
                    return Err(Error::Invalid(format!(
                        "goal {other:?} does not apply to the boundary-layer problem"
                    )))
                }
            };
            let mesh = build_bl_mesh(inclusion, k, l, 0)?;
            let res = adapt_to_tolerance(mesh, &bl_problem(l), goal, &options)?;
            let a = match goal {
                GoalKind::Cw { a } => a,
                _ => a,
            };
            let (c1bl, cwbl) = compute_constants(&res.field, a)?;
            let eta = res.estimate.eta;
            let (eta_c1, eta_cw) = match goal {
                GoalKind::C1 => (Some(eta), None),
                _ => (None, Some(eta)),
            };
            Ok(BoundaryLayerRun {
                field: res.field.clone(),
                constants: BoundaryLayerConstants {
                    c1bl,
                    cwbl,
                    eta_c1,
                    eta_cw,
                    cutoff_k: k,
                    cutoff_l: l,
                    a,
                },
                estimate: Some(res.estimate.clone()),
                adapt: Some(res),
            })
        }
    }
}

/// Goal value and DWR estimate on the uniformly refined meshes `levels`.
pub fn efficiency_series(
    inclusion: &InclusionSpec,
    k: usize,
    l: usize,
    goal: GoalKind,
    levels: std::ops::RangeInclusive<usize>,
) -> Result<Vec<HistoryRow>> {
    let problem = bl_problem(l);
    let mut rows = Vec::new();
    for r in levels {
        let mesh = Arc::new(build_bl_mesh(inclusion, k, l, r)?);
        let (_, est, value) = estimate_on(&mesh, &problem, goal)?;
        log::info!("uniform level {r}: {} dofs, J={value:.13} eta={:.3e}", est.dofs, est.eta);
        rows.push(HistoryRow {
            dofs: est.dofs,
            value,
            eta: est.eta,
        });
    }
    Ok(rows)
}

/// One row of the cut-off study: `|C(Z_k^k) − C(Z_K^K)|` for both constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffRow {
    pub k: usize,
    pub c1: f64,
    pub cw: f64,
    pub diff_c1: f64,
    pub diff_cw: f64,
}

/// Solves `Z_k^k` for `k = 1..=k_max` and reports the distance to the largest
/// column. Columns share the per-unit-block mesh so that discretization errors
/// are nearly identical and cancel in the differences.
pub fn cutoff_study(inclusion: &InclusionSpec, k_max: usize, refine: usize) -> Result<Vec<CutoffRow>> {
    if k_max < 2 {
        return Err(Error::Invalid(format!("cut-off study needs k_max >= 2, got {k_max}")));
    }
    let mut vals = Vec::new();
    for k in 1..=k_max {
        let run = solve_boundary_layer(inclusion, k, k, SolveMode::Uniform { refine })?;
        log::info!(
            "cut-off k={k}: C1={:.13} Cw={:.13}",
            run.constants.c1bl,
            run.constants.cwbl
        );
        vals.push((run.constants.c1bl, run.constants.cwbl));
    }
    let (r1, rw) = vals[k_max - 1];
    Ok(vals[..k_max - 1]
        .iter()
        .enumerate()
        .map(|(i, &(c1, cw))| CutoffRow {
            k: i + 1,
            c1,
            cw,
            diff_c1: (c1 - r1).abs(),
            diff_cw: (cw - rw).abs(),
        })
        .collect())
}
