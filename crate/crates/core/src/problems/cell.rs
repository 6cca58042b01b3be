use std::sync::Arc;

use crate::adaptivity::{adapt_to_tolerance, AdaptOptions, GoalKind};
use crate::fem::{
    integrate_domain, BcSpec, DirichletBc, FlowField, LinearFunctional, Load, Normalization,
    RegionFilter, StokesProblem, VectorData,
};
use crate::meshkit::{build_unit_cell_mesh, BoundaryTag, InclusionSpec};
use crate::{Error, Result};

use super::bl::SolveMode;

/// Periodic cell problem with unit force `e_i`, no-slip on the inclusion and
/// mean-zero pressure.
pub fn cell_problem(i: usize) -> StokesProblem {
    let mut f = [0.0; 2];
    f[i] = 1.0;
    StokesProblem::new(
        BcSpec {
            dirichlet: vec![DirichletBc::no_slip(BoundaryTag::Inclusion)],
            normalization: Normalization::MeanPressure(RegionFilter::All),
        },
        LinearFunctional::new(vec![Load::Volume {
            region: RegionFilter::All,
            density: VectorData::Const(f),
        }]),
    )
}

/// Solves the cell problem for direction `i ∈ {0, 1}`.
pub fn solve_cell_problem(inclusion: &InclusionSpec, i: usize, mode: SolveMode) -> Result<FlowField> {
    if i > 1 {
        return Err(Error::Invalid(format!("cell problem direction must be 0 or 1, got {i}")));
    }
    match mode {
        SolveMode::Uniform { refine } => {
            let mesh = Arc::new(build_unit_cell_mesh(inclusion, refine)?);
            cell_problem(i).solve(mesh)
        }
        SolveMode::Adaptive { goal, options } => {
            let goal = match goal {
                GoalKind::Permeability { .. } | GoalKind::MassFlow => goal,
                _ => GoalKind::Permeability { i, j: i },
            };
            run_adaptive(inclusion, i, goal, &options)
        }
    }
}

fn run_adaptive(inclusion: &InclusionSpec, i: usize, goal: GoalKind, options: &AdaptOptions) -> Result<FlowField> {
    let mesh = build_unit_cell_mesh(inclusion, 0)?;
    Ok(adapt_to_tolerance(mesh, &cell_problem(i), goal, options)?.field)
}

/// Rescaled permeability `K_ij = ∫_{Y_f} w^i_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermeabilityTensor {
    pub k: [[f64; 2]; 2],
}

impl PermeabilityTensor {
    pub fn symmetry_defect(&self) -> f64 {
        (self.k[0][1] - self.k[1][0]).abs()
    }

    pub fn isotropy_defect(&self) -> f64 {
        (self.k[0][0] - self.k[1][1]).abs().max(self.k[0][1].abs())
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        let [[a, b], [c, d]] = self.k;
        let m = 0.5 * (a + d);
        let off = 0.5 * (b + c);
        let r = (0.25 * (a - d) * (a - d) + off * off).sqrt();
        [m - r, m + r]
    }

    pub fn is_spd(&self) -> bool {
        self.eigenvalues()[0] > 0.0
    }
}

/// Averages of the two cell solutions; fails when `K` is not positive definite.
pub fn permeability(w: &[FlowField; 2]) -> Result<PermeabilityTensor> {
    let mut k = [[0.0; 2]; 2];
    for (i, field) in w.iter().enumerate() {
        let n = field.dofs().velocity_degree() + 2;
        for (j, kij) in k[i].iter_mut().enumerate() {
            *kij = integrate_domain(field, RegionFilter::All, n, |pv| pv.v[j]);
        }
    }
    let t = PermeabilityTensor { k };
    if !t.is_spd() || t.k.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem(format!(
            "permeability tensor {:?} is not positive definite",
            t.k
        )));
    }
    Ok(t)
}

/// Solves both cell problems and assembles `K`.
pub fn compute_permeability(inclusion: &InclusionSpec, mode: SolveMode) -> Result<PermeabilityTensor> {
    let w0 = solve_cell_problem(inclusion, 0, mode)?;
    let w1 = solve_cell_problem(inclusion, 1, mode)?;
    permeability(&[w0, w1])
}
