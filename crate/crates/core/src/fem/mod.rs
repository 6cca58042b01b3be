//! Taylor–Hood discretization of the Stokes system on forest meshes.

pub mod assembly;
pub mod basis;
pub mod constraints;
pub mod dofs;
pub mod field;
pub mod functional;
pub mod manufactured;
pub mod solver;

use std::sync::Arc;

pub use assembly::{assemble_stokes, CscMatrix, SaddleSystem};
pub use basis::{gauss_legendre, GeometryPoint, QuadTables, TensorBasis};
pub use constraints::{
    build_constraints, BcSpec, Constraint, ConstraintKind, ConstraintSet, DirichletBc,
    Normalization, VectorData,
};
pub use dofs::{DofMap, ScalarSpace};
pub use field::{CellEval, FlowField, PointValue};
pub use functional::{
    integrate_domain, integrate_line, line_faces, region_area, LineSide, LineSpec,
    LinearFunctional, Load, PreparedFunctional, RegionFilter,
};
pub use solver::{solve, solve_csc, RESIDUAL_LIMIT};

use crate::meshkit::QuadMesh;
use crate::Result;

/// Boundary conditions plus right-hand side of one Stokes solve.
#[derive(Debug, Clone)]
pub struct StokesProblem {
    pub bc: BcSpec,
    pub rhs: LinearFunctional,
    /// Velocity degree; pressure uses one less.
    pub degree: usize,
}

impl StokesProblem {
    pub fn new(bc: BcSpec, rhs: LinearFunctional) -> Self {
        Self { bc, rhs, degree: 2 }
    }

    pub fn with_degree(mut self, k: usize) -> Self {
        self.degree = k;
        self
    }

    pub fn assemble(&self, mesh: Arc<QuadMesh>) -> Result<SaddleSystem> {
        let dofs = Arc::new(DofMap::with_degree(mesh, self.degree));
        let cons = build_constraints(&dofs, &self.bc)?;
        assemble_stokes(&dofs, &Arc::new(cons), &self.rhs)
    }

    pub fn solve(&self, mesh: Arc<QuadMesh>) -> Result<FlowField> {
        solve(&self.assemble(mesh)?)
    }
}
