//! Drivers for the boundary-layer, cell and microscopic problems.

pub mod bl;
pub mod cell;
pub mod effective;
pub mod micro;

pub use bl::{
    bl_problem, compute_constants, cutoff_study, efficiency_series, solve_boundary_layer, BoundaryLayerConstants,
    BoundaryLayerRun, CutoffRow, SolveMode,
};
pub use cell::{cell_problem, compute_permeability, permeability, solve_cell_problem, PermeabilityTensor};
pub use effective::{effective_solution, EffectiveSolution};
pub use micro::{
    injection_problem, periodic_problem, shift_mean_free, solve_micro_injection, solve_micro_periodic,
    tile_periodic_solution, CaseSpec, MicroSolution,
};
