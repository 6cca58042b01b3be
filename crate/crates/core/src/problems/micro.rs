use std::collections::HashMap;
use std::sync::Arc;

use num_rational::Ratio;

use crate::fem::{
    integrate_domain, region_area, BcSpec, DirichletBc, DofMap, FlowField, LinearFunctional,
    Load, Normalization, RegionFilter, StokesProblem, VectorData,
};
use crate::meshkit::{build_strip_mesh, ActiveCell, BoundaryTag, GeometrySpec, StripSides};
use crate::{Error, Result};

/// The two microscopic verification cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CaseSpec {
    /// Unit body force `(1,0)`, periodic in `x₁`.
    Periodic,
    /// Pressure drop per unit length prescribed between the vertical sides.
    Injection { drop_per_length: f64 },
}

/// A microscopic solution together with the geometry it was computed on.
#[derive(Debug, Clone)]
pub struct MicroSolution {
    pub field: FlowField,
    pub geom: GeometrySpec,
    /// Width of the computed strip (`ε` for the periodic reduction).
    pub width: Ratio<i64>,
    pub case: CaseSpec,
    pub refine: usize,
}

impl MicroSolution {
    /// Number of strip copies needed to cover the physical length.
    pub fn copies(&self) -> usize {
        let r = self.geom.length / self.width;
        if r.is_integer() {
            r.to_integer() as usize
        } else {
            0
        }
    }

    pub fn width_f64(&self) -> f64 {
        *self.width.numer() as f64 / *self.width.denom() as f64
    }
}

fn walls() -> Vec<DirichletBc> {
    vec![
        DirichletBc::no_slip(BoundaryTag::Inclusion),
        DirichletBc::no_slip(BoundaryTag::Top),
        DirichletBc::no_slip(BoundaryTag::Bottom),
    ]
}

pub fn periodic_problem() -> StokesProblem {
    StokesProblem::new(
        BcSpec {
            dirichlet: walls(),
            normalization: Normalization::MeanPressure(RegionFilter::Free),
        },
        LinearFunctional::new(vec![Load::Volume {
            region: RegionFilter::All,
            density: VectorData::Const([1.0, 0.0]),
        }]),
    )
}

/// Periodic case on the width-`ε` strip with `ε`-periodic sides.
pub fn solve_micro_periodic(geom: &GeometrySpec, refine: usize) -> Result<MicroSolution> {
    let width = geom.epsilon.ratio();
    let mesh = Arc::new(build_strip_mesh(geom, width, StripSides::Periodic, refine)?);
    log::info!("periodic ε={} on {} cells", geom.epsilon, mesh.n_cells());
    let field = periodic_problem().solve(mesh)?;
    Ok(MicroSolution {
        field,
        geom: geom.clone(),
        width,
        case: CaseSpec::Periodic,
        refine,
    })
}

pub fn injection_problem(length: f64, drop_per_length: f64) -> StokesProblem {
    let half = 0.5 * drop_per_length * length;
    let mut dirichlet = walls();
    dirichlet.push(DirichletBc::normal_zero(BoundaryTag::Left, 1));
    dirichlet.push(DirichletBc::normal_zero(BoundaryTag::Right, 1));
    StokesProblem::new(
        BcSpec {
            dirichlet,
            normalization: Normalization::None,
        },
        LinearFunctional::new(vec![
            Load::BoundaryPressure {
                tag: BoundaryTag::Left,
                pressure: half,
            },
            Load::BoundaryPressure {
                tag: BoundaryTag::Right,
                pressure: -half,
            },
        ]),
    )
}

/// Injection case on the full strip of length `L`; the pressure is shifted to
/// mean zero over the free fluid after the solve.
pub fn solve_micro_injection(geom: &GeometrySpec, drop_per_length: f64, refine: usize) -> Result<MicroSolution> {
    let width = geom.length;
    let mesh = Arc::new(build_strip_mesh(geom, width, StripSides::Open, refine)?);
    log::info!("injection ε={} on {} cells", geom.epsilon, mesh.n_cells());
    let mut field = injection_problem(geom.length_f64(), drop_per_length).solve(mesh)?;
    shift_mean_free(&mut field);
    Ok(MicroSolution {
        field,
        geom: geom.clone(),
        width,
        case: CaseSpec::Injection { drop_per_length },
        refine,
    })
}

/// Shifts the pressure so that `∫_{Ω_f} p = 0`.
pub fn shift_mean_free(field: &mut FlowField) {
    let n = field.dofs().velocity_degree() + 2;
    let mean = integrate_domain(field, RegionFilter::Free, n, |pv| pv.p)
        / region_area(field.mesh(), RegionFilter::Free);
    field.shift_pressure(-mean);
}

/// Tree of the width-`ε` strip that a tree of a wider strip copies.
fn strip_tree(tree: u32, columns: usize, porous_rows: usize) -> u32 {
    let tree = tree as usize;
    let porous_trees = porous_rows * columns * 16;
    let out = if tree < porous_trees {
        let (pc, i) = (tree / 16, tree % 16);
        let row = pc / columns;
        row * 16 + i
    } else {
        let f = tree - porous_trees;
        let (r, c) = (f / (2 * columns), f % (2 * columns));
        porous_rows * 16 + r * 2 + c % 2
    };
    out as u32
}

/// Periodic extension of a strip solution to the full length `L`.
pub fn tile_periodic_solution(sol: &MicroSolution, length: Ratio<i64>) -> Result<MicroSolution> {
    if sol.case != CaseSpec::Periodic {
        return Err(Error::Invalid("only periodic solutions can be tiled".into()));
    }
    let ratio = length / sol.width;
    if !ratio.is_integer() || *ratio.numer() <= 0 {
        return Err(Error::Geometry(format!(
            "length {length} is not an integer multiple of the strip width {}",
            sol.width
        )));
    }
    let columns = ratio.to_integer() as usize;
    if columns == 1 {
        return Ok(sol.clone());
    }
    let mut geom = sol.geom.clone();
    geom.length = length;
    let wide = Arc::new(build_strip_mesh(&geom, length, StripSides::Periodic, sol.refine)?);
    let strip = sol.field.mesh();
    if wide.n_cells() != columns * strip.n_cells() {
        return Err(Error::MeshMismatch {
            expected: format!("{} cells", columns * strip.n_cells()),
            found: format!("{} cells", wide.n_cells()),
        });
    }
    let rows = sol.geom.epsilon.rows()?;
    let index: HashMap<ActiveCell, usize> = strip.cells().iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let dofs = Arc::new(DofMap::with_degree(wide.clone(), sol.field.dofs().velocity_degree()));
    let mut values = vec![0.0; dofs.n_total()];
    let (mut gw, mut gs) = (Vec::new(), Vec::new());
    for (c, cell) in wide.cells().iter().enumerate() {
        let key = ActiveCell {
            tree: strip_tree(cell.tree, columns, rows),
            ..*cell
        };
        let &sc = index.get(&key).ok_or_else(|| Error::MeshMismatch {
            expected: format!("strip cell {key:?}"),
            found: "none".into(),
        })?;
        dofs.cell_global_dofs(c, &mut gw);
        sol.field.dofs().cell_global_dofs(sc, &mut gs);
        for (&dw, &ds) in gw.iter().zip(&gs) {
            values[dw] = sol.field.values()[ds];
        }
    }
    let mut field = FlowField::new(dofs, values);
    field.multiplier = sol.field.multiplier;
    field.residual = sol.field.residual;
    Ok(MicroSolution {
        field,
        geom,
        width: length,
        case: CaseSpec::Periodic,
        refine: sol.refine,
    })
}
