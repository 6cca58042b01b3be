//! Smooth exact solution on the unit square for convergence checks:
//! stream function `ψ = sin²(πx) sin²(πy)`, pressure `p = cos(2πx)`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::meshkit::{build_box_mesh, BoundaryTag, Point};
use crate::Result;

use super::{
    integrate_domain, BcSpec, DirichletBc, FlowField, LinearFunctional, Load, Normalization,
    RegionFilter, StokesProblem, VectorData,
};

pub fn exact_velocity(x: Point) -> [f64; 2] {
    let (sx, sy) = ((PI * x[0]).sin(), (PI * x[1]).sin());
    [
        PI * sx * sx * (2.0 * PI * x[1]).sin(),
        -PI * (2.0 * PI * x[0]).sin() * sy * sy,
    ]
}

pub fn exact_pressure(x: Point) -> f64 {
    (2.0 * PI * x[0]).cos()
}

/// `f = −Δu + ∇p` (the velocity is solenoidal).
pub fn forcing(x: Point) -> [f64; 2] {
    let (c2x, s2x) = ((2.0 * PI * x[0]).cos(), (2.0 * PI * x[0]).sin());
    let (c2y, s2y) = ((2.0 * PI * x[1]).cos(), (2.0 * PI * x[1]).sin());
    let p3 = 2.0 * PI.powi(3);
    [
        -p3 * s2y * (2.0 * c2x - 1.0) - 2.0 * PI * s2x,
        p3 * s2x * (2.0 * c2y - 1.0),
    ]
}

pub fn manufactured_problem() -> StokesProblem {
    let walls = [BoundaryTag::Left, BoundaryTag::Right, BoundaryTag::Bottom, BoundaryTag::Top];
    StokesProblem::new(
        BcSpec {
            dirichlet: walls.iter().map(|&t| DirichletBc::no_slip(t)).collect(),
            normalization: Normalization::MeanPressure(RegionFilter::All),
        },
        LinearFunctional::new(vec![Load::Volume {
            region: RegionFilter::All,
            density: VectorData::Field(Arc::new(forcing)),
        }]),
    )
}

/// `(‖u − u_h‖, ‖p − p_h‖)` in `L²`.
pub fn l2_errors(field: &FlowField) -> (f64, f64) {
    let n = field.dofs().velocity_degree() + 4;
    let ev = integrate_domain(field, RegionFilter::All, n, |pv| {
        let u = exact_velocity(pv.x);
        (pv.v[0] - u[0]).powi(2) + (pv.v[1] - u[1]).powi(2)
    });
    let ep = integrate_domain(field, RegionFilter::All, n, |pv| (pv.p - exact_pressure(pv.x)).powi(2));
    (ev.sqrt(), ep.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedRow {
    pub refine: usize,
    pub h: f64,
    pub dofs: usize,
    pub vel_l2: f64,
    pub p_l2: f64,
    pub residual: f64,
    pub divergence: f64,
}

/// Uniform-refinement series on `(0,1)²` starting from a 2×2 coarse mesh.
pub fn manufactured_study(levels: std::ops::RangeInclusive<usize>) -> Result<Vec<ManufacturedRow>> {
    let problem = manufactured_problem();
    let mut rows = Vec::new();
    for r in levels {
        let mesh = Arc::new(build_box_mesh([0.0, 1.0], [0.0, 1.0], 2, 2, r)?);
        let field = problem.solve(mesh)?;
        let (vel_l2, p_l2) = l2_errors(&field);
        rows.push(ManufacturedRow {
            refine: r,
            h: 0.5f64.powi(r as i32 + 1),
            dofs: field.dofs().n_total(),
            vel_l2,
            p_l2,
            residual: field.residual,
            divergence: field.divergence_defect(),
        });
    }
    Ok(rows)
}

/// Observed order between consecutive rows.
pub fn observed_orders(rows: &[ManufacturedRow], err: impl Fn(&ManufacturedRow) -> f64) -> Vec<f64> {
    rows.windows(2)
        .map(|w| (err(&w[0]) / err(&w[1])).ln() / (w[0].h / w[1].h).ln())
        .collect()
}
