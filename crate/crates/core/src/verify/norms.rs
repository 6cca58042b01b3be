use crate::fem::{integrate_domain, RegionFilter};
use crate::problems::{EffectiveSolution, MicroSolution};
use crate::{Error, Result};

use super::extension::extend_pressure;

/// Differences between a microscopic and the effective solution over the
/// physical domain of length `L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainNorms {
    /// `∫_{Ω_f} |v − u_eff e¹|²`
    pub l2sq_vel_diff: f64,
    /// `|M^ε − M_eff|`
    pub abs_massflow_diff: f64,
    /// `∫_{Ω_f} |p − p_eff|`
    pub l1_pressure_diff: f64,
    /// `∫_{Ω_f} |∇v − ∇u_eff|`
    pub l1_grad_diff: f64,
    /// `∫_{Ω_p} |p − p_D|²` with the extended pressure
    pub l2sq_porous_pressure_diff: f64,
}

impl DomainNorms {
    pub const FIELDS: [(&'static str, fn(&DomainNorms) -> f64); 5] = [
        ("L2sq_vel_diff", |d| d.l2sq_vel_diff),
        ("abs_massflow_diff", |d| d.abs_massflow_diff),
        ("L1_pressure_diff", |d| d.l1_pressure_diff),
        ("L1_grad_diff", |d| d.l1_grad_diff),
        ("L2sq_porous_pressure_diff", |d| d.l2sq_porous_pressure_diff),
    ];
}

/// Norms of `micro − eff`. A strip solution of width `w` stands for `L/w`
/// periodic copies, so its integrals are scaled by `L/w`; a tiled solution
/// gives the same numbers unscaled.
pub fn domain_norms(micro: &MicroSolution, eff: &EffectiveSolution) -> Result<DomainNorms> {
    let e = micro.geom.epsilon.value();
    if (e - eff.epsilon).abs() > 1e-14 * e {
        return Err(Error::Invalid(format!(
            "field computed for epsilon {e}, effective solution for {}",
            eff.epsilon
        )));
    }
    let copies = micro.copies();
    if copies == 0 {
        return Err(Error::Geometry(format!(
            "strip width {} does not divide the length {}",
            micro.width, micro.geom.length
        )));
    }
    let s = copies as f64;
    let w = micro.width_f64();
    let f = &micro.field;
    let n = f.dofs().velocity_degree() + 3;
    let l2sq_vel = integrate_domain(f, RegionFilter::Free, n, |pv| {
        let d = pv.v[0] - eff.u1(pv.x[1]);
        d * d + pv.v[1] * pv.v[1]
    });
    let flux = integrate_domain(f, RegionFilter::Free, n, |pv| pv.v[0]);
    let l1_p = integrate_domain(f, RegionFilter::Free, n, |pv| (pv.p - eff.p_free(pv.x[1])).abs());
    let l1_grad = integrate_domain(f, RegionFilter::Free, n, |pv| {
        let g = pv.grad;
        let d01 = g[0][1] - eff.du1(pv.x[1]);
        (g[0][0] * g[0][0] + d01 * d01 + g[1][0] * g[1][0] + g[1][1] * g[1][1]).sqrt()
    });
    let ext = extend_pressure(f);
    let porous = ext.porous_l2sq_affine(0.5 * eff.cwbl, eff.k[0][1] / eff.k[1][1]);
    Ok(DomainNorms {
        l2sq_vel_diff: s * l2sq_vel,
        abs_massflow_diff: (flux / w - eff.mass_flow()).abs(),
        l1_pressure_diff: s * l1_p,
        l1_grad_diff: s * l1_grad,
        l2sq_porous_pressure_diff: s * porous,
    })
}
