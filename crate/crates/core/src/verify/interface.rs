use num_rational::Ratio;

use crate::fem::basis::face_point;
use crate::fem::{gauss_legendre, line_faces, FlowField, LineSide, LineSpec, PointValue};
use crate::meshkit::Epsilon;
use crate::problems::EffectiveSolution;
use crate::{Error, Result};

/// Cell averages `(1/ε)∫_{mε}^{(m+1)ε}` of interface traces, one entry per
/// period of the computed strip.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceProfile {
    pub epsilon: Epsilon,
    /// Physical interface length `L`; entries repeat periodically when the
    /// computed strip is narrower.
    pub length: Ratio<i64>,
    /// Mean of `∂₂v₁(·,0)` from the free side.
    pub avg_shear: Vec<f64>,
    pub avg_u1: Vec<f64>,
    pub avg_p: Vec<f64>,
    /// Mean of `p(·,−dε)`; absent when the line leaves the domain.
    pub avg_p_below: Option<Vec<f64>>,
    /// Depth of the "pressure from below" line in units of `ε`.
    pub depth: usize,
}

impl InterfaceProfile {
    pub fn n_computed(&self) -> usize {
        self.avg_shear.len()
    }

    /// Number of periods along the physical interface.
    pub fn n_periods(&self) -> usize {
        (self.length / self.epsilon.ratio()).to_integer() as usize
    }
}

/// Per-period averages of `g` along the horizontal line `y` over `count` periods.
fn period_averages(
    field: &FlowField,
    y: f64,
    period: f64,
    count: usize,
    side: LineSide,
    g: impl Fn(&PointValue) -> f64,
) -> Result<Vec<f64>> {
    let line = LineSpec::new(y, 0.0, period * count as f64).side(side);
    let faces = line_faces(field.mesh(), &line)?;
    let n = field.dofs().velocity_degree() + 2;
    let (tp, tw) = gauss_legendre(n);
    let mut out = vec![0.0; count];
    for (c, f) in faces {
        let ce = field.cell(c);
        let (xi, eta) = face_point(f, 0.5);
        let mid = ce.geometry(xi, eta).x[0];
        let m = ((mid / period).floor() as usize).min(count - 1);
        for (t, w) in tp.iter().zip(&tw) {
            let (xi, eta) = face_point(f, *t);
            let geo = ce.geometry(xi, eta);
            let j = if f % 2 == 0 { 0 } else { 1 };
            let ds = (geo.jac[0][j].powi(2) + geo.jac[1][j].powi(2)).sqrt();
            out[m] += w * ds * g(&ce.at_with(&geo, xi, eta));
        }
    }
    for v in &mut out {
        *v /= period;
    }
    Ok(out)
}

/// Interface averages of a field on a strip `(0, width) × (−1, 1)` whose
/// interface is `Γ = {x₂ = 0}`. `depth` selects the line `x₂ = −depth·ε`.
pub fn interface_profile(
    field: &FlowField,
    epsilon: Epsilon,
    width: Ratio<i64>,
    length: Ratio<i64>,
    depth: usize,
) -> Result<InterfaceProfile> {
    let count = epsilon.periods_in(width)?;
    let total = epsilon.periods_in(length)?;
    if total % count != 0 {
        return Err(Error::Geometry(format!(
            "strip of {count} periods does not tile the interface of {total} periods"
        )));
    }
    let e = epsilon.value();
    let avg_shear = period_averages(field, 0.0, e, count, LineSide::Above, |pv| pv.grad[0][1])?;
    let avg_u1 = period_averages(field, 0.0, e, count, LineSide::Above, |pv| pv.v[0])?;
    let avg_p = period_averages(field, 0.0, e, count, LineSide::Above, |pv| pv.p)?;
    let rows = epsilon.rows()?;
    let avg_p_below = if depth == 0 || depth > rows {
        None
    } else {
        Some(period_averages(field, -(depth as f64) * e, e, count, LineSide::Auto, |pv| pv.p)?)
    };
    Ok(InterfaceProfile {
        epsilon,
        length,
        avg_shear,
        avg_u1,
        avg_p,
        avg_p_below,
        depth,
    })
}

/// Part of the interface the norms are taken over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InterfaceRegion {
    /// The whole interface `Γ = (0, L)`.
    Full,
    /// `Γ̂ = (0.2, 1.8)`, away from the inflow and outflow sides of the `L = 2` channel.
    Hat,
}

impl InterfaceRegion {
    fn bounds(&self, length: f64) -> Result<(f64, f64)> {
        match self {
            InterfaceRegion::Full => Ok((0.0, length)),
            InterfaceRegion::Hat => {
                if (length - 2.0).abs() > 1e-14 {
                    return Err(Error::Invalid(format!("the restricted interface needs L = 2, got L = {length}")));
                }
                Ok((0.2, 1.8))
            }
        }
    }
}

/// Residuals of the interface laws in `L²(region)` for the piecewise constant
/// cell averages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceNorms {
    /// `‖avg ∂₂v₁ − 1/(2(1−εC₁))‖`
    pub shear_residual: f64,
    /// `‖avg p_d − Cω/2‖`
    pub p_below_residual: Option<f64>,
    /// `‖avg p_d − avg p − Cω·avg ∂₂v₁‖`
    pub jump_residual: Option<f64>,
    /// `‖avg v₁/ε + C₁·avg ∂₂v₁‖`
    pub bj_residual: f64,
}

impl InterfaceNorms {
    pub const FIELDS: [(&'static str, fn(&InterfaceNorms) -> Option<f64>); 4] = [
        ("shear_residual", |n| Some(n.shear_residual)),
        ("p_below_residual", |n| n.p_below_residual),
        ("jump_residual", |n| n.jump_residual),
        ("bj_residual", |n| Some(n.bj_residual)),
    ];
}

pub fn interface_norms(
    profile: &InterfaceProfile,
    eff: &EffectiveSolution,
    region: InterfaceRegion,
) -> Result<InterfaceNorms> {
    let e = profile.epsilon.value();
    if (e - eff.epsilon).abs() > 1e-14 * e {
        return Err(Error::Invalid(format!(
            "profile computed for epsilon {e}, effective solution for {}",
            eff.epsilon
        )));
    }
    let length = *profile.length.numer() as f64 / *profile.length.denom() as f64;
    let (a, b) = region.bounds(length)?;
    let nc = profile.n_computed();
    // weight of period m: |(mε, (m+1)ε) ∩ (a, b)|
    let weights: Vec<(usize, f64)> = (0..profile.n_periods())
        .filter_map(|m| {
            let lo = (m as f64 * e).max(a);
            let hi = ((m + 1) as f64 * e).min(b);
            (hi > lo).then_some((m % nc, hi - lo))
        })
        .collect();
    let norm = |g: &dyn Fn(usize) -> f64| -> f64 {
        weights.iter().map(|&(i, w)| w * g(i).powi(2)).sum::<f64>().sqrt()
    };
    let s = &profile.avg_shear;
    let target = eff.sigma0();
    let shear_residual = norm(&|i| s[i] - target);
    let bj_residual = norm(&|i| profile.avg_u1[i] / e + eff.c1bl * s[i]);
    let (p_below_residual, jump_residual) = match &profile.avg_p_below {
        Some(pd) => (
            Some(norm(&|i| pd[i] - 0.5 * eff.cwbl)),
            Some(norm(&|i| pd[i] - profile.avg_p[i] - eff.cwbl * s[i])),
        ),
        None => (None, None),
    };
    Ok(InterfaceNorms {
        shear_residual,
        p_below_residual,
        jump_residual,
        bj_residual,
    })
}
