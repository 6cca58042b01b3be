use crate::fem::{FlowField, RegionFilter};
use crate::fem::integrate_domain;
use crate::meshkit::Region;

/// Pressure extended into the solid inclusions by the mean over the fluid part
/// of each period cell; the velocity is extended by zero. The solids carry no
/// mesh, so the extension is stored as one value per pore.
#[derive(Debug, Clone)]
pub struct ExtendedPressure<'a> {
    pub field: &'a FlowField,
    /// `(1/|Y_f,i|)∫_{Y_f,i} p` per pore; `None` for pores without cells.
    pub pore_mean: Vec<Option<f64>>,
    /// `|Y_f,i|` per pore.
    pub fluid_area: Vec<f64>,
}

pub fn extend_pressure(field: &FlowField) -> ExtendedPressure<'_> {
    let mesh = field.mesh();
    let np = mesh.coarse().pores.len();
    let mut integral = vec![0.0; np];
    let mut area = vec![0.0; np];
    let n = field.dofs().velocity_degree() + 2;
    let (pts, wts) = crate::fem::gauss_legendre(n);
    for c in 0..mesh.n_cells() {
        let Region::Porous { pore } = mesh.region(c) else { continue };
        let ce = field.cell(c);
        for (j, wj) in wts.iter().enumerate() {
            for (i, wi) in wts.iter().enumerate() {
                let pv = ce.at(pts[i], pts[j]);
                integral[pore as usize] += wi * wj * pv.det * pv.p;
                area[pore as usize] += wi * wj * pv.det;
            }
        }
    }
    let pore_mean = integral
        .iter()
        .zip(&area)
        .map(|(&s, &a)| if a > 0.0 { Some(s / a) } else { None })
        .collect();
    ExtendedPressure {
        field,
        pore_mean,
        fluid_area: area,
    }
}

impl ExtendedPressure<'_> {
    /// `∫_{Ω_p} p` of the extended pressure.
    pub fn porous_integral(&self) -> f64 {
        let n = self.field.dofs().velocity_degree() + 2;
        let fluid = integrate_domain(self.field, RegionFilter::Porous, n, |pv| pv.p);
        let pores = &self.field.mesh().coarse().pores;
        let solid: f64 = self
            .pore_mean
            .iter()
            .zip(pores)
            .filter_map(|(m, info)| m.map(|m| m * info.solid_area()))
            .sum();
        fluid + solid
    }

    /// `∫_{Ω_p} |p − (α + β x₂)|²` of the extended pressure; exact on the solids.
    pub fn porous_l2sq_affine(&self, alpha: f64, beta: f64) -> f64 {
        let n = self.field.dofs().velocity_degree() + 3;
        let fluid = integrate_domain(self.field, RegionFilter::Porous, n, |pv| {
            let d = pv.p - alpha - beta * pv.x[1];
            d * d
        });
        let pores = &self.field.mesh().coarse().pores;
        let solid: f64 = self
            .pore_mean
            .iter()
            .zip(pores)
            .filter_map(|(m, info)| {
                let m = (*m)?;
                let d = m - alpha - beta * info.solid_centroid()[1];
                Some(info.solid_area() * d * d + beta * beta * info.solid_vertical_moment())
            })
            .sum();
        fluid + solid
    }
}
