use std::fmt::Write as _;
use std::sync::Arc;

use crate::meshkit::{Point, QuadMesh};
use crate::{Error, Result};

use super::basis::{geometry_at, GeometryPoint, TensorBasis};
use super::dofs::DofMap;

/// Discrete velocity–pressure pair: coefficients of every dof (constrained
/// ones included) of a [`DofMap`].
#[derive(Debug, Clone)]
pub struct FlowField {
    dofs: Arc<DofMap>,
    values: Vec<f64>,
    /// Value of the pressure-normalization multiplier, if one was used.
    pub multiplier: f64,
    /// Relative residual of the linear solve that produced the field.
    pub residual: f64,
}

/// Solution values at one point of a cell.
#[derive(Debug, Clone, Copy)]
pub struct PointValue {
    pub x: Point,
    pub v: [f64; 2],
    /// `grad[i][j] = ∂v_i/∂x_j`
    pub grad: [[f64; 2]; 2],
    pub p: f64,
    pub det: f64,
}

impl FlowField {
    pub fn new(dofs: Arc<DofMap>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), dofs.n_total());
        Self {
            dofs,
            values,
            multiplier: 0.0,
            residual: 0.0,
        }
    }

    pub fn zeros(dofs: Arc<DofMap>) -> Self {
        let n = dofs.n_total();
        Self::new(dofs, vec![0.0; n])
    }

    pub fn dofs(&self) -> &Arc<DofMap> {
        &self.dofs
    }

    pub fn mesh(&self) -> &Arc<QuadMesh> {
        self.dofs.mesh()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn pressure_values(&self) -> &[f64] {
        &self.values[self.dofs.n_velocity()..]
    }

    /// Adds `c` to every pressure coefficient.
    pub fn shift_pressure(&mut self, c: f64) {
        let nv = self.dofs.n_velocity();
        for p in &mut self.values[nv..] {
            *p += c;
        }
    }

    pub fn scale(&mut self, a: f64) {
        for v in &mut self.values {
            *v *= a;
        }
    }

    pub fn cell(&self, c: usize) -> CellEval<'_> {
        CellEval::new(self, c)
    }

    /// `max_j |∫ ψ_j div v| / max_j ∫ ψ_j |∇v|` over the conforming pressure
    /// basis functions `ψ_j` (hanging ones folded into their masters).
    pub fn divergence_defect(&self) -> f64 {
        let space = &self.dofs.pressure;
        let n = self.dofs.velocity_degree() + 2;
        let (tp, tw) = super::basis::gauss_legendre(n);
        let mut div = vec![0.0; space.n_dofs()];
        let mut size = vec![0.0; space.n_dofs()];
        let mut psi = vec![0.0; space.n_local()];
        let mut dpsi = vec![[0.0; 2]; space.n_local()];
        for c in 0..self.mesh().n_cells() {
            let ce = self.cell(c);
            let cd = space.cell_dofs(c);
            for (j, wj) in tw.iter().enumerate() {
                for (i, wi) in tw.iter().enumerate() {
                    let pv = ce.at(tp[i], tp[j]);
                    let w = wi * wj * pv.det;
                    let g = pv.grad;
                    let d = g[0][0] + g[1][1];
                    let m = (g[0][0].powi(2) + g[0][1].powi(2) + g[1][0].powi(2) + g[1][1].powi(2)).sqrt();
                    space.basis.eval(tp[i], tp[j], &mut psi, &mut dpsi);
                    for (a, &dof) in cd.iter().enumerate() {
                        div[dof as usize] += w * psi[a] * d;
                        size[dof as usize] += w * psi[a] * m;
                    }
                }
            }
        }
        for (h, expr) in space.hanging() {
            let (dv, sv) = (std::mem::take(&mut div[*h]), std::mem::take(&mut size[*h]));
            for &(j, wt) in expr {
                div[j] += wt * dv;
                size[j] += wt.abs() * sv;
            }
        }
        let scale = size.iter().fold(0.0f64, |a, &b| a.max(b));
        if scale == 0.0 {
            return 0.0;
        }
        div.iter().fold(0.0f64, |a, &b| a.max(b.abs())) / scale
    }

    /// Text form keyed by the mesh hash.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mesh {}", self.mesh().hash());
        let _ = writeln!(s, "velocity_degree {}", self.dofs.velocity_degree());
        let _ = writeln!(s, "multiplier {}", self.multiplier);
        let _ = writeln!(s, "values {}", self.values.len());
        for v in &self.values {
            let _ = writeln!(s, "{v}");
        }
        s
    }

    /// Reads a field written by [`FlowField::to_text`]; refuses a different mesh.
    pub fn from_text(text: &str, mesh: Arc<QuadMesh>) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut field = |name: &str| -> Result<(usize, String)> {
            let (ln, l) = lines.next().ok_or(Error::Parse {
                line: 0,
                message: format!("missing `{name}`"),
            })?;
            let rest = l.strip_prefix(name).and_then(|r| r.strip_prefix(' ')).ok_or(Error::Parse {
                line: ln,
                message: format!("expected `{name} <value>`"),
            })?;
            Ok((ln, rest.to_string()))
        };
        let (_, hash) = field("mesh")?;
        let found = mesh.hash();
        if hash != found {
            return Err(Error::MeshMismatch {
                expected: hash,
                found,
            });
        }
        let (ln, deg) = field("velocity_degree")?;
        let deg: usize = deg.parse().map_err(|_| Error::Parse {
            line: ln,
            message: "bad degree".into(),
        })?;
        let (ln, mult) = field("multiplier")?;
        let multiplier: f64 = mult.parse().map_err(|_| Error::Parse {
            line: ln,
            message: "bad multiplier".into(),
        })?;
        let (ln, n) = field("values")?;
        let n: usize = n.parse().map_err(|_| Error::Parse {
            line: ln,
            message: "bad count".into(),
        })?;
        let dofs = Arc::new(DofMap::with_degree(mesh, deg));
        if dofs.n_total() != n {
            return Err(Error::Parse {
                line: ln,
                message: format!("{n} values for {} dofs", dofs.n_total()),
            });
        }
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            let (ln, l) = lines.next().ok_or(Error::Parse {
                line: 0,
                message: "truncated values".into(),
            })?;
            values.push(l.trim().parse().map_err(|_| Error::Parse {
                line: ln,
                message: "bad value".into(),
            })?);
        }
        let mut f = FlowField::new(dofs, values);
        f.multiplier = multiplier;
        Ok(f)
    }
}

/// Local coefficients of one cell, ready for point evaluation.
pub struct CellEval<'a> {
    pub cell: usize,
    pub nodes: &'a [Point; 9],
    vbasis: TensorBasis,
    pbasis: TensorBasis,
    pub v: [Vec<f64>; 2],
    pub p: Vec<f64>,
}

impl<'a> CellEval<'a> {
    pub fn new(field: &'a FlowField, c: usize) -> Self {
        let dofs = &field.dofs;
        let nv = dofs.nv();
        let vd = dofs.velocity.cell_dofs(c);
        let pd = dofs.pressure.cell_dofs(c);
        let off = dofs.n_velocity();
        Self {
            cell: c,
            nodes: dofs.mesh().geometry_nodes(c),
            vbasis: dofs.velocity.basis,
            pbasis: dofs.pressure.basis,
            v: [
                vd.iter().map(|&d| field.values[d as usize]).collect(),
                vd.iter().map(|&d| field.values[nv + d as usize]).collect(),
            ],
            p: pd.iter().map(|&d| field.values[off + d as usize]).collect(),
        }
    }

    pub fn geometry(&self, xi: f64, eta: f64) -> GeometryPoint {
        geometry_at(self.nodes, xi, eta)
    }

    pub fn at(&self, xi: f64, eta: f64) -> PointValue {
        let g = self.geometry(xi, eta);
        self.at_with(&g, xi, eta)
    }

    pub fn at_with(&self, g: &GeometryPoint, xi: f64, eta: f64) -> PointValue {
        let mut val = [0.0; 16];
        let mut grad = [[0.0; 2]; 16];
        let nl = self.vbasis.n_local();
        self.vbasis.eval(xi, eta, &mut val[..nl], &mut grad[..nl]);
        let mut v = [0.0; 2];
        let mut gv = [[0.0; 2]; 2];
        for a in 0..nl {
            let pg = g.grad(grad[a]);
            for i in 0..2 {
                v[i] += self.v[i][a] * val[a];
                gv[i][0] += self.v[i][a] * pg[0];
                gv[i][1] += self.v[i][a] * pg[1];
            }
        }
        let np = self.pbasis.n_local();
        self.pbasis.eval(xi, eta, &mut val[..np], &mut grad[..np]);
        let p = (0..np).map(|a| self.p[a] * val[a]).sum();
        PointValue {
            x: g.x,
            v,
            grad: gv,
            p,
            det: g.det,
        }
    }
}
