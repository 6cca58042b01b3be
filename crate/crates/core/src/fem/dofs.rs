use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::meshkit::{PointKey, QuadMesh};

use super::basis::{lagrange_weights, TensorBasis};

/// Continuous Lagrange space of one degree on a forest, before constraints.
#[derive(Debug, Clone)]
pub struct ScalarSpace {
    pub basis: TensorBasis,
    cell_dofs: Vec<u32>,
    keys: Vec<PointKey>,
    /// Hanging dofs expressed through the dofs of their coarse face.
    hanging: Vec<(usize, Vec<(usize, f64)>)>,
}

impl ScalarSpace {
    pub fn new(mesh: &QuadMesh, degree: usize) -> Self {
        let basis = TensorBasis::new(degree);
        let nl = basis.n_local();
        let mut ids: HashMap<PointKey, u32> = HashMap::new();
        let mut keys = Vec::new();
        let mut cell_dofs = Vec::with_capacity(mesh.n_cells() * nl);
        for cell in mesh.cells() {
            for b in 0..=degree {
                for a in 0..=degree {
                    let (u, v) = cell.node_position(a, b, degree);
                    let key = mesh.point_key(cell.tree, u, v, true);
                    let id = *ids.entry(key).or_insert_with(|| {
                        keys.push(key);
                        (keys.len() - 1) as u32
                    });
                    cell_dofs.push(id);
                }
            }
        }
        let mut space = Self {
            basis,
            cell_dofs,
            keys,
            hanging: Vec::new(),
        };
        space.hanging = space.hanging_expressions(mesh);
        space
    }

    /// Canonical line parameters of the face nodes, in face order.
    fn face_params(&self, mesh: &QuadMesh, c: usize, f: usize) -> Vec<f64> {
        let k = self.basis.degree as u64;
        let (_, lo, hi) = mesh.face_segment(&mesh.cell(c), f, true);
        let rev = mesh.face_reversed(c, f);
        (0..=k)
            .map(|j| {
                let s = if rev {
                    hi - j * (hi - lo) / k
                } else {
                    lo + j * (hi - lo) / k
                };
                s as f64
            })
            .collect()
    }

    fn hanging_expressions(&self, mesh: &QuadMesh) -> Vec<(usize, Vec<(usize, f64)>)> {
        let mut out: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
        for h in mesh.hanging_faces() {
            let (fc, ff) = (h.fine_cell as usize, h.fine_face as usize);
            let (cc, cf) = (h.coarse_cell as usize, h.coarse_face as usize);
            let coarse_nodes = self.basis.face_nodes(cf);
            let coarse_dofs: Vec<usize> = coarse_nodes
                .iter()
                .map(|&i| self.cell_dofs(cc)[i] as usize)
                .collect();
            let coarse_s = self.face_params(mesh, cc, cf);
            let fine_s = self.face_params(mesh, fc, ff);
            for (j, &i) in self.basis.face_nodes(ff).iter().enumerate() {
                let d = self.cell_dofs(fc)[i] as usize;
                if coarse_dofs.contains(&d) || out.contains_key(&d) {
                    continue;
                }
                let w = lagrange_weights(&coarse_s, fine_s[j]);
                out.insert(d, coarse_dofs.iter().copied().zip(w).collect());
            }
        }
        out.into_iter().collect()
    }

    pub fn degree(&self) -> usize {
        self.basis.degree
    }

    pub fn n_local(&self) -> usize {
        self.basis.n_local()
    }

    pub fn n_dofs(&self) -> usize {
        self.keys.len()
    }

    pub fn cell_dofs(&self, c: usize) -> &[u32] {
        let nl = self.basis.n_local();
        &self.cell_dofs[c * nl..(c + 1) * nl]
    }

    pub fn key(&self, d: usize) -> PointKey {
        self.keys[d]
    }

    pub fn hanging(&self) -> &[(usize, Vec<(usize, f64)>)] {
        &self.hanging
    }
}

/// Taylor–Hood numbering: velocity components `0..nv`, `nv..2nv`, then pressure.
#[derive(Debug, Clone)]
pub struct DofMap {
    mesh: Arc<QuadMesh>,
    pub velocity: ScalarSpace,
    pub pressure: ScalarSpace,
}

impl DofMap {
    /// Q2 velocity / Q1 pressure.
    pub fn taylor_hood(mesh: Arc<QuadMesh>) -> Self {
        Self::with_degree(mesh, 2)
    }

    /// `Q_k` velocity / `Q_{k-1}` pressure.
    pub fn with_degree(mesh: Arc<QuadMesh>, k: usize) -> Self {
        let velocity = ScalarSpace::new(&mesh, k);
        let pressure = ScalarSpace::new(&mesh, k - 1);
        Self {
            mesh,
            velocity,
            pressure,
        }
    }

    pub fn mesh(&self) -> &Arc<QuadMesh> {
        &self.mesh
    }

    pub fn velocity_degree(&self) -> usize {
        self.velocity.degree()
    }

    pub fn nv(&self) -> usize {
        self.velocity.n_dofs()
    }

    pub fn n_velocity(&self) -> usize {
        2 * self.velocity.n_dofs()
    }

    pub fn n_pressure(&self) -> usize {
        self.pressure.n_dofs()
    }

    pub fn n_total(&self) -> usize {
        self.n_velocity() + self.n_pressure()
    }

    pub fn velocity_dof(&self, comp: usize, i: usize) -> usize {
        comp * self.velocity.n_dofs() + i
    }

    pub fn pressure_dof(&self, j: usize) -> usize {
        self.n_velocity() + j
    }

    pub fn is_pressure(&self, dof: usize) -> bool {
        dof >= self.n_velocity()
    }

    /// Global dofs of cell `c` in local order: `v_1` nodes, `v_2` nodes, pressure nodes.
    pub fn cell_global_dofs(&self, c: usize, out: &mut Vec<usize>) {
        out.clear();
        let nv = self.velocity.n_dofs();
        for comp in 0..2 {
            out.extend(self.velocity.cell_dofs(c).iter().map(|&d| comp * nv + d as usize));
        }
        let off = 2 * nv;
        out.extend(self.pressure.cell_dofs(c).iter().map(|&d| off + d as usize));
    }

    pub fn n_local(&self) -> usize {
        2 * self.velocity.n_local() + self.pressure.n_local()
    }
}
