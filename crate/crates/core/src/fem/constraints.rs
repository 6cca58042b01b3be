use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::meshkit::{BoundaryTag, Point};
use crate::{Error, Result};

use super::basis::geometry_at;
use super::dofs::DofMap;
use super::functional::{LineSpec, RegionFilter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintKind {
    Dirichlet,
    Periodic,
    Hanging,
    MeanPressure,
}

/// `dof = Σ w_t · dof_t + inhom`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub terms: Vec<(usize, f64)>,
    pub inhom: f64,
}

/// Prescribed velocity data.
#[derive(Clone)]
pub enum VectorData {
    Const([f64; 2]),
    Field(Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>),
}

impl VectorData {
    pub fn at(&self, x: Point) -> [f64; 2] {
        match self {
            VectorData::Const(v) => *v,
            VectorData::Field(f) => f(x),
        }
    }
}

impl fmt::Debug for VectorData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorData::Const(v) => write!(f, "Const({v:?})"),
            VectorData::Field(_) => write!(f, "Field(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DirichletBc {
    pub tag: BoundaryTag,
    pub components: [bool; 2],
    pub value: VectorData,
}

impl DirichletBc {
    pub fn no_slip(tag: BoundaryTag) -> Self {
        Self {
            tag,
            components: [true, true],
            value: VectorData::Const([0.0, 0.0]),
        }
    }

    pub fn normal_zero(tag: BoundaryTag, component: usize) -> Self {
        let mut components = [false; 2];
        components[component] = true;
        Self {
            tag,
            components,
            value: VectorData::Const([0.0, 0.0]),
        }
    }
}

/// How the pressure constant is fixed.
#[derive(Debug, Clone, PartialEq)]
pub enum Normalization {
    None,
    /// `∫_region p = 0`
    MeanPressure(RegionFilter),
    /// `∫_line p = 0`
    LinePressure(LineSpec),
}

#[derive(Debug, Clone)]
pub struct BcSpec {
    pub dirichlet: Vec<DirichletBc>,
    pub normalization: Normalization,
}

/// Closed set of affine dof constraints.
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    n: usize,
    entries: BTreeMap<usize, Constraint>,
    closed: bool,
    pub normalization: Normalization,
    /// Dofs shared by periodic images (identified at numbering time).
    pub periodic_identified: usize,
}

impl ConstraintSet {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: BTreeMap::new(),
            closed: true,
            normalization: Normalization::None,
            periodic_identified: 0,
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.n
    }

    pub fn add(&mut self, dof: usize, c: Constraint) -> Result<()> {
        if let Some(old) = self.entries.get(&dof) {
            if old.kind == ConstraintKind::Dirichlet && c.kind == ConstraintKind::Dirichlet {
                let tol = 1e-13 * old.inhom.abs().max(1.0);
                if (old.inhom - c.inhom).abs() > tol {
                    return Err(Error::ConstraintConflict {
                        dof,
                        reason: format!("Dirichlet values {} and {} disagree", old.inhom, c.inhom),
                    });
                }
                return Ok(());
            }
            if old == &c {
                return Ok(());
            }
            return Err(Error::ConstraintConflict {
                dof,
                reason: format!("{:?} constraint on a dof already {:?}", c.kind, old.kind),
            });
        }
        self.entries.insert(dof, c);
        self.closed = false;
        Ok(())
    }

    pub fn dirichlet(&mut self, dof: usize, value: f64) -> Result<()> {
        self.add(
            dof,
            Constraint {
                kind: ConstraintKind::Dirichlet,
                terms: Vec::new(),
                inhom: value,
            },
        )
    }

    pub fn get(&self, dof: usize) -> Option<&Constraint> {
        self.entries.get(&dof)
    }

    pub fn is_constrained(&self, dof: usize) -> bool {
        self.entries.contains_key(&dof)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Constraint)> {
        self.entries.iter().map(|(&d, c)| (d, c))
    }

    pub fn count(&self, kind: ConstraintKind) -> usize {
        self.entries.values().filter(|c| c.kind == kind).count()
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Substitutes constrained dofs on right-hand sides until every expression
    /// refers to unconstrained dofs only.
    pub fn close(&mut self) -> Result<()> {
        #[derive(Clone, Copy, PartialEq)]
        enum State {
            Open,
            Visiting,
            Done,
        }
        fn visit(
            d: usize,
            entries: &mut BTreeMap<usize, Constraint>,
            state: &mut BTreeMap<usize, State>,
        ) -> Result<()> {
            match state.get(&d).copied().unwrap_or(State::Open) {
                State::Done => return Ok(()),
                State::Visiting => {
                    return Err(Error::ConstraintConflict {
                        dof: d,
                        reason: "cyclic constraint chain".into(),
                    })
                }
                State::Open => {}
            }
            state.insert(d, State::Visiting);
            let c = entries[&d].clone();
            let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
            let mut inhom = c.inhom;
            for &(t, w) in &c.terms {
                if t == d {
                    return Err(Error::ConstraintConflict {
                        dof: d,
                        reason: "constraint refers to itself".into(),
                    });
                }
                if entries.contains_key(&t) {
                    visit(t, entries, state)?;
                    let sub = &entries[&t];
                    inhom += w * sub.inhom;
                    for &(s, ws) in &sub.terms {
                        *acc.entry(s).or_insert(0.0) += w * ws;
                    }
                } else {
                    *acc.entry(t).or_insert(0.0) += w;
                }
            }
            let e = entries.get_mut(&d).expect("constraint present");
            e.terms = acc.into_iter().filter(|&(_, w)| w.abs() > 1e-14).collect();
            e.inhom = inhom;
            state.insert(d, State::Done);
            Ok(())
        }
        let mut state = BTreeMap::new();
        let dofs: Vec<usize> = self.entries.keys().copied().collect();
        for d in dofs {
            visit(d, &mut self.entries, &mut state)?;
        }
        self.closed = true;
        Ok(())
    }

    /// Overwrites constrained entries of `values` by their expressions.
    pub fn distribute(&self, values: &mut [f64]) {
        debug_assert!(self.closed);
        for (&d, c) in &self.entries {
            values[d] = c.terms.iter().map(|&(t, w)| w * values[t]).sum::<f64>() + c.inhom;
        }
    }

    /// Largest violation `|u_d - Σ w u_t - g|` over all constraints.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|(&d, c)| {
                (values[d] - c.terms.iter().map(|&(t, w)| w * values[t]).sum::<f64>() - c.inhom).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Hanging-node, Dirichlet and normalization constraints for a Taylor–Hood map.
pub fn build_constraints(dofs: &DofMap, bc: &BcSpec) -> Result<ConstraintSet> {
    let mesh = dofs.mesh();
    let mut set = ConstraintSet::new(dofs.n_total());
    set.normalization = bc.normalization.clone();
    set.periodic_identified = periodic_count(dofs);

    for (d, expr) in dofs.velocity.hanging() {
        for comp in 0..2 {
            set.add(
                dofs.velocity_dof(comp, *d),
                Constraint {
                    kind: ConstraintKind::Hanging,
                    terms: expr.iter().map(|&(t, w)| (dofs.velocity_dof(comp, t), w)).collect(),
                    inhom: 0.0,
                },
            )?;
        }
    }
    for (d, expr) in dofs.pressure.hanging() {
        set.add(
            dofs.pressure_dof(*d),
            Constraint {
                kind: ConstraintKind::Hanging,
                terms: expr.iter().map(|&(t, w)| (dofs.pressure_dof(t), w)).collect(),
                inhom: 0.0,
            },
        )?;
    }

    for bcd in &bc.dirichlet {
        let mut found = false;
        let basis = dofs.velocity.basis;
        for c in 0..mesh.n_cells() {
            for f in 0..4 {
                if !mesh.is_boundary_face(c, f) || mesh.face_tag(c, f) != Some(bcd.tag) {
                    continue;
                }
                found = true;
                let nodes = mesh.geometry_nodes(c);
                for i in basis.face_nodes(f) {
                    let (xi, eta) = basis.node(i);
                    let x = geometry_at(&nodes, xi, eta).x;
                    let val = bcd.value.at(x);
                    let d = dofs.velocity.cell_dofs(c)[i] as usize;
                    for comp in 0..2 {
                        if bcd.components[comp] {
                            set.dirichlet(dofs.velocity_dof(comp, d), val[comp])?;
                        }
                    }
                }
            }
        }
        if !found {
            return Err(Error::Invalid(format!(
                "boundary condition references tag `{}` with no boundary faces",
                bcd.tag.as_str()
            )));
        }
    }
    set.close()?;
    Ok(set)
}

/// Number of velocity nodes whose key merges periodic images.
fn periodic_count(dofs: &DofMap) -> usize {
    let mesh = dofs.mesh();
    let k = dofs.velocity_degree();
    let mut merged = std::collections::HashSet::new();
    let mut raw = std::collections::HashSet::new();
    for cell in mesh.cells() {
        for b in 0..=k {
            for a in 0..=k {
                let (u, v) = cell.node_position(a, b, k);
                merged.insert(mesh.point_key(cell.tree, u, v, true));
                raw.insert(mesh.point_key(cell.tree, u, v, false));
            }
        }
    }
    raw.len() - merged.len()
}
