use std::collections::HashMap;
use std::sync::Arc;

use crate::{Error, Result};

use super::coarse::{BoundaryTag, CoarseMesh, Region};
use super::Point;

/// Deepest admissible refinement level.
pub const MAX_LEVEL: u32 = 24;
/// Integer extent of a tree's reference square; divisible by 6 at every level so
/// that Q1, Q2 and Q3 node positions are exact integers.
pub const SCALE: u64 = 6 << MAX_LEVEL;

/// Local node indices of the 9-node geometry on each face, in face direction.
pub(crate) const FACE_GEOMETRY_NODES: [[usize; 3]; 4] = [[0, 1, 2], [2, 5, 8], [6, 7, 8], [0, 3, 6]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActiveCell {
    pub tree: u32,
    pub level: u8,
    pub ix: u32,
    pub iy: u32,
}

impl ActiveCell {
    pub fn root(tree: u32) -> Self {
        Self {
            tree,
            level: 0,
            ix: 0,
            iy: 0,
        }
    }

    /// Integer edge length in tree coordinates.
    pub fn size(&self) -> u64 {
        SCALE >> self.level
    }

    pub fn origin(&self) -> (u64, u64) {
        let h = self.size();
        (self.ix as u64 * h, self.iy as u64 * h)
    }

    /// Children in lexicographic order `(0,0), (1,0), (0,1), (1,1)`.
    pub fn children(&self) -> [ActiveCell; 4] {
        let c = |dx: u32, dy: u32| ActiveCell {
            tree: self.tree,
            level: self.level + 1,
            ix: 2 * self.ix + dx,
            iy: 2 * self.iy + dy,
        };
        [c(0, 0), c(1, 0), c(0, 1), c(1, 1)]
    }

    /// Tree coordinates of local node `(a, b)` of a degree-`k` tensor grid.
    pub fn node_position(&self, a: usize, b: usize, k: usize) -> (u64, u64) {
        let h = self.size();
        let (u0, v0) = self.origin();
        (u0 + a as u64 * h / k as u64, v0 + b as u64 * h / k as u64)
    }
}

/// Topological identity of a point of the forest. Points on shared coarse
/// vertices and edges resolve to the same key from every adjacent tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PointKey {
    Vertex(u32),
    Edge(u32, u64),
    Interior(u32, u64, u64),
}

/// A straight line of the reference forest on which cell faces lie.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LineKey {
    Edge(u32),
    Interior { tree: u32, vertical: bool, coord: u64 },
}

/// What lies across a cell face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceNeighbor {
    Boundary,
    Same { cell: u32, face: u8 },
    /// The face is one half of the neighbor's face (this side hangs).
    Coarser { cell: u32, face: u8 },
    Finer { cells: [(u32, u8); 2] },
}

impl FaceNeighbor {
    pub fn cells(&self) -> impl Iterator<Item = u32> + '_ {
        let (a, b) = match *self {
            FaceNeighbor::Boundary => (None, None),
            FaceNeighbor::Same { cell, .. } | FaceNeighbor::Coarser { cell, .. } => (Some(cell), None),
            FaceNeighbor::Finer { cells } => (Some(cells[0].0), Some(cells[1].0)),
        };
        a.into_iter().chain(b)
    }
}

/// A fine face constrained to the trace of a coarser neighbor face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HangingFace {
    pub fine_cell: u32,
    pub fine_face: u8,
    pub coarse_cell: u32,
    pub coarse_face: u8,
}

/// Adaptively refined forest of quadtrees over a [`CoarseMesh`].
#[derive(Debug, Clone)]
pub struct QuadMesh {
    coarse: Arc<CoarseMesh>,
    cells: Vec<ActiveCell>,
    neighbors: Vec<[FaceNeighbor; 4]>,
    geometry: Vec<[Point; 9]>,
}

impl QuadMesh {
    pub fn from_coarse(coarse: CoarseMesh) -> Result<Self> {
        let n = coarse.cells.len() as u32;
        Self::new(Arc::new(coarse), (0..n).map(ActiveCell::root).collect())
    }

    pub fn new(coarse: Arc<CoarseMesh>, cells: Vec<ActiveCell>) -> Result<Self> {
        let mut mesh = Self {
            coarse,
            cells,
            neighbors: Vec::new(),
            geometry: Vec::new(),
        };
        mesh.neighbors = mesh.compute_neighbors()?;
        mesh.geometry = (0..mesh.cells.len()).map(|c| mesh.compute_geometry(c)).collect();
        Ok(mesh)
    }

    pub fn coarse(&self) -> &CoarseMesh {
        &self.coarse
    }

    pub fn coarse_arc(&self) -> &Arc<CoarseMesh> {
        &self.coarse
    }

    pub fn cells(&self) -> &[ActiveCell] {
        &self.cells
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell(&self, c: usize) -> ActiveCell {
        self.cells[c]
    }

    pub fn level(&self, c: usize) -> u8 {
        self.cells[c].level
    }

    pub fn max_level(&self) -> u8 {
        self.cells.iter().map(|c| c.level).max().unwrap_or(0)
    }

    pub fn neighbors(&self, c: usize) -> &[FaceNeighbor; 4] {
        &self.neighbors[c]
    }

    pub fn region(&self, c: usize) -> Region {
        self.coarse.cells[self.cells[c].tree as usize].region
    }

    /// Whether face `f` of cell `c` lies on an edge of its coarse cell.
    pub fn face_on_tree_edge(&self, c: usize, f: usize) -> bool {
        let cell = &self.cells[c];
        let h = cell.size();
        let (u0, v0) = cell.origin();
        match f {
            0 => v0 == 0,
            1 => u0 + h == SCALE,
            2 => v0 + h == SCALE,
            _ => u0 == 0,
        }
    }

    /// Whether the canonical (merged) parameter of face `f` runs against the face direction.
    pub fn face_reversed(&self, c: usize, f: usize) -> bool {
        self.face_on_tree_edge(c, f) && self.coarse.edge_reversed(self.cells[c].tree as usize, f, true)
    }

    /// Tag of the coarse edge under face `f` of cell `c`, if any.
    pub fn face_tag(&self, c: usize, f: usize) -> Option<BoundaryTag> {
        if self.face_on_tree_edge(c, f) {
            self.coarse.edge_tag(self.cells[c].tree as usize, f)
        } else {
            None
        }
    }

    pub fn is_boundary_face(&self, c: usize, f: usize) -> bool {
        self.neighbors[c][f] == FaceNeighbor::Boundary
    }

    pub fn hanging_faces(&self) -> Vec<HangingFace> {
        let mut out = Vec::new();
        for (c, nb) in self.neighbors.iter().enumerate() {
            for (f, n) in nb.iter().enumerate() {
                if let FaceNeighbor::Coarser { cell, face } = *n {
                    out.push(HangingFace {
                        fine_cell: c as u32,
                        fine_face: f as u8,
                        coarse_cell: cell,
                        coarse_face: face,
                    });
                }
            }
        }
        out
    }

    /// Canonical key of the tree point `(u, v)`. With `merged`, periodic images
    /// share one key.
    pub fn point_key(&self, tree: u32, u: u64, v: u64, merged: bool) -> PointKey {
        let coarse = &self.coarse;
        let cc = &coarse.cells[tree as usize];
        let corner = match (u, v) {
            (0, 0) => Some(0),
            (SCALE, 0) => Some(1),
            (SCALE, SCALE) => Some(2),
            (0, SCALE) => Some(3),
            _ => None,
        };
        if let Some(k) = corner {
            return PointKey::Vertex(coarse.vertex_id(cc.vertices[k], merged));
        }
        let (edge, p) = if v == 0 {
            (0, u)
        } else if u == SCALE {
            (1, v)
        } else if v == SCALE {
            (2, u)
        } else if u == 0 {
            (3, v)
        } else {
            return PointKey::Interior(tree, u, v);
        };
        let s = if coarse.edge_reversed(tree as usize, edge, merged) {
            SCALE - p
        } else {
            p
        };
        PointKey::Edge(coarse.edge_id(cc.edges[edge], merged), s)
    }

    /// Line and parameter interval of face `f` of a cell.
    pub fn face_segment(&self, cell: &ActiveCell, f: usize, merged: bool) -> (LineKey, u64, u64) {
        let h = cell.size();
        let (u0, v0) = cell.origin();
        let (fixed, lo, vertical) = match f {
            0 => (v0, u0, false),
            1 => (u0 + h, v0, true),
            2 => (v0 + h, u0, false),
            _ => (u0, v0, true),
        };
        if fixed == 0 || fixed == SCALE {
            let cc = &self.coarse.cells[cell.tree as usize];
            let id = self.coarse.edge_id(cc.edges[f], merged);
            if self.coarse.edge_reversed(cell.tree as usize, f, merged) {
                (LineKey::Edge(id), SCALE - lo - h, SCALE - lo)
            } else {
                (LineKey::Edge(id), lo, lo + h)
            }
        } else {
            (
                LineKey::Interior {
                    tree: cell.tree,
                    vertical,
                    coord: fixed,
                },
                lo,
                lo + h,
            )
        }
    }

    fn compute_neighbors(&self) -> Result<Vec<[FaceNeighbor; 4]>> {
        let mut lines: HashMap<LineKey, Vec<(u64, u64, u32, u8)>> = HashMap::new();
        for (c, cell) in self.cells.iter().enumerate() {
            for f in 0..4 {
                let (key, lo, hi) = self.face_segment(cell, f, true);
                lines.entry(key).or_default().push((lo, hi, c as u32, f as u8));
            }
        }
        let mut out = vec![[FaceNeighbor::Boundary; 4]; self.cells.len()];
        for segs in lines.values_mut() {
            segs.sort_unstable();
            let maxlen = segs.iter().map(|s| s.1 - s.0).max().unwrap_or(0);
            for (i, &(lo, hi, c, f)) in segs.iter().enumerate() {
                let start = segs.partition_point(|s| s.0 + maxlen <= lo);
                let mut over: Vec<(u64, u64, u32, u8)> = Vec::new();
                for (j, s) in segs.iter().enumerate().skip(start) {
                    if s.0 >= hi {
                        break;
                    }
                    if j != i && s.1 > lo {
                        over.push(*s);
                    }
                }
                let nb = match over.as_slice() {
                    [] => FaceNeighbor::Boundary,
                    [s] if s.0 == lo && s.1 == hi => FaceNeighbor::Same { cell: s.2, face: s.3 },
                    [s] if s.0 <= lo && s.1 >= hi && s.1 - s.0 == 2 * (hi - lo) => {
                        FaceNeighbor::Coarser { cell: s.2, face: s.3 }
                    }
                    [a, b] if a.0 == lo && b.1 == hi && a.1 == b.0 && 2 * (a.1 - a.0) == hi - lo => {
                        FaceNeighbor::Finer {
                            cells: [(a.2, a.3), (b.2, b.3)],
                        }
                    }
                    _ => {
                        return Err(Error::Geometry(format!(
                            "face {f} of cell {c} violates the one-level hanging rule ({} overlapping faces)",
                            over.len()
                        )))
                    }
                };
                out[c as usize][f as usize] = nb;
            }
        }
        Ok(out)
    }

    /// Splits marked cells 1→4 after closing the marks under the 2:1 rule.
    pub fn refine(&self, marks: &[bool]) -> Result<QuadMesh> {
        if marks.len() != self.cells.len() {
            return Err(Error::Invalid(format!(
                "{} refinement marks for {} cells",
                marks.len(),
                self.cells.len()
            )));
        }
        let mut marked = marks.to_vec();
        let target = |c: usize, m: &[bool]| self.cells[c].level as u32 + m[c] as u32;
        loop {
            let mut changed = false;
            for c in 0..self.cells.len() {
                if !marked[c] {
                    continue;
                }
                for nb in &self.neighbors[c] {
                    for n in nb.cells() {
                        let n = n as usize;
                        if target(c, &marked) > target(n, &marked) + 1 {
                            marked[n] = true;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut cells = Vec::with_capacity(self.cells.len() + 3 * marked.iter().filter(|&&m| m).count());
        for (c, cell) in self.cells.iter().enumerate() {
            if marked[c] {
                if cell.level as u32 >= MAX_LEVEL {
                    return Err(Error::Geometry(format!("cell {c} already at maximum level {MAX_LEVEL}")));
                }
                cells.extend(cell.children());
            } else {
                cells.push(*cell);
            }
        }
        QuadMesh::new(self.coarse.clone(), cells)
    }

    pub fn refine_all(&self) -> Result<QuadMesh> {
        self.refine(&vec![true; self.cells.len()])
    }

    pub fn refine_uniform(&self, times: usize) -> Result<QuadMesh> {
        let mut mesh = self.clone();
        for _ in 0..times {
            mesh = mesh.refine_all()?;
        }
        Ok(mesh)
    }

    /// Exact chart image of the tree point `(u, v)`.
    pub fn chart_point(&self, tree: u32, u: u64, v: u64) -> Point {
        let s = SCALE as f64;
        self.coarse.cells[tree as usize]
            .chart
            .map(u as f64 / s, v as f64 / s)
    }

    /// The nine geometry nodes of cell `c` in tensor order `b * 3 + a`.
    ///
    /// Midside nodes of hanging faces are interpolated from the coarse
    /// neighbor's quadratic edge so that the mesh stays watertight.
    pub fn geometry_nodes(&self, c: usize) -> &[Point; 9] {
        &self.geometry[c]
    }

    fn compute_geometry(&self, c: usize) -> [Point; 9] {
        let cell = self.cells[c];
        let mut nodes = [[0.0; 2]; 9];
        for b in 0..3 {
            for a in 0..3 {
                let (u, v) = cell.node_position(a, b, 2);
                nodes[b * 3 + a] = self.chart_point(cell.tree, u, v);
            }
        }
        for f in 0..4 {
            if let FaceNeighbor::Coarser { .. } = self.neighbors[c][f] {
                let h = cell.size();
                let (u0, v0) = cell.origin();
                let (fixed, lo, vertical) = match f {
                    0 => (v0, u0, false),
                    1 => (u0 + h, v0, true),
                    2 => (v0 + h, u0, false),
                    _ => (u0, v0, true),
                };
                let parent = lo - lo % (2 * h);
                let at = |s: u64| {
                    if vertical {
                        self.chart_point(cell.tree, fixed, s)
                    } else {
                        self.chart_point(cell.tree, s, fixed)
                    }
                };
                let p = [at(parent), at(parent + h), at(parent + 2 * h)];
                let t = if lo == parent { 0.25 } else { 0.75 };
                let w = [2.0 * (t - 0.5) * (t - 1.0), -4.0 * t * (t - 1.0), 2.0 * t * (t - 0.5)];
                nodes[FACE_GEOMETRY_NODES[f][1]] = [
                    w[0] * p[0][0] + w[1] * p[1][0] + w[2] * p[2][0],
                    w[0] * p[0][1] + w[1] * p[1][1] + w[2] * p[2][1],
                ];
            }
        }
        nodes
    }

    /// Geometric center (chart image of the reference midpoint).
    pub fn cell_center(&self, c: usize) -> Point {
        self.geometry_nodes(c)[4]
    }

    /// Whether geometry node `i` of cell `c` lies on the inclusion boundary.
    pub fn node_on_inclusion(&self, c: usize, i: usize) -> bool {
        (0..4).any(|f| {
            FACE_GEOMETRY_NODES[f].contains(&i)
                && self.is_boundary_face(c, f)
                && self.face_tag(c, f) == Some(BoundaryTag::Inclusion)
        })
    }

    /// Pairs of faces identified through periodicity, as `(cell*4+face)` ids.
    pub fn periodic_face_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (c, nb) in self.neighbors.iter().enumerate() {
            for (f, n) in nb.iter().enumerate() {
                let other = match *n {
                    FaceNeighbor::Same { cell, face } | FaceNeighbor::Coarser { cell, face } => {
                        (cell as usize, face as usize)
                    }
                    _ => continue,
                };
                let (raw_a, ..) = self.face_segment(&self.cells[c], f, false);
                let (raw_b, ..) = self.face_segment(&self.cells[other.0], other.1, false);
                let a = c * 4 + f;
                let b = other.0 * 4 + other.1;
                if raw_a != raw_b && (a < b || matches!(n, FaceNeighbor::Coarser { .. })) {
                    out.push((a, b));
                }
            }
        }
        out
    }
}
