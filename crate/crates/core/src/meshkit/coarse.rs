use std::collections::HashMap;

use crate::{Error, Result};

use super::inclusion::InclusionSpec;
use super::Point;

/// Labels attached to coarse edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    Left,
    Right,
    Top,
    Bottom,
    Inclusion,
    /// The free-fluid / porous interface `x_2 = 0` (an interior line).
    Interface,
    /// Artificial top `Γ_k` of the boundary-layer column.
    BlTop,
    /// Artificial bottom `Γ_l` of the boundary-layer column.
    BlBottom,
}

impl BoundaryTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryTag::Left => "left",
            BoundaryTag::Right => "right",
            BoundaryTag::Top => "top",
            BoundaryTag::Bottom => "bottom",
            BoundaryTag::Inclusion => "inclusion",
            BoundaryTag::Interface => "interface",
            BoundaryTag::BlTop => "bl_top",
            BoundaryTag::BlBottom => "bl_bottom",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "left" => BoundaryTag::Left,
            "right" => BoundaryTag::Right,
            "top" => BoundaryTag::Top,
            "bottom" => BoundaryTag::Bottom,
            "inclusion" => BoundaryTag::Inclusion,
            "interface" => BoundaryTag::Interface,
            "bl_top" => BoundaryTag::BlTop,
            "bl_bottom" => BoundaryTag::BlBottom,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Free,
    Porous { pore: u32 },
}

impl Region {
    pub fn is_free(&self) -> bool {
        matches!(self, Region::Free)
    }

    pub fn pore(&self) -> Option<usize> {
        match self {
            Region::Free => None,
            Region::Porous { pore } => Some(*pore as usize),
        }
    }
}

/// Affine placement `x = origin + scale * y` of a unit-template coordinate `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub origin: Point,
    pub scale: f64,
}

impl Placement {
    pub const IDENTITY: Placement = Placement {
        origin: [0.0, 0.0],
        scale: 1.0,
    };

    pub fn apply(&self, y: Point) -> Point {
        [
            self.origin[0] + self.scale * y[0],
            self.origin[1] + self.scale * y[1],
        ]
    }

    pub fn shifted(&self, dx: f64, dy: f64) -> Placement {
        Placement {
            origin: [self.origin[0] + dx, self.origin[1] + dy],
            scale: self.scale,
        }
    }
}

/// Exact geometry of one coarse cell: transfinite interpolation of its four edges.
///
/// Local vertices are counter-clockwise `v0=(0,0)`, `v1=(1,0)`, `v2=(1,1)`, `v3=(0,1)`;
/// local edges run bottom `v0→v1`, right `v1→v2`, top `v3→v2`, left `v0→v3`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    /// Corners in template coordinates.
    pub corners: [Point; 4],
    /// Arc parameters `(t_start, t_end)` along the inclusion for curved local edges.
    pub arcs: [Option<(f64, f64)>; 4],
    pub inclusion: Option<InclusionSpec>,
    pub placement: Placement,
}

impl Chart {
    pub fn straight(corners: [Point; 4], placement: Placement) -> Self {
        Self {
            corners,
            arcs: [None; 4],
            inclusion: None,
            placement,
        }
    }

    fn edge_point(&self, edge: usize, s: f64) -> Point {
        let (a, b) = match edge {
            0 => (0, 1),
            1 => (1, 2),
            2 => (3, 2),
            _ => (0, 3),
        };
        match (self.arcs[edge], &self.inclusion) {
            (Some((t0, t1)), Some(inc)) => inc.curve_point(t0 + s * (t1 - t0)),
            _ => {
                let (p, q) = (self.corners[a], self.corners[b]);
                [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])]
            }
        }
    }

    /// Template coordinates of the reference point `(xi, eta)`.
    pub fn map_template(&self, xi: f64, eta: f64) -> Point {
        let c = &self.corners;
        if self.arcs.iter().all(Option::is_none) {
            let w = [(1.0 - xi) * (1.0 - eta), xi * (1.0 - eta), xi * eta, (1.0 - xi) * eta];
            return [
                w[0] * c[0][0] + w[1] * c[1][0] + w[2] * c[2][0] + w[3] * c[3][0],
                w[0] * c[0][1] + w[1] * c[1][1] + w[2] * c[2][1] + w[3] * c[3][1],
            ];
        }
        let b = self.edge_point(0, xi);
        let r = self.edge_point(1, eta);
        let t = self.edge_point(2, xi);
        let l = self.edge_point(3, eta);
        let mut out = [0.0; 2];
        for d in 0..2 {
            out[d] = (1.0 - eta) * b[d] + eta * t[d] + (1.0 - xi) * l[d] + xi * r[d]
                - ((1.0 - xi) * (1.0 - eta) * c[0][d]
                    + xi * (1.0 - eta) * c[1][d]
                    + xi * eta * c[2][d]
                    + (1.0 - xi) * eta * c[3][d]);
        }
        out
    }

    pub fn map(&self, xi: f64, eta: f64) -> Point {
        self.placement.apply(self.map_template(xi, eta))
    }

    /// Whether local edge `e` lies on the inclusion curve.
    pub fn is_curved(&self, e: usize) -> bool {
        self.arcs[e].is_some()
    }
}

#[derive(Debug, Clone)]
pub struct CoarseCell {
    pub vertices: [u32; 4],
    pub edges: [u32; 4],
    pub chart: Chart,
    pub region: Region,
}

#[derive(Debug, Clone)]
pub struct CoarseEdge {
    /// Raw endpoint vertex ids, lower id first.
    pub vertices: [u32; 2],
    pub tag: Option<BoundaryTag>,
    /// Number of adjacent coarse cells.
    pub valence: u8,
}

/// Pore bookkeeping for the pressure extension into solid inclusions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoreInfo {
    pub placement: Placement,
    pub inclusion: InclusionSpec,
}

impl PoreInfo {
    /// Physical area of the whole period cell `ε^2`.
    pub fn cell_area(&self) -> f64 {
        self.placement.scale * self.placement.scale
    }

    pub fn solid_area(&self) -> f64 {
        self.inclusion.area() * self.cell_area()
    }

    pub fn solid_centroid(&self) -> Point {
        self.placement.apply(self.inclusion.center)
    }

    pub fn solid_vertical_moment(&self) -> f64 {
        self.inclusion.vertical_second_moment() * self.cell_area() * self.cell_area()
    }
}

/// Macro mesh: one quadtree root per cell, with periodic identifications.
#[derive(Debug, Clone)]
pub struct CoarseMesh {
    pub vertices: Vec<Point>,
    pub cells: Vec<CoarseCell>,
    pub edges: Vec<CoarseEdge>,
    /// Representative of each vertex after periodic identification.
    pub vertex_canon: Vec<u32>,
    /// Representative of each edge after periodic identification.
    pub edge_canon: Vec<u32>,
    /// Identified edge pairs `(source, target)`.
    pub periodic_pairs: Vec<(u32, u32)>,
    pub pores: Vec<PoreInfo>,
    /// Period vectors used for the identifications.
    pub periods: Vec<Point>,
}

pub(crate) const LOCAL_EDGE_VERTICES: [(usize, usize); 4] = [(0, 1), (1, 2), (3, 2), (0, 3)];

impl CoarseMesh {
    /// Whether local edge `e` of `cell` runs against the canonical (or raw) orientation.
    pub fn edge_reversed(&self, cell: usize, e: usize, merged: bool) -> bool {
        let c = &self.cells[cell];
        let (a, b) = LOCAL_EDGE_VERTICES[e];
        let (va, vb) = (c.vertices[a], c.vertices[b]);
        if merged {
            self.vertex_canon[va as usize] > self.vertex_canon[vb as usize]
        } else {
            va > vb
        }
    }

    pub fn vertex_id(&self, v: u32, merged: bool) -> u32 {
        if merged {
            self.vertex_canon[v as usize]
        } else {
            v
        }
    }

    pub fn edge_id(&self, e: u32, merged: bool) -> u32 {
        if merged {
            self.edge_canon[e as usize]
        } else {
            e
        }
    }

    pub fn edge_tag(&self, cell: usize, e: usize) -> Option<BoundaryTag> {
        self.edges[self.cells[cell].edges[e] as usize].tag
    }

    /// Whether local edge `e` of `cell` has no neighbor (after periodic identification).
    pub fn edge_on_boundary(&self, cell: usize, e: usize) -> bool {
        let id = self.cells[cell].edges[e];
        self.edges[id as usize].valence == 1 && !self.is_periodic_edge(id)
    }

    pub fn is_periodic_edge(&self, e: u32) -> bool {
        self.periodic_pairs.iter().any(|&(a, b)| a == e || b == e)
    }
}

/// Geometric facts handed to the edge tagger.
#[derive(Debug, Clone, Copy)]
pub struct EdgeInfo {
    pub p0: Point,
    pub p1: Point,
    pub boundary: bool,
    pub curved: bool,
    pub regions: (Region, Option<Region>),
}

/// Periodic identification of edges tagged `target` with edges tagged `source`
/// shifted by `offset`.
#[derive(Debug, Clone, Copy)]
pub struct PeriodicSpec {
    pub source: BoundaryTag,
    pub target: BoundaryTag,
    pub offset: Point,
}

pub struct CoarseBuilder {
    vertices: Vec<Point>,
    lookup: HashMap<(i64, i64), Vec<u32>>,
    cells: Vec<([u32; 4], Chart, Region)>,
    pores: Vec<PoreInfo>,
    tol: f64,
}

impl CoarseBuilder {
    pub fn new(tol: f64) -> Self {
        Self {
            vertices: Vec::new(),
            lookup: HashMap::new(),
            cells: Vec::new(),
            pores: Vec::new(),
            tol,
        }
    }

    fn grid_key(&self, p: Point) -> (i64, i64) {
        (
            (p[0] / self.tol).round() as i64,
            (p[1] / self.tol).round() as i64,
        )
    }

    pub fn vertex(&mut self, p: Point) -> u32 {
        let (kx, ky) = self.grid_key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.lookup.get(&(kx + dx, ky + dy)) {
                    for &id in ids {
                        let q = self.vertices[id as usize];
                        if (p[0] - q[0]).abs() <= self.tol && (p[1] - q[1]).abs() <= self.tol {
                            return id;
                        }
                    }
                }
            }
        }
        let id = self.vertices.len() as u32;
        self.vertices.push(p);
        self.lookup.entry((kx, ky)).or_default().push(id);
        id
    }

    pub fn add_pore(&mut self, info: PoreInfo) -> u32 {
        self.pores.push(info);
        (self.pores.len() - 1) as u32
    }

    /// Adds a cell whose physical corners come from its chart.
    pub fn cell(&mut self, chart: Chart, region: Region) -> Result<()> {
        let corners = [
            chart.map(0.0, 0.0),
            chart.map(1.0, 0.0),
            chart.map(1.0, 1.0),
            chart.map(0.0, 1.0),
        ];
        let mut area2 = 0.0;
        for i in 0..4 {
            let (p, q) = (corners[i], corners[(i + 1) % 4]);
            area2 += p[0] * q[1] - q[0] * p[1];
        }
        if area2 <= 0.0 {
            return Err(Error::Geometry(format!(
                "coarse cell with corners {corners:?} is not counter-clockwise"
            )));
        }
        let ids = corners.map(|p| self.vertex(p));
        self.cells.push((ids, chart, region));
        Ok(())
    }

    pub fn finish(
        self,
        tagger: &dyn Fn(&EdgeInfo) -> Option<BoundaryTag>,
        periodic: &[PeriodicSpec],
    ) -> Result<CoarseMesh> {
        let mut edge_lookup: HashMap<(u32, u32), u32> = HashMap::new();
        let mut edges: Vec<CoarseEdge> = Vec::new();
        let mut edge_cells: Vec<Vec<(usize, usize)>> = Vec::new();
        let mut cells = Vec::with_capacity(self.cells.len());
        for (ci, (verts, chart, region)) in self.cells.into_iter().enumerate() {
            let mut cell_edges = [0u32; 4];
            for (e, &(a, b)) in LOCAL_EDGE_VERTICES.iter().enumerate() {
                let (va, vb) = (verts[a], verts[b]);
                if va == vb {
                    return Err(Error::Geometry(format!("degenerate edge in coarse cell {ci}")));
                }
                let key = (va.min(vb), va.max(vb));
                let id = *edge_lookup.entry(key).or_insert_with(|| {
                    edges.push(CoarseEdge {
                        vertices: [key.0, key.1],
                        tag: None,
                        valence: 0,
                    });
                    edge_cells.push(Vec::new());
                    (edges.len() - 1) as u32
                });
                edges[id as usize].valence += 1;
                if edges[id as usize].valence > 2 {
                    return Err(Error::Geometry(format!("edge {key:?} shared by more than two cells")));
                }
                edge_cells[id as usize].push((ci, e));
                cell_edges[e] = id;
            }
            cells.push(CoarseCell {
                vertices: verts,
                edges: cell_edges,
                chart,
                region,
            });
        }

        for (id, edge) in edges.iter_mut().enumerate() {
            let (c0, e0) = edge_cells[id][0];
            let other = edge_cells[id].get(1).map(|&(c, _)| cells[c].region);
            let info = EdgeInfo {
                p0: self.vertices[edge.vertices[0] as usize],
                p1: self.vertices[edge.vertices[1] as usize],
                boundary: edge.valence == 1,
                curved: cells[c0].chart.is_curved(e0),
                regions: (cells[c0].region, other),
            };
            edge.tag = tagger(&info);
        }

        let nv = self.vertices.len();
        let mut vparent: Vec<u32> = (0..nv as u32).collect();
        let mut eparent: Vec<u32> = (0..edges.len() as u32).collect();
        let mut pairs = Vec::new();
        let mut periods = Vec::new();
        let tol = self.tol;
        let close = |p: Point, q: Point| (p[0] - q[0]).abs() <= tol && (p[1] - q[1]).abs() <= tol;
        for spec in periodic {
            periods.push(spec.offset);
            let sources: Vec<u32> = (0..edges.len() as u32)
                .filter(|&e| edges[e as usize].tag == Some(spec.source))
                .collect();
            for t in 0..edges.len() as u32 {
                if edges[t as usize].tag != Some(spec.target) {
                    continue;
                }
                let [ta, tb] = edges[t as usize].vertices;
                let (pa, pb) = (self.vertices[ta as usize], self.vertices[tb as usize]);
                let shift = |p: Point| [p[0] - spec.offset[0], p[1] - spec.offset[1]];
                let found = sources.iter().copied().find_map(|s| {
                    let [sa, sb] = edges[s as usize].vertices;
                    let (qa, qb) = (self.vertices[sa as usize], self.vertices[sb as usize]);
                    if close(shift(pa), qa) && close(shift(pb), qb) {
                        Some((s, [(sa, ta), (sb, tb)]))
                    } else if close(shift(pa), qb) && close(shift(pb), qa) {
                        Some((s, [(sb, ta), (sa, tb)]))
                    } else {
                        None
                    }
                });
                let (s, vpairs) = found.ok_or_else(|| {
                    Error::Geometry(format!(
                        "no periodic partner for {} edge {pa:?}-{pb:?}",
                        spec.target.as_str()
                    ))
                })?;
                for (a, b) in vpairs {
                    union(&mut vparent, a, b);
                }
                union(&mut eparent, s, t);
                pairs.push((s, t));
            }
        }
        let vertex_canon: Vec<u32> = (0..nv as u32).map(|v| find(&mut vparent, v)).collect();
        let edge_canon: Vec<u32> = (0..edges.len() as u32).map(|e| find(&mut eparent, e)).collect();
        for e in &edges {
            if vertex_canon[e.vertices[0] as usize] == vertex_canon[e.vertices[1] as usize] {
                return Err(Error::Geometry(
                    "periodic identification collapses an edge; use at least two segments per periodic side"
                        .into(),
                ));
            }
        }
        Ok(CoarseMesh {
            vertices: self.vertices,
            cells,
            edges,
            vertex_canon,
            edge_canon,
            periodic_pairs: pairs,
            pores: self.pores,
            periods,
        })
    }
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let p = parent[x as usize];
        parent[x as usize] = parent[p as usize];
        x = p;
    }
    x
}

fn union(parent: &mut [u32], a: u32, b: u32) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        parent[hi as usize] = lo;
    }
}
