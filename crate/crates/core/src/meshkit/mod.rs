//! Curved quadrilateral meshes for the unit cell, the perforated strip and the
//! boundary-layer column.
//!
//! A mesh is a forest: every coarse cell carries an exact transfinite chart and
//! is the root of a quadtree. Geometry nodes of active cells are images of
//! dyadic reference points under the chart, so nodes on the inclusion stay on
//! the exact curve under any refinement.

mod coarse;
mod epsilon;
mod forest;
mod inclusion;
pub(crate) mod io;
mod templates;

pub use coarse::{
    BoundaryTag, Chart, CoarseBuilder, CoarseCell, CoarseEdge, CoarseMesh, EdgeInfo,
    PeriodicSpec, Placement, PoreInfo, Region,
};
pub use epsilon::Epsilon;
pub use forest::{ActiveCell, FaceNeighbor, HangingFace, LineKey, PointKey, QuadMesh, MAX_LEVEL, SCALE};
pub use inclusion::{InclusionKind, InclusionSpec};
pub use io::MeshDump;
pub use templates::{
    build_bl_mesh, build_box_mesh, build_strip_mesh, build_unit_cell_mesh, GeometrySpec, StripSides,
};

pub type Point = [f64; 2];
