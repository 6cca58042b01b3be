use num_rational::Ratio;

use crate::{Error, Result};

use super::coarse::{
    BoundaryTag, Chart, CoarseBuilder, EdgeInfo, PeriodicSpec, Placement, PoreInfo, Region,
};
use super::epsilon::Epsilon;
use super::forest::QuadMesh;
use super::inclusion::InclusionSpec;
use super::Point;

const VERTEX_TOL: f64 = 1e-11;
/// Relative position of the middle ring between inclusion and cell boundary.
const RING_FRACTION: f64 = 0.5;

/// Geometry of the microscopic problem: `Ω_f = (0,L)×(0,1)` above `Γ`, perforated
/// `Ω_p = (0,L)×(-1,0)` below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometrySpec {
    pub inclusion: InclusionSpec,
    pub epsilon: Epsilon,
    pub length: Ratio<i64>,
}

impl GeometrySpec {
    pub fn new(inclusion: InclusionSpec, epsilon: Epsilon, length: Ratio<i64>) -> Result<Self> {
        inclusion.validate()?;
        let g = Self {
            inclusion,
            epsilon,
            length,
        };
        epsilon.periods_in(length)?;
        epsilon.rows()?;
        Ok(g)
    }

    pub fn length_f64(&self) -> f64 {
        ratio_f64(self.length)
    }
}

/// Side conditions of the strip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StripSides {
    Periodic,
    Open,
}

pub(crate) fn ratio_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Adds the 16-cell O-grid of one perforated period cell: 8 straight cells
/// along the cell boundary and 8 cells with one curved edge around the inclusion.
fn add_period_cell(
    b: &mut CoarseBuilder,
    inclusion: &InclusionSpec,
    placement: Placement,
    pore: u32,
) -> Result<()> {
    let square: [Point; 8] = [
        [1.0, 0.5],
        [1.0, 1.0],
        [0.5, 1.0],
        [0.0, 1.0],
        [0.0, 0.5],
        [0.0, 0.0],
        [0.5, 0.0],
        [1.0, 0.0],
    ];
    let c = inclusion.center;
    let mut t = [0.0; 9];
    for i in 0..8 {
        let angle = (square[i][1] - c[1]).atan2(square[i][0] - c[0]);
        t[i] = inclusion.ray_parameter(angle);
        if i > 0 {
            while t[i] <= t[i - 1] {
                t[i] += 2.0 * std::f64::consts::PI;
            }
        }
    }
    t[8] = t[0] + 2.0 * std::f64::consts::PI;
    if t[7] >= t[8] {
        return Err(Error::Geometry("inclusion is not star-shaped about its center".into()));
    }
    let inner: Vec<Point> = t.iter().map(|&ti| inclusion.curve_point(ti)).collect();
    let ring: Vec<Point> = (0..9)
        .map(|i| {
            let (p, q) = (inner[i], square[i % 8]);
            [
                p[0] + RING_FRACTION * (q[0] - p[0]),
                p[1] + RING_FRACTION * (q[1] - p[1]),
            ]
        })
        .collect();
    let region = Region::Porous { pore };
    for i in 0..8 {
        let j = (i + 1) % 8;
        b.cell(
            Chart::straight([square[i], square[j], ring[i + 1], ring[i]], placement),
            region,
        )?;
    }
    for i in 0..8 {
        let mut chart = Chart::straight([ring[i], ring[i + 1], inner[i + 1], inner[i]], placement);
        chart.arcs[2] = Some((t[i], t[i + 1]));
        chart.inclusion = Some(*inclusion);
        b.cell(chart, region)?;
    }
    Ok(())
}

fn add_rect(b: &mut CoarseBuilder, x: [f64; 2], y: [f64; 2]) -> Result<()> {
    b.cell(
        Chart::straight(
            [[x[0], y[0]], [x[1], y[0]], [x[1], y[1]], [x[0], y[1]]],
            Placement::IDENTITY,
        ),
        Region::Free,
    )
}

/// Boundary tagging of an axis-aligned box with the interface at `y = 0`.
fn box_tagger(
    x: [f64; 2],
    y: [f64; 2],
    top: BoundaryTag,
    bottom: BoundaryTag,
) -> impl Fn(&EdgeInfo) -> Option<BoundaryTag> {
    move |e: &EdgeInfo| {
        let tol = 1e-9;
        let on = |a: f64, b: f64, v: f64| (a - v).abs() < tol && (b - v).abs() < tol;
        if e.boundary {
            if e.curved {
                Some(BoundaryTag::Inclusion)
            } else if on(e.p0[0], e.p1[0], x[0]) {
                Some(BoundaryTag::Left)
            } else if on(e.p0[0], e.p1[0], x[1]) {
                Some(BoundaryTag::Right)
            } else if on(e.p0[1], e.p1[1], y[1]) {
                Some(top)
            } else if on(e.p0[1], e.p1[1], y[0]) {
                Some(bottom)
            } else {
                None
            }
        } else {
            match e.regions {
                (Region::Free, Some(Region::Porous { .. })) | (Region::Porous { .. }, Some(Region::Free))
                    if on(e.p0[1], e.p1[1], 0.0) =>
                {
                    Some(BoundaryTag::Interface)
                }
                _ => None,
            }
        }
    }
}

/// Mesh of the fluid part of the unit cell with 1-periodic identification in
/// both directions.
pub fn build_unit_cell_mesh(inclusion: &InclusionSpec, base_refine: usize) -> Result<QuadMesh> {
    inclusion.validate()?;
    let mut b = CoarseBuilder::new(VERTEX_TOL);
    let pore = b.add_pore(PoreInfo {
        placement: Placement::IDENTITY,
        inclusion: *inclusion,
    });
    add_period_cell(&mut b, inclusion, Placement::IDENTITY, pore)?;
    let tagger = box_tagger([0.0, 1.0], [0.0, 1.0], BoundaryTag::Top, BoundaryTag::Bottom);
    let coarse = b.finish(
        &tagger,
        &[
            PeriodicSpec {
                source: BoundaryTag::Left,
                target: BoundaryTag::Right,
                offset: [1.0, 0.0],
            },
            PeriodicSpec {
                source: BoundaryTag::Bottom,
                target: BoundaryTag::Top,
                offset: [0.0, 1.0],
            },
        ],
    )?;
    QuadMesh::from_coarse(coarse)?.refine_uniform(base_refine)
}

/// Axis-aligned box of free fluid split into `nx × ny` coarse cells, sides
/// tagged `Left`/`Right`/`Bottom`/`Top`.
pub fn build_box_mesh(x: [f64; 2], y: [f64; 2], nx: usize, ny: usize, base_refine: usize) -> Result<QuadMesh> {
    if nx == 0 || ny == 0 || !(x[1] > x[0]) || !(y[1] > y[0]) {
        return Err(Error::Invalid(format!("empty box {x:?}×{y:?} with {nx}×{ny} cells")));
    }
    let h = ((x[1] - x[0]) / nx as f64).min((y[1] - y[0]) / ny as f64);
    let mut b = CoarseBuilder::new(VERTEX_TOL * h.min(1.0));
    let xs: Vec<f64> = (0..=nx).map(|i| x[0] + (x[1] - x[0]) * i as f64 / nx as f64).collect();
    let ys: Vec<f64> = (0..=ny).map(|j| y[0] + (y[1] - y[0]) * j as f64 / ny as f64).collect();
    for j in 0..ny {
        for i in 0..nx {
            add_rect(&mut b, [xs[i], xs[i + 1]], [ys[j], ys[j + 1]])?;
        }
    }
    let tagger = box_tagger(x, y, BoundaryTag::Top, BoundaryTag::Bottom);
    let coarse = b.finish(&tagger, &[])?;
    QuadMesh::from_coarse(coarse)?.refine_uniform(base_refine)
}

/// Row heights of the free-fluid block: two `ε/2` rows at the interface, then
/// geometrically growing rows up to `x_2 = 1`.
fn free_levels(eps: f64) -> Vec<f64> {
    if eps >= 1.0 {
        return vec![0.0, 0.5, 1.0];
    }
    let mut ys = vec![0.0, 0.5 * eps, eps];
    let (mut y, mut h) = (eps, eps);
    loop {
        let next = 2.0 * h;
        if y + 1.5 * next >= 1.0 {
            ys.push(1.0);
            break;
        }
        y += next;
        h = next;
        ys.push(y);
    }
    ys
}

/// Perforated strip `(0,width)×(-1,1)`: a free block above `Γ` glued to an
/// `ε`-scaled tiling of the period cell below.
pub fn build_strip_mesh(
    geom: &GeometrySpec,
    width: Ratio<i64>,
    sides: StripSides,
    base_refine: usize,
) -> Result<QuadMesh> {
    geom.inclusion.validate()?;
    let eps = geom.epsilon;
    let columns = eps.periods_in(width)?;
    let rows = eps.rows()?;
    let er = eps.ratio();
    let e = eps.value();
    let w = ratio_f64(width);
    let mut b = CoarseBuilder::new(VERTEX_TOL * e.min(1.0));
    for row in 0..rows {
        for col in 0..columns {
            let placement = Placement {
                origin: [
                    ratio_f64(er * col as i64),
                    -ratio_f64(er * (row as i64 + 1)),
                ],
                scale: e,
            };
            let pore = b.add_pore(PoreInfo {
                placement,
                inclusion: geom.inclusion,
            });
            add_period_cell(&mut b, &geom.inclusion, placement, pore)?;
        }
    }
    let xs: Vec<f64> = (0..=2 * columns)
        .map(|i| ratio_f64(er * i as i64 / 2))
        .collect();
    let ys = free_levels(e);
    for r in 0..ys.len() - 1 {
        for c in 0..xs.len() - 1 {
            add_rect(&mut b, [xs[c], xs[c + 1]], [ys[r], ys[r + 1]])?;
        }
    }
    let tagger = box_tagger([0.0, w], [-1.0, 1.0], BoundaryTag::Top, BoundaryTag::Bottom);
    let periodic = match sides {
        StripSides::Periodic => vec![PeriodicSpec {
            source: BoundaryTag::Left,
            target: BoundaryTag::Right,
            offset: [w, 0.0],
        }],
        StripSides::Open => Vec::new(),
    };
    let coarse = b.finish(&tagger, &periodic)?;
    QuadMesh::from_coarse(coarse)?.refine_uniform(base_refine)
}

/// Boundary-layer column `Z_l^k = (0,1)×(-l,k)`: `l` perforated cells below
/// `Σ = {y_2 = 0}`, a free column of height `k` above; 1-periodic in `y_1`.
pub fn build_bl_mesh(
    inclusion: &InclusionSpec,
    k: usize,
    l: usize,
    base_refine: usize,
) -> Result<QuadMesh> {
    inclusion.validate()?;
    if k == 0 || l == 0 {
        return Err(Error::Invalid(format!("cut-off heights must be positive, got k={k}, l={l}")));
    }
    let mut b = CoarseBuilder::new(VERTEX_TOL);
    for j in 0..l {
        let placement = Placement {
            origin: [0.0, -(j as f64) - 1.0],
            scale: 1.0,
        };
        let pore = b.add_pore(PoreInfo {
            placement,
            inclusion: *inclusion,
        });
        add_period_cell(&mut b, inclusion, placement, pore)?;
    }
    for j in 0..2 * k {
        let y = [0.5 * j as f64, 0.5 * (j + 1) as f64];
        add_rect(&mut b, [0.0, 0.5], y)?;
        add_rect(&mut b, [0.5, 1.0], y)?;
    }
    let tagger = box_tagger(
        [0.0, 1.0],
        [-(l as f64), k as f64],
        BoundaryTag::BlTop,
        BoundaryTag::BlBottom,
    );
    let coarse = b.finish(
        &tagger,
        &[PeriodicSpec {
            source: BoundaryTag::Left,
            target: BoundaryTag::Right,
            offset: [1.0, 0.0],
        }],
    )?;
    QuadMesh::from_coarse(coarse)?.refine_uniform(base_refine)
}
