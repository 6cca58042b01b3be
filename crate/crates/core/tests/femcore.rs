use std::sync::Arc;

use bjlab::fem::basis::face_point;
use bjlab::fem::manufactured::{l2_errors, manufactured_problem, manufactured_study, observed_orders};
use bjlab::fem::{
    integrate_domain, integrate_line, BcSpec, DirichletBc, DofMap, FlowField, LineSpec, LinearFunctional, Load,
    Normalization, RegionFilter, StokesProblem, VectorData, RESIDUAL_LIMIT,
};
use bjlab::meshkit::{build_bl_mesh, build_box_mesh, build_unit_cell_mesh, BoundaryTag, InclusionSpec, QuadMesh};
use bjlab::problems::{bl_problem, cell_problem, compute_constants};
use bjlab::Error;

fn box_mesh(nx: usize, ny: usize, refine: usize) -> Arc<QuadMesh> {
    Arc::new(build_box_mesh([0.0, nx as f64], [0.0, ny as f64], nx, ny, refine).unwrap())
}

/// A locally refined unit square with hanging nodes.
fn graded_unit_square() -> Arc<QuadMesh> {
    let mut mesh = build_box_mesh([0.0, 1.0], [0.0, 1.0], 2, 2, 1).unwrap();
    for _ in 0..2 {
        let marks: Vec<bool> = (0..mesh.n_cells())
            .map(|c| {
                let x = mesh.cell_center(c);
                x[0] < 0.4 && x[1] < 0.6
            })
            .collect();
        mesh = mesh.refine(&marks).unwrap();
    }
    assert!(!mesh.hanging_faces().is_empty());
    Arc::new(mesh)
}

#[test]
fn dof_counts_of_small_patches() {
    let one = DofMap::taylor_hood(box_mesh(1, 1, 0));
    assert_eq!((one.n_velocity(), one.n_pressure()), (18, 4));
    let two = DofMap::taylor_hood(box_mesh(2, 1, 0));
    assert_eq!((two.n_velocity(), two.n_pressure()), (30, 6));
}

#[test]
fn dof_growth_tends_to_four() {
    let inc = InclusionSpec::circle();
    let n: Vec<usize> = (2..5)
        .map(|r| DofMap::taylor_hood(Arc::new(build_unit_cell_mesh(&inc, r).unwrap())).n_total())
        .collect();
    let last = n[2] as f64 / n[1] as f64;
    assert!((last - 4.0).abs() < 0.05, "{n:?}");
    assert!((n[1] as f64 / n[0] as f64 - 4.0).abs() > (last - 4.0).abs());
}

#[test]
fn manufactured_orders_and_contracts() {
    let rows = manufactured_study(0..=4).unwrap();
    let vo = observed_orders(&rows, |r| r.vel_l2);
    let po = observed_orders(&rows, |r| r.p_l2);
    assert!(*vo.last().unwrap() >= 2.8, "velocity orders {vo:?}");
    assert!(*po.last().unwrap() >= 1.8, "pressure orders {po:?}");
    for w in rows.windows(2) {
        assert!(w[1].vel_l2 < w[0].vel_l2);
    }
    for r in &rows {
        assert!(r.residual <= RESIDUAL_LIMIT);
        assert!(r.divergence <= 1e-10, "divergence defect {}", r.divergence);
    }
}

#[test]
fn zero_data_gives_zero_solution() {
    let mut p = manufactured_problem();
    p.rhs = LinearFunctional::default();
    let f = p.solve(box_mesh(2, 2, 1)).unwrap();
    assert!(f.values().iter().all(|&v| v == 0.0));
}

#[test]
fn constraints_hold_exactly_after_solve() {
    let mesh = graded_unit_square();
    let sys = manufactured_problem().assemble(mesh).unwrap();
    let field = bjlab::fem::solve(&sys).unwrap();
    assert!(sys.constraints.max_violation(field.values()) <= 1e-12);
    // mean-zero pressure
    let n = 5;
    let mean = integrate_domain(&field, RegionFilter::All, n, |pv| pv.p);
    let norm = integrate_domain(&field, RegionFilter::All, n, |pv| pv.p * pv.p).sqrt();
    assert!(mean.abs() <= 1e-12 * norm, "{mean} vs {norm}");
    // the local refinement still converges
    let (ev, _) = l2_errors(&field);
    assert!(ev < 0.05, "{ev}");
}

/// Finds the parameter on the coarse face whose geometry matches `x`.
fn coarse_param(field: &FlowField, c: usize, f: usize, x: [f64; 2]) -> Option<f64> {
    let ce = field.cell(c);
    (0..=64).map(|i| i as f64 / 64.0).find(|&s| {
        let (xi, eta) = face_point(f, s);
        let y = ce.geometry(xi, eta).x;
        (y[0] - x[0]).abs() < 1e-12 && (y[1] - x[1]).abs() < 1e-12
    })
}

#[test]
fn hanging_faces_are_conforming() {
    let mesh = graded_unit_square();
    let field = manufactured_problem().solve(mesh.clone()).unwrap();
    for h in mesh.hanging_faces() {
        let fine = field.cell(h.fine_cell as usize);
        let coarse = field.cell(h.coarse_cell as usize);
        for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let (xi, eta) = face_point(h.fine_face as usize, t);
            let a = fine.at(xi, eta);
            let s = coarse_param(&field, h.coarse_cell as usize, h.coarse_face as usize, a.x)
                .expect("fine face point lies on the coarse face");
            let (xi, eta) = face_point(h.coarse_face as usize, s);
            let b = coarse.at(xi, eta);
            for k in 0..2 {
                assert!((a.v[k] - b.v[k]).abs() < 1e-12, "velocity jump at {:?}", a.x);
            }
            assert!((a.p - b.p).abs() < 1e-12, "pressure jump at {:?}", a.x);
        }
    }
}

#[test]
fn periodic_faces_carry_equal_traces() {
    let inc = InclusionSpec::ellipse();
    let mesh = Arc::new(build_unit_cell_mesh(&inc, 1).unwrap());
    let field = cell_problem(0).solve(mesh.clone()).unwrap();
    let pairs = mesh.periodic_face_pairs();
    assert!(!pairs.is_empty());
    for (a, b) in pairs {
        let (ca, fa, cb, fb) = (a / 4, a % 4, b / 4, b % 4);
        for t in [0.0, 0.5, 1.0] {
            let (xi, eta) = face_point(fa, t);
            let va = field.cell(ca).at(xi, eta);
            let (xi, eta) = face_point(fb, t);
            let vb = field.cell(cb).at(xi, eta);
            let vb2 = {
                let (xi, eta) = face_point(fb, 1.0 - t);
                field.cell(cb).at(xi, eta)
            };
            let close = |u: &bjlab::fem::PointValue| (0..2).all(|k| (va.v[k] - u.v[k]).abs() < 1e-14) && (va.p - u.p).abs() < 1e-14;
            assert!(close(&vb) || close(&vb2), "faces {a} and {b} disagree at t={t}");
        }
    }
}

#[test]
fn no_slip_on_inclusion_and_free_slip_on_top() {
    let inc = InclusionSpec::circle();
    let mesh = Arc::new(build_bl_mesh(&inc, 1, 1, 1).unwrap());
    let field = bl_problem(1).solve(mesh.clone()).unwrap();
    let mut checked = 0;
    for c in 0..mesh.n_cells() {
        for f in 0..4 {
            let tag = mesh.face_tag(c, f);
            for t in [0.0, 0.3, 0.5, 1.0] {
                let (xi, eta) = face_point(f, t);
                let pv = field.cell(c).at(xi, eta);
                match tag {
                    Some(BoundaryTag::Inclusion) => {
                        assert!(pv.v[0].abs() < 1e-12 && pv.v[1].abs() < 1e-12);
                        checked += 1;
                    }
                    Some(BoundaryTag::BlTop) => assert!(pv.v[1].abs() < 1e-12),
                    _ => {}
                }
            }
        }
    }
    assert!(checked > 0);
    // v₁ is free on the top: the column carries the slip velocity there
    let top = integrate_line(&field, &LineSpec::new(1.0, 0.0, 1.0), |pv| pv.v[0]).unwrap();
    assert!(top.abs() > 1e-2, "{top}");
}

#[test]
fn interface_load_touches_only_tangential_velocity() {
    let mesh = Arc::new(build_bl_mesh(&InclusionSpec::ellipse(), 2, 2, 1).unwrap());
    let sys = bl_problem(2).assemble(mesh).unwrap();
    let nv = sys.dofs.nv();
    let nonzero: Vec<usize> = (0..sys.n_unknowns()).filter(|&u| sys.rhs[u] != 0.0).collect();
    assert!(!nonzero.is_empty());
    for u in nonzero {
        assert!(sys.dof_of[u] < nv, "load reaches dof {} outside v₁", sys.dof_of[u]);
    }
}

#[test]
fn line_functional_of_constant_pressure() {
    let mesh = box_mesh(1, 2, 1);
    let mut field = FlowField::zeros(Arc::new(DofMap::taylor_hood(mesh)));
    field.shift_pressure(0.7);
    let v = integrate_line(&field, &LineSpec::new(1.0, 0.0, 1.0), |pv| pv.p).unwrap();
    assert!((v - 0.7).abs() < 1e-14);
    assert!(integrate_line(&field, &LineSpec::new(0.3, 0.0, 1.0), |pv| pv.p).is_err());
}

/// Plane Poiseuille flow lies in the Q2 space and is reproduced exactly.
#[test]
fn poiseuille_flow_is_exact() {
    let poiseuille = |x: [f64; 2]| [x[1] * (1.0 - x[1]) / 2.0, 0.0];
    let mut dirichlet: Vec<DirichletBc> =
        [BoundaryTag::Top, BoundaryTag::Bottom].iter().map(|&t| DirichletBc::no_slip(t)).collect();
    for tag in [BoundaryTag::Left, BoundaryTag::Right] {
        dirichlet.push(DirichletBc {
            tag,
            components: [true, true],
            value: VectorData::Field(Arc::new(poiseuille)),
        });
    }
    let problem = StokesProblem::new(
        BcSpec {
            dirichlet,
            normalization: Normalization::MeanPressure(RegionFilter::All),
        },
        LinearFunctional::new(vec![Load::Volume {
            region: RegionFilter::All,
            density: VectorData::Const([1.0, 0.0]),
        }]),
    );
    let field = problem.solve(box_mesh(1, 1, 2)).unwrap();
    let err = integrate_domain(&field, RegionFilter::All, 5, |pv| {
        let u = poiseuille(pv.x);
        (pv.v[0] - u[0]).powi(2) + pv.v[1].powi(2) + pv.p.powi(2)
    });
    assert!(err.sqrt() < 1e-12, "{err}");
    let flux = integrate_domain(&field, RegionFilter::All, 5, |pv| pv.v[0]);
    assert!((flux - 1.0 / 12.0).abs() < 1e-13);
}

#[test]
fn refinement_consistency_of_the_slip_constant() {
    let inc = InclusionSpec::circle();
    let c1: Vec<f64> = (1..4)
        .map(|r| {
            let f = bl_problem(1).solve(Arc::new(build_bl_mesh(&inc, 1, 1, r).unwrap())).unwrap();
            compute_constants(&f, 1.0).unwrap().0
        })
        .collect();
    let (d1, d2) = ((c1[1] - c1[0]).abs(), (c1[2] - c1[1]).abs());
    assert!(d2 * 8.0 <= d1, "differences {d1:e} {d2:e}");
}

#[test]
fn field_text_round_trip_checks_the_mesh() {
    let mesh = box_mesh(2, 2, 0);
    let field = manufactured_problem().solve(mesh.clone()).unwrap();
    let text = field.to_text();
    let back = FlowField::from_text(&text, mesh).unwrap();
    assert_eq!(back.values(), field.values());
    let other = box_mesh(2, 2, 1);
    assert!(matches!(FlowField::from_text(&text, other), Err(Error::MeshMismatch { .. })));
}
