use std::collections::HashSet;

use bjlab::fem::basis::geometry_at;
use bjlab::fem::{gauss_legendre, region_area, RegionFilter, TensorBasis};
use bjlab::meshkit::{
    build_bl_mesh, build_box_mesh, build_strip_mesh, build_unit_cell_mesh, Epsilon, FaceNeighbor, GeometrySpec,
    InclusionSpec, MeshDump, QuadMesh, StripSides,
};
use num_rational::Ratio;
use proptest::prelude::*;

fn min_jacobian(mesh: &QuadMesh) -> f64 {
    let (pts, _) = gauss_legendre(4);
    let mut m = f64::INFINITY;
    for c in 0..mesh.n_cells() {
        let nodes = mesh.geometry_nodes(c);
        for &x in &pts {
            for &y in &pts {
                m = m.min(geometry_at(nodes, x, y).det);
            }
        }
    }
    m
}

fn max_level_jump(mesh: &QuadMesh) -> u8 {
    let mut worst = 0;
    for c in 0..mesh.n_cells() {
        for nb in mesh.neighbors(c) {
            for o in nb.cells() {
                worst = worst.max(mesh.level(c).abs_diff(mesh.level(o as usize)));
            }
        }
    }
    worst
}

fn pores(mesh: &QuadMesh) -> HashSet<usize> {
    (0..mesh.n_cells()).filter_map(|c| mesh.region(c).pore()).collect()
}

fn strip(inc: InclusionSpec, eps: &str, refine: usize) -> QuadMesh {
    let e: Epsilon = eps.parse().unwrap();
    let geom = GeometrySpec::new(inc, e, Ratio::from_integer(1)).unwrap();
    build_strip_mesh(&geom, e.ratio(), StripSides::Periodic, refine).unwrap()
}

#[test]
fn inclusion_nodes_lie_on_the_curve() {
    let circle = InclusionSpec::circle();
    for refine in [0, 2] {
        let mesh = build_unit_cell_mesh(&circle, refine).unwrap();
        let mut n = 0;
        for c in 0..mesh.n_cells() {
            for (i, p) in mesh.geometry_nodes(c).iter().enumerate() {
                if mesh.node_on_inclusion(c, i) {
                    let r = ((p[0] - 0.5).powi(2) + (p[1] - 0.5).powi(2)).sqrt();
                    assert!((r - 0.25).abs() < 1e-12, "node {p:?} at radius {r}");
                    n += 1;
                }
            }
        }
        assert!(n > 0);
    }
    let ellipse = InclusionSpec::ellipse();
    let mesh = build_unit_cell_mesh(&ellipse, 1).unwrap();
    for c in 0..mesh.n_cells() {
        for (i, p) in mesh.geometry_nodes(c).iter().enumerate() {
            if mesh.node_on_inclusion(c, i) {
                assert!(ellipse.boundary_distance(*p) < 1e-12);
            }
        }
    }
}

#[test]
fn fluid_area_matches_exact_formula() {
    for inc in [InclusionSpec::circle(), InclusionSpec::ellipse()] {
        let exact = 1.0 - inc.area();
        // the Q2 geometry converges at fourth order; level 6 is below 1e-10
        let mesh = build_unit_cell_mesh(&inc, 6).unwrap();
        let area = region_area(&mesh, RegionFilter::All);
        assert!((area - exact).abs() < 1e-10, "{}: {area} vs {exact}", inc.name());
    }
    // independent oracle for the ellipse: 1 − π·a·b with the default half axes
    let e = InclusionSpec::ellipse();
    assert!((e.area() - std::f64::consts::PI * 0.357142857 * 0.192307692).abs() < 1e-9);
}

#[test]
fn area_converges_at_least_third_order() {
    let inc = InclusionSpec::ellipse();
    let exact = 1.0 - inc.area();
    let errs: Vec<f64> = (0..4)
        .map(|r| (region_area(&build_unit_cell_mesh(&inc, r).unwrap(), RegionFilter::All) - exact).abs())
        .collect();
    for w in errs.windows(2) {
        if w[1] > 1e-13 {
            assert!((w[0] / w[1]).log2() >= 3.0, "area errors {errs:?}");
        }
    }
}

#[test]
fn uniform_refinement_multiplies_cells() {
    let mesh = build_unit_cell_mesh(&InclusionSpec::circle(), 0).unwrap();
    let fine = mesh.refine_uniform(2).unwrap();
    assert_eq!(fine.n_cells(), 16 * mesh.n_cells());
    let all = mesh.refine(&vec![true; mesh.n_cells()]).unwrap();
    assert_eq!(all.n_cells(), 4 * mesh.n_cells());
}

#[test]
fn jacobians_positive_on_all_templates() {
    for inc in [InclusionSpec::circle(), InclusionSpec::ellipse()] {
        assert!(min_jacobian(&build_unit_cell_mesh(&inc, 1).unwrap()) > 0.0);
        assert!(min_jacobian(&build_bl_mesh(&inc, 2, 2, 1).unwrap()) > 0.0);
        assert!(min_jacobian(&strip(inc, "1/3", 1)) > 0.0);
    }
}

#[test]
fn strip_counts_and_scaling() {
    let inc = InclusionSpec::circle();
    assert_eq!(pores(&strip(inc, "1", 0)).len(), 1);
    assert_eq!(pores(&strip(inc, "1/10", 0)).len(), 10);
    let m = strip(inc, "1/3", 0);
    assert_eq!(pores(&m).len(), 3);
    let fine = strip(inc, "1/3", 2);
    // porous cells lie in (−1, 0) and are 1/3-scaled copies of the cell template
    let cell = build_unit_cell_mesh(&inc, 0).unwrap();
    let porous = (0..m.n_cells()).filter(|&c| m.region(c).pore().is_some()).count();
    assert_eq!(porous, 3 * cell.n_cells());
    let area = region_area(&fine, RegionFilter::Porous);
    assert!((area - (1.0 - inc.area()) / 3.0).abs() < 1e-6, "{area}");
}

#[test]
fn bl_column_counts() {
    let inc = InclusionSpec::ellipse();
    let m = build_bl_mesh(&inc, 1, 1, 0).unwrap();
    assert_eq!(pores(&m).len(), 1);
    let m = build_bl_mesh(&inc, 5, 5, 0).unwrap();
    assert_eq!(pores(&m).len(), 5);
    let ys: Vec<f64> = (0..m.n_cells()).flat_map(|c| m.geometry_nodes(c).map(|p| p[1])).collect();
    let top = ys.iter().cloned().fold(f64::MIN, f64::max);
    let bottom = ys.iter().cloned().fold(f64::MAX, f64::min);
    assert!((top - 5.0).abs() < 1e-12 && (bottom + 5.0).abs() < 1e-12);
}

/// Faces shared between neighbors carry the same geometry nodes, up to a
/// period shift for identified faces.
fn check_watertight(mesh: &QuadMesh, periods: &[[f64; 2]]) {
    let faces = TensorBasis::new(2);
    let face_nodes = |c: usize, f: usize| -> Vec<[f64; 2]> {
        faces.face_nodes(f).iter().map(|&i| mesh.geometry_nodes(c)[i]).collect()
    };
    let mut glued = 0;
    for c in 0..mesh.n_cells() {
        for (f, nb) in mesh.neighbors(c).iter().enumerate() {
            let FaceNeighbor::Same { cell, face } = *nb else { continue };
            let a = face_nodes(c, f);
            let b = face_nodes(cell as usize, face as usize);
            let shifts: Vec<[f64; 2]> = std::iter::once([0.0, 0.0])
                .chain(periods.iter().flat_map(|p| [*p, [-p[0], -p[1]]]))
                .collect();
            let ok = shifts.iter().any(|s| {
                a.iter().all(|p| {
                    b.iter()
                        .any(|q| (p[0] + s[0] - q[0]).abs() < 1e-12 && (p[1] + s[1] - q[1]).abs() < 1e-12)
                })
            });
            assert!(ok, "cell {c} face {f}: {a:?} vs {b:?}");
            glued += 1;
        }
    }
    assert!(glued > 0);
}

#[test]
fn gluing_is_watertight() {
    for inc in [InclusionSpec::circle(), InclusionSpec::ellipse()] {
        check_watertight(&strip(inc, "1/3", 1), &[[1.0 / 3.0, 0.0]]);
        check_watertight(&build_unit_cell_mesh(&inc, 1).unwrap(), &[[1.0, 0.0], [0.0, 1.0]]);
        check_watertight(&build_bl_mesh(&inc, 2, 2, 0).unwrap(), &[[1.0, 0.0]]);
    }
}

#[test]
fn periodic_pairs_are_consistent() {
    let mesh = build_unit_cell_mesh(&InclusionSpec::ellipse(), 1).unwrap();
    let pairs = mesh.periodic_face_pairs();
    assert!(!pairs.is_empty());
    let mut seen = HashSet::new();
    for &(a, b) in &pairs {
        assert_ne!(a, b);
        assert!(seen.insert(a) && seen.insert(b), "face used twice");
        let mid = |id: usize| mesh.geometry_nodes(id / 4)[TensorBasis::new(2).face_nodes(id % 4)[1]];
        let (pa, pb) = (mid(a), mid(b));
        let d = [(pa[0] - pb[0]).abs(), (pa[1] - pb[1]).abs()];
        let period = (d[0] - 1.0).abs() < 1e-12 && d[1] < 1e-12 || (d[1] - 1.0).abs() < 1e-12 && d[0] < 1e-12;
        assert!(period, "paired midpoints {pa:?} {pb:?}");
    }
}

#[test]
fn dump_round_trip_and_hash() {
    let mesh = strip(InclusionSpec::ellipse(), "1/3", 0);
    let dump = mesh.dump();
    let text = dump.write();
    let back = MeshDump::parse(&text).unwrap();
    assert_eq!(back, dump);
    assert_eq!(back.write(), text);
    assert_eq!(mesh.hash(), strip(InclusionSpec::ellipse(), "1/3", 0).hash());
    assert_ne!(mesh.hash(), strip(InclusionSpec::circle(), "1/3", 0).hash());
}

#[test]
fn single_mark_keeps_two_to_one() {
    let mut mesh = build_box_mesh([0.0, 1.0], [0.0, 1.0], 2, 2, 0).unwrap();
    for _ in 0..5 {
        let mut marks = vec![false; mesh.n_cells()];
        marks[0] = true;
        let next = mesh.refine(&marks).unwrap();
        assert!(next.n_cells() > mesh.n_cells());
        assert!(max_level_jump(&next) <= 1);
        mesh = next;
    }
    assert!(mesh.max_level() >= 5);
}

#[test]
fn adaptive_refinement_toward_inclusion_keeps_jacobians() {
    let inc = InclusionSpec::ellipse();
    let mut mesh = build_bl_mesh(&inc, 1, 1, 0).unwrap();
    for _ in 0..4 {
        let marks: Vec<bool> = (0..mesh.n_cells()).map(|c| (0..9).any(|i| mesh.node_on_inclusion(c, i))).collect();
        mesh = mesh.refine(&marks).unwrap();
        assert!(min_jacobian(&mesh) > 0.0);
        assert!(max_level_jump(&mesh) <= 1);
    }
}

#[test]
fn inadmissible_geometry_rejected() {
    let inc = InclusionSpec::circle();
    let e: Epsilon = "1/3".parse().unwrap();
    assert!(GeometrySpec::new(inc, e, Ratio::new(1, 2)).is_err());
    assert!("0.00001".parse::<Epsilon>().is_err());
    assert!("3/2".parse::<Epsilon>().is_err());
    assert!(build_bl_mesh(&inc, 0, 1, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_refinement_invariants(seed in proptest::collection::vec(any::<bool>(), 64), rounds in 1usize..4) {
        let mut mesh = build_unit_cell_mesh(&InclusionSpec::circle(), 0).unwrap();
        for r in 0..rounds {
            let marks: Vec<bool> = (0..mesh.n_cells()).map(|c| seed[(c * 7 + r) % seed.len()]).collect();
            let next = mesh.refine(&marks).unwrap();
            prop_assert!(next.n_cells() >= mesh.n_cells());
            prop_assert!(max_level_jump(&next) <= 1);
            mesh = next;
        }
        prop_assert!(min_jacobian(&mesh) > 0.0);
        let area = region_area(&mesh, RegionFilter::All);
        prop_assert!((area - (1.0 - InclusionSpec::circle().area())).abs() < 2e-4);
    }

    #[test]
    fn epsilon_text_round_trip(q in 1i64..2000) {
        let e = Epsilon::new(1, q).unwrap();
        prop_assert_eq!(e.rows().unwrap(), q as usize);
        let back: Epsilon = e.to_string().parse().unwrap();
        prop_assert_eq!(back, e);
        prop_assert_eq!(e.periods_in(Ratio::from_integer(2)).unwrap(), 2 * q as usize);
    }
}
