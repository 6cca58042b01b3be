use std::sync::Arc;

use proptest::prelude::*;

use bjlab::adaptivity::{
    adapt_to_tolerance, dwr_estimate, estimate_on, mark_cells, solve_dual, AdaptOptions, GoalKind,
};
use bjlab::fem::{
    BcSpec, DirichletBc, LinearFunctional, Load, Normalization, RegionFilter, StokesProblem, VectorData,
};
use bjlab::meshkit::{build_bl_mesh, build_box_mesh, BoundaryTag, InclusionSpec};
use bjlab::problems::bl_problem;

fn poiseuille_problem() -> StokesProblem {
    let exact = |x: [f64; 2]| [x[1] * (1.0 - x[1]) / 2.0, 0.0];
    let mut dirichlet = vec![DirichletBc::no_slip(BoundaryTag::Top), DirichletBc::no_slip(BoundaryTag::Bottom)];
    for tag in [BoundaryTag::Left, BoundaryTag::Right] {
        dirichlet.push(DirichletBc {
            tag,
            components: [true, true],
            value: VectorData::Field(Arc::new(exact)),
        });
    }
    StokesProblem::new(
        BcSpec {
            dirichlet,
            normalization: Normalization::MeanPressure(RegionFilter::All),
        },
        LinearFunctional::new(vec![Load::Volume {
            region: RegionFilter::All,
            density: VectorData::Const([1.0, 0.0]),
        }]),
    )
}

#[test]
fn marking_edge_cases() {
    let eta = [0.1, -0.4, 0.2, 0.3];
    assert_eq!(mark_cells(&eta, 1.0).unwrap(), vec![true; 4]);
    // 0.4 alone carries 40% of the total
    assert_eq!(mark_cells(&eta, 0.3).unwrap(), vec![false, true, false, false]);
    assert_eq!(mark_cells(&eta, 0.5).unwrap(), vec![false, true, false, true]);
    assert_eq!(mark_cells(&[0.0; 3], 0.5).unwrap(), vec![false; 3]);
    assert!(mark_cells(&eta, 0.0).is_err());
    assert!(mark_cells(&eta, 1.5).is_err());
    // equal indicators: exactly half, lowest ids first
    let marks = mark_cells(&[1.0; 10], 0.5).unwrap();
    assert_eq!(marks.iter().filter(|&&m| m).count(), 5);
    assert!(marks[..5].iter().all(|&m| m));
}

proptest! {
    #[test]
    fn marking_is_minimal_and_monotone(eta in prop::collection::vec(-1.0f64..1.0, 1..40), t1 in 0.05f64..1.0, t2 in 0.05f64..1.0) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let a = mark_cells(&eta, lo).unwrap();
        let b = mark_cells(&eta, hi).unwrap();
        prop_assert!(a.iter().zip(&b).all(|(x, y)| !x || *y));
        let total: f64 = eta.iter().map(|e| e.abs()).sum();
        let marked: f64 = eta.iter().zip(&a).filter(|(_, m)| **m).map(|(e, _)| e.abs()).sum();
        prop_assert!(marked >= lo * total * (1.0 - 1e-9));
        // every marked cell is at least as large as every unmarked one
        let min_marked = eta.iter().zip(&a).filter(|(_, m)| **m).map(|(e, _)| e.abs()).fold(f64::INFINITY, f64::min);
        let max_free = eta.iter().zip(&a).filter(|(_, m)| !**m).map(|(e, _)| e.abs()).fold(0.0, f64::max);
        prop_assert!(min_marked >= max_free || total == 0.0);
    }
}

#[test]
fn cell_indicators_sum_to_the_estimate() {
    for refine in [1, 2] {
        let mut mesh = build_bl_mesh(&InclusionSpec::ellipse(), 2, 2, refine).unwrap();
        if refine == 2 {
            // hanging nodes go through the partition of unity as well
            let marks: Vec<bool> = (0..mesh.n_cells()).map(|c| c % 5 == 0).collect();
            mesh = mesh.refine(&marks).unwrap();
        }
        let mesh = Arc::new(mesh);
        let (_, est, _) = estimate_on(&mesh, &bl_problem(2), GoalKind::C1).unwrap();
        let sum: f64 = est.eta_cell.iter().sum();
        assert!((sum - est.eta).abs() <= 1e-12 * est.abs_sum(), "{sum} vs {}", est.eta);
        assert_eq!(est.eta_cell.len(), mesh.n_cells());
    }
}

#[test]
fn exact_primal_has_vanishing_estimate() {
    let mesh = Arc::new(build_box_mesh([0.0, 1.0], [0.0, 1.0], 1, 1, 1).unwrap());
    let (_, est, value) = estimate_on(&mesh, &poiseuille_problem(), GoalKind::MassFlow).unwrap();
    assert!(est.eta.abs() < 1e-12, "{}", est.eta);
    assert!(est.eta_cell.iter().all(|e| e.abs() < 1e-12));
    assert!((value - 1.0 / 12.0).abs() < 1e-13);
}

#[test]
fn dual_depends_linearly_on_the_goal() {
    let mesh = Arc::new(build_bl_mesh(&InclusionSpec::circle(), 1, 1, 1).unwrap());
    let problem = bl_problem(1);
    let g1 = GoalKind::C1.functional();
    let g2 = GoalKind::Cw { a: 0.5 }.functional();
    let z1 = solve_dual(&mesh, &problem, &g1).unwrap();
    let z2 = solve_dual(&mesh, &problem, &g2).unwrap();
    let mut both = g1.scaled(2.0).loads.clone();
    both.extend(g2.scaled(-3.0).loads.iter().cloned());
    let z = solve_dual(&mesh, &problem, &LinearFunctional::new(both)).unwrap();
    let scale = z.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for ((a, b), c) in z1.values().iter().zip(z2.values()).zip(z.values()) {
        assert!((2.0 * a - 3.0 * b - c).abs() <= 1e-10 * scale);
    }
    let primal = problem.solve(mesh.clone()).unwrap();
    let e1 = dwr_estimate(&primal, &z1, &problem).unwrap().eta;
    let e2 = dwr_estimate(&primal, &z2, &problem).unwrap().eta;
    let e = dwr_estimate(&primal, &z, &problem).unwrap().eta;
    assert!((2.0 * e1 - 3.0 * e2 - e).abs() <= 1e-10 * (e1.abs() + e2.abs()));
}

#[test]
fn estimate_tracks_the_true_error() {
    let inc = InclusionSpec::circle();
    let problem = bl_problem(1);
    let reference = -0.3038181652339;
    for refine in [1, 2] {
        let mesh = Arc::new(build_bl_mesh(&inc, 1, 1, refine).unwrap());
        let (_, est, value) = estimate_on(&mesh, &problem, GoalKind::C1).unwrap();
        let ieff = est.eta / (reference - value);
        assert!((0.8..1.25).contains(&ieff), "refine {refine}: I_eff = {ieff}");
    }
}

#[test]
fn adaptive_loop_reports_budget_and_history() {
    let mesh = build_bl_mesh(&InclusionSpec::circle(), 1, 1, 0).unwrap();
    let opts = AdaptOptions {
        max_cycles: 3,
        ..AdaptOptions::new(1e-14)
    };
    let res = adapt_to_tolerance(mesh, &bl_problem(1), GoalKind::C1, &opts).unwrap();
    assert!(!res.converged);
    assert_eq!(res.history.len(), 3);
    assert!(res.history.windows(2).all(|w| w[1].dofs > w[0].dofs));
    assert!(res.history_csv().starts_with("dofs,value,eta\n"));
    let mesh = build_bl_mesh(&InclusionSpec::circle(), 1, 1, 0).unwrap();
    let loose = adapt_to_tolerance(mesh, &bl_problem(1), GoalKind::C1, &AdaptOptions::new(1.0)).unwrap();
    assert!(loose.converged && loose.history.len() == 1);
    let mesh = build_bl_mesh(&InclusionSpec::circle(), 1, 1, 0).unwrap();
    assert!(adapt_to_tolerance(mesh, &bl_problem(1), GoalKind::C1, &AdaptOptions::new(0.0)).is_err());
}
