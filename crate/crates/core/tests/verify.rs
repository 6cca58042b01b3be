use std::sync::Arc;

use num_rational::Ratio;
use proptest::prelude::*;

use bjlab::fem::{DofMap, FlowField};
use bjlab::meshkit::{build_box_mesh, build_strip_mesh, Epsilon, GeometrySpec, InclusionSpec, StripSides};
use bjlab::problems::EffectiveSolution;
use bjlab::verify::{
    extend_pressure, fit_order, fit_orders, interface_norms, interface_profile, table3, write_vtk, ConvergenceRecord,
    CsvTable, DomainNorms, InterfaceRegion,
};

/// Nodal interpolant of `(v, p)` given as functions of the position.
fn interpolate(dofs: Arc<DofMap>, v: impl Fn([f64; 2]) -> [f64; 2], p: impl Fn([f64; 2]) -> f64) -> FlowField {
    let mut field = FlowField::zeros(dofs.clone());
    let (nv, off) = (dofs.nv(), dofs.n_velocity());
    let mut values = vec![0.0; dofs.n_total()];
    for c in 0..dofs.mesh().n_cells() {
        let ce = field.cell(c);
        for (i, &d) in dofs.velocity.cell_dofs(c).iter().enumerate() {
            let (xi, eta) = dofs.velocity.basis.node(i);
            let u = v(ce.geometry(xi, eta).x);
            values[d as usize] = u[0];
            values[nv + d as usize] = u[1];
        }
        for (i, &d) in dofs.pressure.cell_dofs(c).iter().enumerate() {
            let (xi, eta) = dofs.pressure.basis.node(i);
            values[off + d as usize] = p(ce.geometry(xi, eta).x);
        }
    }
    field.values_mut().copy_from_slice(&values);
    field
}

fn strip(inc: InclusionSpec, q: i64, refine: usize) -> (GeometrySpec, Arc<DofMap>) {
    let geom = GeometrySpec::new(inc, Epsilon::new(1, q).unwrap(), Ratio::from_integer(1)).unwrap();
    let mesh = build_strip_mesh(&geom, Ratio::from_integer(1), StripSides::Periodic, refine).unwrap();
    (geom, Arc::new(DofMap::taylor_hood(Arc::new(mesh))))
}

#[test]
fn constant_pressure_extends_exactly() {
    let (_, dofs) = strip(InclusionSpec::ellipse(), 2, 3);
    let field = interpolate(dofs, |_| [0.0; 2], |_| 0.7);
    let before = field.values().to_vec();
    let ext = extend_pressure(&field);
    assert_eq!(ext.pore_mean.len(), 4);
    for m in &ext.pore_mean {
        assert!((m.unwrap() - 0.7).abs() < 1e-13);
    }
    assert_eq!(field.values(), &before[..]);
    // the porous part is (0,1) × (−1,0), solids included
    assert!((ext.porous_integral() - 0.7).abs() < 1e-6);
    assert!(ext.porous_l2sq_affine(0.7, 0.0) < 1e-24);
    // ∫ (c − βy)² over (0,1)×(−1,0) = c² + cβ + β²/3
    let (c, beta) = (0.7, 0.4);
    let exact = c * c + c * beta + beta * beta / 3.0;
    assert!((ext.porous_l2sq_affine(0.0, beta) - exact).abs() < 1e-6);
}

#[test]
fn constant_shear_interface_profile() {
    let (geom, dofs) = strip(InclusionSpec::circle(), 4, 1);
    let (slip, p0) = (0.05, 0.3);
    let field = interpolate(dofs, |x| [x[1] + slip, 0.0], |_| p0);
    let profile = interface_profile(&field, geom.epsilon, Ratio::from_integer(1), Ratio::from_integer(1), 1).unwrap();
    assert_eq!(profile.n_computed(), 4);
    assert_eq!(profile.n_periods(), 4);
    for i in 0..4 {
        assert!((profile.avg_shear[i] - 1.0).abs() < 1e-12);
        assert!((profile.avg_u1[i] - slip).abs() < 1e-12);
        assert!((profile.avg_p[i] - p0).abs() < 1e-12);
        assert!((profile.avg_p_below.as_ref().unwrap()[i] - p0).abs() < 1e-12);
    }
    let eff = EffectiveSolution::new(0.25, -0.3, 0.1, [[0.02, 0.0], [0.0, 0.02]]).unwrap();
    let n = interface_norms(&profile, &eff, InterfaceRegion::Full).unwrap();
    assert!((n.shear_residual - (1.0 - eff.sigma0()).abs()).abs() < 1e-12);
    assert!((n.bj_residual - (slip / 0.25 - 0.3).abs()).abs() < 1e-12);
    assert!((n.p_below_residual.unwrap() - (p0 - 0.05)).abs() < 1e-12);
    assert!((n.jump_residual.unwrap() - 0.1).abs() < 1e-12);
    // Γ̂ needs the L = 2 channel
    assert!(interface_norms(&profile, &eff, InterfaceRegion::Hat).is_err());
    let wrong = EffectiveSolution::new(0.1, -0.3, 0.1, [[0.02, 0.0], [0.0, 0.02]]).unwrap();
    assert!(interface_norms(&profile, &wrong, InterfaceRegion::Full).is_err());
}

fn reference_table(name: &str) -> CsvTable {
    let path = format!("{}/../cli/golden/{name}", env!("CARGO_MANIFEST_DIR"));
    CsvTable::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn eps_value(s: &str) -> f64 {
    match s.split_once('/') {
        Some((a, b)) => a.parse::<f64>().unwrap() / b.parse::<f64>().unwrap(),
        None => s.parse().unwrap(),
    }
}

#[test]
fn fitted_orders_of_the_reference_tables() {
    let t = reference_table("table3_circle.csv");
    let column = |name: &str| -> Vec<(f64, f64)> {
        (0..t.rows.len())
            .map(|r| (eps_value(t.get(r, "eps").unwrap()), t.get(r, name).unwrap().parse().unwrap()))
            .collect()
    };
    let slope = |name| fit_order(&column(name)).unwrap().slope;
    assert!((slope("L1_pressure_diff") - 1.0).abs() < 0.15, "{}", slope("L1_pressure_diff"));
    assert!((slope("abs_massflow_diff") - 2.0).abs() < 0.15);
    assert!((slope("L2sq_vel_diff") - 3.7).abs() < 0.3);
    assert!((slope("L1_grad_diff") - 1.2).abs() < 0.15);
}

#[test]
fn tables_are_sorted_by_descending_epsilon() {
    let eps = [(1, 10), (1, 1), (1, 31), (1, 3)];
    let records: Vec<ConvergenceRecord> = eps
        .iter()
        .map(|&(p, q)| {
            let e = Epsilon::new(p, q).unwrap();
            let v = e.value();
            let mut r = ConvergenceRecord::new(e);
            r.domain = Some(DomainNorms {
                l2sq_vel_diff: v.powi(3),
                abs_massflow_diff: v * v,
                l1_pressure_diff: v,
                l1_grad_diff: v,
                l2sq_porous_pressure_diff: v,
            });
            r
        })
        .collect();
    let t = table3(&records);
    let order: Vec<&str> = t.rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(order, ["1", "1/3", "1/10", "1/31"]);
    assert_eq!(t.get(1, "abs_massflow_diff").unwrap(), "1.11111111111e-1");
    let fits = fit_orders(&records, None);
    let get = |n: &str| fits.iter().find(|f| f.0 == n).unwrap().1.slope;
    assert!((get("L2sq_vel_diff") - 3.0).abs() < 1e-12);
    assert!((get("abs_massflow_diff") - 2.0).abs() < 1e-12);
    // interface columns are absent
    assert!(fits.iter().all(|f| !f.0.ends_with("gamma")));
    let windowed = fit_orders(&records, Some((1.0 / 31.0, 1.0 / 3.0)));
    assert_eq!(windowed[0].1.points, 3);
}

#[test]
fn csv_errors_carry_line_numbers() {
    let err = CsvTable::parse("# a=1\nx,y\n1,2\n3\n").unwrap_err().to_string();
    assert!(err.contains("line 4"), "{err}");
    assert!(CsvTable::parse("# only=meta\n").is_err());
}

proptest! {
    #[test]
    fn csv_round_trip(cells in prop::collection::vec(prop::collection::vec("[a-z0-9./-]{1,8}", 3), 0..6),
                      meta in prop::collection::vec(("[a-z_]{1,6}", "[a-z0-9:.]{1,8}"), 0..3)) {
        let mut t = CsvTable::new(&["a", "b", "c"]);
        t.meta = meta.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        for r in &cells {
            t.push(r.clone());
        }
        prop_assert_eq!(CsvTable::parse(&t.to_csv()).unwrap(), t);
    }
}

fn vtk_count(text: &str, key: &str) -> usize {
    let line = text.lines().find(|l| l.starts_with(key)).unwrap();
    line.split_whitespace().nth(1).unwrap().parse().unwrap()
}

#[test]
fn vtk_nodes_and_cells() {
    let mesh = Arc::new(build_box_mesh([0.0, 2.0], [0.0, 2.0], 2, 2, 0).unwrap());
    let field = FlowField::zeros(Arc::new(DofMap::taylor_hood(mesh)));
    let text = write_vtk(&field, None);
    assert_eq!(vtk_count(&text, "POINTS"), 25);
    assert_eq!(vtk_count(&text, "CELLS"), 4);

    let (_, dofs) = strip(InclusionSpec::circle(), 2, 0);
    let field = interpolate(dofs, |_| [0.0; 2], |_| 1.0);
    let plain = write_vtk(&field, None);
    let ext = extend_pressure(&field);
    let with = write_vtk(&field, Some(&ext));
    let cells = field.mesh().n_cells();
    assert_eq!(vtk_count(&plain, "CELLS"), cells);
    assert_eq!(vtk_count(&with, "CELLS"), cells + 4);
    assert_eq!(vtk_count(&with, "POINTS"), vtk_count(&plain, "POINTS") + 4 * 48);
    // nodes are shared between neighbouring cells: far fewer than 9 per cell
    assert!(vtk_count(&plain, "POINTS") < 5 * cells);
}
