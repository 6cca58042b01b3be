//! The campaign drivers. Each returns its artifacts in memory; writing them
//! out happens in one place afterwards.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use bjlab::adaptivity::{AdaptOptions, GoalKind};
use bjlab::fem::manufactured::{manufactured_study, observed_orders};
use bjlab::manifest::{text_hash, Manifest};
use bjlab::meshkit::{Epsilon, GeometrySpec};
use bjlab::problems::{
    compute_permeability, efficiency_series, solve_boundary_layer, solve_micro_injection,
    solve_micro_periodic, BoundaryLayerConstants, EffectiveSolution, MicroSolution, PermeabilityTensor,
    SolveMode,
};
use bjlab::verify::{
    domain_norms, extend_pressure, fit_orders, fmt_value, interface_norms, interface_profile, table1, table2,
    table3, table4, table5, write_vtk, ConvergenceRecord, CsvTable, InterfaceRegion,
};
use num_rational::Ratio;

use crate::config::{Campaign, CampaignConfig, InclusionName};

/// Manufactured-solution thresholds on the finest pair of levels.
pub const MIN_VELOCITY_ORDER: f64 = 2.8;
pub const MIN_PRESSURE_ORDER: f64 = 1.8;
/// `|K₁₁ − K₂₂| + |K₁₂|` allowed for the circle.
pub const ISOTROPY_LIMIT: f64 = 1e-10;
/// Length of the injection channel.
const INJECTION_LENGTH: i64 = 2;

#[derive(Debug, Default)]
pub struct Outcome {
    /// Result tables by file stem; these are what `--check` compares.
    pub tables: Vec<(String, CsvTable)>,
    /// Other artifacts (manifests, histories, VTK) by file name.
    pub files: Vec<(String, String)>,
    /// Results recorded in the campaign manifest.
    pub summary: Manifest,
    /// Built-in threshold breaches.
    pub failures: Vec<String>,
}

impl Outcome {
    fn table(&mut self, name: &str, mut t: CsvTable, meta: &[(&str, String)]) {
        for (k, v) in meta {
            t.meta.push((k.to_string(), v.clone()));
        }
        self.tables.push((name.to_string(), t));
    }

    fn file(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }
}

/// Runs `f` over `items` on up to `jobs` threads; results keep input order.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> Result<R> + Sync) -> Result<Vec<R>> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<R>>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, items.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every item is processed"))
        .collect()
}

fn eps_tag(e: &Epsilon) -> String {
    format!("eps_{}", e.to_string().replace('/', "_"))
}

/// Mesh hashes folded into one digest, in a fixed order.
fn combined_hash(hashes: &[String]) -> String {
    text_hash(&hashes.join("\n"))
}

pub fn run(cfg: &CampaignConfig) -> Result<Outcome> {
    let config_hash = text_hash(&cfg.canonical());
    log::info!("campaign {} (config {})", cfg.campaign, &config_hash[..12]);
    let mut out = match cfg.campaign {
        Campaign::BlConstants => bl_constants(cfg)?,
        Campaign::Permeability => permeability(cfg)?,
        Campaign::PeriodicSweep => sweep(cfg, false)?,
        Campaign::InjectionSweep => sweep(cfg, true)?,
        Campaign::ManufacturedCheck => manufactured(cfg)?,
        Campaign::DwrEfficiency => dwr_efficiency(cfg)?,
    };
    for (_, t) in &mut out.tables {
        t.meta.insert(0, ("config_hash".into(), config_hash.clone()));
        t.meta.insert(0, ("campaign".into(), cfg.campaign.to_string()));
    }
    let mut m = Manifest::new();
    m.set("campaign", cfg.campaign);
    m.set("config_hash", &config_hash);
    for line in cfg.canonical().lines() {
        if let Some((k, v)) = line.split_once('=') {
            if k != "campaign" {
                m.set(&format!("config.{k}"), v);
            }
        }
    }
    for (name, t) in &out.tables {
        m.set(&format!("table.{name}"), text_hash(&t.to_csv()));
    }
    for (k, v) in out.summary.entries() {
        m.set(k, v);
    }
    m.set("failures", out.failures.len());
    out.file("manifest.txt", m.to_text());
    Ok(out)
}

fn adapt_options(cfg: &CampaignConfig) -> AdaptOptions {
    AdaptOptions {
        tol: cfg.tol,
        theta: cfg.theta,
        max_dofs: cfg.max_dofs,
        max_cycles: cfg.max_cycles,
    }
}

fn bl_constants(cfg: &CampaignConfig) -> Result<Outcome> {
    let inc = cfg.inclusion.spec();
    let a = 1.0f64.min(cfg.k as f64);
    let goals = [GoalKind::C1, GoalKind::Cw { a }];
    let opts = adapt_options(cfg);
    let runs = parallel_map(&goals, cfg.jobs, |&goal| {
        let t = Instant::now();
        let run = solve_boundary_layer(&inc, cfg.k, cfg.l, SolveMode::Adaptive { goal, options: opts })
            .with_context(|| format!("adaptive boundary layer for {}", goal.name()))?;
        log::info!("{} done in {:.1}s", goal.name(), t.elapsed().as_secs_f64());
        Ok(run)
    })?;
    let (c1, cw) = (&runs[0], &runs[1]);
    let constants = BoundaryLayerConstants {
        c1bl: c1.constants.c1bl,
        eta_c1: c1.constants.eta_c1,
        cwbl: cw.constants.cwbl,
        eta_cw: cw.constants.eta_cw,
        ..c1.constants
    };
    let mut out = Outcome::default();
    let mut meta = vec![("a", fmt_value(a))];
    let mut hashes = Vec::new();
    for (tag, run) in [("c1", c1), ("cw", cw)] {
        let adapt = run.adapt.as_ref().expect("adaptive run");
        if !adapt.converged {
            log::warn!("{tag}: tolerance {:e} not reached within the budget", cfg.tol);
        }
        meta.push((if tag == "c1" { "converged_c1" } else { "converged_cw" }, adapt.converged.to_string()));
        out.file(format!("history_{tag}.csv"), adapt.history_csv());
        hashes.push(run.field.mesh().hash());
    }
    meta.push(("mesh_hash_c1", hashes[0].clone()));
    meta.push(("mesh_hash_cw", hashes[1].clone()));
    let s = &mut out.summary;
    s.set("inclusion", cfg.inclusion.as_str()).set("k", cfg.k).set("l", cfg.l).set_f64("a", a);
    s.set_f64("c1bl", constants.c1bl).set_f64("cwbl", constants.cwbl);
    for (tag, run) in [("c1", c1), ("cw", cw)] {
        let adapt = run.adapt.as_ref().expect("adaptive run");
        s.set_f64(&format!("eta_{tag}"), adapt.estimate.eta);
        s.set(&format!("dofs_{tag}"), adapt.estimate.dofs);
        s.set(&format!("cycles_{tag}"), adapt.history.len());
        s.set_f64(&format!("residual_{tag}"), run.field.residual);
        s.set(&format!("mesh_hash_{tag}"), &hashes[if tag == "c1" { 0 } else { 1 }]);
    }
    out.table("table2", table2(&[(cfg.inclusion.as_str(), &constants)]), &meta);
    Ok(out)
}

fn permeability_tensor(cfg: &CampaignConfig) -> Result<PermeabilityTensor> {
    let g = &cfg.given;
    if let (Some(k11), Some(k12), Some(k22)) = (g.k11, g.k12, g.k22) {
        return Ok(PermeabilityTensor {
            k: [[k11, k12], [k12, k22]],
        });
    }
    let t = Instant::now();
    let k = compute_permeability(&cfg.inclusion.spec(), SolveMode::Uniform { refine: cfg.perm_refine })?;
    log::info!("permeability at level {} in {:.1}s", cfg.perm_refine, t.elapsed().as_secs_f64());
    Ok(k)
}

fn permeability(cfg: &CampaignConfig) -> Result<Outcome> {
    let k = compute_permeability(&cfg.inclusion.spec(), SolveMode::Uniform { refine: cfg.perm_refine })?;
    let mesh = bjlab::meshkit::build_unit_cell_mesh(&cfg.inclusion.spec(), cfg.perm_refine)?;
    let mut t = CsvTable::new(&["inclusion", "K11", "K12", "K21", "K22", "symmetry_defect", "isotropy_defect"]);
    t.push(vec![
        cfg.inclusion.as_str().into(),
        fmt_value(k.k[0][0]),
        fmt_value(k.k[0][1]),
        fmt_value(k.k[1][0]),
        fmt_value(k.k[1][1]),
        fmt_value(k.symmetry_defect()),
        fmt_value(k.isotropy_defect()),
    ]);
    let mut out = Outcome::default();
    if !k.is_spd() {
        out.failures.push(format!("permeability tensor is not positive definite: {:?}", k.k));
    }
    if cfg.inclusion == InclusionName::Circle && k.isotropy_defect() > ISOTROPY_LIMIT {
        out.failures.push(format!("circle permeability isotropy defect {:.3e}", k.isotropy_defect()));
    }
    let hash = mesh.hash();
    let s = &mut out.summary;
    s.set("inclusion", cfg.inclusion.as_str()).set("refine", cfg.perm_refine).set("cells", mesh.n_cells());
    s.set_f64("k11", k.k[0][0]).set_f64("k12", k.k[0][1]).set_f64("k21", k.k[1][0]).set_f64("k22", k.k[1][1]);
    s.set_f64("isotropy_defect", k.isotropy_defect()).set("mesh_hash", &hash);
    out.table("permeability", t, &[("mesh_hash", hash)]);
    Ok(out)
}

fn bl_for_sweep(cfg: &CampaignConfig) -> Result<BoundaryLayerConstants> {
    let g = &cfg.given;
    if let (Some(c1bl), Some(cwbl)) = (g.c1bl, g.cwbl) {
        return Ok(BoundaryLayerConstants {
            c1bl,
            cwbl,
            eta_c1: None,
            eta_cw: None,
            cutoff_k: cfg.k,
            cutoff_l: cfg.l,
            a: 1.0f64.min(cfg.k as f64),
        });
    }
    // the effective model only needs a few digits; a moderate column suffices
    let (k, l) = (cfg.k.min(3), cfg.l.min(3));
    let run = solve_boundary_layer(
        &cfg.inclusion.spec(),
        k,
        l,
        SolveMode::Uniform {
            refine: cfg.constants_refine,
        },
    )?;
    Ok(run.constants)
}

struct SweepItem {
    record: ConvergenceRecord,
    manifest: Manifest,
    vtk: Option<String>,
    mesh_hash: String,
}

fn sweep_one(cfg: &CampaignConfig, eps: Epsilon, eff: &EffectiveSolution, injection: bool) -> Result<SweepItem> {
    let t = Instant::now();
    let inc = cfg.inclusion.spec();
    let length = if injection {
        Ratio::from_integer(INJECTION_LENGTH)
    } else {
        Ratio::from_integer(1)
    };
    let geom = GeometrySpec::new(inc, eps, length)?;
    let micro: MicroSolution = if injection {
        solve_micro_injection(&geom, cfg.drop_per_length, cfg.refine)?
    } else {
        solve_micro_periodic(&geom, cfg.refine)?
    };
    let profile = interface_profile(&micro.field, eps, micro.width, length, cfg.depth)?;
    let mut record = ConvergenceRecord::new(eps);
    record.gamma = Some(interface_norms(&profile, eff, InterfaceRegion::Full)?);
    if injection {
        record.gamma_hat = Some(interface_norms(&profile, eff, InterfaceRegion::Hat)?);
    } else {
        record.domain = Some(domain_norms(&micro, eff)?);
    }
    let mesh_hash = micro.field.mesh().hash();
    let mut m = Manifest::new();
    m.set("epsilon", eps);
    m.set("cells", micro.field.mesh().n_cells());
    m.set("dofs", micro.field.dofs().n_total());
    m.set_f64("residual", micro.field.residual);
    m.set("mesh_hash", &mesh_hash);
    for (name, v) in record.columns() {
        if let Some(v) = v {
            m.set_f64(&name, v);
        }
    }
    let vtk = cfg.vtk.then(|| {
        let ext = extend_pressure(&micro.field);
        write_vtk(&micro.field, Some(&ext))
    });
    log::info!(
        "ε={eps}: {} dofs in {:.1}s",
        micro.field.dofs().n_total(),
        t.elapsed().as_secs_f64()
    );
    Ok(SweepItem {
        record,
        manifest: m,
        vtk,
        mesh_hash,
    })
}

fn sweep(cfg: &CampaignConfig, injection: bool) -> Result<Outcome> {
    let bl = bl_for_sweep(cfg).context("boundary-layer constants")?;
    let k = permeability_tensor(cfg).context("permeability")?;
    log::info!("effective model: C1={:.10} Cw={:.10} K={:?}", bl.c1bl, bl.cwbl, k.k);
    let effs: Vec<(Epsilon, EffectiveSolution)> = cfg
        .eps
        .iter()
        .map(|&e| Ok((e, EffectiveSolution::new(e.value(), bl.c1bl, bl.cwbl, k.k)?)))
        .collect::<Result<_>>()?;
    let items = parallel_map(&effs, cfg.jobs, |(e, eff)| {
        sweep_one(cfg, *e, eff, injection).with_context(|| format!("epsilon {e}"))
    })?;
    let mut out = Outcome::default();
    let meta = vec![
        ("inclusion", cfg.inclusion.as_str().to_string()),
        ("c1bl", fmt_value(bl.c1bl)),
        ("cwbl", fmt_value(bl.cwbl)),
        ("k11", fmt_value(k.k[0][0])),
        ("k12", fmt_value(k.k[0][1])),
        ("k22", fmt_value(k.k[1][1])),
        (
            "mesh_hash",
            combined_hash(&items.iter().map(|i| i.mesh_hash.clone()).collect::<Vec<_>>()),
        ),
    ];
    let records: Vec<ConvergenceRecord> = items.iter().map(|i| i.record.clone()).collect();
    for (k, v) in &meta {
        out.summary.set(k, v);
    }
    for item in items {
        let tag = eps_tag(&item.record.epsilon);
        for (k, v) in item.manifest.entries() {
            out.summary.set(&format!("{tag}.{k}"), v);
        }
        out.file(format!("{tag}.manifest.txt"), item.manifest.to_text());
        if let Some(v) = item.vtk {
            out.file(format!("{tag}.vtk"), v);
        }
    }
    if injection {
        out.table("table5", table5(&records), &meta);
    } else {
        out.table("table3", table3(&records), &meta);
        out.table("table4", table4(&records), &meta);
    }
    let fits = fit_orders(&records, None);
    if !fits.is_empty() {
        let mut t = CsvTable::new(&["quantity", "slope", "eps_min", "eps_max", "points"]);
        for (name, f) in fits {
            t.push(vec![name, fmt_value(f.slope), fmt_value(f.eps_min), fmt_value(f.eps_max), f.points.to_string()]);
        }
        out.table("orders", t, &meta);
    }
    Ok(out)
}

fn manufactured(cfg: &CampaignConfig) -> Result<Outcome> {
    if cfg.refine < 2 {
        return Err(anyhow!("the manufactured check needs refine >= 2 to observe orders"));
    }
    let rows = manufactured_study(0..=cfg.refine)?;
    let vo = observed_orders(&rows, |r| r.vel_l2);
    let po = observed_orders(&rows, |r| r.p_l2);
    let mut t = CsvTable::new(&[
        "refine", "h", "dofs", "vel_l2", "vel_order", "p_l2", "p_order", "residual", "divergence",
    ]);
    for (i, r) in rows.iter().enumerate() {
        let order = |o: &[f64]| if i == 0 { "-".to_string() } else { fmt_value(o[i - 1]) };
        t.push(vec![
            r.refine.to_string(),
            fmt_value(r.h),
            r.dofs.to_string(),
            fmt_value(r.vel_l2),
            order(&vo),
            fmt_value(r.p_l2),
            order(&po),
            fmt_value(r.residual),
            fmt_value(r.divergence),
        ]);
    }
    let mut out = Outcome::default();
    let (v, p) = (*vo.last().unwrap(), *po.last().unwrap());
    if v < MIN_VELOCITY_ORDER {
        out.failures.push(format!("velocity order {v:.3} below {MIN_VELOCITY_ORDER}"));
    }
    if p < MIN_PRESSURE_ORDER {
        out.failures.push(format!("pressure order {p:.3} below {MIN_PRESSURE_ORDER}"));
    }
    out.summary.set_f64("velocity_order", v).set_f64("pressure_order", p);
    let worst = |f: fn(&bjlab::fem::manufactured::ManufacturedRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    out.summary.set_f64("max_residual", worst(|r| r.residual));
    out.summary.set_f64("max_divergence", worst(|r| r.divergence));
    out.table("manufactured", t, &[]);
    Ok(out)
}

fn dwr_efficiency(cfg: &CampaignConfig) -> Result<Outcome> {
    let inc = cfg.inclusion.spec();
    let goal = GoalKind::C1;
    // reference value from the adaptive loop, far below the uniform errors
    let t = Instant::now();
    let reference = solve_boundary_layer(
        &inc,
        cfg.k,
        cfg.l,
        SolveMode::Adaptive {
            goal,
            options: adapt_options(cfg),
        },
    )?;
    let adapt = reference.adapt.as_ref().expect("adaptive run");
    let j_ref = adapt.value + adapt.estimate.eta;
    log::info!(
        "reference J={j_ref:.13} ({} dofs, eta {:.2e}) in {:.1}s",
        adapt.estimate.dofs,
        adapt.estimate.eta,
        t.elapsed().as_secs_f64()
    );
    let series = efficiency_series(&inc, cfg.k, cfg.l, goal, 0..=cfg.refine)?;
    let rows: Vec<(usize, f64, f64)> = series.iter().map(|h| (h.dofs, h.value, h.eta)).collect();
    let mut out = Outcome::default();
    out.file("history_reference.csv", adapt.history_csv());
    let s = &mut out.summary;
    s.set("inclusion", cfg.inclusion.as_str()).set("k", cfg.k).set("l", cfg.l);
    s.set_f64("reference", j_ref).set("reference_dofs", adapt.estimate.dofs);
    for (i, h) in series.iter().enumerate() {
        s.set(&format!("level{i}.dofs"), h.dofs);
        s.set_f64(&format!("level{i}.value"), h.value).set_f64(&format!("level{i}.eta"), h.eta);
    }
    out.table(
        "table1",
        table1(&rows, j_ref),
        &[
            ("inclusion", cfg.inclusion.as_str().to_string()),
            ("goal", goal.name()),
            ("reference", fmt_value(j_ref)),
            ("reference_dofs", adapt.estimate.dofs.to_string()),
            ("reference_eta", fmt_value(adapt.estimate.eta)),
            ("mesh_hash", reference.field.mesh().hash()),
        ],
    );
    Ok(out)
}
