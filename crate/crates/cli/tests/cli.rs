use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bjlab-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn bjlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bjlab"))
        .args(args)
        .env_remove("BJLAB_OUT")
        .output()
        .unwrap()
}

fn golden(name: &str) -> String {
    format!("{}/golden/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

#[test]
fn config_errors_name_the_line() {
    let dir = scratch("config");
    let conf = dir.join("bad.conf");
    fs::write(&conf, "campaign = permeability\n# fine\nrefine = two\n").unwrap();
    let out = bjlab(&["--config", conf.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out).contains("line 3"), "{}", text(&out));

    fs::write(&conf, "campaign = permeability\ncolour = red\n").unwrap();
    let out = bjlab(&["--config", conf.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out).contains("colour"));

    let out = bjlab(&["--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let out = bjlab(&["periodic-sweep", "--eps", "1/3,2/7", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", text(&out));
}

#[test]
fn manufactured_check_writes_orders() {
    let dir = scratch("manufactured");
    let out = bjlab(&["manufactured-check", "--refine", "3", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out));
    let csv = fs::read_to_string(dir.join("manufactured-check/manufactured.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[0].starts_with("refine,h,dofs,vel_l2,vel_order"));
    assert!(dir.join("manufactured-check/manifest.txt").exists());
}

#[test]
fn permeability_golden_check_and_perturbation() {
    let dir = scratch("perm");
    let d = dir.to_str().unwrap();
    let out = bjlab(&["permeability", "--inclusion", "circle", "--out", d, "--check", &golden("permeability_circle.csv")]);
    assert!(out.status.success(), "{}", text(&out));
    assert!(!text(&out).contains("FAIL"));

    let perturbed = dir.join("perturbed.csv");
    let g = fs::read_to_string(golden("permeability_circle.csv")).unwrap();
    fs::write(&perturbed, g.replacen("circle,0.01990143534975", "circle,0.01990153534975", 1)).unwrap();
    let out = bjlab(&["permeability", "--inclusion", "circle", "--out", d, "--check", perturbed.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", text(&out));
    let report = text(&out);
    assert!(report.contains("FAIL  circle K11"), "{report}");
    assert!(report.contains("ok    circle K22"), "{report}");
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn periodic_config(dir: &Path) -> PathBuf {
    let conf = dir.join("periodic.conf");
    fs::write(
        &conf,
        "campaign = periodic-sweep\ninclusion = ellipse\neps = 1, 1/3, 1/10\nrefine = 1\njobs = 2\n\
         c1bl = -0.2694545953985\ncwbl = -0.2409148310959\n\
         k11 = 0.0159787174788\nk12 = 0.00303449804138\nk22 = 0.0159787174788\n",
    )
    .unwrap();
    conf
}

#[test]
fn periodic_sweep_is_reproducible() {
    let dir = scratch("repro");
    let conf = periodic_config(&dir);
    let mut runs = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.join(name);
        let out = bjlab(&["--config", conf.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", text(&out));
        runs.push(files(&out_dir.join("periodic-sweep-ellipse")));
    }
    assert_eq!(runs[0], runs[1]);
    let names: Vec<&str> = runs[0].iter().map(|f| f.0.as_str()).collect();
    for expected in ["table3.csv", "table4.csv", "orders.csv", "manifest.txt", "eps_1_10.manifest.txt"] {
        assert!(names.contains(&expected), "{names:?}");
    }
    let t3 = String::from_utf8(runs[0].iter().find(|f| f.0 == "table3.csv").unwrap().1.clone()).unwrap();
    let rows: Vec<&str> = t3.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("1,") && rows[2].starts_with("1/3,") && rows[3].starts_with("1/10,"));
    assert!(t3.contains("# campaign=periodic-sweep"));
    assert!(t3.contains("# config_hash="));
}
