mod campaigns;
mod check;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use bjlab::verify::{write_atomic, CsvTable};
use clap::Parser;

use crate::config::{parse_eps_list, Campaign, CampaignConfig, InclusionName};

/// Runs the interface-law verification campaigns and writes CSV tables,
/// manifests and optional VTK files.
#[derive(Debug, Parser)]
#[command(name = "bjlab", version, about)]
struct Cli {
    /// Campaign to run; may instead be given as `campaign=` in the config.
    campaign: Option<Campaign>,
    /// key=value configuration file; command-line flags override it.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    inclusion: Option<InclusionName>,
    /// Comma-separated ε values, as p/q or decimals (e.g. 1,1/3,0.1).
    #[arg(long)]
    eps: Option<String>,
    /// Cut-off heights k = l of the boundary-layer column.
    #[arg(long)]
    kl: Option<usize>,
    /// Goal-error tolerance of the adaptive loop.
    #[arg(long)]
    tol: Option<f64>,
    /// Uniform refinement level of the campaign meshes.
    #[arg(long)]
    refine: Option<usize>,
    /// DoF budget of the adaptive loop.
    #[arg(long)]
    max_dofs: Option<usize>,
    /// Number of ε items solved concurrently.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output root; results go to <out>/<campaign>-<inclusion>.
    #[arg(long, env = "BJLAB_OUT")]
    out: Option<PathBuf>,
    /// Golden CSV to compare against (repeatable).
    #[arg(long, value_name = "GOLDEN.csv")]
    check: Vec<PathBuf>,
    /// Also write VTK files of the microscopic fields.
    #[arg(long)]
    vtk: bool,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

fn build_config(cli: &Cli) -> Result<CampaignConfig> {
    let mut cfg = match &cli.config {
        Some(path) => CampaignConfig::read(path, cli.campaign)?,
        None => {
            let campaign = cli
                .campaign
                .ok_or_else(|| anyhow::anyhow!("no campaign given (positional argument or --config)"))?;
            CampaignConfig::defaults(campaign)
        }
    };
    if let Some(i) = cli.inclusion {
        cfg.inclusion = i;
    }
    if let Some(e) = &cli.eps {
        cfg.eps = parse_eps_list(e)?;
    }
    if let Some(kl) = cli.kl {
        cfg.k = kl;
        cfg.l = kl;
    }
    if let Some(t) = cli.tol {
        cfg.tol = t;
    }
    if let Some(r) = cli.refine {
        cfg.refine = r;
    }
    if let Some(m) = cli.max_dofs {
        cfg.max_dofs = m;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    cfg.vtk |= cli.vtk;
    cfg.validate()?;
    Ok(cfg)
}

fn output_dir(cfg: &CampaignConfig) -> PathBuf {
    match cfg.campaign {
        Campaign::ManufacturedCheck => cfg.out.join(cfg.campaign.as_str()),
        c => cfg.out.join(format!("{}-{}", c, cfg.inclusion.as_str())),
    }
}

fn write_outcome(dir: &Path, out: &campaigns::Outcome) -> Result<()> {
    for (name, t) in &out.tables {
        write_atomic(&dir.join(format!("{name}.csv")), &t.to_csv())?;
    }
    for (name, text) in &out.files {
        write_atomic(&dir.join(name), text)?;
    }
    Ok(())
}

/// Compares against every golden file; returns the number of failed entries.
fn run_checks(goldens: &[PathBuf], out: &campaigns::Outcome) -> Result<usize> {
    let mut failed = 0;
    for path in goldens {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let golden = CsvTable::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
        let (name, produced) = check::select(&golden, &out.tables).with_context(|| path.display().to_string())?;
        let findings = check::compare(&golden, produced)?;
        let bad = findings.iter().filter(|f| !f.ok()).count();
        println!("check {} against {name}.csv:", path.display());
        for f in &findings {
            println!("  {f}");
        }
        println!("  {} of {} entries passed", findings.len() - bad, findings.len());
        failed += bad;
    }
    Ok(failed)
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = build_config(cli)?;
    let out = campaigns::run(&cfg)?;
    let dir = output_dir(&cfg);
    write_outcome(&dir, &out)?;
    println!("{} results written to {}", cfg.campaign, dir.display());
    for (k, v) in out.summary.entries() {
        if !k.contains('.') && !k.contains("hash") {
            println!("  {k} = {v}");
        }
    }
    for f in &out.failures {
        println!("threshold breach: {f}");
    }
    let failed = run_checks(&cli.check, &out)?;
    let checking = !cli.check.is_empty() || cfg.campaign == Campaign::ManufacturedCheck;
    Ok(!(checking && (failed > 0 || !out.failures.is_empty())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("bjlab: check failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("bjlab: {e:#}");
            ExitCode::FAILURE
        }
    }
}
