use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use bjlab::meshkit::{Epsilon, InclusionSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Campaign {
    BlConstants,
    Permeability,
    PeriodicSweep,
    InjectionSweep,
    ManufacturedCheck,
    DwrEfficiency,
}

impl Campaign {
    pub fn as_str(&self) -> &'static str {
        match self {
            Campaign::BlConstants => "bl-constants",
            Campaign::Permeability => "permeability",
            Campaign::PeriodicSweep => "periodic-sweep",
            Campaign::InjectionSweep => "injection-sweep",
            Campaign::ManufacturedCheck => "manufactured-check",
            Campaign::DwrEfficiency => "dwr-efficiency",
        }
    }
}

impl fmt::Display for Campaign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Campaign {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        <Campaign as clap::ValueEnum>::from_str(s, false).map_err(|_| anyhow!("unknown campaign {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum InclusionName {
    Circle,
    Ellipse,
}

impl InclusionName {
    pub fn spec(&self) -> InclusionSpec {
        match self {
            InclusionName::Circle => InclusionSpec::circle(),
            InclusionName::Ellipse => InclusionSpec::ellipse(),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            InclusionName::Circle => "circle",
            InclusionName::Ellipse => "ellipse",
        }
    }
}

impl FromStr for InclusionName {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        <InclusionName as clap::ValueEnum>::from_str(s, false).map_err(|_| anyhow!("unknown inclusion {s:?}"))
    }
}

/// Effective-model constants supplied instead of being computed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GivenConstants {
    pub c1bl: Option<f64>,
    pub cwbl: Option<f64>,
    pub k11: Option<f64>,
    pub k12: Option<f64>,
    pub k22: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub campaign: Campaign,
    pub inclusion: InclusionName,
    pub eps: Vec<Epsilon>,
    pub k: usize,
    pub l: usize,
    pub tol: f64,
    pub theta: f64,
    pub max_dofs: usize,
    pub max_cycles: usize,
    /// Uniform refinement of the microscopic / manufactured / efficiency meshes.
    pub refine: usize,
    /// Uniform level of the boundary-layer solve feeding the effective model.
    pub constants_refine: usize,
    /// Uniform level of the cell problems.
    pub perm_refine: usize,
    /// Depth of the "pressure from below" line in units of ε.
    pub depth: usize,
    pub drop_per_length: f64,
    pub jobs: usize,
    pub out: PathBuf,
    pub vtk: bool,
    pub given: GivenConstants,
}

impl CampaignConfig {
    pub fn defaults(campaign: Campaign) -> Self {
        let (k, refine) = match campaign {
            Campaign::DwrEfficiency => (3, 4),
            Campaign::ManufacturedCheck => (5, 5),
            _ => (5, 2),
        };
        Self {
            campaign,
            inclusion: InclusionName::Circle,
            eps: ["1", "1/3", "1/10"].iter().map(|e| e.parse().unwrap()).collect(),
            k,
            l: k,
            tol: 1e-11,
            theta: 0.3,
            max_dofs: 300_000,
            max_cycles: 40,
            refine,
            constants_refine: 4,
            perm_refine: 5,
            depth: 2,
            drop_per_length: 1.0,
            jobs: 1,
            out: PathBuf::from("results"),
            vtk: false,
            given: GivenConstants::default(),
        }
    }

    /// Parses a `key=value` file; `#` starts a comment. The campaign must be
    /// known (from the file or the command line) before the other keys apply.
    pub fn parse(text: &str, campaign: Option<Campaign>) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut campaign = campaign;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key=value, found {line:?}", i + 1))?;
            let (k, v) = (k.trim(), v.trim());
            if k == "campaign" {
                let c = v.parse().with_context(|| format!("line {}", i + 1))?;
                if campaign.is_some_and(|x| x != c) {
                    log::warn!("campaign {c} in the config is overridden on the command line");
                } else {
                    campaign = Some(c);
                }
            } else {
                pairs.push((i + 1, k.to_string(), v.to_string()));
            }
        }
        let campaign = campaign.ok_or_else(|| anyhow!("no campaign given in the config or on the command line"))?;
        let mut cfg = Self::defaults(campaign);
        for (line, k, v) in pairs {
            cfg.set(&k, &v).with_context(|| format!("line {line}: {k}={v}"))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path, campaign: Option<Campaign>) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text, campaign).with_context(|| format!("in {}", path.display()))
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(v: &str) -> Result<T>
        where
            T::Err: fmt::Display,
        {
            v.parse::<T>().map_err(|e| anyhow!("{e}"))
        }
        match key {
            "inclusion" => self.inclusion = value.parse()?,
            "eps" => self.eps = parse_eps_list(value)?,
            "kl" => {
                self.k = num(value)?;
                self.l = self.k;
            }
            "k" => self.k = num(value)?,
            "l" => self.l = num(value)?,
            "tol" => self.tol = num(value)?,
            "theta" => self.theta = num(value)?,
            "max_dofs" => self.max_dofs = num(value)?,
            "max_cycles" => self.max_cycles = num(value)?,
            "refine" => self.refine = num(value)?,
            "constants_refine" => self.constants_refine = num(value)?,
            "perm_refine" => self.perm_refine = num(value)?,
            "depth" => self.depth = num(value)?,
            "drop_per_length" => self.drop_per_length = num(value)?,
            "jobs" => self.jobs = num(value)?,
            "out" => self.out = PathBuf::from(value),
            "vtk" => self.vtk = num(value)?,
            "c1bl" => self.given.c1bl = Some(num(value)?),
            "cwbl" => self.given.cwbl = Some(num(value)?),
            "k11" => self.given.k11 = Some(num(value)?),
            "k12" => self.given.k12 = Some(num(value)?),
            "k22" => self.given.k22 = Some(num(value)?),
            _ => bail!("unknown key {key:?}"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.l == 0 {
            bail!("cut-off heights must be positive");
        }
        if !(self.tol > 0.0) {
            bail!("tol must be positive");
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            bail!("theta must lie in (0, 1]");
        }
        if self.jobs == 0 {
            bail!("jobs must be at least 1");
        }
        if self.depth == 0 {
            bail!("depth must be at least 1");
        }
        if self.eps.is_empty() && matches!(self.campaign, Campaign::PeriodicSweep | Campaign::InjectionSweep) {
            bail!("the sweep needs at least one epsilon");
        }
        for e in &self.eps {
            e.rows().map_err(|err| anyhow!("epsilon {e}: {err}"))?;
        }
        Ok(())
    }

    /// Canonical text of every setting; its hash identifies the artifacts.
    pub fn canonical(&self) -> String {
        let eps: Vec<String> = self.eps.iter().map(|e| e.to_string()).collect();
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:e}"));
        let g = &self.given;
        format!(
            "campaign={}\ninclusion={}\neps={}\nk={}\nl={}\ntol={:e}\ntheta={}\nmax_dofs={}\nmax_cycles={}\n\
             refine={}\nconstants_refine={}\nperm_refine={}\ndepth={}\ndrop_per_length={}\n\
             c1bl={}\ncwbl={}\nk11={}\nk12={}\nk22={}\n",
            self.campaign,
            self.inclusion.as_str(),
            eps.join(","),
            self.k,
            self.l,
            self.tol,
            self.theta,
            self.max_dofs,
            self.max_cycles,
            self.refine,
            self.constants_refine,
            self.perm_refine,
            self.depth,
            self.drop_per_length,
            opt(g.c1bl),
            opt(g.cwbl),
            opt(g.k11),
            opt(g.k12),
            opt(g.k22),
        )
    }
}

pub fn parse_eps_list(s: &str) -> Result<Vec<Epsilon>> {
    s.split(',')
        .map(|t| t.trim())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<Epsilon>().map_err(|e| anyhow!("bad epsilon {t:?}: {e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_comments() {
        let text = "# sweep\ncampaign = periodic-sweep\ninclusion=ellipse # oval\neps = 1, 1/3, 0.1\nrefine=1\n";
        let cfg = CampaignConfig::parse(text, None).unwrap();
        assert_eq!(cfg.campaign, Campaign::PeriodicSweep);
        assert_eq!(cfg.inclusion, InclusionName::Ellipse);
        assert_eq!(cfg.eps.len(), 3);
        assert_eq!(cfg.eps[2], Epsilon::new(1, 10).unwrap());
        assert_eq!(cfg.refine, 1);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = CampaignConfig::parse("campaign=permeability\n\nrefine=x\n", None).unwrap_err();
        assert!(format!("{err:#}").contains("line 3"), "{err:#}");
        let err = CampaignConfig::parse("campaign=permeability\nbogus=1\n", None).unwrap_err();
        assert!(format!("{err:#}").contains("line 2"), "{err:#}");
        let err = CampaignConfig::parse("campaign=permeability\njust words\n", None).unwrap_err();
        assert!(format!("{err:#}").contains("line 2"), "{err:#}");
    }

    #[test]
    fn campaign_required() {
        assert!(CampaignConfig::parse("refine=1\n", None).is_err());
        assert!(CampaignConfig::parse("refine=1\n", Some(Campaign::Permeability)).is_ok());
    }

    #[test]
    fn inadmissible_epsilon_rejected() {
        assert!(CampaignConfig::parse("campaign=periodic-sweep\neps=2/3\n", None).is_err());
    }
}
