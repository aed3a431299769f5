//! Versioned JSON configuration shared by the command-line tool and the demo.
//!
//! A config names a system, a formula (inline text, a `.hstl` file or a
//! template instance), planner settings and optional monitor/verify sections.
//! Relative file paths resolve against the config's own directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::formula::{parse, HyperFormula};
use crate::hyperspecs::{
    distinguishability, k_anonymity, pre_opacity, AnonymityParams, DistinguishabilityParams,
    OpacityParams, Region, Template,
};
use crate::planner::{Coupling, GridSpec, PlannerConfig};
use crate::system::SystemModel;
use crate::{Error, Result};

/// The only schema version this build reads.
pub const SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub system: SystemModel,
    pub formula: FormulaSpec,
    #[serde(default)]
    pub planner: PlannerConfig,
    /// Overrides `planner.search.seed`.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Boxes written next to plans for plotting.
    #[serde(default)]
    pub regions: Vec<Region>,
    #[serde(default)]
    pub monitor: Option<MonitorSpec>,
    #[serde(default)]
    pub verify: Option<VerifySpec>,
}

/// Exactly one of `text`, `file` or `template`.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormulaSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<TemplateSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TemplateSpec {
    PreOpacity(OpacityParams),
    KAnonymity(AnonymityParams),
    Distinguishability(DistinguishabilityParams),
}

impl TemplateSpec {
    pub fn build(&self) -> Result<Template> {
        match self {
            TemplateSpec::PreOpacity(p) => pre_opacity(p),
            TemplateSpec::KAnonymity(p) => k_anonymity(p),
            TemplateSpec::Distinguishability(p) => distinguishability(p),
        }
    }

    /// Regions the template mentions, for plot output.
    pub fn regions(&self) -> Vec<Region> {
        match self {
            TemplateSpec::PreOpacity(p) => vec![p.secret.clone()],
            TemplateSpec::KAnonymity(p) => p.regions.clone(),
            TemplateSpec::Distinguishability(p) => vec![p.critical.clone()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorSpec {
    /// One CSV per trace variable, in prefix order.
    #[serde(default)]
    pub traces: Vec<PathBuf>,
    #[serde(default)]
    pub at: usize,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    /// Falls back to `planner.grid`.
    #[serde(default)]
    pub grid: Option<GridSpec>,
    /// Falls back to `planner.n_steps`, then the formula horizon.
    #[serde(default)]
    pub n_steps: Option<usize>,
}

/// A config with its formula resolved and paths made absolute.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub config: Config,
    pub formula: HyperFormula,
    /// Planner settings with template couplings and the seed override applied.
    pub planner: PlannerConfig,
    pub regions: Vec<Region>,
    pub base: PathBuf,
}

impl Loaded {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }
}

impl Config {
    /// Parses JSON text; errors carry the line and column serde reports.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text)?;
        if cfg.schema != SCHEMA {
            return Err(Error::Config(format!(
                "unsupported schema {}; this build reads schema {SCHEMA}",
                cfg.schema
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Loaded> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text)?.resolve(base)
    }

    /// Resolves the formula against `base` and folds template couplings into the planner settings.
    pub fn resolve(self, base: PathBuf) -> Result<Loaded> {
        self.system.validate()?;
        let f = &self.formula;
        let given = [f.text.is_some(), f.file.is_some(), f.template.is_some()]
            .iter()
            .filter(|x| **x)
            .count();
        if given != 1 {
            return Err(Error::Config(
                "formula needs exactly one of `text`, `file` or `template`".into(),
            ));
        }
        let mut planner = self.planner.clone();
        let mut regions = self.regions.clone();
        let formula = if let Some(t) = &f.text {
            parse(t)?
        } else if let Some(p) = &f.file {
            let p = if p.is_absolute() {
                p.clone()
            } else {
                base.join(p)
            };
            let src = std::fs::read_to_string(&p).map_err(|e| {
                Error::Config(format!("cannot read formula file {}: {e}", p.display()))
            })?;
            parse(&src)?
        } else {
            let spec = f.template.as_ref().expect("counted above");
            let Template { formula, couplings } = spec.build()?;
            let mut all: Vec<Coupling> = couplings;
            all.append(&mut planner.couplings);
            planner.couplings = all;
            for r in spec.regions() {
                if !regions.iter().any(|q| q.name == r.name) {
                    regions.push(r);
                }
            }
            formula
        };
        if let Some(s) = self.seed {
            planner.search.seed = s;
        }
        Ok(Loaded {
            config: self,
            formula,
            planner,
            regions,
            base,
        })
    }
}
