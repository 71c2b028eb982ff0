//! Pipeline configuration: one structured file capturing the whole
//! procedure — data location, column drops, discretization rules, tiers,
//! targets, ensemble knobs, and output paths.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::dataset::{DiscretizationRule, DiscretizeKind};
use crate::error::{Error, Result};

use super::dot::TierPalette;

fn default_runs() -> usize {
    100
}

fn default_threshold() -> f64 {
    0.9
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_merged_label() -> String {
    "other".to_owned()
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum RawRule {
    Cuts {
        column: String,
        cuts: Vec<f64>,
    },
    Quantile {
        column: String,
        bins: usize,
    },
    ValueMap {
        column: String,
        map: BTreeMap<String, String>,
    },
    RareMerge {
        column: String,
        min_count: u64,
        #[serde(default = "default_merged_label")]
        label: String,
    },
}

impl RawRule {
    fn into_rule(self) -> Result<DiscretizationRule> {
        match self {
            RawRule::Cuts { column, cuts } => {
                DiscretizationRule::new(column, DiscretizeKind::ExplicitCuts(cuts))
            }
            RawRule::Quantile { column, bins } => {
                DiscretizationRule::new(column, DiscretizeKind::Quantile(bins))
            }
            RawRule::ValueMap { column, map } => {
                DiscretizationRule::new(column, DiscretizeKind::ValueMap(map))
            }
            RawRule::RareMerge {
                column,
                min_count,
                label,
            } => DiscretizationRule::new(
                column,
                DiscretizeKind::RareMerge {
                    min_count,
                    merged_label: label,
                },
            ),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    data: PathBuf,
    #[serde(default)]
    drop: Vec<String>,
    #[serde(default)]
    discretize: Vec<RawRule>,
    tiers: BTreeMap<String, u32>,
    targets: Vec<String>,
    #[serde(default = "default_runs")]
    runs: usize,
    #[serde(default = "default_threshold")]
    threshold: f64,
    #[serde(default)]
    seed: u64,
    workers: Option<usize>,
    #[serde(default = "default_out")]
    out: PathBuf,
    /// Optional tier -> DOT fill color overrides.
    #[serde(default)]
    colors: BTreeMap<String, String>,
}

/// Validated pipeline configuration.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub data: PathBuf,
    pub drop: Vec<String>,
    pub discretize: Vec<DiscretizationRule>,
    pub tiers: BTreeMap<String, u32>,
    pub targets: Vec<String>,
    pub runs: usize,
    pub threshold: f64,
    pub seed: u64,
    pub workers: Option<usize>,
    pub out: PathBuf,
    pub palette: TierPalette,
    /// SHA-256 of the raw config text, recorded in output provenance.
    pub config_digest: String,
}

impl PipelineConfig {
    /// Read and validate a TOML config file. Relative `data` and `out`
    /// paths resolve against the config file's directory.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::ReadFile {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml_str(&text, base)
    }

    /// Parse and validate config text; relative paths resolve against `base`.
    pub fn from_toml_str(text: &str, base: impl AsRef<Path>) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("parse error: {e}")))?;
        let digest: String = Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        let base = base.as_ref();

        let mut palette = TierPalette::default();
        for (key, color) in &raw.colors {
            let tier: u32 = key.parse().map_err(|_| {
                Error::Config(format!("colors key '{key}' is not a tier number"))
            })?;
            palette.set(tier, color.clone());
        }

        let mut discretize = Vec::with_capacity(raw.discretize.len());
        for rule in raw.discretize {
            discretize.push(rule.into_rule()?);
        }

        let cfg = PipelineConfig {
            data: resolve(base, raw.data),
            drop: raw.drop,
            discretize,
            tiers: raw.tiers,
            targets: raw.targets,
            runs: raw.runs,
            threshold: raw.threshold,
            seed: raw.seed,
            workers: raw.workers,
            out: resolve(base, raw.out),
            palette,
            config_digest: digest,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Apply command-line overrides, then re-validate.
    pub fn apply_overrides(
        &mut self,
        seed: Option<u64>,
        runs: Option<usize>,
        threshold: Option<f64>,
        out: Option<PathBuf>,
    ) -> Result<()> {
        if let Some(seed) = seed {
            self.seed = seed;
        }
        if let Some(runs) = runs {
            self.runs = runs;
        }
        if let Some(threshold) = threshold {
            self.threshold = threshold;
        }
        if let Some(out) = out {
            self.out = out;
        }
        self.validate()
    }

    /// Static checks that need no data file.
    fn validate(&self) -> Result<()> {
        if self.runs < 1 {
            return Err(Error::Config("runs must be >= 1".into()));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::Config("threshold must be in (0, 1]".into()));
        }
        if let Some(0) = self.workers {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        if self.targets.is_empty() {
            return Err(Error::Config("targets must not be empty".into()));
        }
        if self.tiers.is_empty() {
            return Err(Error::Config("tiers must not be empty".into()));
        }
        if let Some((name, _)) = self.tiers.iter().find(|(_, &t)| t == 0) {
            return Err(Error::Config(format!("tier of '{name}' must be >= 1")));
        }

        let dropped: BTreeSet<&str> = self.drop.iter().map(String::as_str).collect();
        if let Some(name) = self.tiers.keys().find(|n| dropped.contains(n.as_str())) {
            return Err(Error::Config(format!(
                "tiers reference dropped column '{name}'"
            )));
        }
        if let Some(rule) = self
            .discretize
            .iter()
            .find(|r| dropped.contains(r.column.as_str()))
        {
            return Err(Error::Config(format!(
                "discretize references dropped column '{}'",
                rule.column
            )));
        }
        if let Some(name) = self.targets.iter().find(|n| dropped.contains(n.as_str())) {
            return Err(Error::Config(format!("target '{name}' is dropped")));
        }

        let max_tier = self.tiers.values().copied().max().unwrap_or(1);
        for target in &self.targets {
            match self.tiers.get(target) {
                None => {
                    return Err(Error::Config(format!("target '{target}' has no tier")));
                }
                Some(&t) if t != max_tier => {
                    return Err(Error::Config(format!(
                        "target '{target}' has tier {t}, but targets must sit in the \
                         highest tier ({max_tier})"
                    )));
                }
                Some(_) => {}
            }
        }
        Ok(())
    }
}

fn resolve(base: &Path, path: PathBuf) -> PathBuf {
    if path.is_absolute() {
        path
    } else {
        base.join(path)
    }
}
