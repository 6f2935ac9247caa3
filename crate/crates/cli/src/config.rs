//! The single JSON run configuration. Relative paths inside a config file are
//! resolved against the directory containing that file.

use std::path::{Path, PathBuf};

use honeycomb_xai::anchor::AnchorConfig;
use honeycomb_xai::augment::AugmentConfig;
use honeycomb_xai::forest::ForestConfig;
use honeycomb_xai::lime::LimeConfig;
use honeycomb_xai::report::ReportOptions;
use honeycomb_xai::shap::ShapConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Input corpus. When absent the pipeline reads `<out>/corpus.jsonl`,
    /// which `generate` writes.
    pub corpus: Option<PathBuf>,
    /// Synonym lexicon (TSV). Absent means synonym replacement is a no-op.
    pub lexicon: Option<PathBuf>,
    pub out: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            corpus: None,
            lexicon: None,
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_per_dimension: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_per_dimension: 100,
        }
    }
}

/// Component `seed` fields are ignored: every stage derives its seed from the
/// global `seed` and the dimension it works on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub seed: u64,
    pub split_fraction: f64,
    pub min_df: usize,
    /// When set, `run-all` generates the corpus instead of reading one.
    pub synthetic: Option<SyntheticConfig>,
    pub augment: AugmentConfig,
    pub forest: ForestConfig,
    pub lime: LimeConfig,
    pub shap: ShapConfig,
    pub anchor: AnchorConfig,
    pub report: ReportOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            paths: Paths::default(),
            seed: 0,
            split_fraction: 0.2,
            min_df: 2,
            synthetic: None,
            augment: AugmentConfig::default(),
            forest: ForestConfig::default(),
            lime: LimeConfig::default(),
            shap: ShapConfig::default(),
            anchor: AnchorConfig::default(),
            report: ReportOptions::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(json: &str, path: &Path) -> Result<Self> {
        serde_json::from_str(json).map_err(|source| CliError::ConfigParse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => CliError::Missing {
                path: path.to_path_buf(),
                hint: "pass an existing --config file",
            },
            _ => honeycomb_xai::Error::Io {
                path: path.to_path_buf(),
                source: e,
            }
            .into(),
        })?;
        let mut cfg = Self::from_json(&json, path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.paths.corpus.as_mut().map(rebase);
        cfg.paths.lexicon.as_mut().map(rebase);
        rebase(&mut cfg.paths.out);
        Ok(cfg)
    }

    /// Defaults, then the file (if any), then flags.
    pub fn resolve(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(seed) = overrides.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &overrides.out {
            cfg.paths.out = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(CliError::config(
                "split_fraction",
                format!("must lie in (0, 1), got {}", self.split_fraction),
            ));
        }
        if self.min_df == 0 {
            return Err(CliError::config("min_df", "must be at least 1"));
        }
        if let Some(s) = &self.synthetic {
            if self.paths.corpus.is_some() {
                return Err(CliError::config(
                    "synthetic",
                    "cannot be combined with paths.corpus",
                ));
            }
            if s.n_per_dimension < 2 {
                return Err(CliError::config(
                    "synthetic.n_per_dimension",
                    format!("must be at least 2, got {}", s.n_per_dimension),
                ));
            }
        }
        let check = |block: &str, r: honeycomb_xai::Result<()>| {
            r.map_err(|e| CliError::from(e).in_block(block))
        };
        check("augment", self.augment.validate())?;
        check("forest", self.forest.validate())?;
        check("lime", self.lime.validate())?;
        check("shap", self.shap.validate())?;
        check("anchor", self.anchor.validate())?;
        check("report", self.report.validate())?;
        Ok(())
    }
}
