use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::PipelineConfig;

/// Everything one CLI run depends on. Loaded from JSON, then overridden by
/// flags; the resolved value is echoed into the run manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub pipeline: PipelineConfig,
    /// Overrides the spacing read from image sidecars; 1.0 when neither exists.
    pub spacing_mm: Option<f64>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub jobs: usize,
    /// Adds wall-clock stage timings to the manifest, which then differs
    /// between runs.
    pub record_timings: bool,
    /// Also writes the T, I and F maps of each frame.
    pub write_ns_maps: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            pipeline: PipelineConfig::default(),
            spacing_mm: None,
            input: None,
            output: None,
            jobs: 1,
            record_timings: false,
            write_ns_maps: false,
        }
    }
}

/// Flag values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub spacing_mm: Option<f64>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Flags over file over defaults.
    pub fn resolve(file: Option<&Path>, flags: &Overrides) -> Result<Self> {
        let mut cfg = match file {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(seed) = flags.seed {
            cfg.pipeline.ncm.seed = seed;
        }
        if let Some(jobs) = flags.jobs {
            cfg.jobs = jobs;
        }
        if flags.spacing_mm.is_some() {
            cfg.spacing_mm = flags.spacing_mm;
        }
        if flags.input.is_some() {
            cfg.input.clone_from(&flags.input);
        }
        if flags.output.is_some() {
            cfg.output.clone_from(&flags.output);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.pipeline.validate()?;
        if self.jobs == 0 {
            return Err(Error::InvalidParameter("jobs must be >= 1".into()));
        }
        if let Some(s) = self.spacing_mm {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidParameter(format!("spacing_mm must be positive, got {s}")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
