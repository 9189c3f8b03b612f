//! Run manifests (deterministic) and run logs (timings and cache traffic).

use std::fs;
use std::path::Path;
use std::time::Instant;

use fq_core::cache::CODE_VERSION;
use fq_core::Result;
use serde::Serialize;

use crate::config::RunConfig;

/// Constants derived during a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Derived {
    pub points: Option<usize>,
    pub separation: Option<f64>,
    pub c0: Option<f64>,
    pub c0_source: Option<String>,
    pub spectrum_entries: Option<usize>,
    pub spectrum_c0: Option<f64>,
    pub n_fit: Option<f64>,
    pub p_used: Option<f64>,
    pub growth_b: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
}

/// Everything needed to reproduce a run. Contains no timings, so identical
/// runs write identical manifests.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub code_version: &'static str,
    pub config: RunConfig,
    /// The configuration as `key=value` text, loadable with `--config`.
    pub config_text: String,
    pub derived: Derived,
    pub outputs: Vec<OutputFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTime {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CacheEvent {
    pub path: String,
    pub sha256: String,
    pub hit: bool,
}

/// Wall times per stage and cache hits/misses for one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunLog {
    pub stages: Vec<StageTime>,
    pub cache: Vec<CacheEvent>,
}

impl RunLog {
    pub fn stage(&mut self, name: &str, start: Instant) {
        self.stages.push(StageTime { stage: name.into(), seconds: start.elapsed().as_secs_f64() });
    }

    pub fn cache_hit(&mut self, path: &Path, sum: &str) {
        self.cache.push(CacheEvent { path: path.display().to_string(), sha256: sum.into(), hit: true });
    }

    pub fn cache_miss(&mut self, path: &Path, sum: &str) {
        self.cache.push(CacheEvent { path: path.display().to_string(), sha256: sum.into(), hit: false });
    }

    pub fn hits(&self) -> usize {
        self.cache.iter().filter(|c| c.hit).count()
    }
}

impl RunManifest {
    pub fn new(command: &str, cfg: &RunConfig, derived: &Derived, outputs: Vec<OutputFile>) -> Self {
        Self {
            command: command.into(),
            code_version: CODE_VERSION,
            config: cfg.clone(),
            config_text: cfg.to_key_values(),
            derived: derived.clone(),
            outputs,
        }
    }

    /// Writes `<command>.manifest.json` and `<command>.log.json` into `dir`.
    pub fn write(&self, dir: &Path, log: &RunLog) -> Result<()> {
        fs::write(dir.join(format!("{}.manifest.json", self.command)), serde_json::to_string_pretty(self)? + "\n")?;
        fs::write(dir.join(format!("{}.log.json", self.command)), serde_json::to_string_pretty(log)? + "\n")?;
        Ok(())
    }
}
