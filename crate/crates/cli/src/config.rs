//! Run configuration: defaults, a flat `key=value` file, then flag overrides.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use fq_core::cache::{parse_key_values, render_key_values};
use fq_core::{FqError, Result};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// Catalog name or path to a system JSON document.
    pub system: String,
    pub r_max: f64,
    pub grid_step: f64,
    pub t_values: Vec<f64>,
    pub gamma_max: f64,
    /// Estimation radius for spectral coefficients; `0` means `r_max`.
    pub estimation_radius: f64,
    /// Detection threshold on `|c_s|`.
    pub threshold: f64,
    pub xi_values: Vec<f64>,
    pub output_dir: PathBuf,
    pub cache: bool,
    pub seed: u64,
    pub svg: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: "lattice".into(),
            r_max: 100.0,
            grid_step: 0.05,
            t_values: vec![0.1, 0.2, 0.4],
            gamma_max: 10.0,
            estimation_radius: 0.0,
            threshold: 1e-3,
            xi_values: vec![0.5, 1.0, std::f64::consts::SQRT_2, 2.0],
            output_dir: PathBuf::from("fq-out"),
            cache: true,
            seed: 1,
            svg: false,
        }
    }
}

pub const KEYS: [&str; 12] = [
    "system",
    "r_max",
    "grid_step",
    "t_values",
    "gamma_max",
    "estimation_radius",
    "threshold",
    "xi_values",
    "output_dir",
    "cache",
    "seed",
    "svg",
];

fn bad(key: &str, value: &str, what: &str) -> FqError {
    FqError::Format(format!("config key `{key}`: cannot parse `{value}` as {what}"))
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim().parse::<f64>().map_err(|_| bad(key, v, "a number"))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_f64(key, s))
        .collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(bad(key, v, "a boolean")),
    }
}

fn render_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Applies one `key=value` pair.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "system" => self.system = value.trim().to_string(),
            "r_max" => self.r_max = parse_f64(key, value)?,
            "grid_step" => self.grid_step = parse_f64(key, value)?,
            "t_values" => self.t_values = parse_list(key, value)?,
            "gamma_max" => self.gamma_max = parse_f64(key, value)?,
            "estimation_radius" => self.estimation_radius = parse_f64(key, value)?,
            "threshold" => self.threshold = parse_f64(key, value)?,
            "xi_values" => self.xi_values = parse_list(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value.trim()),
            "cache" => self.cache = parse_bool(key, value)?,
            "seed" => self.seed = value.trim().parse().map_err(|_| bad(key, value, "an unsigned integer"))?,
            "svg" => self.svg = parse_bool(key, value)?,
            _ => {
                return Err(FqError::Format(format!(
                    "unknown config key `{key}`; valid keys: {}",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, v) in parse_key_values(text)? {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_key_values(&fs::read_to_string(path)?)
    }

    pub fn to_key_values(&self) -> String {
        let mut m = BTreeMap::new();
        m.insert("system".to_string(), self.system.clone());
        m.insert("r_max".into(), self.r_max.to_string());
        m.insert("grid_step".into(), self.grid_step.to_string());
        m.insert("t_values".into(), render_list(&self.t_values));
        m.insert("gamma_max".into(), self.gamma_max.to_string());
        m.insert("estimation_radius".into(), self.estimation_radius.to_string());
        m.insert("threshold".into(), self.threshold.to_string());
        m.insert("xi_values".into(), render_list(&self.xi_values));
        m.insert("output_dir".into(), self.output_dir.display().to_string());
        m.insert("cache".into(), self.cache.to_string());
        m.insert("seed".into(), self.seed.to_string());
        m.insert("svg".into(), self.svg.to_string());
        render_key_values(&m)
    }

    /// The estimation radius with `0` resolved to `r_max`.
    pub fn estimation_radius(&self) -> f64 {
        if self.estimation_radius > 0.0 {
            self.estimation_radius
        } else {
            self.r_max
        }
    }

    /// Checks value ranges and that `output_dir` can be written.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(FqError::Domain(format!("{name} must be positive, got {v}")))
            }
        };
        positive("r_max", self.r_max)?;
        positive("grid_step", self.grid_step)?;
        positive("gamma_max", self.gamma_max)?;
        positive("threshold", self.threshold)?;
        if !(self.estimation_radius >= 0.0) {
            return Err(FqError::Domain("estimation_radius must be ≥ 0".into()));
        }
        if self.t_values.is_empty() {
            return Err(FqError::Domain("t_values must not be empty".into()));
        }
        if let Some(t) = self.t_values.iter().find(|t| !(**t > 0.0 && **t < 0.5)) {
            return Err(FqError::Domain(format!("every t must lie in (0, 1/2), got {t}")));
        }
        if self.system.is_empty() {
            return Err(FqError::Domain("system must be set".into()));
        }
        fs::create_dir_all(&self.output_dir)?;
        let probe = self.output_dir.join(".fq-write-probe");
        fs::write(&probe, b"")?;
        fs::remove_file(&probe)?;
        Ok(())
    }
}
