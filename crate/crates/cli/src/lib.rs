//! Command-line frontend: configuration, cached pipeline stages, CSV and SVG
//! output, and the theorem checks behind `fq verify`.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod output;
pub mod pipeline;
pub mod suite;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;

/// Exit codes: all checks passed, a check failed, bad configuration or IO.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fq", version, about = "Point counting and spectral analysis for two-dimensional Fourier quasicrystals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate the points in B_{r_max} and cache them.
    Enumerate(Common),
    /// Detect spectrum entries up to gamma_max and write them with the radial lines.
    Spectrum(Common),
    /// Error series, cumulative |Err| integrals with fits, Ern histogram.
    Analyze(Common),
    /// Smoothed error by direct and spectral evaluation, leading term and remainder.
    Smooth(Common),
    /// Generalized Fourier coefficients of Ern at each xi.
    Besicovitch(Common),
    /// Run the checks for the configured system, or the full acceptance suite.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Run the ten fixed acceptance criteria instead of the per-system checks.
        #[arg(long)]
        acceptance: bool,
    },
}

/// Flags shared by every subcommand. Each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Flat key=value file with RunConfig keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Catalog name or path to a system JSON document.
    #[arg(long)]
    pub system: Option<String>,
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Comma-separated smoothing scales in (0, 1/2).
    #[arg(long)]
    pub t_values: Option<String>,
    #[arg(long)]
    pub gamma_max: Option<f64>,
    /// Estimation radius for spectral coefficients; 0 means r_max.
    #[arg(long)]
    pub estimation_radius: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Comma-separated frequencies for `besicovitch`.
    #[arg(long)]
    pub xi_values: Option<String>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Disable reading and writing caches.
    #[arg(long)]
    pub no_cache: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write SVG plots.
    #[arg(long)]
    pub svg: bool,
    /// Worker thread cap (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

impl Common {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> fq_core::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        let mut set = |k: &str, v: Option<String>| v.map(|v| cfg.set(k, &v)).transpose();
        set("system", self.system.clone())?;
        set("r_max", self.r_max.map(|v| v.to_string()))?;
        set("grid_step", self.grid_step.map(|v| v.to_string()))?;
        set("t_values", self.t_values.clone())?;
        set("gamma_max", self.gamma_max.map(|v| v.to_string()))?;
        set("estimation_radius", self.estimation_radius.map(|v| v.to_string()))?;
        set("threshold", self.threshold.map(|v| v.to_string()))?;
        set("xi_values", self.xi_values.clone())?;
        set("output_dir", self.output_dir.as_ref().map(|p| p.display().to_string()))?;
        set("seed", self.seed.map(|v| v.to_string()))?;
        if self.no_cache {
            cfg.cache = false;
        }
        if self.svg {
            cfg.svg = true;
        }
        Ok(cfg)
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let (common, acceptance) = match &cli.command {
        Command::Enumerate(c)
        | Command::Spectrum(c)
        | Command::Analyze(c)
        | Command::Smooth(c)
        | Command::Besicovitch(c) => (c.clone(), false),
        Command::Verify { common, acceptance } => (common.clone(), *acceptance),
    };
    if let Some(n) = common.threads {
        // A pool that already exists keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let cfg = match common.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    let outcome = match cli.command {
        Command::Enumerate(_) => commands::enumerate(cfg),
        Command::Spectrum(_) => commands::spectrum(cfg),
        Command::Analyze(_) => commands::analyze(cfg),
        Command::Smooth(_) => commands::smooth(cfg),
        Command::Besicovitch(_) => commands::besicovitch(cfg),
        Command::Verify { .. } => commands::verify(cfg, acceptance),
    };
    match outcome {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.conf");
        std::fs::write(&file, "r_max = 30\nsystem = fq-main\n").unwrap();
        let cli = Cli::try_parse_from(["fq", "enumerate", "--config", file.to_str().unwrap(), "--r-max", "12"]).unwrap();
        let Command::Enumerate(c) = cli.command else { panic!() };
        let cfg = c.resolve().unwrap();
        assert_eq!(cfg.r_max, 12.0);
        assert_eq!(cfg.system, "fq-main");
    }
}
