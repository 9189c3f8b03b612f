//! Shared stages: resolve the system, load or build the point set and the
//! spectrum, and derive `c₀`, `δ`, `N` and the growth constants.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fq_core::cache::{read_point_cache, read_spectrum_cache, sha256_hex, write_point_cache, write_spectrum_cache};
use fq_core::spectral::{
    candidate_frequencies, detect_for_system, fit_growth, fit_spectrum_rank, Growth, Spectrum, DEFAULT_CANDIDATE_CAP,
};
use fq_core::zeroset::{enumerate_disk, EnumOptions, PointSet};
use fq_core::{catalog_entry, FormTag, FqError, Result, TrigSystem};

use crate::config::RunConfig;
use crate::manifest::{Derived, RunLog};

/// Safety factor on the empirically fitted growth constant.
pub const GROWTH_SAFETY: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct ResolvedSystem {
    /// Catalog name, or `file-<stem>-<hash prefix>` for documents.
    pub tag: String,
    pub system: TrigSystem,
    pub known_density: Option<f64>,
    pub known_rank: Option<u32>,
}

/// A catalog name, or else a path to a system JSON document.
pub fn resolve_system(spec: &str) -> Result<ResolvedSystem> {
    match catalog_entry(spec) {
        Ok(e) => Ok(ResolvedSystem {
            tag: e.name,
            system: e.system,
            known_density: e.known_density,
            known_rank: e.known_spectrum_rank,
        }),
        Err(unknown) => {
            let path = Path::new(spec);
            if !path.is_file() {
                return Err(unknown);
            }
            let text = fs::read_to_string(path)?;
            let system = TrigSystem::from_json(&text)?;
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("system");
            let hash = sha256_hex(text.as_bytes());
            let known_rank = match system.form() {
                FormTag::Lattice => Some(2),
                _ => system.lift().map(|l| l.len() as u32),
            };
            Ok(ResolvedSystem {
                tag: format!("file-{stem}-{}", &hash[..12]),
                system,
                known_density: None,
                known_rank,
            })
        }
    }
}

pub struct Pipeline {
    pub cfg: RunConfig,
    pub sys: ResolvedSystem,
    pub log: RunLog,
    pub derived: Derived,
}

impl Pipeline {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let sys = resolve_system(&cfg.system)?;
        Ok(Self { cfg, sys, log: RunLog::default(), derived: Derived::default() })
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cfg.output_dir.join("cache")
    }

    pub fn points_path(&self) -> PathBuf {
        self.cache_dir().join(format!("{}-r{}-h{}.fqps", self.sys.tag, self.cfg.r_max, self.cfg.grid_step))
    }

    pub fn spectrum_path(&self) -> PathBuf {
        self.cache_dir().join(format!(
            "{}-r{}-h{}-g{}-R{}-th{}.fqsp",
            self.sys.tag,
            self.cfg.r_max,
            self.cfg.grid_step,
            self.cfg.gamma_max,
            self.cfg.estimation_radius(),
            self.cfg.threshold
        ))
    }

    pub fn enum_options(&self) -> EnumOptions {
        EnumOptions::with_step(self.cfg.grid_step)
    }

    /// Points in `B_{r_max}`: read from the cache when allowed, else
    /// enumerated (and cached). With `require_cache` a missing cache is an
    /// error telling the user which command creates it.
    pub fn points(&mut self, require_cache: bool) -> Result<PointSet> {
        let path = self.points_path();
        let start = Instant::now();
        if self.cfg.cache && path.is_file() {
            let (ps, sum) = read_point_cache(&path)?;
            if ps.source.name != self.sys.tag || ps.source.radius != self.cfg.r_max {
                return Err(FqError::Format(format!("cache {} belongs to a different run", path.display())));
            }
            self.log.cache_hit(&path, &sum);
            self.log.stage("load points", start);
            self.record_points(&ps);
            return Ok(ps);
        }
        if require_cache && self.cfg.cache {
            return Err(FqError::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!(
                    "no point cache at {}; run `fq enumerate --system {} --r-max {}` with the same output directory first",
                    path.display(),
                    self.cfg.system,
                    self.cfg.r_max
                ),
            )));
        }
        let mut ps = enumerate_disk(&self.sys.system, self.cfg.r_max, &self.enum_options())?;
        ps.source.name = self.sys.tag.clone();
        self.log.stage("enumerate", start);
        if self.cfg.cache {
            fs::create_dir_all(self.cache_dir())?;
            let sum = write_point_cache(&path, &ps, &self.enum_options())?;
            self.log.cache_miss(&path, &sum);
        }
        self.record_points(&ps);
        Ok(ps)
    }

    fn record_points(&mut self, ps: &PointSet) {
        self.derived.points = Some(ps.len());
        self.derived.separation = Some(ps.separation()).filter(|d| d.is_finite());
    }

    /// `c₀`: the closed form when known, else the windowed estimate at the
    /// estimation radius.
    pub fn c0(&mut self, ps: &PointSet) -> Result<f64> {
        let c0 = match self.sys.known_density {
            Some(d) => {
                self.derived.c0_source = Some("closed form".into());
                d
            }
            None => {
                let big_r = self.cfg.estimation_radius().min(ps.radius());
                let (d, _) = fq_core::spectral::density_windowed(ps, big_r)?;
                self.derived.c0_source = Some(format!("windowed estimate at R={big_r}"));
                d
            }
        };
        self.derived.c0 = Some(c0);
        Ok(c0)
    }

    /// Detected spectrum up to `gamma_max`, cached like the points.
    pub fn spectrum(&mut self, ps: &PointSet) -> Result<Spectrum> {
        let path = self.spectrum_path();
        let start = Instant::now();
        if self.cfg.cache && path.is_file() {
            let spec = read_spectrum_cache(&path)?.with_coverage(self.cfg.gamma_max);
            self.log.cache_hit(&path, &sha256_hex(&fs::read(&path)?));
            self.log.stage("load spectrum", start);
            self.record_spectrum(&spec);
            return Ok(spec);
        }
        let cands = candidate_frequencies(&self.sys.system, self.cfg.gamma_max, DEFAULT_CANDIDATE_CAP)?;
        let big_r = if self.sys.system.is_separable() {
            self.cfg.estimation_radius()
        } else {
            self.cfg.estimation_radius().min(ps.radius())
        };
        let spec = detect_for_system(&self.sys.system, ps, &cands, big_r, self.cfg.threshold, self.sys.known_rank)?;
        self.log.stage("spectrum", start);
        if self.cfg.cache {
            fs::create_dir_all(self.cache_dir())?;
            let sum = write_spectrum_cache(&path, &spec, &self.sys.tag)?;
            self.log.cache_miss(&path, &sum);
        }
        self.record_spectrum(&spec);
        Ok(spec)
    }

    fn record_spectrum(&mut self, spec: &Spectrum) {
        self.derived.spectrum_entries = Some(spec.entries.len());
        self.derived.spectrum_c0 = Some(spec.c0);
    }

    /// `(B, P)` with `P = 1 + N/2`. Lattices use the exact `B = 4`; other
    /// systems the fitted constant times [`GROWTH_SAFETY`].
    pub fn growth(&mut self, spec: &Spectrum) -> Result<Growth> {
        let n = match self.sys.known_rank {
            Some(n) => n as f64,
            None => {
                let cov = spec.coverage.unwrap_or(self.cfg.gamma_max);
                let fit = fit_spectrum_rank(spec, (0.25 * cov, cov))?;
                fit.theta
            }
        };
        self.derived.n_fit = Some(n);
        let p = 1.0 + 0.5 * n;
        let g = if self.sys.system.form() == FormTag::Lattice {
            Growth { b: 4.0, p: 2.0 }
        } else {
            fit_growth(spec, p, GROWTH_SAFETY)?
        };
        self.derived.p_used = Some(g.p);
        self.derived.growth_b = Some(g.b);
        Ok(g)
    }
}
