use std::path::Path;

use serde::Serialize;

use super::PipelineError;
use crate::param::OptimizerConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Candidate runs `R`.
    pub runs: usize,
    pub min_votes: usize,
    pub n_ring: usize,
    pub e_th: f64,
    pub nv_thres: usize,
    /// Overrides the region-size threshold `N`.
    pub region_n: Option<usize>,
    #[serde(skip)]
    pub optimizer: OptimizerConfig,
    pub simplify: bool,
    /// Handle-loop weight perturbation.
    pub rho: f64,
    /// Extra streams tried per run when a cut fails.
    pub max_retries: usize,
    /// Fill `timings_ms` in reports (off keeps reports byte-reproducible).
    pub timings: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            runs: 10,
            min_votes: 3,
            n_ring: 5,
            e_th: 2.0,
            nv_thres: 13_000,
            region_n: None,
            optimizer: OptimizerConfig::default(),
            simplify: true,
            rho: 0.5,
            max_retries: 5,
            timings: false,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, PipelineError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| PipelineError::Config(format!("{key} = {value:?}: {e}")))
}

impl PipelineConfig {
    /// Sets one `key = value` option.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), PipelineError> {
        match key {
            "seed" => self.seed = parse(key, value)?,
            "runs" | "R" => self.runs = parse(key, value)?,
            "min_votes" => self.min_votes = parse(key, value)?,
            "n_ring" => self.n_ring = parse(key, value)?,
            "e_th" | "E_th" => self.e_th = parse(key, value)?,
            "nv_thres" => self.nv_thres = parse(key, value)?,
            "region_n" => self.region_n = Some(parse(key, value)?),
            "tol" => self.optimizer.tol = parse(key, value)?,
            "max_iters" => self.optimizer.max_iters = parse(key, value)?,
            "shrink" => self.optimizer.shrink = parse(key, value)?,
            "max_line_search" => self.optimizer.max_line_search = parse(key, value)?,
            "simplify" => self.simplify = parse(key, value)?,
            "rho" => self.rho = parse(key, value)?,
            "max_retries" => self.max_retries = parse(key, value)?,
            "timings" => self.timings = parse(key, value)?,
            _ => return Err(PipelineError::Config(format!("unknown option {key:?}"))),
        }
        Ok(())
    }

    /// Applies a flat `key = value` file; `#` starts a comment.
    pub fn apply_str(&mut self, text: &str) -> Result<(), PipelineError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| PipelineError::Config(format!("line {}: expected key = value", i + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        self.apply_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_string()));
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if self.min_votes == 0 || self.min_votes > self.runs {
            return bad("min_votes must lie in 1..=runs");
        }
        if !(self.e_th >= 1.0) {
            return bad("e_th must be at least 1");
        }
        if self.nv_thres < 4 {
            return bad("nv_thres must be at least 4");
        }
        if self.region_n == Some(0) {
            return bad("region_n must be at least 1");
        }
        if !(self.rho >= 0.0) {
            return bad("rho must be non-negative");
        }
        let o = &self.optimizer;
        if !(o.tol > 0.0) || o.max_iters == 0 || !(o.shrink > 0.0 && o.shrink < 1.0) || o.max_line_search == 0 {
            return bad("invalid optimizer settings");
        }
        Ok(())
    }
}
