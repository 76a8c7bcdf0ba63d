//! Flat `key = value` experiment configuration.
//!
//! Every recognised key has a textual default; a file overrides a subset,
//! and the CLI may override a few more. The merged map is canonicalised and
//! hashed so that each output row can be traced back to its settings.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use super::pipeline::PipelineId;
use crate::coarse::InvarianceSolver;
use crate::error::{DoaError, Result};
use crate::fine::EigenMap;
use crate::selection::{default_sector_width, SelectionParams};

/// Recognised keys and their defaults (`None`: unset unless given).
const KEYS: &[(&str, Option<&str>)] = &[
    ("scenario.m", Some("32")),
    ("scenario.mu", Some("-2.1, 0.5, 2.5")),
    ("scenario.powers", Some("0.95, 0.5, 0.1")),
    ("scenario.n_snap", Some("100")),
    ("scenario.seed", Some("20240917")),
    ("scenario.n0", None),
    ("coarse.n_rf", Some("12")),
    ("coarse.solver", Some("tls")),
    ("fine.k_f", Some("2")),
    ("fine.solver", Some("ls")),
    ("fine.eigen_map", Some("arctangent")),
    ("covfit.grid_factor", Some("4")),
    ("covfit.ridge", Some("1e-10")),
    ("selection.gamma", Some("1e-8")),
    ("selection.alpha", Some("1e-3")),
    ("selection.prune_q", Some("0")),
    ("selection.w_sec", None),
    ("harness.experiment", Some("asnr")),
    ("harness.pipelines", None),
    ("harness.trials", Some("1000")),
    ("harness.full_scale_trials", Some("10000")),
    ("harness.threads", None),
    ("harness.k_thr", Some("3")),
    ("harness.timing", Some("false")),
    ("harness.out", Some("out")),
    ("harness.asnr_db", Some("-5, -3, -1, 0, 1, 2, 3, 4, 5, 6, 7, 8, 10, 12, 15")),
    ("harness.budget_asnr_db", Some("3, 6")),
    ("harness.budget_fine", Some("6, 12")),
    ("harness.edge_asnr_db", Some("3, 6")),
    ("harness.edge_offsets", Some("41")),
    ("harness.edge_mu1", Some("-2.1")),
    ("harness.edge_powers", Some("0.95, 0.5")),
    ("harness.edge_beam", None),
    ("harness.kf_values", Some("2, 3, 4")),
];

/// Keys that do not change results and are left out of the hash.
const UNHASHED: &[&str] = &["harness.out", "harness.threads"];

/// Raw settings: defaults merged with file and CLI overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl Default for RawConfig {
    fn default() -> Self {
        let values = KEYS.iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v.to_string()))).collect();
        Self { values }
    }
}

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

impl RawConfig {
    /// Parses config text over the defaults. Unknown and repeated keys are
    /// rejected with their line number.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| DoaError::Config { line, msg: format!("expected `key = value`, got `{body}`") })?;
            let (key, value) = (key.trim(), value.trim());
            if !known(key) {
                return Err(DoaError::Config { line, msg: format!("unknown key `{key}`") });
            }
            if let Some(prev) = seen.insert(key.to_string(), line) {
                return Err(DoaError::Config { line, msg: format!("`{key}` already set on line {prev}") });
            }
            if value.is_empty() {
                return Err(DoaError::Config { line, msg: format!("`{key}` has no value") });
            }
            cfg.values.insert(key.to_string(), value.to_string());
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Overrides one key (line 0 marks a non-file origin in errors).
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !known(key) {
            return Err(DoaError::Config { line: 0, msg: format!("unknown key `{key}`") });
        }
        self.values.insert(key.to_string(), value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Sorted `key = value` lines of every result-relevant setting.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.values.iter().filter(|(k, _)| !UNHASHED.contains(&k.as_str())) {
            let items: Vec<&str> = v.split(',').map(str::trim).collect();
            out.push_str(&format!("{k} = {}\n", items.join(",")));
        }
        out
    }

    /// First 16 hex digits of the SHA-256 of [`RawConfig::canonical`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    fn scalar<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| DoaError::Config { line: 0, msg: format!("`{key}`: {e}") }))
            .transpose()
    }

    fn required<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        self.scalar(key)?.ok_or_else(|| DoaError::Config { line: 0, msg: format!("`{key}` is required") })
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: fmt::Display,
    {
        let Some(v) = self.get(key) else { return Ok(None) };
        v.split(',')
            .map(|item| {
                item.trim()
                    .parse::<T>()
                    .map_err(|e| DoaError::Config { line: 0, msg: format!("`{key}` item `{}`: {e}", item.trim()) })
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    fn required_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: fmt::Display,
    {
        self.list(key)?.ok_or_else(|| DoaError::Config { line: 0, msg: format!("`{key}` is required") })
    }
}

/// The four experiment runners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Asnr,
    Budget,
    Edge,
    Kf,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Asnr => "asnr",
            Self::Budget => "budget",
            Self::Edge => "edge",
            Self::Kf => "kf",
        }
    }

    /// Pipelines run when the config does not list any.
    pub fn default_pipelines(self) -> Vec<PipelineId> {
        match self {
            Self::Asnr => PipelineId::ALL.to_vec(),
            Self::Budget | Self::Edge | Self::Kf => vec![PipelineId::FineCovGuided, PipelineId::FineSectorization],
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = DoaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "asnr" | "asnr_sweep" => Ok(Self::Asnr),
            "budget" | "budget_ablation" => Ok(Self::Budget),
            "edge" | "sector_edge" => Ok(Self::Edge),
            "kf" | "fixed_kf" => Ok(Self::Kf),
            other => Err(DoaError::InvalidArgument(format!("unknown experiment '{other}'"))),
        }
    }
}

/// Typed, validated experiment settings.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ExperimentConfig {
    pub m: usize,
    pub mu: Vec<f64>,
    pub powers: Vec<f64>,
    pub n_snap: usize,
    pub seed: u64,
    /// Fixed noise variance; replaces the ASNR grid when set.
    pub n0: Option<f64>,
    pub n_rf_coarse: usize,
    pub coarse_solver: InvarianceSolver,
    pub k_f: usize,
    pub fine_solver: InvarianceSolver,
    pub eigen_map: EigenMap,
    pub grid_factor: usize,
    pub ridge: f64,
    pub selection: SelectionParams,
    pub w_sec: f64,
    pub experiment: ExperimentKind,
    pub pipelines: Vec<PipelineId>,
    pub trials: u64,
    pub full_scale_trials: u64,
    pub threads: Option<usize>,
    pub k_thr: f64,
    pub timing: bool,
    pub out: PathBuf,
    pub asnr_db: Vec<f64>,
    pub budget_asnr_db: Vec<f64>,
    /// Total fine-stage beam counts of the budget ablation.
    pub budget_fine: Vec<usize>,
    pub edge_asnr_db: Vec<f64>,
    pub edge_offsets: usize,
    pub edge_mu1: f64,
    pub edge_powers: Vec<f64>,
    /// Lower beam of the boundary pair; the boundary is the midpoint of it
    /// and the next beam.
    pub edge_beam: usize,
    pub kf_values: Vec<usize>,
    pub config_hash: String,
}

fn invalid(msg: impl Into<String>) -> DoaError {
    DoaError::Config { line: 0, msg: msg.into() }
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let m: usize = raw.required("scenario.m")?;
        let experiment: ExperimentKind = raw.required("harness.experiment")?;
        let pipelines = match raw.list::<PipelineId>("harness.pipelines")? {
            Some(p) => p,
            None => experiment.default_pipelines(),
        };
        let cfg = Self {
            m,
            mu: raw.required_list("scenario.mu")?,
            powers: raw.required_list("scenario.powers")?,
            n_snap: raw.required("scenario.n_snap")?,
            seed: raw.required("scenario.seed")?,
            n0: raw.scalar("scenario.n0")?,
            n_rf_coarse: raw.required("coarse.n_rf")?,
            coarse_solver: raw.required("coarse.solver")?,
            k_f: raw.required("fine.k_f")?,
            fine_solver: raw.required("fine.solver")?,
            eigen_map: raw.required("fine.eigen_map")?,
            grid_factor: raw.required("covfit.grid_factor")?,
            ridge: raw.required("covfit.ridge")?,
            selection: SelectionParams {
                gamma: raw.required("selection.gamma")?,
                alpha: raw.required("selection.alpha")?,
                prune_q: raw.required("selection.prune_q")?,
            },
            w_sec: raw.scalar("selection.w_sec")?.unwrap_or_else(|| default_sector_width(m)),
            experiment,
            pipelines,
            trials: raw.required("harness.trials")?,
            full_scale_trials: raw.required("harness.full_scale_trials")?,
            threads: raw.scalar("harness.threads")?,
            k_thr: raw.required("harness.k_thr")?,
            timing: raw.required("harness.timing")?,
            out: PathBuf::from(raw.get("harness.out").unwrap_or("out")),
            asnr_db: raw.required_list("harness.asnr_db")?,
            budget_asnr_db: raw.required_list("harness.budget_asnr_db")?,
            budget_fine: raw.required_list("harness.budget_fine")?,
            edge_asnr_db: raw.required_list("harness.edge_asnr_db")?,
            edge_offsets: raw.required("harness.edge_offsets")?,
            edge_mu1: raw.required("harness.edge_mu1")?,
            edge_powers: raw.required_list("harness.edge_powers")?,
            edge_beam: raw.scalar("harness.edge_beam")?.unwrap_or((m / 2).saturating_sub(1)),
            kf_values: raw.required_list("harness.kf_values")?,
            config_hash: raw.hash(),
        };
        cfg.validate(raw)?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    fn validate(&self, raw: &RawConfig) -> Result<()> {
        if self.m < 2 {
            return Err(invalid("scenario.m must be at least 2"));
        }
        if self.mu.len() != self.powers.len() {
            return Err(invalid(format!("{} frequencies but {} powers", self.mu.len(), self.powers.len())));
        }
        if self.n_rf_coarse > self.m || (self.m - self.n_rf_coarse) % 2 != 0 {
            return Err(invalid(format!("coarse.n_rf = {} must not exceed M = {} and must share its parity", self.n_rf_coarse, self.m)));
        }
        if self.k_f < 2 || self.kf_values.iter().any(|&k| k < 2) {
            return Err(invalid("fine budgets need at least 2 beams per sector"));
        }
        if self.grid_factor < 2 {
            return Err(invalid("covfit.grid_factor must be at least 2"));
        }
        if self.trials == 0 {
            return Err(invalid("harness.trials must be positive"));
        }
        if self.pipelines.is_empty() {
            return Err(invalid("no pipelines selected"));
        }
        if let Some(n0) = self.n0 {
            if !(n0 >= 0.0) {
                return Err(invalid(format!("scenario.n0 = {n0} must be non-negative")));
            }
            // exactly one noise specification may be authoritative
            if raw.get("harness.asnr_db") != RawConfig::default().get("harness.asnr_db") {
                return Err(invalid("scenario.n0 and harness.asnr_db are mutually exclusive"));
            }
            if self.experiment != ExperimentKind::Asnr {
                return Err(invalid("scenario.n0 is only supported by the asnr experiment"));
            }
        }
        if self.edge_beam + 1 >= self.m {
            return Err(invalid(format!("harness.edge_beam = {} needs a right neighbour", self.edge_beam)));
        }
        let d = self.mu.len();
        if let Some(b) = self.budget_fine.iter().find(|&&b| b % d != 0 || b / d < 2) {
            return Err(invalid(format!("fine budget {b} is not a multiple of {d} sources with at least 2 beams each")));
        }
        Ok(())
    }

    /// Trial count with `--full-scale` applied.
    pub fn full_scale(mut self) -> Self {
        self.trials = self.full_scale_trials;
        self
    }
}
