//! Experiment configuration.
//!
//! Configuration files are flat `key = value` text (TOML syntax restricted to
//! top-level keys). Every key is optional; a file is layered over the named
//! preset selected on the command line. Keys:
//!
//! | key | meaning |
//! |-----|---------|
//! | `experiment` | must match the preset's experiment if given |
//! | `field` | `real` or `complex` (custom experiment only) |
//! | `p`, `s` (alias `r`) | ambient and subspace dimension / number of sources |
//! | `nu`, `noise` | noise level and law (`uniform` or `gaussian`) |
//! | `lambda` | quantizer range shared by all quantizers |
//! | `quantizers` | list such as `["rect", "tri:2", "round:4"]`, bits per real scalar |
//! | `n_grid` / `bits_grid` | sample-size grid, or total-bit grid (bit-normalized experiments) |
//! | `trials`, `seed`, `workers` | Monte-Carlo controls |
//! | `betas`, `zeta_scale` | eigenvalue decay exponents and `c` in `zeta = min(1, c n^-beta)` |
//! | `eps_grid` | source separations of the phase-transition sweep |
//! | `thetas` | source angles (custom experiment; switches it to DOA scoring) |
//! | `success_threshold`, `success_factor` | "usually successful" fraction and `md <= factor * eps` |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::quantize::{QuantizerSpec, Scheme};
use crate::snapshots::{Field, NoiseModel};

use super::presets;
use super::HarnessError;

/// The on-disk form: every key optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", alias = "r")]
    pub s: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quantizers: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bits_grid: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thetas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success_factor: Option<f64>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($f:ident),*) => {
        RawConfig { $($f: $top.$f.clone().or_else(|| $base.$f.clone())),* }
    };
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::ConfigInvalid(e.message().to_string()))
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    /// Keys set in `self` win over `base`.
    pub fn over(&self, base: &RawConfig) -> RawConfig {
        let top = self;
        overlay!(
            base, top, experiment, field, p, s, nu, noise, lambda, quantizers, n_grid, bits_grid, trials, seed,
            workers, betas, zeta_scale, eps_grid, thetas, success_threshold, success_factor
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Adversarial,
    EigendepRect,
    EigendepTri,
    WellsepDoa,
    PhaseTransition,
    Custom,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Adversarial,
        ExperimentKind::EigendepRect,
        ExperimentKind::EigendepTri,
        ExperimentKind::WellsepDoa,
        ExperimentKind::PhaseTransition,
        ExperimentKind::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Adversarial => "adversarial",
            ExperimentKind::EigendepRect => "eigendep_rect",
            ExperimentKind::EigendepTri => "eigendep_tri",
            ExperimentKind::WellsepDoa => "wellsep_doa",
            ExperimentKind::PhaseTransition => "phase_transition",
            ExperimentKind::Custom => "custom",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| HarnessError::ConfigInvalid(format!("unknown experiment `{s}`")))
    }
}

/// Sample-size axis of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    /// Number of snapshots per grid point.
    Samples(Vec<u64>),
    /// Total bit budget per grid point; each quantizer gets as many
    /// snapshots as fit into the budget.
    Bits(Vec<u64>),
}

impl Grid {
    pub fn len(&self) -> usize {
        match self {
            Grid::Samples(v) | Grid::Bits(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Name of the preset the configuration was layered over.
    pub preset: String,
    pub field: Field,
    pub p: usize,
    pub s: usize,
    pub noise: NoiseModel,
    pub lambda: f64,
    pub quantizers: Vec<QuantizerSpec>,
    pub grid: Grid,
    pub trials: usize,
    pub seed: u64,
    pub workers: usize,
    pub betas: Vec<f64>,
    pub zeta_scale: f64,
    pub eps_grid: Vec<f64>,
    pub thetas: Option<Vec<f64>>,
    pub success_threshold: f64,
    pub success_factor: f64,
    /// Differences from the paper-scale preset of the same experiment.
    pub deviations: Vec<String>,
}

/// Parses `rect`, `tri:B`, `round:B` or the labels `tri_bB`, `round_bB`.
pub fn parse_quantizer(text: &str, lambda: f64, field: Field) -> Result<QuantizerSpec, HarnessError> {
    let t = text.trim();
    let bad = || HarnessError::ConfigInvalid(format!("cannot parse quantizer `{t}`"));
    let (name, bits) = match t.split_once(':').or_else(|| t.split_once("_b")) {
        Some((name, bits)) => (name, Some(bits.parse::<u32>().map_err(|_| bad())?)),
        None => (t, None),
    };
    let scheme = match (name, bits) {
        ("rect", None) => Scheme::Rectangular { lambda },
        ("tri", Some(bits)) => Scheme::Triangular { lambda, bits },
        ("round", Some(bits)) => Scheme::DirectRound { lambda, bits },
        _ => return Err(bad()),
    };
    QuantizerSpec::new(scheme, field).map_err(|e| HarnessError::ConfigInvalid(format!("quantizer `{t}`: {e}")))
}

/// Inverse of [`parse_quantizer`].
pub fn quantizer_key(spec: &QuantizerSpec) -> String {
    match spec.scheme() {
        Scheme::Rectangular { .. } => "rect".into(),
        Scheme::Triangular { bits, .. } => format!("tri:{bits}"),
        Scheme::DirectRound { bits, .. } => format!("round:{bits}"),
    }
}

fn invalid(msg: impl Into<String>) -> HarnessError {
    HarnessError::ConfigInvalid(msg.into())
}

fn require<T>(v: Option<T>, key: &str) -> Result<T, HarnessError> {
    v.ok_or_else(|| invalid(format!("missing key `{key}`")))
}

fn sorted_grid(mut v: Vec<u64>, key: &str) -> Result<Vec<u64>, HarnessError> {
    if v.is_empty() {
        return Err(invalid(format!("`{key}` must not be empty")));
    }
    if v.contains(&0) {
        return Err(invalid(format!("`{key}` entries must be positive")));
    }
    v.sort_unstable();
    v.dedup();
    Ok(v)
}

impl ExperimentConfig {
    /// Layers `file` over the preset `preset_name` and validates the result.
    pub fn resolve(preset_name: &str, file: &RawConfig) -> Result<Self, HarnessError> {
        let preset = presets::preset(preset_name)?;
        let kind: ExperimentKind = require(preset.experiment.as_deref(), "experiment")?.parse()?;
        if let Some(e) = &file.experiment {
            if e.parse::<ExperimentKind>()? != kind {
                return Err(invalid(format!("config is for `{e}` but preset `{preset_name}` runs `{kind}`")));
            }
        }
        if file.n_grid.is_some() && file.bits_grid.is_some() {
            return Err(invalid("set only one of `n_grid` and `bits_grid`"));
        }
        let mut merged = file.over(&preset);
        if file.n_grid.is_some() {
            merged.bits_grid = None;
        } else if file.bits_grid.is_some() {
            merged.n_grid = None;
        }
        let mut cfg = Self::from_raw(kind, preset_name, &merged)?;
        cfg.deviations = presets::deviations_from_paper(&cfg);
        Ok(cfg)
    }

    fn from_raw(kind: ExperimentKind, preset: &str, raw: &RawConfig) -> Result<Self, HarnessError> {
        let field = match kind {
            ExperimentKind::Adversarial | ExperimentKind::EigendepRect | ExperimentKind::EigendepTri => {
                if raw.field.as_deref().is_some_and(|f| f != "real") {
                    return Err(invalid(format!("{kind} uses real data")));
                }
                Field::Real
            }
            ExperimentKind::WellsepDoa | ExperimentKind::PhaseTransition => {
                if raw.field.as_deref().is_some_and(|f| f != "complex") {
                    return Err(invalid(format!("{kind} uses complex data")));
                }
                Field::Complex
            }
            ExperimentKind::Custom => {
                let f = raw.field.as_deref().unwrap_or("complex");
                f.parse::<Field>().map_err(|_| invalid(format!("unknown field `{f}`")))?
            }
        };
        let p = require(raw.p, "p")?;
        let s = require(raw.s, "s")?;
        let nu = require(raw.nu, "nu")?;
        if !(nu >= 0.0) || !nu.is_finite() {
            return Err(invalid(format!("`nu` must be finite and non-negative, got {nu}")));
        }
        let noise = match raw.noise.as_deref().unwrap_or("uniform") {
            "uniform" => NoiseModel::Uniform { nu },
            "gaussian" => NoiseModel::Gaussian { nu },
            other => return Err(invalid(format!("unknown noise law `{other}`"))),
        };
        let lambda = require(raw.lambda, "lambda")?;
        let quantizers = require(raw.quantizers.as_ref(), "quantizers")?
            .iter()
            .map(|q| parse_quantizer(q, lambda, field))
            .collect::<Result<Vec<_>, _>>()?;
        if quantizers.is_empty() {
            return Err(invalid("`quantizers` must not be empty"));
        }
        let grid = match (&raw.n_grid, &raw.bits_grid) {
            (Some(n), None) => Grid::Samples(sorted_grid(n.clone(), "n_grid")?),
            (None, Some(b)) => Grid::Bits(sorted_grid(b.clone(), "bits_grid")?),
            (None, None) => return Err(invalid("missing key `n_grid` or `bits_grid`")),
            (Some(_), Some(_)) => return Err(invalid("set only one of `n_grid` and `bits_grid`")),
        };
        let trials = require(raw.trials, "trials")?;
        let workers = raw.workers.unwrap_or_else(default_workers);
        let cfg = ExperimentConfig {
            experiment: kind,
            preset: preset.to_string(),
            field,
            p,
            s,
            noise,
            lambda,
            quantizers,
            grid,
            trials,
            seed: raw.seed.unwrap_or(0),
            workers,
            betas: raw.betas.clone().unwrap_or_default(),
            zeta_scale: raw.zeta_scale.unwrap_or(1.0),
            eps_grid: raw.eps_grid.clone().unwrap_or_default(),
            thetas: raw.thetas.clone(),
            success_threshold: raw.success_threshold.unwrap_or(0.95),
            success_factor: raw.success_factor.unwrap_or(0.25),
            deviations: Vec::new(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the invariants shared by all experiments and the documented
    /// ranges of the selected one.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let kind = self.experiment;
        if self.trials == 0 {
            return Err(invalid("`trials` must be at least 1"));
        }
        if self.workers == 0 {
            return Err(invalid("`workers` must be at least 1"));
        }
        if self.p < 2 || self.s == 0 || self.s > self.p {
            return Err(invalid(format!("need 1 <= s <= p and p >= 2, got p = {}, s = {}", self.p, self.s)));
        }
        if self.grid.is_empty() {
            return Err(invalid("sample grid must not be empty"));
        }
        let doa = matches!(kind, ExperimentKind::WellsepDoa | ExperimentKind::PhaseTransition)
            || (kind == ExperimentKind::Custom && self.thetas.is_some());
        if doa && (self.s >= self.p || self.s > crate::doa::MAX_MATCHING_SOURCES) {
            return Err(invalid(format!(
                "DOA scoring needs s < p and s <= {}, got p = {}, s = {}",
                crate::doa::MAX_MATCHING_SOURCES,
                self.p,
                self.s
            )));
        }
        match kind {
            ExperimentKind::EigendepRect => {
                if self.betas.is_empty() || self.betas.iter().any(|b| !(*b > 0.0 && *b < 1.0)) {
                    return Err(invalid("`betas` must be a non-empty list in (0, 1)"));
                }
                if !(self.zeta_scale > 0.0) || !self.zeta_scale.is_finite() {
                    return Err(invalid("`zeta_scale` must be positive"));
                }
                if self.s >= self.p {
                    return Err(invalid("eigendep_rect needs r < p"));
                }
            }
            ExperimentKind::EigendepTri => {
                if self.s != 2 {
                    return Err(invalid("eigendep_tri uses circle data of rank r = 2"));
                }
            }
            ExperimentKind::WellsepDoa => {
                if 4 * self.s >= self.p {
                    return Err(invalid("wellsep_doa places sources at 4k/p and needs 4s < p"));
                }
            }
            ExperimentKind::PhaseTransition => {
                if self.s != 3 {
                    return Err(invalid("phase_transition uses the three sources {0, eps, 1/2}"));
                }
                let (lo, hi) = (1.0 / (32.0 * self.p as f64), 1.0 / self.p as f64);
                if self.eps_grid.is_empty() || self.eps_grid.iter().any(|e| !(*e >= lo * (1.0 - 1e-12) && *e <= hi * (1.0 + 1e-12))) {
                    return Err(invalid(format!("`eps_grid` must be non-empty within [{lo}, {hi}]")));
                }
                if !(self.success_threshold > 0.0 && self.success_threshold <= 1.0) {
                    return Err(invalid("`success_threshold` must lie in (0, 1]"));
                }
                if !(self.success_factor > 0.0) {
                    return Err(invalid("`success_factor` must be positive"));
                }
            }
            ExperimentKind::Custom => {
                if let Some(t) = &self.thetas {
                    if self.field != Field::Complex {
                        return Err(invalid("DOA scoring (`thetas`) needs complex data"));
                    }
                    if t.len() != self.s {
                        return Err(invalid(format!("`thetas` has {} entries but s = {}", t.len(), self.s)));
                    }
                    crate::doa::AngleSet::new(t).map_err(|e| invalid(format!("`thetas`: {e}")))?;
                }
            }
            ExperimentKind::Adversarial => {}
        }
        Ok(())
    }

    /// The flat form of this configuration, suitable for writing back out.
    pub fn to_raw(&self) -> RawConfig {
        let (n_grid, bits_grid) = match &self.grid {
            Grid::Samples(v) => (Some(v.clone()), None),
            Grid::Bits(v) => (None, Some(v.clone())),
        };
        let kind = self.experiment;
        let (noise, nu) = match self.noise {
            NoiseModel::Uniform { nu } => ("uniform", nu),
            NoiseModel::Gaussian { nu } => ("gaussian", nu),
        };
        RawConfig {
            experiment: Some(kind.to_string()),
            field: Some(self.field.as_str().to_string()),
            p: Some(self.p),
            s: Some(self.s),
            nu: Some(nu),
            noise: Some(noise.to_string()),
            lambda: Some(self.lambda),
            quantizers: Some(self.quantizers.iter().map(quantizer_key).collect()),
            n_grid,
            bits_grid,
            trials: Some(self.trials),
            seed: None,
            workers: None,
            betas: (kind == ExperimentKind::EigendepRect).then(|| self.betas.clone()),
            zeta_scale: (kind == ExperimentKind::EigendepRect).then_some(self.zeta_scale),
            eps_grid: (kind == ExperimentKind::PhaseTransition).then(|| self.eps_grid.clone()),
            thetas: self.thetas.clone(),
            success_threshold: (kind == ExperimentKind::PhaseTransition).then_some(self.success_threshold),
            success_factor: (kind == ExperimentKind::PhaseTransition).then_some(self.success_factor),
        }
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}
