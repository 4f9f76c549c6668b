//! Experiment descriptions and result summaries as JSON.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::descriptor::{parse_set, parse_system};
use crate::error::{Error, Result};
use crate::hdim::{h_unstable_h, CriticalExponentResult, HEntropyEstimate};
use crate::leaf::AmbientSet;
use crate::params::EstimatorParams;
use crate::systems::{Bundle, PartiallyHyperbolic};
use crate::umetric::{metric_entropy_jacobian, smb_convergence_report, SmbReport};
use crate::utop::{entropy_of_subset_cover_style, unstable_topological_entropy, EntropyEstimate, GrowthSeries, Warning};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: String,
    pub set: String,
    pub params: EstimatorParams,
    pub tolerance: f64,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            system: "cat2".into(),
            set: "torus".into(),
            params: EstimatorParams::default(),
            tolerance: crate::harness::DEFAULT_TOLERANCE,
            output: None,
        }
    }
}

pub(crate) fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

/// A config error pointing at `position` inside the JSON string `value`.
pub(crate) fn located(text: &str, value: &str, position: usize, field: &str, message: String) -> Error {
    let quoted = format!("\"{value}\"");
    let (line, column) = match text.find(&quoted) {
        Some(at) => line_column(text, at + 1 + position),
        None => (0, 0),
    };
    Error::Config {
        line,
        column,
        message: format!("{field}: {message}"),
    }
}

pub(crate) fn json_error(e: serde_json::Error) -> Error {
    Error::Config {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Maps a descriptor error to a located config error.
pub(crate) fn locate_descriptor(text: &str, value: &str, field: &str, e: Error) -> Error {
    match e {
        Error::Parse { position, message } => located(text, value, position, field, message),
        other => located(text, value, 0, field, other.to_string()),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text).map_err(json_error)?;
        let system = parse_system(&config.system).map_err(|e| locate_descriptor(text, &config.system, "system", e))?;
        parse_set(&config.set, Some(system.dim())).map_err(|e| locate_descriptor(text, &config.set, "set", e))?;
        config.params.validate().map_err(|e| located(text, "params", 0, "params", e.to_string()))?;
        config
            .validate_numbers()
            .map_err(|e| located(text, "tolerance", 0, "tolerance", e.to_string()))?;
        Ok(config)
    }

    fn validate_numbers(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be nonnegative, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }

    /// Parsed system and set, checked against each other.
    pub fn resolve(&self) -> Result<(PartiallyHyperbolic, AmbientSet)> {
        self.validate_numbers()?;
        let system = parse_system(&self.system)?;
        let set = parse_set(&self.set, Some(system.dim()))?;
        Ok((system, set))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateKind {
    Utop,
    Hdim,
    Metric,
    Smb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplittingSummary {
    pub system: String,
    pub matrix: Vec<Vec<i64>>,
    pub eigenvalues: Vec<f64>,
    pub labels: Vec<Bundle>,
    pub unstable_eigenvalue: f64,
    pub log_unstable_rate: f64,
}

pub fn splitting_summary(system: &PartiallyHyperbolic) -> SplittingSummary {
    let s = system.splitting();
    SplittingSummary {
        system: system.name().to_string(),
        matrix: system.map().rows(),
        eigenvalues: s.eigenvalues.clone(),
        labels: s.labels.clone(),
        unstable_eigenvalue: s.unstable_eigenvalue(),
        log_unstable_rate: system.log_unstable_rate(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Outcome {
    Utop(EntropyEstimate),
    Hdim(HEntropyEstimate),
    Metric { jacobian_entropy: f64 },
    Smb(SmbReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    pub value: f64,
    pub stable: bool,
    pub warnings: Vec<Warning>,
    pub outcome: Outcome,
}

impl RunSummary {
    /// The growth series behind a `utop` value.
    pub fn headline_series(&self) -> Option<&GrowthSeries> {
        let Outcome::Utop(e) = &self.outcome else { return None };
        let delta = self.config.params.smallest_delta();
        e.series
            .iter()
            .filter(|s| s.delta == delta || s.delta.is_nan())
            .max_by(|a, b| a.slope.total_cmp(&b.slope))
    }

    /// The critical-exponent fit behind an `hdim` value.
    pub fn headline_fit(&self) -> Option<&CriticalExponentResult> {
        let Outcome::Hdim(h) = &self.outcome else { return None };
        h.results.iter().max_by(|a, b| a.lambda_star.total_cmp(&b.lambda_star))
    }
}

/// Steps reported by the SMB table: `n_min`, multiples of five and `n_max`.
pub fn smb_steps(n_min: u32, n_max: u32) -> Vec<u32> {
    (n_min..=n_max)
        .filter(|&n| n == n_min || n == n_max || n % 5 == 0)
        .collect()
}

/// Mesh used for SMB tables: the smallest configured mesh of at least 16,
/// otherwise the finest one.
pub fn smb_mesh(params: &EstimatorParams) -> u32 {
    let meshes = params.sorted_meshes();
    meshes
        .iter()
        .copied()
        .find(|&m| m >= 16)
        .or(meshes.last().copied())
        .unwrap_or(16)
}

pub fn run_estimate(kind: EstimateKind, config: &ExperimentConfig) -> Result<RunSummary> {
    let (system, set) = config.resolve()?;
    let params = &config.params;
    let (value, warnings, outcome) = match kind {
        EstimateKind::Utop => {
            let e = if set == AmbientSet::Torus {
                unstable_topological_entropy(&system, params)?
            } else {
                entropy_of_subset_cover_style(&system, &set, params)?
            };
            (e.value, e.warnings.clone(), Outcome::Utop(e))
        }
        EstimateKind::Hdim => {
            let h = h_unstable_h(&system, &set, params)?;
            let mut warnings = h.warnings.clone();
            if h.indeterminate && !warnings.iter().any(|w| matches!(w, Warning::IndeterminateTrend { .. })) {
                warnings.push(Warning::IndeterminateTrend {
                    mesh: 0,
                    lambda: h.value,
                });
            }
            (h.value, warnings, Outcome::Hdim(h))
        }
        EstimateKind::Metric => {
            let v = metric_entropy_jacobian(&system);
            (v, Vec::new(), Outcome::Metric { jacobian_entropy: v })
        }
        EstimateKind::Smb => {
            let steps = smb_steps(params.n_min, params.n_max);
            let r = smb_convergence_report(&system, params.samples.max(10), &steps, smb_mesh(params), params)?;
            let value = r.rows.last().map_or(0.0, |row| row.mean);
            (value, Vec::new(), Outcome::Smb(r))
        }
    };
    let stable = !warnings
        .iter()
        .any(|w| matches!(w, Warning::NonStabilized { .. } | Warning::IndeterminateTrend { .. }));
    Ok(RunSummary {
        config: config.clone(),
        value,
        stable,
        warnings,
        outcome,
    })
}
