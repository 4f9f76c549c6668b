//! Verification suite: runs the estimators on configured systems and sets
//! and checks the expected (in)equalities between them.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{json_error, locate_descriptor, located};
use crate::descriptor::{components, parse_set, parse_system};
use crate::error::{Error, Result};
use crate::hdim::{h_unstable_h, h_unstable_of_compact, outer_measure_from_levels, HEntropyEstimate};
use crate::leaf::{leaf_ball, trace_subset, AmbientSet, LeafSubset};
use crate::params::{cover_levels, set_samples, EstimatorParams};
use crate::systems::{Bundle, PartiallyHyperbolic};
use crate::umetric::{metric_entropy_jacobian, smb_convergence_report};
use crate::utop::{entropy_of_compact, unstable_topological_entropy, Warning};

pub const DEFAULT_TOLERANCE: f64 = 0.05;
/// Step count and sample size used for the SMB check.
pub const SMB_STEPS: u32 = 25;
pub const SMB_SAMPLES: usize = 20;
pub const SMB_MESH: u32 = 16;

#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Claim {
    A1_compact_upper_bound,
    A2_measure_lower_bound,
    A3_equality,
    L32a_invariance,
    L32b_union,
    L32c_power,
    L33_subadditivity,
    remark_inverse_asymmetry,
    smb_limit,
    variational_consistency,
}

impl Claim {
    pub const ALL: [Claim; 10] = [
        Claim::A1_compact_upper_bound,
        Claim::A2_measure_lower_bound,
        Claim::A3_equality,
        Claim::L32a_invariance,
        Claim::L32b_union,
        Claim::L32c_power,
        Claim::L33_subadditivity,
        Claim::remark_inverse_asymmetry,
        Claim::smb_limit,
        Claim::variational_consistency,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Claim::A1_compact_upper_bound => "A1_compact_upper_bound",
            Claim::A2_measure_lower_bound => "A2_measure_lower_bound",
            Claim::A3_equality => "A3_equality",
            Claim::L32a_invariance => "L32a_invariance",
            Claim::L32b_union => "L32b_union",
            Claim::L32c_power => "L32c_power",
            Claim::L33_subadditivity => "L33_subadditivity",
            Claim::remark_inverse_asymmetry => "remark_inverse_asymmetry",
            Claim::smb_limit => "smb_limit",
            Claim::variational_consistency => "variational_consistency",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Indeterminate,
}

/// How `lhs` and `rhs` were compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `lhs <= rhs + tolerance`.
    AtMost,
    /// `lhs <= rhs + tolerance * max(1, rhs)`.
    AtMostRelative,
    /// `|lhs - rhs| <= tolerance * max(1, rhs)`.
    Equal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    /// Absent when an estimator failed.
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub relation: Relation,
    /// Estimator warnings and intermediate values, one entry each.
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationCase {
    pub name: String,
    pub system: String,
    #[serde(default = "default_set")]
    pub set: String,
    pub claim: Claim,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Exponent for power cases.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
}

fn default_set() -> String {
    "torus".into()
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

impl VerificationCase {
    pub fn new(name: &str, system: &str, set: &str, claim: Claim) -> Self {
        Self {
            name: name.into(),
            system: system.into(),
            set: set.into(),
            claim,
            tolerance: DEFAULT_TOLERANCE,
            power: None,
            verdict: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub params: EstimatorParams,
    /// Replaces the tolerance of every case when set.
    pub tolerance: Option<f64>,
    pub cases: Vec<VerificationCase>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            params: suite_params(),
            tolerance: None,
            cases: Vec::new(),
        }
    }
}

/// Estimator settings used by the suite unless overridden.
pub fn suite_params() -> EstimatorParams {
    EstimatorParams {
        samples: 2,
        ..EstimatorParams::default()
    }
}

impl SuiteConfig {
    /// Parses and validates a JSON suite description.
    pub fn from_json(text: &str) -> Result<Self> {
        let config: SuiteConfig = serde_json::from_str(text).map_err(json_error)?;
        config
            .params
            .validate()
            .map_err(|e| located(text, "params", 0, "params", e.to_string()))?;
        for (i, case) in config.cases.iter().enumerate() {
            let system = parse_system(&case.system)
                .map_err(|e| locate_descriptor(text, &case.system, &format!("cases[{i}].system"), e))?;
            let set = parse_set(&case.set, Some(system.dim()))
                .map_err(|e| locate_descriptor(text, &case.set, &format!("cases[{i}].set"), e))?;
            check_case(case, &system, &set)
                .map_err(|m| located(text, &case.name, 0, &format!("cases[{i}]"), m))?;
        }
        Ok(config)
    }
}

/// Structural requirements of each claim.
fn check_case(case: &VerificationCase, system: &PartiallyHyperbolic, set: &AmbientSet) -> std::result::Result<(), String> {
    if !(case.tolerance >= 0.0) {
        return Err(format!("tolerance must be nonnegative, got {}", case.tolerance));
    }
    match case.claim {
        Claim::A2_measure_lower_bound if set.is_countable() => {
            Err("A2_measure_lower_bound needs a set of positive measure".into())
        }
        Claim::L32b_union if !matches!(set, AmbientSet::Union { .. }) => {
            Err("L32b_union needs a union `a+b` as its set".into())
        }
        Claim::remark_inverse_asymmetry if system.splitting().eigenvalue_of(Bundle::Center).is_none() => {
            Err("remark_inverse_asymmetry needs a system with a center direction".into())
        }
        Claim::L32c_power if case.power.is_some_and(|m| !(2..=8).contains(&m)) => {
            Err("power must lie in 2..=8".into())
        }
        _ => Ok(()),
    }
}

/// Cases covering every claim on the cat map and the three-torus example,
/// including its inverse.
pub fn default_suite() -> Vec<VerificationCase> {
    use Claim::*;
    let c = VerificationCase::new;
    vec![
        c("cat2/A1/ball", "cat2", "ball:c=(1/3,1/7),r=0.25", A1_compact_upper_bound),
        c("paper3/A1/torus", "paper3:k0=5", "torus", A1_compact_upper_bound),
        c("cat2/A2/ball", "cat2", "ball:c=(1/3,1/7),r=0.25", A2_measure_lower_bound),
        c("paper3/A2/ball", "paper3:k0=5", "ball:c=(1/3,1/7,2/5),r=0.25", A2_measure_lower_bound),
        c("cat2/A3", "cat2", "torus", A3_equality),
        c("paper3/A3", "paper3:k0=5", "torus", A3_equality),
        c("paper3-inverse/A3", "paper3:k0=5:inverse", "torus", A3_equality),
        c("cat2/L32a", "cat2", "torus", L32a_invariance),
        c("paper3/L32a", "paper3:k0=5", "torus", L32a_invariance),
        c("cat2/L32b", "cat2", "orbit:p=(1/5,2/5)+ball:c=(1/3,1/7),r=0.25", L32b_union),
        c("paper3/L32b", "paper3:k0=5", "orbit:p=(0,0,0)+ball:c=(1/3,1/7,2/5),r=0.25", L32b_union),
        c("cat2/L32c", "cat2", "torus", L32c_power),
        c("paper3/L32c", "paper3:k0=5", "torus", L32c_power),
        c("cat2/L33", "cat2", "torus", L33_subadditivity),
        c("paper3/L33", "paper3:k0=5", "torus", L33_subadditivity),
        c("paper3/inverse-asymmetry", "paper3:k0=5", "torus", remark_inverse_asymmetry),
        c("cat2/smb", "cat2", "torus", smb_limit),
        c("paper3/smb", "paper3:k0=5", "torus", smb_limit),
        c("paper3-inverse/smb", "paper3:k0=5:inverse", "torus", smb_limit),
        c("cat2/variational", "cat2", "torus", variational_consistency),
        c("paper3/variational", "paper3:k0=5", "torus", variational_consistency),
        c("paper3-inverse/variational", "paper3:k0=5:inverse", "torus", variational_consistency),
    ]
}

/// Claims that no case exercises.
pub fn missing_claims(cases: &[VerificationCase]) -> Vec<Claim> {
    let seen: BTreeSet<Claim> = cases.iter().map(|c| c.claim).collect();
    Claim::ALL.into_iter().filter(|c| !seen.contains(c)).collect()
}

/// Accumulates estimator diagnostics for one case.
#[derive(Default)]
struct Notes {
    lines: Vec<String>,
    unsettled: bool,
}

impl Notes {
    fn warnings(&mut self, label: &str, warnings: &[Warning]) {
        for w in warnings {
            if matches!(w, Warning::NonStabilized { .. } | Warning::IndeterminateTrend { .. }) {
                self.unsettled = true;
            }
            self.lines.push(format!("{label}: {}", serde_json::to_string(w).unwrap_or_default()));
        }
    }

    fn hdim(&mut self, label: &str, h: &HEntropyEstimate) -> f64 {
        self.warnings(label, &h.warnings);
        if h.indeterminate {
            self.unsettled = true;
        }
        self.lines.push(format!("{label} = {:.6}", h.value));
        h.value
    }

    fn value(&mut self, label: &str, v: f64) -> f64 {
        self.lines.push(format!("{label} = {v:.6}"));
        v
    }
}

fn compare(relation: Relation, lhs: f64, rhs: f64, tol: f64) -> bool {
    match relation {
        Relation::AtMost => lhs <= rhs + tol,
        Relation::AtMostRelative => lhs <= rhs + tol * rhs.max(1.0),
        Relation::Equal => (lhs - rhs).abs() <= tol * rhs.max(1.0),
    }
}

/// Trace of `Y` on the leaf ball of radius `delta` around its first sample.
fn compact_piece(system: &PartiallyHyperbolic, y: &AmbientSet, params: &EstimatorParams, shift: f64) -> Result<LeafSubset> {
    let y = y.resolve_orbits(system)?;
    let x = set_samples(&y, system.dim(), params)
        .into_iter()
        .next()
        .ok_or_else(|| Error::InvalidParameter("set has no points to center a leaf ball on".into()))?;
    let delta = params.smallest_delta();
    let ball = leaf_ball(system, &x, delta)?;
    let (lo, hi) = ball.params();
    let w = hi - lo;
    trace_subset(system, &y, &ball.sub(lo + shift * w, hi + shift * w), params.resolution)
}

fn evaluate(case: &VerificationCase, params: &EstimatorParams) -> Result<Verdict> {
    let system = parse_system(&case.system)?;
    let set = parse_set(&case.set, Some(system.dim()))?;
    check_case(case, &system, &set).map_err(Error::InvalidParameter)?;
    let mut notes = Notes::default();
    let tol = case.tolerance;
    let (lhs, rhs, relation, extra_ok) = match case.claim {
        Claim::A1_compact_upper_bound => {
            let k = compact_piece(&system, &set, params, 0.0)?;
            let h = h_unstable_of_compact(&system, &k, params)?;
            let u = entropy_of_compact(&system, &k, params)?;
            notes.warnings("utop(K)", &u.warnings);
            let lhs = notes.hdim("hdim(K)", &h);
            let rhs = notes.value("utop(K)", u.value);
            (lhs, rhs, Relation::AtMost, true)
        }
        Claim::A2_measure_lower_bound => {
            let lhs = notes.value("jacobian entropy", metric_entropy_jacobian(&system));
            let h = h_unstable_h(&system, &set, params)?;
            let rhs = notes.hdim("hdim(Y)", &h);
            (lhs, rhs, Relation::AtMost, true)
        }
        Claim::A3_equality => {
            let h = h_unstable_h(&system, &AmbientSet::Torus, params)?;
            let u = unstable_topological_entropy(&system, params)?;
            notes.warnings("utop", &u.warnings);
            let lhs = notes.hdim("hdim", &h);
            let rhs = notes.value("utop", u.value);
            (lhs, rhs, Relation::Equal, true)
        }
        Claim::L32a_invariance => {
            let k = compact_piece(&system, &set, params, 0.0)?;
            let h = h_unstable_of_compact(&system, &k, params)?;
            let fh = h_unstable_of_compact(&system, &k.image(&system, 1), params)?;
            let lhs = notes.hdim("hdim(K)", &h);
            let rhs = notes.hdim("hdim(f(K))", &fh);
            (lhs, rhs, Relation::Equal, true)
        }
        Claim::L32b_union => {
            let h = h_unstable_h(&system, &set, params)?;
            let lhs = notes.hdim("hdim(Y)", &h);
            let mut rhs: f64 = 0.0;
            for (i, part) in components(&set).iter().enumerate() {
                let hp = h_unstable_h(&system, part, params)?;
                rhs = rhs.max(notes.hdim(&format!("hdim(Y_{i})"), &hp));
            }
            (lhs, rhs, Relation::Equal, true)
        }
        Claim::L32c_power => {
            let m = case.power.unwrap_or(2);
            let h = h_unstable_h(&system, &set, params)?;
            let hp = h_unstable_h(&system.power(m), &set, params)?;
            let base = notes.hdim("hdim(f)", &h);
            let lhs = notes.hdim(&format!("hdim(f^{m})"), &hp);
            (lhs, m as f64 * base, Relation::Equal, true)
        }
        Claim::L33_subadditivity => {
            let (lhs, rhs) = subadditivity(&system, &set, params, &mut notes)?;
            (lhs, rhs, Relation::AtMostRelative, true)
        }
        Claim::remark_inverse_asymmetry => {
            let inverse = system.inverse()?;
            let lc = system
                .splitting()
                .eigenvalue_of(Bundle::Center)
                .ok_or(Error::InvalidParameter("no center direction".into()))?
                .abs()
                .ln();
            let forward = unstable_topological_entropy(&system, params)?;
            let backward = unstable_topological_entropy(&inverse, params)?;
            notes.warnings("utop(f)", &forward.warnings);
            notes.warnings("utop(f^-1)", &backward.warnings);
            let ef = notes.value("utop(f)", forward.value);
            let lhs = notes.value("utop(f^-1)", backward.value);
            notes.value("log center rate", lc);
            let strict = lhs < ef;
            notes.lines.push(format!("utop(f^-1) < utop(f): {strict}"));
            (lhs, ef + lc, Relation::Equal, strict)
        }
        Claim::smb_limit => {
            let p = EstimatorParams {
                samples: params.samples.max(SMB_SAMPLES),
                ..params.clone()
            };
            let report = smb_convergence_report(&system, p.samples, &[SMB_STEPS], SMB_MESH, &p)?;
            let lhs = notes.value(&format!("mean I_{SMB_STEPS}/{SMB_STEPS}"), report.rows[0].mean);
            notes.value("stddev", report.rows[0].stddev);
            let rhs = notes.value("jacobian entropy", report.jacobian_entropy);
            (lhs, rhs, Relation::Equal, true)
        }
        Claim::variational_consistency => {
            let lhs = notes.value("jacobian entropy", metric_entropy_jacobian(&system));
            let u = unstable_topological_entropy(&system, params)?;
            notes.warnings("utop", &u.warnings);
            let rhs = notes.value("utop", u.value);
            (lhs, rhs, Relation::AtMost, true)
        }
    };
    let status = if notes.unsettled {
        Status::Indeterminate
    } else if extra_ok && compare(relation, lhs, rhs, tol) {
        Status::Pass
    } else {
        Status::Fail
    };
    Ok(Verdict {
        status,
        lhs: Some(lhs),
        rhs: Some(rhs),
        relation,
        diagnostics: notes.lines,
    })
}

/// Largest excess of `M(K1 ∪ K2)` over `M(K1) + M(K2)` across scales and
/// exponents, for two overlapping leaf subsets.
fn subadditivity(
    system: &PartiallyHyperbolic,
    set: &AmbientSet,
    params: &EstimatorParams,
    notes: &mut Notes,
) -> Result<(f64, f64)> {
    let k1 = compact_piece(system, set, params, 0.0)?;
    let k2 = compact_piece(system, set, params, 0.5)?;
    let both = k1.union(&k2);
    let h = system.log_unstable_rate();
    let mut worst: Option<(f64, f64, f64)> = None;
    let mut checked = 0usize;
    for mesh in params.sorted_meshes() {
        let l1 = cover_levels(system, &k1, mesh, params)?;
        let l2 = cover_levels(system, &k2, mesh, params)?;
        let lu = cover_levels(system, &both, mesh, params)?;
        for lambda in [0.0, 0.5 * h, h] {
            for scale in 0..params.n_max {
                let m = |l| outer_measure_from_levels(l, lambda, scale, params.level_gap).map(|r| r.0);
                let (Some(a), Some(b), Some(u)) = (m(&l1), m(&l2), m(&lu)) else {
                    continue;
                };
                checked += 1;
                let excess = (u - (a + b)) / (a + b).max(1.0);
                if worst.is_none_or(|w| excess > w.0) {
                    worst = Some((excess, u, a + b));
                }
            }
        }
    }
    notes.lines.push(format!("comparisons = {checked}"));
    match worst {
        Some((excess, u, s)) => {
            notes.value("largest relative excess", excess);
            Ok((u, s))
        }
        None => Err(Error::InsufficientLevels { have: 0, need: 1 }),
    }
}

/// Runs one case; errors of the estimators become failing verdicts.
pub fn run_case(case: &VerificationCase, params: &EstimatorParams) -> VerificationCase {
    let verdict = evaluate(case, params).unwrap_or_else(|e| Verdict {
        status: match e {
            Error::IndeterminateTrend { .. } => Status::Indeterminate,
            _ => Status::Fail,
        },
        lhs: None,
        rhs: None,
        relation: Relation::Equal,
        diagnostics: vec![format!("error: {e}")],
    });
    VerificationCase {
        verdict: Some(verdict),
        ..case.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub cases: Vec<VerificationCase>,
    pub passed: usize,
    pub failed: usize,
    pub indeterminate: usize,
    /// Claims with no case; empty for the default suite.
    pub missing_claims: Vec<Claim>,
}

impl SuiteReport {
    /// 0 all pass, 1 any failure, 2 indeterminate without failures.
    pub fn exit_code(&self) -> i32 {
        if self.failed > 0 {
            1
        } else if self.indeterminate > 0 {
            2
        } else {
            0
        }
    }

    pub fn summary_table(&self) -> String {
        let width = self.cases.iter().map(|c| c.name.len()).max().unwrap_or(4).max(4);
        let mut out = format!(
            "{:<width$}  {:<26}  {:<13}  {:>10}  {:>10}\n",
            "case", "claim", "status", "lhs", "rhs"
        );
        for c in &self.cases {
            let v = c.verdict.as_ref();
            let status = v.map_or("-".to_string(), |v| format!("{:?}", v.status).to_lowercase());
            let _ = writeln!(
                out,
                "{:<width$}  {:<26}  {:<13}  {:>10.6}  {:>10.6}",
                c.name,
                c.claim.name(),
                status,
                v.and_then(|v| v.lhs).unwrap_or(f64::NAN),
                v.and_then(|v| v.rhs).unwrap_or(f64::NAN),
            );
        }
        let _ = writeln!(
            out,
            "{} passed, {} failed, {} indeterminate",
            self.passed, self.failed, self.indeterminate
        );
        if !self.missing_claims.is_empty() {
            let names: Vec<&str> = self.missing_claims.iter().map(|c| c.name()).collect();
            let _ = writeln!(out, "claims without cases: {}", names.join(", "));
        }
        out
    }
}

/// Runs every case of `config` in parallel.
pub fn run_suite(config: &SuiteConfig) -> SuiteReport {
    let cases: Vec<VerificationCase> = config
        .cases
        .par_iter()
        .map(|c| {
            let c = match config.tolerance {
                Some(t) => VerificationCase {
                    tolerance: t,
                    ..c.clone()
                },
                None => c.clone(),
            };
            run_case(&c, &config.params)
        })
        .collect();
    let count = |s: Status| {
        cases
            .iter()
            .filter(|c| c.verdict.as_ref().map(|v| v.status) == Some(s))
            .count()
    };
    SuiteReport {
        seed: config.params.seed,
        passed: count(Status::Pass),
        failed: count(Status::Fail),
        indeterminate: count(Status::Indeterminate),
        missing_claims: if config.cases.is_empty() {
            Vec::new()
        } else {
            missing_claims(&config.cases)
        },
        cases,
    }
}

/// The default suite, which must exercise every claim.
pub fn run_default_suite(params: &EstimatorParams, tolerance: Option<f64>) -> SuiteReport {
    let cases = default_suite();
    assert!(missing_claims(&cases).is_empty(), "default suite misses claims");
    run_suite(&SuiteConfig {
        params: params.clone(),
        tolerance,
        cases,
    })
}
