//! Grid cross-validation of the closed form.
//!
//! For each chain on a rational grid and each horizon up to `n_max` the
//! runner checks the closed form against brute-force enumeration, the
//! normalization of the distribution, the complement and label-swap
//! identities, insensitivity to the summation limits, and agreement of the
//! float backend with the exact one. The closed form is reached through the
//! [`VisitEngine`] trait so a deliberately broken engine can serve as a
//! negative control.

use std::fmt;
use std::str::FromStr;

use crate::chain::{swap_labels, ChainSpec, State};
use crate::closed_form::{ClosedForm, SumBound};
use crate::error::{Error, Result};
use crate::numerics::{NumericMode, ProbValue};
use crate::oracle::oracle_distribution;

/// Relative tolerance of the float-vs-exact check.
pub const FLOAT_AGREEMENT_TOL: f64 = 1e-10;

/// Source of `P(N1 = k | N)` for `k = 0..=N`.
pub trait VisitEngine: Sync {
    fn s1_distribution(&self, chain: &ChainSpec, n: usize, bound: SumBound) -> Result<Vec<ProbValue>>;
}

/// The library's closed form.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClosedFormEngine;

impl VisitEngine for ClosedFormEngine {
    fn s1_distribution(&self, chain: &ChainSpec, n: usize, bound: SumBound) -> Result<Vec<ProbValue>> {
        let cf = ClosedForm::new(chain, n)?.with_bound(bound);
        Ok(cf.distribution(State::S1)?.mass().to_vec())
    }
}

/// Parameter values every chain parameter is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grid {
    /// `{0, 1/2, 1}`
    Coarse,
    /// `{0, 1/4, 1/2, 3/4, 1}`
    Fine,
}

impl Grid {
    pub fn values(self) -> &'static [(i64, i64)] {
        match self {
            Grid::Coarse => &[(0, 1), (1, 2), (1, 1)],
            Grid::Fine => &[(0, 1), (1, 4), (1, 2), (3, 4), (1, 1)],
        }
    }

    /// Every `(p01, p10, p1)` combination, as exact chains.
    pub fn chains(self) -> Vec<ChainSpec> {
        let v = self.values();
        let mut out = Vec::with_capacity(v.len().pow(3));
        for &a in v {
            for &b in v {
                for &c in v {
                    out.push(ChainSpec::exact(a, b, c).expect("grid values are probabilities"));
                }
            }
        }
        out
    }

    pub fn describe(self) -> String {
        let vals: Vec<String> = self
            .values()
            .iter()
            .map(|&(n, d)| if d == 1 { n.to_string() } else { format!("{n}/{d}") })
            .collect();
        format!("{} {{{}}}^3", self, vals.join(", "))
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Grid::Coarse => "coarse",
            Grid::Fine => "fine",
        })
    }
}

impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Grid> {
        match s {
            "coarse" => Ok(Grid::Coarse),
            "fine" => Ok(Grid::Fine),
            other => Err(Error::InvalidArgument(format!("unknown grid {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Check {
    OracleEquality,
    Normalization,
    ComplementSymmetry,
    LabelSwapSymmetry,
    LimitRedundancy,
    FloatAgreement,
}

impl Check {
    pub fn as_str(self) -> &'static str {
        match self {
            Check::OracleEquality => "oracle-equality",
            Check::Normalization => "normalization",
            Check::ComplementSymmetry => "complement-symmetry",
            Check::LabelSwapSymmetry => "label-swap-symmetry",
            Check::LimitRedundancy => "limit-redundancy",
            Check::FloatAgreement => "float-agreement",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CaseStatus {
    ExactEqual,
    WithinTol { relative_error: f64 },
    Fail { expected: String, actual: String },
}

impl CaseStatus {
    pub fn is_fail(&self) -> bool {
        matches!(self, CaseStatus::Fail { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            CaseStatus::ExactEqual => "exact-equal",
            CaseStatus::WithinTol { .. } => "within-tol",
            CaseStatus::Fail { .. } => "FAIL",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseResult {
    pub check: Check,
    pub chain: String,
    pub n: usize,
    /// `None` for whole-distribution checks.
    pub k: Option<usize>,
    pub status: CaseStatus,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Summary {
    pub exact_equal: usize,
    pub within_tol: usize,
    pub failed: usize,
}

impl Summary {
    pub fn total(&self) -> usize {
        self.exact_equal + self.within_tol + self.failed
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub grid: String,
    pub n_max: usize,
    pub cases: Vec<CaseResult>,
    pub summary: Summary,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseResult> {
        self.cases.iter().filter(|c| c.status.is_fail())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidationConfig {
    pub n_max: usize,
    pub grid: Grid,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            n_max: 12,
            grid: Grid::Coarse,
        }
    }
}

fn exact_status(expected: &ProbValue, actual: &ProbValue) -> CaseStatus {
    if expected == actual {
        CaseStatus::ExactEqual
    } else {
        CaseStatus::Fail {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}

fn float_status(exact: &ProbValue, float: &ProbValue) -> CaseStatus {
    let e = exact.to_f64();
    let f = float.to_f64();
    if e == f {
        return CaseStatus::ExactEqual;
    }
    let relative_error = (e - f).abs() / e.abs();
    if relative_error <= FLOAT_AGREEMENT_TOL {
        CaseStatus::WithinTol { relative_error }
    } else {
        CaseStatus::Fail {
            expected: exact.to_string(),
            actual: format!("{f:e}"),
        }
    }
}

/// Runs every check for one chain and one horizon.
pub fn validate_case(engine: &dyn VisitEngine, chain: &ChainSpec, n: usize) -> Result<Vec<CaseResult>> {
    let label = format!("p01={} p10={} p1={}", chain.p01(), chain.p10(), chain.p1());
    let swapped = swap_labels(chain);
    let direct = engine.s1_distribution(chain, n, SumBound::Limits)?;
    let relabelled = engine.s1_distribution(&swapped, n, SumBound::Limits)?;
    let horizon = engine.s1_distribution(chain, n, SumBound::Horizon)?;
    let float = engine.s1_distribution(&chain.to_mode(NumericMode::Float), n, SumBound::Limits)?;
    let oracle = oracle_distribution(n, State::S1, chain)?;
    let oracle_swapped_s0 = oracle_distribution(n, State::S0, &swapped)?;

    let mut out = Vec::with_capacity(5 * (n + 1) + 1);
    let mut push = |check, k, status| {
        out.push(CaseResult {
            check,
            chain: label.clone(),
            n,
            k,
            status,
        })
    };
    for k in 0..=n {
        push(Check::OracleEquality, Some(k), exact_status(&oracle.mass()[k], &direct[k]));
        // P(N0 = k) for `chain`, reached by relabelling, against P(N1 = N - k).
        push(Check::ComplementSymmetry, Some(k), exact_status(&direct[n - k], &relabelled[k]));
        // P(N1 = k) for `chain` against P(N0 = k) counted on the swapped chain.
        push(
            Check::LabelSwapSymmetry,
            Some(k),
            exact_status(&oracle_swapped_s0.mass()[k], &direct[k]),
        );
        push(Check::LimitRedundancy, Some(k), exact_status(&direct[k], &horizon[k]));
        push(Check::FloatAgreement, Some(k), float_status(&direct[k], &float[k]));
    }
    let total = crate::numerics::sum_values(NumericMode::Exact, &direct)?;
    push(Check::Normalization, None, exact_status(&ProbValue::one(NumericMode::Exact), &total));
    Ok(out)
}

/// Runs the whole grid, cases ordered by chain, then horizon, then `k`.
pub fn run_validation(engine: &dyn VisitEngine, config: &ValidationConfig) -> Result<ValidationReport> {
    if config.n_max == 0 {
        return Err(Error::InvalidArgument("n-max must be at least 1".into()));
    }
    let mut cases = Vec::new();
    for chain in config.grid.chains() {
        for n in 1..=config.n_max {
            cases.extend(validate_case(engine, &chain, n)?);
        }
    }
    let mut summary = Summary::default();
    for c in &cases {
        match c.status {
            CaseStatus::ExactEqual => summary.exact_equal += 1,
            CaseStatus::WithinTol { .. } => summary.within_tol += 1,
            CaseStatus::Fail { .. } => summary.failed += 1,
        }
    }
    Ok(ValidationReport {
        grid: config.grid.describe(),
        n_max: config.n_max,
        cases,
        summary,
    })
}
