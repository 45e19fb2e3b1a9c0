//! Closed-form visit-count probabilities.
//!
//! For a trajectory of `N` positions, the probability that `S1` is occupied
//! exactly `k` times splits on the initial state:
//!
//! ```text
//! P(N1 = k | N) = p1 * P1(k, N | S1) + p0 * P2(k, N | S0)
//! ```
//!
//! Each conditional term is, in the interior `0 < k < N`, a pair of sums over
//! `j`. One sum covers paths ending in `S0`, the other paths ending in `S1`.
//! Every summand is a product of two weak-composition counts and one
//! transition monomial whose exponents add up to `N - 1`:
//!
//! | group | start | end | binomials                      | p11     | p10   | p01   | p00       | upper limit |
//! |-------|-------|-----|--------------------------------|---------|-------|-------|-----------|-------------|
//! | X     | S1    | S0  | C(k-1, j-1) C(N-k-1, j-1)      | k-j     | j     | j-1   | N-k-j     | c1          |
//! | Y     | S1    | S1  | C(k-1, j)   C(N-k-1, j-1)      | k-j-1   | j     | j     | N-k-j     | c2          |
//! | L     | S0    | S1  | C(k-1, j-1) C(N-k-1, j-1)      | k-j     | j-1   | j     | N-k-j     | c1          |
//! | M     | S0    | S0  | C(k-1, j-1) C(N-k-1, j)        | k-j     | j     | j     | N-k-j-1   | c3          |
//!
//! with `c1 = min(k, N-k)`, `c2 = min(k-1, N-k)`, `c3 = min(k, N-k-1)`. The
//! boundary cases are `P1(0) = 0`, `P1(N) = p11^(N-1)`, `P2(0) = p00^(N-1)`
//! and `P2(N) = 0`.
//!
//! The limits are exactly where one of the two binomials would vanish, so
//! running every sum up to `N` instead gives the same value; [`SumBound`]
//! selects between the two.

use std::sync::OnceLock;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::chain::{swap_labels, ChainSpec, State, TransitionCounts, VisitQuery};
use crate::combinatorics::{BinomialTable, FloatBinomialTable, LogFactorials};
use crate::error::{Error, Result};
use crate::numerics::{log_sum_exp, powu, ratio_to_f64, sum_values, CompensatedSum, LogProb, NumericMode, ProbValue};

/// Largest horizon for which float mode keeps a rounded Pascal triangle;
/// past it binomials come from log-factorials.
pub const FLOAT_TABLE_MAX_N: usize = 1024;

/// The three upper summation limits for an interior `(k, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SummationLimits {
    pub c1: usize,
    pub c2: usize,
    pub c3: usize,
}

/// Upper limits for `0 < k < n`.
pub fn limits(k: usize, n: usize) -> Result<SummationLimits> {
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "summation limits need 0 < k < N, got k = {k}, N = {n}"
        )));
    }
    Ok(SummationLimits {
        c1: k.min(n - k),
        c2: (k - 1).min(n - k),
        c3: k.min(n - k - 1),
    })
}

/// Where the `j` sums stop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SumBound {
    /// `c1`, `c2`, `c3`.
    #[default]
    Limits,
    /// `N` for every sum, relying on zero-extended binomials.
    Horizon,
}

/// Which sum a term belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TermGroup {
    X,
    Y,
    L,
    M,
    /// The single-monomial branches `k = 0` and `k = N`.
    Boundary,
}

/// One summand of a conditional probability, kept symbolic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub group: TermGroup,
    pub start: State,
    pub end: State,
    pub j: usize,
    /// `(n, r)` arguments of the two binomial factors.
    pub binomials: [(i64, i64); 2],
    /// Exponents of `p11, p10, p01, p00`. Can go negative only when a factor
    /// in `binomials` is zero.
    pub exponents: [i64; 4],
}

impl Term {
    fn boundary(state: State, n: usize) -> Term {
        let e = n as i64 - 1;
        Term {
            group: TermGroup::Boundary,
            start: state,
            end: state,
            j: 0,
            binomials: [(0, 0), (0, 0)],
            exponents: match state {
                State::S1 => [e, 0, 0, 0],
                State::S0 => [0, 0, 0, e],
            },
        }
    }

    /// Number of paths this term stands for.
    pub fn path_count(&self) -> BigUint {
        let [(a, b), (c, d)] = self.binomials;
        crate::combinatorics::binomial(a, b) * crate::combinatorics::binomial(c, d)
    }

    /// The transition monomial, if every exponent is non-negative.
    pub fn monomial(&self) -> Option<TransitionCounts> {
        let [s11, s10, s01, s00] = self.exponents;
        if self.exponents.iter().any(|&e| e < 0) {
            return None;
        }
        Some(TransitionCounts {
            s11: s11 as u64,
            s10: s10 as u64,
            s01: s01 as u64,
            s00: s00 as u64,
        })
    }
}

/// The symbolic summands of `P1(k, N | S1)` (`start = S1`) or
/// `P2(k, N | S0)` (`start = S0`), in ascending `j` within each sum.
pub fn terms(k: usize, n: usize, start: State, bound: SumBound) -> Result<Vec<Term>> {
    if n == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "need N >= 1 and 0 <= k <= N, got k = {k}, N = {n}"
        )));
    }
    match (start, k) {
        (State::S1, 0) => return Ok(vec![]),
        (State::S1, k) if k == n => return Ok(vec![Term::boundary(State::S1, n)]),
        (State::S0, 0) => return Ok(vec![Term::boundary(State::S0, n)]),
        (State::S0, k) if k == n => return Ok(vec![]),
        _ => {}
    }

    let lim = limits(k, n)?;
    let upper = |c: usize| match bound {
        SumBound::Limits => c,
        SumBound::Horizon => n,
    };
    let (k, n) = (k as i64, n as i64);
    let mut out = Vec::new();
    let mut push = |group, end, j: usize, binomials, exponents| {
        out.push(Term {
            group,
            start,
            end,
            j,
            binomials,
            exponents,
        })
    };

    match start {
        State::S1 => {
            for j in 1..=upper(lim.c1) {
                let jj = j as i64;
                push(
                    TermGroup::X,
                    State::S0,
                    j,
                    [(k - 1, jj - 1), (n - k - 1, jj - 1)],
                    [k - jj, jj, jj - 1, n - k - jj],
                );
            }
            for j in 1..=upper(lim.c2) {
                let jj = j as i64;
                push(
                    TermGroup::Y,
                    State::S1,
                    j,
                    [(k - 1, jj), (n - k - 1, jj - 1)],
                    [k - jj - 1, jj, jj, n - k - jj],
                );
            }
        }
        State::S0 => {
            for j in 1..=upper(lim.c1) {
                let jj = j as i64;
                push(
                    TermGroup::L,
                    State::S1,
                    j,
                    [(k - 1, jj - 1), (n - k - 1, jj - 1)],
                    [k - jj, jj - 1, jj, n - k - jj],
                );
            }
            for j in 1..=upper(lim.c3) {
                let jj = j as i64;
                push(
                    TermGroup::M,
                    State::S0,
                    j,
                    [(k - 1, jj - 1), (n - k - 1, jj)],
                    [k - jj, jj, jj, n - k - jj - 1],
                );
            }
        }
    }
    Ok(out)
}

/// The closed-form term describing paths from `initial` to `last` with `k`
/// visits to `S1` and `s1_to_s0` transitions `S1 -> S0`, if any such paths
/// can exist.
pub fn term_for_path_class(n: usize, k: usize, initial: State, last: State, s1_to_s0: usize) -> Result<Option<Term>> {
    Ok(terms(k, n, initial, SumBound::Limits)?
        .into_iter()
        .find(|t| t.end == last && t.exponents[1] == s1_to_s0 as i64))
}

fn exps_u(t: &Term) -> [u64; 4] {
    t.monomial().map_or_else(
        || panic!("nonzero coefficient with negative exponent in {t:?}"),
        |m| [m.s11, m.s10, m.s01, m.s00],
    )
}

/// Per-mode evaluation state shared by every `k` of one horizon.
enum Kernel {
    Exact(ExactKernel),
    Float(FloatKernel),
    Log(LogKernel),
}

/// Exact evaluation over a common denominator. With `p_ab = n_ab / D`, every
/// summand is an integer over `D^(N-1)`, so the sums stay in `BigUint` and
/// only the final value is reduced.
struct ExactKernel {
    table: BinomialTable,
    /// Powers `0..N` of the numerators of `p11, p10, p01, p00`.
    powers: [Vec<BigUint>; 4],
    denominator_power: BigUint,
}

struct FloatKernel {
    table: Option<&'static FloatBinomialTable>,
    ln_fact: LogFactorials,
    /// Powers `0..N` of `p11, p10, p01, p00`.
    powers: [Vec<f64>; 4],
    ln_params: [f64; 4],
}

struct LogKernel {
    ln_fact: LogFactorials,
    ln_params: [LogProb; 4],
}

fn params_of(chain: &ChainSpec) -> [&ProbValue; 4] {
    [chain.p11(), chain.p10(), chain.p01(), chain.p00()]
}

impl ExactKernel {
    fn new(chain: &ChainSpec, n: usize) -> ExactKernel {
        let ratios: Vec<BigRational> = params_of(chain).iter().map(|p| p.to_ratio()).collect();
        let denominator = ratios
            .iter()
            .fold(BigUint::one(), |acc, r| num_integer::Integer::lcm(&acc, r.denom().magnitude()));
        let numerators: Vec<BigUint> = ratios
            .iter()
            .map(|r| r.numer().magnitude() * (&denominator / r.denom().magnitude()))
            .collect();
        let power_table = |base: &BigUint| {
            let mut v = Vec::with_capacity(n);
            let mut acc = BigUint::one();
            for _ in 0..n {
                v.push(acc.clone());
                acc *= base;
            }
            v
        };
        ExactKernel {
            table: BinomialTable::new(n.max(1)),
            powers: [
                power_table(&numerators[0]),
                power_table(&numerators[1]),
                power_table(&numerators[2]),
                power_table(&numerators[3]),
            ],
            denominator_power: num_traits::pow(denominator, n - 1),
        }
    }

    fn eval(&self, terms: &[Term]) -> ProbValue {
        let mut numerator = BigUint::zero();
        for t in terms {
            let [(a, b), (c, d)] = t.binomials;
            let (c1, c2) = (self.table.get(a, b), self.table.get(c, d));
            if c1.is_zero() || c2.is_zero() {
                continue;
            }
            let e = exps_u(t);
            let mut prod = c1 * c2;
            for (pw, &ei) in self.powers.iter().zip(e.iter()) {
                prod *= &pw[ei as usize];
            }
            numerator += prod;
        }
        ProbValue::Exact(BigRational::new(numerator.into(), self.denominator_power.clone().into()))
    }
}

fn shared_float_table() -> &'static FloatBinomialTable {
    static TABLE: OnceLock<FloatBinomialTable> = OnceLock::new();
    TABLE.get_or_init(|| FloatBinomialTable::new(FLOAT_TABLE_MAX_N))
}

impl FloatKernel {
    fn new(chain: &ChainSpec, n: usize) -> FloatKernel {
        let p = params_of(chain).map(ProbValue::to_f64);
        FloatKernel {
            table: (n <= FLOAT_TABLE_MAX_N).then(shared_float_table),
            ln_fact: LogFactorials::new(n.max(1)),
            powers: p.map(|x| (0..n.max(1) as u64).map(|e| powu(x, e)).collect()),
            ln_params: p.map(f64::ln),
        }
    }

    fn term(&self, t: &Term) -> f64 {
        let [(a, b), (c, d)] = t.binomials;
        let coefficient = match &self.table {
            Some(table) => table.get(a, b) * table.get(c, d),
            None => f64::INFINITY,
        };
        if coefficient == 0.0 {
            return 0.0;
        }
        let e = exps_u(t);
        if coefficient.is_finite() {
            let mut direct = coefficient;
            let mut precise = true;
            for ((pw, &lp), &ei) in self.powers.iter().zip(&self.ln_params).zip(e.iter()) {
                let pw = pw[ei as usize];
                if pw == 0.0 && lp == f64::NEG_INFINITY {
                    return 0.0;
                }
                precise &= pw.is_normal();
                direct *= pw;
            }
            if precise && direct.is_normal() {
                return direct;
            }
        }
        // Coefficient or a partial power left the normal double range:
        // assemble the term in the log domain.
        let ln_c = self.ln_fact.ln_binomial(a, b) + self.ln_fact.ln_binomial(c, d);
        if ln_c == f64::NEG_INFINITY {
            return 0.0;
        }
        let mut ln = ln_c;
        for (&lp, &ei) in self.ln_params.iter().zip(e.iter()) {
            if ei == 0 {
                continue;
            }
            if lp == f64::NEG_INFINITY {
                return 0.0;
            }
            ln += ei as f64 * lp;
        }
        ln.exp()
    }

    fn eval(&self, terms: &[Term]) -> ProbValue {
        let mut acc = CompensatedSum::default();
        for t in terms {
            acc.add(self.term(t));
        }
        ProbValue::Float(acc.value())
    }
}

impl LogKernel {
    fn new(chain: &ChainSpec, n: usize) -> LogKernel {
        LogKernel {
            ln_fact: LogFactorials::new(n.max(1)),
            ln_params: params_of(chain).map(|p| LogProb::from_ln(p.ln())),
        }
    }

    fn term(&self, t: &Term) -> f64 {
        let [(a, b), (c, d)] = t.binomials;
        let ln_c = self.ln_fact.ln_binomial(a, b) + self.ln_fact.ln_binomial(c, d);
        if ln_c == f64::NEG_INFINITY {
            return ln_c;
        }
        let e = exps_u(t);
        let mut ln = ln_c;
        for (p, &ei) in self.ln_params.iter().zip(e.iter()) {
            if ei == 0 {
                continue;
            }
            match p {
                LogProb::Zero => return f64::NEG_INFINITY,
                LogProb::Ln(x) => ln += ei as f64 * x,
            }
        }
        ln
    }

    fn eval(&self, terms: &[Term]) -> ProbValue {
        let logs: Vec<f64> = terms.iter().map(|t| self.term(t)).collect();
        ProbValue::LogSpace(LogProb::from_ln(log_sum_exp(&logs)))
    }
}

impl Kernel {
    fn new(chain: &ChainSpec, n: usize) -> Kernel {
        match chain.mode() {
            NumericMode::Exact => Kernel::Exact(ExactKernel::new(chain, n)),
            NumericMode::Float => Kernel::Float(FloatKernel::new(chain, n)),
            NumericMode::LogSpace => Kernel::Log(LogKernel::new(chain, n)),
        }
    }

    fn eval(&self, terms: &[Term]) -> ProbValue {
        match self {
            Kernel::Exact(k) => k.eval(terms),
            Kernel::Float(k) => k.eval(terms),
            Kernel::Log(k) => k.eval(terms),
        }
    }
}

/// Evaluator for one chain and one horizon. Tables are built once in
/// [`ClosedForm::new`] and reused for every `k`.
pub struct ClosedForm<'c> {
    chain: &'c ChainSpec,
    n: usize,
    bound: SumBound,
    kernel: Kernel,
}

impl<'c> ClosedForm<'c> {
    pub fn new(chain: &'c ChainSpec, n: usize) -> Result<ClosedForm<'c>> {
        if n == 0 {
            return Err(Error::InvalidArgument("horizon N must be at least 1".into()));
        }
        Ok(ClosedForm {
            chain,
            n,
            bound: SumBound::Limits,
            kernel: Kernel::new(chain, n),
        })
    }

    pub fn with_bound(mut self, bound: SumBound) -> ClosedForm<'c> {
        self.bound = bound;
        self
    }

    pub fn horizon(&self) -> usize {
        self.n
    }

    pub fn chain(&self) -> &ChainSpec {
        self.chain
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k > self.n {
            return Err(Error::InvalidArgument(format!(
                "k = {k} exceeds the horizon N = {}",
                self.n
            )));
        }
        Ok(())
    }

    /// `P1(k, N | S1)`: probability of `k` visits to `S1` given the chain
    /// starts in `S1`.
    pub fn given_s1(&self, k: usize) -> Result<ProbValue> {
        self.check_k(k)?;
        Ok(self.kernel.eval(&terms(k, self.n, State::S1, self.bound)?))
    }

    /// `P2(k, N | S0)`: probability of `k` visits to `S1` given the chain
    /// starts in `S0`.
    pub fn given_s0(&self, k: usize) -> Result<ProbValue> {
        self.check_k(k)?;
        Ok(self.kernel.eval(&terms(k, self.n, State::S0, self.bound)?))
    }

    /// `P(N1 = k | N)`.
    pub fn visits_s1(&self, k: usize) -> Result<ProbValue> {
        let from_s1 = self.chain.p1().checked_mul(&self.given_s1(k)?)?;
        let from_s0 = self.chain.p0().checked_mul(&self.given_s0(k)?)?;
        from_s1.checked_add(&from_s0)
    }

    /// `P(N_target = k | N)`. Visits to `S0` use `P(N0 = k) = P(N1 = N - k)`.
    pub fn visits(&self, k: usize, target: State) -> Result<ProbValue> {
        self.check_k(k)?;
        match target {
            State::S1 => self.visits_s1(k),
            State::S0 => self.visits_s1(self.n - k),
        }
    }

    /// Number of symbolic summands behind `P(N1 = k | N)`.
    pub fn term_count(&self, k: usize) -> Result<usize> {
        self.check_k(k)?;
        Ok(terms(k, self.n, State::S1, self.bound)?.len() + terms(k, self.n, State::S0, self.bound)?.len())
    }

    pub fn distribution(&self, target: State) -> Result<VisitDistribution> {
        let mut mass: Vec<ProbValue> = (0..=self.n).map(|k| self.visits_s1(k)).collect::<Result<_>>()?;
        if target == State::S0 {
            mass.reverse();
        }
        VisitDistribution::new(target, mass)
    }
}

/// `P1(k, N | S1)` for one `(k, N)`.
pub fn p1_given_s1(k: usize, n: usize, chain: &ChainSpec) -> Result<ProbValue> {
    ClosedForm::new(chain, n)?.given_s1(k)
}

/// `P2(k, N | S0)` for one `(k, N)`.
pub fn p2_given_s0(k: usize, n: usize, chain: &ChainSpec) -> Result<ProbValue> {
    ClosedForm::new(chain, n)?.given_s0(k)
}

pub fn visit_probability(query: &VisitQuery, chain: &ChainSpec) -> Result<ProbValue> {
    ClosedForm::new(chain, query.horizon_n())?.visits(query.visits_k(), query.target())
}

/// Same quantity as [`visit_probability`], reached by relabelling the chain:
/// visits to `S0` in `chain` are visits to `S1` in `swap_labels(chain)`.
pub fn visit_probability_by_relabel(query: &VisitQuery, chain: &ChainSpec) -> Result<ProbValue> {
    let swapped = swap_labels(chain);
    let cf = ClosedForm::new(&swapped, query.horizon_n())?;
    match query.target() {
        State::S0 => cf.visits_s1(query.visits_k()),
        State::S1 => cf.visits(query.visits_k(), State::S0),
    }
}

pub fn visit_distribution(n: usize, target: State, chain: &ChainSpec) -> Result<VisitDistribution> {
    ClosedForm::new(chain, n)?.distribution(target)
}

/// `P(N_target = k | N)` for `k = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitDistribution {
    target: State,
    mass: Vec<ProbValue>,
}

impl VisitDistribution {
    /// `mass[k]` for `k = 0..=N`; needs at least two entries, all in one mode.
    pub fn new(target: State, mass: Vec<ProbValue>) -> Result<VisitDistribution> {
        if mass.len() < 2 {
            return Err(Error::InvalidArgument("a distribution needs N >= 1".into()));
        }
        let mode = mass[0].mode();
        if let Some(bad) = mass.iter().find(|m| m.mode() != mode) {
            return Err(Error::BackendMismatch {
                expected: mode,
                found: bad.mode(),
            });
        }
        Ok(VisitDistribution { target, mass })
    }

    pub fn horizon_n(&self) -> usize {
        self.mass.len() - 1
    }

    pub fn target(&self) -> State {
        self.target
    }

    pub fn mode(&self) -> NumericMode {
        self.mass[0].mode()
    }

    pub fn mass(&self) -> &[ProbValue] {
        &self.mass
    }

    pub fn get(&self, k: usize) -> Option<&ProbValue> {
        self.mass.get(k)
    }

    pub fn total(&self) -> ProbValue {
        sum_values(self.mode(), &self.mass).expect("entries share one mode")
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.mass.iter().map(ProbValue::to_f64).collect()
    }

    pub fn to_mode(&self, mode: NumericMode) -> VisitDistribution {
        VisitDistribution {
            target: self.target,
            mass: self.mass.iter().map(|m| m.convert(mode)).collect(),
        }
    }
}

/// A real number that is exact when the distribution was.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Exact(BigRational),
    Float(f64),
}

impl Scalar {
    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => ratio_to_f64(r),
            Scalar::Float(x) => *x,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub mean: Scalar,
    pub variance: Scalar,
}

/// Mean and variance of the visit count.
pub fn moments(dist: &VisitDistribution) -> Moments {
    match dist.mode() {
        NumericMode::Exact => {
            let mut mean = BigRational::zero();
            let mut second = BigRational::zero();
            for (k, m) in dist.mass().iter().enumerate() {
                let m = m.as_exact().expect("exact distribution");
                let kk = BigRational::from_integer(k.into());
                mean += &kk * m;
                second += &kk * &kk * m;
            }
            let variance = second - &mean * &mean;
            Moments {
                mean: Scalar::Exact(mean),
                variance: Scalar::Exact(variance),
            }
        }
        _ => {
            let mut mean = CompensatedSum::default();
            let mut second = CompensatedSum::default();
            for (k, m) in dist.to_f64_vec().into_iter().enumerate() {
                mean.add(k as f64 * m);
                second.add((k * k) as f64 * m);
            }
            let mean = mean.value();
            Moments {
                mean: Scalar::Float(mean),
                variance: Scalar::Float((second.value() - mean * mean).max(0.0)),
            }
        }
    }
}
