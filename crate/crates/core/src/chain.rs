//! The two-state chain and the trajectory-length convention.
//!
//! A chain is given by three numbers: `p01` (probability of moving `S0 -> S1`),
//! `p10` (`S1 -> S0`) and `p1` (probability of starting in `S1`). The
//! self-transition probabilities and `p0` are always derived as complements,
//! so the row sums hold by construction.
//!
//! A horizon of `N` means `N` occupied positions: one initial placement
//! followed by `N - 1` transitions. The initial placement counts as a visit.

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, Signed};

use crate::error::{Error, Result};
use crate::numerics::{convert, NumericMode, ProbValue};

/// One of the two states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum State {
    S0,
    S1,
}

impl State {
    pub fn other(self) -> State {
        match self {
            State::S0 => State::S1,
            State::S1 => State::S0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            State::S0 => 0,
            State::S1 => 1,
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            State::S0 => "S0",
            State::S1 => "S1",
        })
    }
}

impl FromStr for State {
    type Err = Error;

    fn from_str(s: &str) -> Result<State> {
        match s.trim().to_ascii_lowercase().as_str() {
            "0" | "s0" => Ok(State::S0),
            "1" | "s1" => Ok(State::S1),
            other => Err(Error::InvalidArgument(format!("unknown state {other:?}"))),
        }
    }
}

/// How many times each of the four transition kinds occurs along a path.
/// Read as a monomial `p11^s11 p10^s10 p01^s01 p00^s00`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TransitionCounts {
    pub s11: u64,
    pub s10: u64,
    pub s01: u64,
    pub s00: u64,
}

impl TransitionCounts {
    pub fn total(&self) -> u64 {
        self.s11 + self.s10 + self.s01 + self.s00
    }

    pub fn record(&mut self, from: State, to: State) {
        match (from, to) {
            (State::S0, State::S0) => self.s00 += 1,
            (State::S0, State::S1) => self.s01 += 1,
            (State::S1, State::S0) => self.s10 += 1,
            (State::S1, State::S1) => self.s11 += 1,
        }
    }

    /// Value of the monomial for `chain`, in the chain's mode.
    pub fn evaluate(&self, chain: &ChainSpec) -> ProbValue {
        [
            (chain.p11(), self.s11),
            (chain.p10(), self.s10),
            (chain.p01(), self.s01),
            (chain.p00(), self.s00),
        ]
        .iter()
        .fold(ProbValue::one(chain.mode()), |acc, (p, e)| {
            acc.checked_mul(&p.pow(*e)).expect("chain values share one mode")
        })
    }
}

impl fmt::Display for TransitionCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let factors: Vec<String> = [("p11", self.s11), ("p10", self.s10), ("p01", self.s01), ("p00", self.s00)]
            .iter()
            .filter(|(_, e)| *e > 0)
            .map(|(name, e)| if *e == 1 { name.to_string() } else { format!("{name}^{e}") })
            .collect();
        if factors.is_empty() {
            f.write_str("1")
        } else {
            f.write_str(&factors.join(" "))
        }
    }
}

/// A validated two-state chain in a fixed numeric mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    mode: NumericMode,
    p01: ProbValue,
    p10: ProbValue,
    p1: ProbValue,
    p00: ProbValue,
    p11: ProbValue,
    p0: ProbValue,
}

fn check_range(field: &str, value: &ProbValue) -> Result<()> {
    let ok = match value {
        ProbValue::Exact(r) => !r.is_negative() && *r <= BigRational::one(),
        ProbValue::Float(x) => x.is_finite() && (0.0..=1.0).contains(x),
        ProbValue::LogSpace(l) => {
            let ln = l.ln();
            !ln.is_nan() && ln <= 0.0
        }
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidProbability {
            field: field.to_string(),
            value: value.to_string(),
        })
    }
}

/// Validates the three canonical parameters and derives the complements in
/// `mode`. Inputs in another mode are converted first.
pub fn build_chain(p01: &ProbValue, p10: &ProbValue, p1: &ProbValue, mode: NumericMode) -> Result<ChainSpec> {
    check_range("p01", p01)?;
    check_range("p10", p10)?;
    check_range("p1", p1)?;
    let p01 = convert(p01, mode);
    let p10 = convert(p10, mode);
    let p1 = convert(p1, mode);
    Ok(ChainSpec {
        mode,
        p00: p01.complement(),
        p11: p10.complement(),
        p0: p1.complement(),
        p01,
        p10,
        p1,
    })
}

/// Exchanges the roles of `S0` and `S1`.
pub fn swap_labels(chain: &ChainSpec) -> ChainSpec {
    ChainSpec {
        mode: chain.mode,
        p01: chain.p10.clone(),
        p10: chain.p01.clone(),
        p1: chain.p0.clone(),
        p00: chain.p11.clone(),
        p11: chain.p00.clone(),
        p0: chain.p1.clone(),
    }
}

impl ChainSpec {
    /// Parses each parameter as `"a/b"` or a decimal; errors name the field.
    pub fn parse(p01: &str, p10: &str, p1: &str, mode: NumericMode) -> Result<ChainSpec> {
        let field = |name: &str, s: &str| {
            ProbValue::parse(s, mode).map_err(|e| match e {
                Error::InvalidProbability { .. } => Error::InvalidProbability {
                    field: name.to_string(),
                    value: s.trim().to_string(),
                },
                other => other,
            })
        };
        build_chain(&field("p01", p01)?, &field("p10", p10)?, &field("p1", p1)?, mode)
    }

    /// Exact chain from rationals given as `(num, den)` pairs.
    pub fn exact(p01: (i64, i64), p10: (i64, i64), p1: (i64, i64)) -> Result<ChainSpec> {
        let v = |name: &str, (n, d): (i64, i64)| {
            ProbValue::exact(n, d).map_err(|_| Error::InvalidProbability {
                field: name.to_string(),
                value: format!("{n}/{d}"),
            })
        };
        build_chain(&v("p01", p01)?, &v("p10", p10)?, &v("p1", p1)?, NumericMode::Exact)
    }

    pub fn float(p01: f64, p10: f64, p1: f64) -> Result<ChainSpec> {
        build_chain(
            &ProbValue::Float(p01),
            &ProbValue::Float(p10),
            &ProbValue::Float(p1),
            NumericMode::Float,
        )
    }

    /// The same chain re-expressed in another mode.
    pub fn to_mode(&self, mode: NumericMode) -> ChainSpec {
        if mode == self.mode {
            return self.clone();
        }
        build_chain(&self.p01, &self.p10, &self.p1, mode).expect("a valid chain stays valid")
    }

    pub fn mode(&self) -> NumericMode {
        self.mode
    }

    pub fn p01(&self) -> &ProbValue {
        &self.p01
    }

    pub fn p10(&self) -> &ProbValue {
        &self.p10
    }

    pub fn p00(&self) -> &ProbValue {
        &self.p00
    }

    pub fn p11(&self) -> &ProbValue {
        &self.p11
    }

    pub fn p1(&self) -> &ProbValue {
        &self.p1
    }

    pub fn p0(&self) -> &ProbValue {
        &self.p0
    }

    pub fn transition(&self, from: State, to: State) -> &ProbValue {
        match (from, to) {
            (State::S0, State::S0) => &self.p00,
            (State::S0, State::S1) => &self.p01,
            (State::S1, State::S0) => &self.p10,
            (State::S1, State::S1) => &self.p11,
        }
    }

    pub fn initial(&self, state: State) -> &ProbValue {
        match state {
            State::S0 => &self.p0,
            State::S1 => &self.p1,
        }
    }

    pub fn swap_labels(&self) -> ChainSpec {
        swap_labels(self)
    }
}

impl fmt::Display for ChainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p01={} p10={} p1={} ({})", self.p01, self.p10, self.p1, self.mode)
    }
}

/// "How likely is `target` to be occupied exactly `visits_k` times in a
/// trajectory of `horizon_n` positions?"
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VisitQuery {
    horizon_n: usize,
    visits_k: usize,
    target: State,
}

impl VisitQuery {
    pub fn new(horizon_n: usize, visits_k: usize, target: State) -> Result<VisitQuery> {
        if horizon_n == 0 {
            return Err(Error::InvalidArgument("horizon N must be at least 1".into()));
        }
        if visits_k > horizon_n {
            return Err(Error::InvalidArgument(format!(
                "k = {visits_k} exceeds the horizon N = {horizon_n}"
            )));
        }
        Ok(VisitQuery {
            horizon_n,
            visits_k,
            target,
        })
    }

    pub fn horizon_n(&self) -> usize {
        self.horizon_n
    }

    pub fn visits_k(&self) -> usize {
        self.visits_k
    }

    pub fn target(&self) -> State {
        self.target
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> ProbValue {
        ProbValue::exact(n, d).unwrap()
    }

    #[test]
    fn symmetric_chain() {
        let c = ChainSpec::exact((1, 2), (1, 2), (1, 2)).unwrap();
        assert_eq!(c.p00(), &q(1, 2));
        assert_eq!(c.p11(), &q(1, 2));
        assert_eq!(swap_labels(&c), c);
    }

    #[test]
    fn complements() {
        let c = ChainSpec::exact((3, 10), (2, 5), (1, 2)).unwrap();
        assert_eq!(c.p00(), &q(7, 10));
        assert_eq!(c.p11(), &q(3, 5));
        assert_eq!(c.p0(), &q(1, 2));
        assert_eq!(c.p00().checked_add(c.p01()).unwrap(), q(1, 1));
        assert_eq!(c.p11().checked_add(c.p10()).unwrap(), q(1, 1));
    }

    #[test]
    fn out_of_range_names_the_field() {
        let err = ChainSpec::parse("1.2", "0.5", "0.5", NumericMode::Float).unwrap_err();
        assert_eq!(
            err,
            Error::InvalidProbability {
                field: "p01".into(),
                value: "1.2".into()
            }
        );
        let err = ChainSpec::exact((1, 2), (3, 2), (1, 2)).unwrap_err();
        assert!(matches!(err, Error::InvalidProbability { ref field, .. } if field == "p10"));
        let err = build_chain(&q(1, 2), &q(1, 2), &ProbValue::Float(f64::NAN), NumericMode::Float).unwrap_err();
        assert!(matches!(err, Error::InvalidProbability { ref field, .. } if field == "p1"));
    }

    #[test]
    fn swap_definition_and_involution() {
        let c = ChainSpec::exact((3, 10), (2, 5), (1, 2)).unwrap();
        let s = swap_labels(&c);
        assert_eq!(s.p01(), &q(2, 5));
        assert_eq!(s.p10(), &q(3, 10));
        assert_eq!(s.p1(), &q(1, 2));
        assert_eq!(s.p00(), c.p11());
        assert_eq!(swap_labels(&s), c);

        let f = ChainSpec::float(0.1, 0.7, 0.25).unwrap();
        assert_eq!(swap_labels(&swap_labels(&f)), f);
    }

    #[test]
    fn float_row_sums() {
        let c = ChainSpec::float(0.3, 0.4, 0.9).unwrap();
        assert!((c.p00().to_f64() + c.p01().to_f64() - 1.0).abs() <= 1e-12);
        assert!((c.p0().to_f64() + c.p1().to_f64() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn queries() {
        assert!(VisitQuery::new(0, 0, State::S1).is_err());
        assert!(VisitQuery::new(8, 9, State::S1).is_err());
        assert_eq!(VisitQuery::new(8, 8, State::S0).unwrap().visits_k(), 8);
    }

    #[test]
    fn monomial_rendering() {
        let m = TransitionCounts {
            s11: 2,
            s10: 2,
            s01: 1,
            s00: 2,
        };
        assert_eq!(m.to_string(), "p11^2 p10^2 p01 p00^2");
        assert_eq!(TransitionCounts::default().to_string(), "1");
    }
}
