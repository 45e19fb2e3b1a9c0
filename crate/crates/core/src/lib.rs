//! Exact distributions of visit counts in two-state Markov chains.
//!
//! Given a chain over states `S0` and `S1` with transition probabilities
//! `p01` (`S0 -> S1`) and `p10` (`S1 -> S0`) and initial probability `p1` of
//! starting in `S1`, this crate computes `P(N1 = k | N)`: the probability that
//! a trajectory of `N` positions occupies `S1` exactly `k` times. The initial
//! placement counts as a visit, so a horizon of `N` contains `N - 1`
//! transitions.
//!
//! ```
//! use visitprob::{ChainSpec, ClosedForm, ProbValue, State};
//!
//! let chain = ChainSpec::parse("3/10", "2/5", "1/2", visitprob::NumericMode::Exact)?;
//! let cf = ClosedForm::new(&chain, 2)?;
//! // Starting in S1 and leaving it on the single transition.
//! assert_eq!(cf.given_s1(1)?, *chain.p10());
//! let dist = cf.distribution(State::S1)?;
//! assert_eq!(dist.total(), ProbValue::one(visitprob::NumericMode::Exact));
//! # Ok::<(), visitprob::Error>(())
//! ```
//!
//! The closed form lives in [`closed_form`]; [`oracle`] provides brute-force
//! enumeration and a seeded simulator to check it against, and [`validation`]
//! runs those checks over parameter grids. The `book/` directory at the
//! repository root explains the derivation chapter by chapter; its code
//! snippets are compiled and run as doc-tests of this crate.

pub mod chain;
pub mod closed_form;
pub mod combinatorics;
mod error;
pub mod numerics;
pub mod oracle;
pub mod validation;

pub use chain::{build_chain, swap_labels, ChainSpec, State, TransitionCounts, VisitQuery};
pub use closed_form::{
    limits, moments, p1_given_s1, p2_given_s0, visit_distribution, visit_probability, ClosedForm, Moments, Scalar,
    SumBound, SummationLimits, VisitDistribution,
};
pub use error::{Error, Result};
pub use numerics::{convert, pow_prob, sum_values, LogProb, NumericMode, ProbValue};
pub use oracle::{
    census_by_j, enumerate_trajectories, oracle_distribution, simulate, total_variation, CensusCell,
    SimulationResult, TrajectoryRecord,
};

// Run the guide's code blocks as doc-tests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/chain-model.md")]
    mod chain_model {}
    #[doc = include_str!("../../../book/src/weak-compositions.md")]
    mod weak_compositions {}
    #[doc = include_str!("../../../book/src/closed-form.md")]
    mod closed_form {}
    #[doc = include_str!("../../../book/src/numeric-backends.md")]
    mod numeric_backends {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
