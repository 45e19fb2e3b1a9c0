//! Ground truth that does not go through the closed form.
//!
//! [`enumerate_trajectories`] walks all `2^N` state sequences with their
//! exact path probabilities, [`census_by_j`] groups one endpoint class of
//! those paths by the number of `S1 -> S0` transitions, and [`simulate`]
//! samples trajectories with a seeded generator.
//!
//! # Simulator generator
//!
//! Sampling uses xoshiro256++ seeded through SplitMix64
//! (`Xoshiro256PlusPlus::seed_from_u64`). A uniform draw is the top 53 bits
//! of one output scaled by `2^-53`. Worker `w` of a multi-worker run starts
//! from the base stream advanced by `w` calls to `jump()` (2^128 steps each),
//! so results are reproducible for a fixed `(seed, workers)` pair.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::chain::{ChainSpec, State, TransitionCounts};
use crate::closed_form::{term_for_path_class, VisitDistribution};
use crate::error::{Error, Result};
use crate::numerics::{ratio_to_f64, CompensatedSum, NumericMode, ProbValue};

/// Largest horizon [`enumerate_trajectories`] accepts by default.
pub const DEFAULT_TRAJECTORY_GUARD: usize = 25;

/// One state sequence with its probability and transition census.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub states: Vec<State>,
    pub probability: ProbValue,
    pub visits_s1: usize,
    pub transitions: TransitionCounts,
}

impl TrajectoryRecord {
    /// Number of `S1 -> S0` transitions, the index the closed-form sums run over.
    pub fn j_s1_to_s0(&self) -> usize {
        self.transitions.s10 as usize
    }

    pub fn initial(&self) -> State {
        self.states[0]
    }

    pub fn last(&self) -> State {
        self.states[self.states.len() - 1]
    }
}

/// Lexicographic stream over all trajectories (`S0 < S1`, first position
/// most significant). Only the current path and its prefix probabilities
/// are held in memory; advancing recomputes just the changed suffix.
pub struct Trajectories<'c> {
    chain: &'c ChainSpec,
    n: usize,
    next_index: u64,
    end: u64,
    states: Vec<State>,
    /// `prefix[d]` is the probability of `states[..=d]`.
    prefix: Vec<ProbValue>,
}

impl<'c> Trajectories<'c> {
    fn refresh_from(&mut self, from: usize) {
        for d in from..self.n {
            self.prefix[d] = if d == 0 {
                self.chain.initial(self.states[0]).clone()
            } else {
                self.prefix[d - 1]
                    .checked_mul(self.chain.transition(self.states[d - 1], self.states[d]))
                    .expect("chain values share one mode")
            };
        }
    }
}

impl Iterator for Trajectories<'_> {
    type Item = TrajectoryRecord;

    fn next(&mut self) -> Option<TrajectoryRecord> {
        if self.next_index == self.end {
            return None;
        }
        let index = self.next_index;
        if index == 0 {
            self.refresh_from(0);
        } else {
            // Incrementing flips the lowest zero bit to one and clears the bits below it.
            let flipped = index.trailing_zeros() as usize;
            let first_changed = self.n - 1 - flipped;
            for d in first_changed..self.n {
                let bit = (index >> (self.n - 1 - d)) & 1;
                self.states[d] = if bit == 1 { State::S1 } else { State::S0 };
            }
            self.refresh_from(first_changed);
        }
        self.next_index += 1;

        let mut transitions = TransitionCounts::default();
        for w in self.states.windows(2) {
            transitions.record(w[0], w[1]);
        }
        Some(TrajectoryRecord {
            states: self.states.clone(),
            probability: self.prefix[self.n - 1].clone(),
            visits_s1: self.states.iter().filter(|&&s| s == State::S1).count(),
            transitions,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.end - self.next_index) as usize;
        (left, Some(left))
    }
}

/// Streams all `2^n` trajectories of `chain`, refusing `n` above `guard`.
pub fn enumerate_trajectories_guarded(n: usize, chain: &ChainSpec, guard: usize) -> Result<Trajectories<'_>> {
    if n == 0 {
        return Err(Error::InvalidArgument("horizon N must be at least 1".into()));
    }
    if n > guard || n > 63 {
        return Err(Error::TrajectoryGuard { n, guard });
    }
    Ok(Trajectories {
        chain,
        n,
        next_index: 0,
        end: 1u64 << n,
        states: vec![State::S0; n],
        prefix: vec![ProbValue::zero(chain.mode()); n],
    })
}

/// [`enumerate_trajectories_guarded`] with the default guard.
pub fn enumerate_trajectories(n: usize, chain: &ChainSpec) -> Result<Trajectories<'_>> {
    enumerate_trajectories_guarded(n, chain, DEFAULT_TRAJECTORY_GUARD)
}

/// Visit distribution by brute force, under an explicit guard.
pub fn oracle_distribution_guarded(n: usize, target: State, chain: &ChainSpec, guard: usize) -> Result<VisitDistribution> {
    let mode = chain.mode();
    let mut mass = vec![ProbValue::zero(mode); n + 1];
    for record in enumerate_trajectories_guarded(n, chain, guard)? {
        let k = match target {
            State::S1 => record.visits_s1,
            State::S0 => n - record.visits_s1,
        };
        mass[k] = mass[k].checked_add(&record.probability)?;
    }
    VisitDistribution::new(target, mass)
}

/// Visit distribution by summing path probabilities over all trajectories.
pub fn oracle_distribution(n: usize, target: State, chain: &ChainSpec) -> Result<VisitDistribution> {
    oracle_distribution_guarded(n, target, chain, DEFAULT_TRAJECTORY_GUARD)
}

/// Paths of one endpoint class sharing a number of `S1 -> S0` transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct CensusCell {
    pub j: usize,
    pub count: u64,
    /// The monomial every path in the cell carries.
    pub monomial: TransitionCounts,
    /// Value of that monomial for the chain (one path's weight without the
    /// initial probability).
    pub term: ProbValue,
    /// Path count the matching closed-form term predicts (product of its
    /// two binomials), if the closed form has such a term.
    pub expected_count: Option<BigUint>,
}

impl CensusCell {
    pub fn matches_closed_form(&self) -> bool {
        self.expected_count.as_ref() == Some(&BigUint::from(self.count))
    }
}

/// Groups trajectories with `k` visits to `S1`, starting in `initial` and
/// ending in `last`, by their `S1 -> S0` count. Fails if two paths in one
/// group carry different monomials.
pub fn census_by_j_guarded(
    n: usize,
    k: usize,
    initial: State,
    last: State,
    chain: &ChainSpec,
    guard: usize,
) -> Result<BTreeMap<usize, CensusCell>> {
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds the horizon N = {n}")));
    }
    let mut cells: BTreeMap<usize, CensusCell> = BTreeMap::new();
    for record in enumerate_trajectories_guarded(n, chain, guard)? {
        if record.visits_s1 != k || record.initial() != initial || record.last() != last {
            continue;
        }
        let j = record.j_s1_to_s0();
        match cells.get_mut(&j) {
            Some(cell) => {
                if cell.monomial != record.transitions {
                    return Err(Error::HeterogeneousCell {
                        j,
                        first: cell.monomial.to_string(),
                        other: record.transitions.to_string(),
                    });
                }
                cell.count += 1;
            }
            None => {
                let expected_count = term_for_path_class(n, k, initial, last, j)?.map(|t| t.path_count());
                cells.insert(
                    j,
                    CensusCell {
                        j,
                        count: 1,
                        monomial: record.transitions,
                        term: record.transitions.evaluate(chain),
                        expected_count,
                    },
                );
            }
        }
    }
    Ok(cells)
}

pub fn census_by_j(n: usize, k: usize, initial: State, last: State, chain: &ChainSpec) -> Result<BTreeMap<usize, CensusCell>> {
    census_by_j_guarded(n, k, initial, last, chain, DEFAULT_TRAJECTORY_GUARD)
}

/// Histogram of simulated `S1` visit counts.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
    /// `counts[k]` trajectories visited `S1` exactly `k` times.
    pub counts: Vec<u64>,
    pub elapsed: Duration,
}

impl SimulationResult {
    pub fn horizon_n(&self) -> usize {
        self.counts.len() - 1
    }

    /// Empirical frequencies `counts[k] / trials`, exact.
    pub fn empirical(&self) -> VisitDistribution {
        let mass = self
            .counts
            .iter()
            .map(|&c| ProbValue::Exact(BigRational::new(c.into(), self.trials.into())))
            .collect();
        VisitDistribution::new(State::S1, mass).expect("non-empty histogram")
    }
}

#[inline]
fn uniform(rng: &mut Xoshiro256PlusPlus) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn run_trials(n: usize, params: &[f64; 3], trials: u64, rng: &mut Xoshiro256PlusPlus, counts: &mut [u64]) {
    let [p01, p10, p1] = *params;
    for _ in 0..trials {
        let mut in_s1 = uniform(rng) < p1;
        let mut visits = in_s1 as usize;
        for _ in 1..n {
            let leave = if in_s1 { p10 } else { p01 };
            if uniform(rng) < leave {
                in_s1 = !in_s1;
            }
            visits += in_s1 as usize;
        }
        counts[visits] += 1;
    }
}

/// Samples `trials` trajectories on one stream.
pub fn simulate(n: usize, chain: &ChainSpec, trials: u64, seed: u64) -> Result<SimulationResult> {
    simulate_with_workers(n, chain, trials, seed, 1)
}

/// Samples `trials` trajectories split over `workers` independent sub-streams.
/// Workers run on scoped threads; worker `w` takes `trials / workers` trials,
/// plus one if `w < trials % workers`.
pub fn simulate_with_workers(n: usize, chain: &ChainSpec, trials: u64, seed: u64, workers: usize) -> Result<SimulationResult> {
    if n == 0 {
        return Err(Error::InvalidArgument("horizon N must be at least 1".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    if workers == 0 {
        return Err(Error::InvalidArgument("need at least one worker".into()));
    }
    let float = chain.to_mode(NumericMode::Float);
    let params = [float.p01().to_f64(), float.p10().to_f64(), float.p1().to_f64()];
    let started = Instant::now();

    let mut streams = Vec::with_capacity(workers);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    for _ in 0..workers {
        streams.push(rng.clone());
        rng.jump();
    }
    let share = |w: usize| trials / workers as u64 + u64::from((w as u64) < trials % workers as u64);

    let mut counts = vec![0u64; n + 1];
    if workers == 1 {
        run_trials(n, &params, trials, &mut streams[0], &mut counts);
    } else {
        let partials: Vec<Vec<u64>> = std::thread::scope(|scope| {
            let handles: Vec<_> = streams
                .into_iter()
                .enumerate()
                .map(|(w, mut stream)| {
                    let params = &params;
                    scope.spawn(move || {
                        let mut local = vec![0u64; n + 1];
                        run_trials(n, params, share(w), &mut stream, &mut local);
                        local
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("simulation worker panicked")).collect()
        });
        for partial in partials {
            for (c, p) in counts.iter_mut().zip(partial) {
                *c += p;
            }
        }
    }

    Ok(SimulationResult {
        trials,
        seed,
        workers,
        counts,
        elapsed: started.elapsed(),
    })
}

/// Half the L1 distance between two distributions over the same horizon.
/// Exact when both inputs are exact.
pub fn total_variation(a: &VisitDistribution, b: &VisitDistribution) -> Result<f64> {
    if a.horizon_n() != b.horizon_n() {
        return Err(Error::HorizonMismatch {
            left: a.horizon_n(),
            right: b.horizon_n(),
        });
    }
    if a.mode() == NumericMode::Exact && b.mode() == NumericMode::Exact {
        let mut acc = BigRational::zero();
        for (x, y) in a.mass().iter().zip(b.mass()) {
            acc += (x.to_ratio() - y.to_ratio()).abs();
        }
        return Ok(ratio_to_f64(&(acc / BigRational::from_integer(2.into()))));
    }
    let mut acc = CompensatedSum::default();
    for (x, y) in a.to_f64_vec().into_iter().zip(b.to_f64_vec()) {
        acc.add((x - y).abs());
    }
    Ok((acc.value() / 2.0).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::sum_values;

    fn mixed() -> ChainSpec {
        ChainSpec::exact((3, 10), (2, 5), (1, 2)).unwrap()
    }

    #[test]
    fn single_position_paths() {
        let c = mixed();
        let records: Vec<_> = enumerate_trajectories(1, &c).unwrap().collect();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].probability, *c.p0());
        assert_eq!(records[1].probability, *c.p1());
    }

    #[test]
    fn two_position_paths() {
        let c = mixed();
        let records: Vec<_> = enumerate_trajectories(2, &c).unwrap().collect();
        assert_eq!(records.len(), 4);
        let s1s0 = &records[2];
        assert_eq!(s1s0.states, vec![State::S1, State::S0]);
        assert_eq!(s1s0.probability, c.p1().checked_mul(c.p10()).unwrap());
    }

    #[test]
    fn lexicographic_and_complete() {
        let c = mixed();
        let records: Vec<_> = enumerate_trajectories(6, &c).unwrap().collect();
        assert_eq!(records.len(), 64);
        assert!(records.windows(2).all(|w| w[0].states < w[1].states));
        let probs: Vec<ProbValue> = records.iter().map(|r| r.probability.clone()).collect();
        assert_eq!(sum_values(NumericMode::Exact, &probs).unwrap(), ProbValue::one(NumericMode::Exact));
        for r in &records {
            assert_eq!(r.transitions.total(), 5);
            assert_eq!(r.visits_s1, r.states.iter().filter(|&&s| s == State::S1).count());
            // Independent recomputation of the path weight.
            let mut p = c.initial(r.states[0]).clone();
            for w in r.states.windows(2) {
                p = p.checked_mul(c.transition(w[0], w[1])).unwrap();
            }
            assert_eq!(p, r.probability);
        }
    }

    #[test]
    fn degenerate_paths_are_kept() {
        let c = ChainSpec::exact((0, 1), (1, 1), (1, 1)).unwrap();
        let records: Vec<_> = enumerate_trajectories(4, &c).unwrap().collect();
        assert_eq!(records.len(), 16);
        assert_eq!(records.iter().filter(|r| !r.probability.is_zero()).count(), 1);
    }

    #[test]
    fn guard() {
        let c = mixed();
        assert_eq!(
            enumerate_trajectories(26, &c).err().unwrap(),
            Error::TrajectoryGuard { n: 26, guard: 25 }
        );
        assert!(enumerate_trajectories_guarded(3, &c, 2).is_err());
        assert!(enumerate_trajectories(0, &c).is_err());
    }

    #[test]
    fn census_of_the_eight_step_example() {
        let c = mixed();
        let cells = census_by_j(8, 4, State::S1, State::S0, &c).unwrap();
        let counts: Vec<(usize, u64)> = cells.values().map(|c| (c.j, c.count)).collect();
        assert_eq!(counts, vec![(1, 1), (2, 9), (3, 9), (4, 1)]);
        assert!(cells.values().all(CensusCell::matches_closed_form));
        assert_eq!(cells[&2].monomial.to_string(), "p11^2 p10^2 p01 p00^2");
    }

    #[test]
    fn census_single_path() {
        let cells = census_by_j(2, 1, State::S1, State::S0, &mixed()).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[&1].count, 1);
    }

    #[test]
    fn deterministic_chain_simulation() {
        let c = ChainSpec::exact((1, 3), (0, 1), (1, 1)).unwrap();
        for seed in [0, 1, 42, u64::MAX] {
            let r = simulate(6, &c, 500, seed).unwrap();
            assert_eq!(r.counts[6], 500);
        }
    }

    #[test]
    fn simulation_is_reproducible() {
        let c = mixed();
        let a = simulate(8, &c, 1000, 42).unwrap();
        let b = simulate(8, &c, 1000, 42).unwrap();
        assert_eq!(a.counts, b.counts);
        assert_eq!(a.counts.iter().sum::<u64>(), 1000);
        let w1 = simulate_with_workers(8, &c, 1001, 7, 3).unwrap();
        let w2 = simulate_with_workers(8, &c, 1001, 7, 3).unwrap();
        assert_eq!(w1.counts, w2.counts);
        assert_eq!(w1.counts.iter().sum::<u64>(), 1001);
        assert!(simulate(8, &c, 0, 1).is_err());
    }

    #[test]
    fn total_variation_examples() {
        let c = mixed();
        let d = oracle_distribution(5, State::S1, &c).unwrap();
        assert_eq!(total_variation(&d, &d).unwrap(), 0.0);
        let one = ProbValue::one(NumericMode::Exact);
        let zero = ProbValue::zero(NumericMode::Exact);
        let low = VisitDistribution::new(State::S1, vec![one.clone(), zero.clone(), zero.clone()]).unwrap();
        let high = VisitDistribution::new(State::S1, vec![zero.clone(), zero, one]).unwrap();
        assert_eq!(total_variation(&low, &high).unwrap(), 1.0);
        assert!(matches!(total_variation(&low, &d), Err(Error::HorizonMismatch { .. })));
    }
}
