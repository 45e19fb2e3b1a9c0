//! Acceptance gate. Each criterion prints one `PASS` or `FAIL` line; the
//! process exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use visitprob::validation::Grid;
use visitprob::{
    census_by_j, oracle_distribution, simulate, swap_labels, total_variation, visit_distribution,
    visit_probability, ChainSpec, ClosedForm, NumericMode, ProbValue, State, SumBound, TransitionCounts,
    VisitQuery,
};

const SMALL_N_MAX: usize = 12;
const EXACT_NORMALIZATION_N_MAX: usize = 200;
const FLOAT_NORMALIZATION_N_MAX: usize = 1000;
const NORMALIZATION_TOL: f64 = 1e-9;
const MC_TRIALS: u64 = 1_000_000;
const MC_SEED: u64 = 20_240_601;
const MC_TV_TOL: f64 = 0.005;
const BOUNDARY_ABS_TOL: f64 = 1e-12;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn within(started: Instant, budget: Duration, detail: String) -> Outcome {
    let elapsed = started.elapsed();
    if elapsed < budget {
        Ok(format!("{detail}, {:.2?} (budget {budget:?})", elapsed))
    } else {
        Err(format!("{detail}, but took {elapsed:.2?} (budget {budget:?})"))
    }
}

fn label(chain: &ChainSpec) -> String {
    format!("({}, {}, {})", chain.p01(), chain.p10(), chain.p1())
}

fn oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let mut cases = 0usize;
    for chain in Grid::Fine.chains() {
        for n in 1..=SMALL_N_MAX {
            let closed = visit_distribution(n, State::S1, &chain).map_err(|e| e.to_string())?;
            let oracle = oracle_distribution(n, State::S1, &chain).map_err(|e| e.to_string())?;
            for (k, (c, o)) in closed.mass().iter().zip(oracle.mass()).enumerate() {
                if c != o {
                    return Err(format!("chain {} N={n} k={k}: closed form {c}, oracle {o}", label(&chain)));
                }
                cases += 1;
            }
        }
    }
    within(started, Duration::from_secs(60), format!("{cases} cases bit-exact"))
}

fn two_step_anchors() -> Outcome {
    let mut cases = 0usize;
    for &p01 in Grid::Fine.values() {
        for &p10 in Grid::Fine.values() {
            for (p1, expected) in [((1, 1), p10), ((0, 1), p01)] {
                let chain = ChainSpec::exact(p01, p10, p1).map_err(|e| e.to_string())?;
                let q = VisitQuery::new(2, 1, State::S1).map_err(|e| e.to_string())?;
                let got = visit_probability(&q, &chain).map_err(|e| e.to_string())?;
                let want = ProbValue::exact(expected.0, expected.1).map_err(|e| e.to_string())?;
                if got != want {
                    return Err(format!("chain {}: P(N1=1|2) = {got}, expected {want}", label(&chain)));
                }
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} chains, P(N1=1|2) equals p10 when p1=1 and p01 when p1=0"))
}

fn census() -> Outcome {
    let started = Instant::now();
    let chain = ChainSpec::exact((3, 10), (2, 5), (1, 2)).map_err(|e| e.to_string())?;
    let cells = census_by_j(8, 4, State::S1, State::S0, &chain).map_err(|e| e.to_string())?;
    let monomial = |s11, s10, s01, s00| TransitionCounts { s11, s10, s01, s00 };
    let expected = [
        (1, 1, monomial(3, 1, 0, 3)),
        (2, 9, monomial(2, 2, 1, 2)),
        (3, 9, monomial(1, 3, 2, 1)),
        (4, 1, monomial(0, 4, 3, 0)),
    ];
    if cells.len() != expected.len() {
        return Err(format!("{} cells, expected {}", cells.len(), expected.len()));
    }
    for (j, count, mono) in expected {
        let cell = cells.get(&j).ok_or_else(|| format!("no cell for j={j}"))?;
        if cell.count != count || cell.monomial != mono {
            return Err(format!(
                "j={j}: {} paths with {}, expected {count} with {mono}",
                cell.count, cell.monomial
            ));
        }
    }
    let total: u64 = cells.values().map(|c| c.count).sum();
    if total != 20 {
        return Err(format!("{total} paths, expected 20"));
    }
    within(started, Duration::from_secs(1), "counts {1, 9, 9, 1}, total 20, cells homogeneous".into())
}

fn grid_of(values: &[(i64, i64)]) -> Vec<ChainSpec> {
    let mut out = Vec::new();
    for &a in values {
        for &b in values {
            for &c in values {
                out.push(ChainSpec::exact(a, b, c).expect("grid values are probabilities"));
            }
        }
    }
    out
}

fn float_horizons() -> impl Iterator<Item = usize> {
    (1..=100).chain((150..=FLOAT_NORMALIZATION_N_MAX).step_by(50))
}

fn normalization() -> Outcome {
    let started = Instant::now();
    let one = ProbValue::one(NumericMode::Exact);
    let exact_grid = grid_of(&[(0, 1), (3, 10), (7, 8)]);
    for chain in &exact_grid {
        for n in 1..=EXACT_NORMALIZATION_N_MAX {
            let total = visit_distribution(n, State::S1, chain).map_err(|e| e.to_string())?.total();
            if total != one {
                return Err(format!("exact chain {} N={n}: sum {total}", label(chain)));
            }
        }
    }
    let interior = grid_of(&[(1, 100), (1, 2), (99, 100)]);
    let mut worst = 0.0f64;
    let mut float_cases = 0usize;
    for chain in &interior {
        for mode in [NumericMode::Float, NumericMode::LogSpace] {
            let chain = chain.to_mode(mode);
            for n in float_horizons() {
                let total = visit_distribution(n, State::S1, &chain).map_err(|e| e.to_string())?.total();
                let dev = (total.to_f64() - 1.0).abs();
                if dev.is_nan() || dev > NORMALIZATION_TOL {
                    return Err(format!("{mode} chain {} N={n}: |sum - 1| = {dev:e}", label(&chain)));
                }
                worst = worst.max(dev);
                float_cases += 1;
            }
        }
    }
    within(
        started,
        Duration::from_secs(120),
        format!(
            "exact sum 1 on {} chains for N <= {EXACT_NORMALIZATION_N_MAX}; {float_cases} float/logspace sums, max |sum - 1| = {worst:.1e}",
            exact_grid.len()
        ),
    )
}

fn symmetries() -> Outcome {
    let mut cases = 0usize;
    for chain in Grid::Fine.chains() {
        let swapped = swap_labels(&chain);
        for n in 1..=SMALL_N_MAX {
            let s1 = visit_distribution(n, State::S1, &chain).map_err(|e| e.to_string())?;
            let s0 = visit_distribution(n, State::S0, &chain).map_err(|e| e.to_string())?;
            let oracle_s0 = oracle_distribution(n, State::S0, &chain).map_err(|e| e.to_string())?;
            let swapped_s0 = visit_distribution(n, State::S0, &swapped).map_err(|e| e.to_string())?;
            for k in 0..=n {
                // P(N0 = k) = P(N1 = N - k), with N0 also counted directly.
                if s0.mass()[k] != s1.mass()[n - k] || oracle_s0.mass()[k] != s1.mass()[n - k] {
                    return Err(format!("complement fails for chain {} N={n} k={k}", label(&chain)));
                }
                // Visits to S1 are visits to S0 once the labels are swapped.
                if swapped_s0.mass()[k] != s1.mass()[k] {
                    return Err(format!("label swap fails for chain {} N={n} k={k}", label(&chain)));
                }
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} cases, both identities exact"))
}

fn limit_redundancy() -> Outcome {
    let mut cases = 0usize;
    for chain in Grid::Fine.chains() {
        for n in 1..=SMALL_N_MAX {
            let limited = ClosedForm::new(&chain, n).map_err(|e| e.to_string())?;
            let full = ClosedForm::new(&chain, n).map_err(|e| e.to_string())?.with_bound(SumBound::Horizon);
            for k in 0..=n {
                let a = limited.visits_s1(k).map_err(|e| e.to_string())?;
                let b = full.visits_s1(k).map_err(|e| e.to_string())?;
                if a != b {
                    return Err(format!("chain {} N={n} k={k}: {a} vs {b}", label(&chain)));
                }
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} cases unchanged with upper limit N"))
}

fn monte_carlo() -> Outcome {
    let started = Instant::now();
    let chain = ChainSpec::exact((3, 10), (2, 5), (1, 2)).map_err(|e| e.to_string())?;
    let first = simulate(8, &chain, MC_TRIALS, MC_SEED).map_err(|e| e.to_string())?;
    let single_run = started.elapsed();
    let second = simulate(8, &chain, MC_TRIALS, MC_SEED).map_err(|e| e.to_string())?;
    if first.counts != second.counts {
        return Err("two runs with the same seed differ".into());
    }
    let reference = visit_distribution(8, State::S1, &chain).map_err(|e| e.to_string())?;
    let tv = total_variation(&first.empirical(), &reference).map_err(|e| e.to_string())?;
    if tv > MC_TV_TOL {
        return Err(format!("TV = {tv:.5} exceeds {MC_TV_TOL}"));
    }
    let budget = Duration::from_secs(30);
    let detail = format!("TV = {tv:.5} <= {MC_TV_TOL} over {MC_TRIALS} trials, seed {MC_SEED}, repeat identical");
    if single_run < budget {
        Ok(format!("{detail}, {single_run:.2?} per run (budget {budget:?})"))
    } else {
        Err(format!("{detail}, but one run took {single_run:.2?} (budget {budget:?})"))
    }
}

fn degenerate_totality() -> Outcome {
    let started = Instant::now();
    let mut cases = 0usize;
    let is_boundary = |p: &ProbValue| p.is_zero() || *p == ProbValue::one(NumericMode::Exact);
    for chain in Grid::Fine.chains() {
        if ![chain.p01(), chain.p10(), chain.p1()].into_iter().any(is_boundary) {
            continue;
        }
        for n in 1..=SMALL_N_MAX {
            let exact = visit_distribution(n, State::S1, &chain).map_err(|e| e.to_string())?;
            let oracle = oracle_distribution(n, State::S1, &chain).map_err(|e| e.to_string())?;
            if exact != oracle {
                return Err(format!("chain {} N={n}: exact differs from enumeration", label(&chain)));
            }
            for mode in [NumericMode::Float, NumericMode::LogSpace] {
                let other = visit_distribution(n, State::S1, &chain.to_mode(mode)).map_err(|e| e.to_string())?;
                for (k, (x, y)) in exact.to_f64_vec().into_iter().zip(other.to_f64_vec()).enumerate() {
                    if !y.is_finite() || (x - y).abs() > BOUNDARY_ABS_TOL {
                        return Err(format!("{mode} chain {} N={n} k={k}: {y} vs exact {x}", label(&chain)));
                    }
                    cases += 1;
                }
            }
        }
    }
    within(
        started,
        Duration::from_secs(60),
        format!("{cases} float/logspace values finite and within {BOUNDARY_ABS_TOL:e} of exact on boundary chains"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("two-step anchors", two_step_anchors),
        ("eight-step census", census),
        ("normalization", normalization),
        ("symmetry suite", symmetries),
        ("limit redundancy", limit_redundancy),
        ("monte carlo", monte_carlo),
        ("degenerate totality", degenerate_totality),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
