//! Values frozen from an independent brute-force enumeration with exact
//! fractions (every one of the 2^N state sequences, weights multiplied out).

use num_rational::BigRational;
use visitprob::{
    closed_form::term_for_path_class, moments, oracle_distribution, visit_distribution, visit_probability,
    census_by_j, ChainSpec, ProbValue, Scalar, State, VisitQuery,
};

fn mixed() -> ChainSpec {
    ChainSpec::exact((3, 10), (2, 5), (1, 2)).unwrap()
}

fn r(s: &str) -> BigRational {
    s.parse().unwrap()
}

const EIGHT_STEP: [&str; 9] = [
    "823543/20000000",
    "2033647/20000000",
    "1637139/10000000",
    "994203/5000000",
    "96147/500000",
    "187839/1250000",
    "58563/625000",
    "13851/312500",
    "2187/156250",
];

#[test]
fn five_step_two_visits() {
    let q = VisitQuery::new(5, 2, State::S1).unwrap();
    assert_eq!(visit_probability(&q, &mixed()).unwrap(), ProbValue::Exact(r("2487/10000")));
}

#[test]
fn eight_step_distribution() {
    let expected: Vec<ProbValue> = EIGHT_STEP.iter().map(|s| ProbValue::Exact(r(s))).collect();
    let closed = visit_distribution(8, State::S1, &mixed()).unwrap();
    assert_eq!(closed.mass(), expected.as_slice());
    let oracle = oracle_distribution(8, State::S1, &mixed()).unwrap();
    assert_eq!(oracle.mass(), expected.as_slice());
}

#[test]
fn eight_step_moments() {
    let m = moments(&visit_distribution(8, State::S1, &mixed()).unwrap());
    assert_eq!(m.mean, Scalar::Exact(r("70612111/20000000")));
    assert_eq!(m.variance, Scalar::Exact(r("1342109040123679/400000000000000")));
}

#[test]
fn census_matches_closed_form_terms_everywhere() {
    let c = mixed();
    for n in 1..=12 {
        for k in 0..=n {
            for initial in [State::S0, State::S1] {
                for last in [State::S0, State::S1] {
                    let cells = census_by_j(n, k, initial, last, &c).unwrap();
                    for cell in cells.values() {
                        assert!(cell.matches_closed_form(), "n={n} k={k} {initial}->{last} j={}", cell.j);
                        let term = term_for_path_class(n, k, initial, last, cell.j).unwrap().unwrap();
                        assert_eq!(term.monomial(), Some(cell.monomial));
                    }
                    // Conversely, every closed-form term has paths behind it.
                    for j in 0..=n {
                        if let Some(term) = term_for_path_class(n, k, initial, last, j).unwrap() {
                            assert_eq!(cells.get(&j).map(|c| c.count.into()), Some(term.path_count()));
                        }
                    }
                }
            }
        }
    }
}
