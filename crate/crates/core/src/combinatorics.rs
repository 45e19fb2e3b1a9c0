//! Binomial coefficients and weak compositions.
//!
//! A weak composition of `m` into `n` parts is an ordered list of `n`
//! non-negative integers summing to `m`; stars and bars gives
//! `C(m + n - 1, n - 1)` of them. Every coefficient in the visit formulas is a
//! product of two such counts: one for how self-transitions spread over the
//! runs spent in `S1`, one for the runs spent in `S0`.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::numerics::CompensatedSum;

/// Default cap on how many compositions [`enumerate_weak_compositions`] returns.
pub const DEFAULT_COMPOSITION_GUARD: u64 = 1_000_000;

/// `C(n, r)`, zero-extended: `0` whenever `n < 0`, `r < 0` or `r > n`.
pub fn binomial(n: i64, r: i64) -> BigUint {
    if n < 0 || r < 0 || r > n {
        return BigUint::zero();
    }
    let r = r.min(n - r) as u64;
    let n = n as u64;
    let mut acc = BigUint::one();
    for i in 0..r {
        // acc = C(n, i) here, and C(n, i) * (n - i) is divisible by i + 1.
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Number of weak compositions of `m` into `n` parts.
pub fn weak_composition_count(m: u64, n: u64) -> Result<BigUint> {
    if n == 0 {
        return if m == 0 {
            Ok(BigUint::one())
        } else {
            Err(Error::InvalidArgument(format!(
                "{m} cannot be split into zero parts"
            )))
        };
    }
    Ok(binomial((m + n - 1) as i64, (n - 1) as i64))
}

/// An ordered split of `total` into `parts.len()` non-negative pieces.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeakComposition {
    parts: Vec<u64>,
    total: u64,
}

impl WeakComposition {
    pub fn new(parts: Vec<u64>) -> Result<WeakComposition> {
        if parts.is_empty() {
            return Err(Error::InvalidArgument("a composition needs at least one part".into()));
        }
        let total = parts.iter().sum();
        Ok(WeakComposition { parts, total })
    }

    pub fn parts(&self) -> &[u64] {
        &self.parts
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

/// All weak compositions of `m` into `n` parts, lexicographically ordered.
///
/// Fails if the count exceeds `guard`.
pub fn enumerate_weak_compositions(m: u64, n: u64, guard: u64) -> Result<Vec<WeakComposition>> {
    if n == 0 {
        return Err(Error::InvalidArgument("part count must be at least 1".into()));
    }
    let count = weak_composition_count(m, n)?;
    if count > BigUint::from(guard) {
        return Err(Error::EnumerationTooLarge {
            count: count.to_string(),
            guard,
        });
    }
    let mut out = Vec::with_capacity(count.to_usize().unwrap_or(0));
    let mut current = Vec::with_capacity(n as usize);
    fill(m, n as usize, &mut current, &mut out);
    Ok(out)
}

fn fill(remaining: u64, slots: usize, current: &mut Vec<u64>, out: &mut Vec<WeakComposition>) {
    if slots == 1 {
        current.push(remaining);
        out.push(WeakComposition {
            parts: current.clone(),
            total: current.iter().sum(),
        });
        current.pop();
        return;
    }
    for first in 0..=remaining {
        current.push(first);
        fill(remaining - first, slots - 1, current, out);
        current.pop();
    }
}

/// Pascal's triangle of exact binomials `C(n, r)` for `0 <= r <= n <= max_n`.
#[derive(Debug, Clone)]
pub struct BinomialTable {
    rows: Vec<Vec<BigUint>>,
}

impl BinomialTable {
    pub fn new(max_n: usize) -> BinomialTable {
        let mut rows: Vec<Vec<BigUint>> = Vec::with_capacity(max_n + 1);
        rows.push(vec![BigUint::one()]);
        for n in 1..=max_n {
            let prev = &rows[n - 1];
            let mut row = Vec::with_capacity(n + 1);
            row.push(BigUint::one());
            for r in 1..n {
                row.push(&prev[r - 1] + &prev[r]);
            }
            row.push(BigUint::one());
            rows.push(row);
        }
        BinomialTable { rows }
    }

    pub fn max_n(&self) -> usize {
        self.rows.len() - 1
    }

    /// Zero-extended lookup. Panics if `n` is beyond the table.
    pub fn get(&self, n: i64, r: i64) -> &BigUint {
        static ZERO: std::sync::OnceLock<BigUint> = std::sync::OnceLock::new();
        if n < 0 || r < 0 || r > n {
            return ZERO.get_or_init(BigUint::zero);
        }
        &self.rows[n as usize][r as usize]
    }

    pub fn row(&self, n: usize) -> &[BigUint] {
        &self.rows[n]
    }
}

/// Pascal's triangle rounded to doubles. Entries past about `n = 1029`
/// overflow to infinity.
#[derive(Debug, Clone)]
pub struct FloatBinomialTable {
    rows: Vec<Vec<f64>>,
}

impl FloatBinomialTable {
    /// Builds the rows from exact integers so that every entry is correctly
    /// rounded; only one exact row is alive at a time.
    pub fn new(max_n: usize) -> FloatBinomialTable {
        let mut rows = Vec::with_capacity(max_n + 1);
        let mut exact = vec![BigUint::one()];
        rows.push(vec![1.0]);
        for n in 1..=max_n {
            let mut next = Vec::with_capacity(n + 1);
            next.push(BigUint::one());
            for r in 1..n {
                next.push(&exact[r - 1] + &exact[r]);
            }
            next.push(BigUint::one());
            rows.push(next.iter().map(|b| b.to_f64().unwrap_or(f64::INFINITY)).collect());
            exact = next;
        }
        FloatBinomialTable { rows }
    }

    pub fn get(&self, n: i64, r: i64) -> f64 {
        if n < 0 || r < 0 || r > n {
            return 0.0;
        }
        self.rows[n as usize][r as usize]
    }
}

/// `ln(i!)` for `0 <= i <= max`, accumulated with compensated summation.
#[derive(Debug, Clone)]
pub struct LogFactorials {
    table: Vec<f64>,
}

impl LogFactorials {
    pub fn new(max: usize) -> LogFactorials {
        let mut table = Vec::with_capacity(max + 1);
        let mut acc = CompensatedSum::default();
        table.push(0.0);
        for i in 1..=max {
            acc.add((i as f64).ln());
            table.push(acc.value());
        }
        LogFactorials { table }
    }

    pub fn ln_factorial(&self, i: usize) -> f64 {
        self.table[i]
    }

    /// `ln C(n, r)`; `-inf` outside `0 <= r <= n`.
    pub fn ln_binomial(&self, n: i64, r: i64) -> f64 {
        if n < 0 || r < 0 || r > n {
            return f64::NEG_INFINITY;
        }
        let (n, r) = (n as usize, r as usize);
        self.table[n] - self.table[r] - self.table[n - r]
    }
}
