use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::binom::binomial;
use crate::{Error, Result};

/// Largest `C(m, d)^T` the oracle will enumerate.
pub const ORACLE_MAX_LEAVES: u128 = 1_000_000;

/// Exact `E[e*(T)] = numerator / denominator` for CMS-CU under uniform
/// selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleResult {
    pub m: usize,
    pub d: usize,
    pub horizon: u64,
    pub numerator: u128,
    pub denominator: u128,
}

impl OracleResult {
    /// `E[e*(T)]`.
    pub fn expected_error(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    /// `E[e*(T)] / T`.
    pub fn expected_error_rate(&self) -> f64 {
        self.expected_error() / self.horizon as f64
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Enumerates every length-`T` selection sequence, applies conservative
/// update with a plain array, and averages the exact absent-item error.
///
/// Deliberately shares no code with the sketch or Markov modules.
pub fn brute_force_expected_error(m: usize, d: usize, horizon: u64) -> Result<OracleResult> {
    if m < 2 || d == 0 || d > m {
        return Err(Error::Config(format!("invalid (m={m}, d={d})")));
    }
    if horizon == 0 {
        return Err(Error::Config("horizon T must be at least 1".into()));
    }
    let subsets: Vec<Vec<usize>> = (0..m).combinations(d).collect();
    let n = subsets.len() as u128;
    let leaves = u32::try_from(horizon)
        .ok()
        .and_then(|t| n.checked_pow(t))
        .filter(|&l| l <= ORACLE_MAX_LEAVES)
        .ok_or_else(|| {
            Error::TooLarge(format!(
                "C({m},{d})^{horizon} selection sequences exceed {ORACLE_MAX_LEAVES}"
            ))
        })?;
    // weights[r] = number of d-subsets whose minimum sits at sorted position r.
    let weights: Vec<u128> = (1..=m)
        .map(|r| binomial((m - r) as u64, (d - 1) as u64).unwrap())
        .collect();

    fn walk(depth: u64, counters: &mut Vec<u64>, subsets: &[Vec<usize>], weights: &[u128]) -> u128 {
        if depth == 0 {
            let mut sorted = counters.clone();
            sorted.sort_unstable();
            return sorted
                .iter()
                .zip(weights)
                .map(|(&y, &w)| u128::from(y) * w)
                .sum();
        }
        let mut total = 0;
        for s in subsets {
            let low = s.iter().map(|&i| counters[i]).min().unwrap();
            let hit: Vec<usize> = s.iter().copied().filter(|&i| counters[i] == low).collect();
            for &i in &hit {
                counters[i] += 1;
            }
            total += walk(depth - 1, counters, subsets, weights);
            for &i in &hit {
                counters[i] -= 1;
            }
        }
        total
    }

    let numerator = walk(horizon, &mut vec![0; m], &subsets, &weights);
    let denominator = leaves * n;
    let g = gcd(numerator, denominator).max(1);
    Ok(OracleResult {
        m,
        d,
        horizon,
        numerator: numerator / g,
        denominator: denominator / g,
    })
}
