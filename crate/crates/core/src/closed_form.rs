//! Closed forms for `d = m - 1`.
//!
//! With `d = m - 1` every selection misses exactly one counter, so the
//! Δ-representation collapses to the gap `f` and evolves as a birth-death
//! chain: from 0 it always moves to 1, otherwise it moves up w.p. `1/m`
//! (the missed counter is one of the minimum ones) and down w.p. `(m-1)/m`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Series are summed until `π_f` drops below this.
const SERIES_CUTOFF: f64 = 1e-15;
const SELF_TEST_TOLERANCE: f64 = 1e-12;

fn check_m(m: usize) -> Result<f64> {
    if m < 3 {
        return Err(Error::Config(format!(
            "birth-death closed forms need m >= 3, got {m}"
        )));
    }
    Ok(m as f64)
}

/// Limiting probability that the gap equals `f`.
pub fn bd_limiting(m: usize, f: u32) -> Result<f64> {
    let mf = check_m(m)?;
    if f == 0 {
        Ok((mf - 2.0) / (2.0 * (mf - 1.0)))
    } else {
        Ok(mf * (mf - 2.0) / (2.0 * (mf - 1.0).powi(f as i32 + 1)))
    }
}

/// One-step probability of the gap chain.
pub fn bd_transition(m: usize, from: u32, to: u32) -> f64 {
    let mf = m as f64;
    match (from, to) {
        (0, 1) => 1.0,
        (f, t) if f >= 1 && t == f + 1 => 1.0 / mf,
        (f, t) if f >= 1 && t + 1 == f => (mf - 1.0) / mf,
        _ => 0.0,
    }
}

/// Iterates `(f, π_f)` until the terms become negligible.
fn limiting_terms(m: usize) -> Result<impl Iterator<Item = (u32, f64)>> {
    check_m(m)?;
    Ok((0u32..)
        .map(move |f| (f, bd_limiting(m, f).unwrap()))
        .take_while(|&(f, p)| f == 0 || p >= SERIES_CUTOFF))
}

/// Almost-sure limit of `e*(T)/T`, re-derived from the chain and checked
/// against the closed value `1/2`.
pub fn bd_error_rate(m: usize) -> Result<f64> {
    let mf = m as f64;
    let series: f64 = limiting_terms(m)?
        .map(|(f, p)| {
            if f == 0 {
                bd_transition(m, 0, 1) * p / mf
            } else {
                let down = (mf - 1.0) / mf * bd_transition(m, f, f - 1);
                let up = bd_transition(m, f, f + 1) / mf;
                (down + up) * p
            }
        })
        .sum();
    if (series - 0.5).abs() > SELF_TEST_TOLERANCE {
        return Err(Error::Internal(format!("error-rate series gave {series}")));
    }
    Ok(series)
}

/// Expected number of counters incremented per step; `m / 2`.
pub fn bd_growth_rate(m: usize) -> Result<f64> {
    let mf = m as f64;
    let pi0 = bd_limiting(m, 0)?;
    let series = (mf - 1.0) * pi0 + (1.0 - pi0) * 2.0 * (mf - 1.0) / mf;
    if (series - mf / 2.0).abs() > SELF_TEST_TOLERANCE * mf {
        return Err(Error::Internal(format!("growth-rate series gave {series}")));
    }
    Ok(series)
}

/// Average counter rate, `growth / m = 1/2`.
pub fn bd_counter_rate(m: usize) -> Result<f64> {
    Ok(bd_growth_rate(m)? / m as f64)
}

/// Long-run fraction of steps with gap at least `g`: `m / (2 (m-1)^g)`.
pub fn bd_gap_tail(m: usize, g: u32) -> Result<f64> {
    let mf = check_m(m)?;
    if g == 0 {
        return Err(Error::ZeroGap);
    }
    Ok(mf / (2.0 * (mf - 1.0).powi(g as i32)))
}

/// `(l_1(∞), U_1(∞)) = ((m-1)/(2m-1), m/(2m-1))` for `d = m - 1`, `g = 1`.
pub fn g1_asymptotic(m: usize) -> Result<(f64, f64)> {
    if m < 2 {
        return Err(Error::Config(format!("m must be at least 2, got {m}")));
    }
    let mf = m as f64;
    Ok(((mf - 1.0) / (2.0 * mf - 1.0), mf / (2.0 * mf - 1.0)))
}

/// Everything above for one `m`, ready for serialisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirthDeathSummary {
    pub m: usize,
    /// `π_0 .. π_{n-1}`.
    pub limiting: Vec<f64>,
    pub error_rate: f64,
    pub counter_rate: f64,
    pub growth_rate: f64,
    /// `(g, fraction of time with gap >= g)`.
    pub gap_tail: Vec<(u32, f64)>,
    pub g1_lower: f64,
    pub g1_upper: f64,
}

impl BirthDeathSummary {
    pub fn new(m: usize, levels: u32, tail_gaps: &[u32]) -> Result<Self> {
        let (g1_lower, g1_upper) = g1_asymptotic(m)?;
        Ok(BirthDeathSummary {
            m,
            limiting: (0..levels)
                .map(|f| bd_limiting(m, f))
                .collect::<Result<_>>()?,
            error_rate: bd_error_rate(m)?,
            counter_rate: bd_counter_rate(m)?,
            growth_rate: bd_growth_rate(m)?,
            gap_tail: tail_gaps
                .iter()
                .map(|&g| bd_gap_tail(m, g).map(|t| (g, t)))
                .collect::<Result<_>>()?,
            g1_lower,
            g1_upper,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limiting_examples() {
        assert!((bd_limiting(3, 0).unwrap() - 0.25).abs() < 1e-15);
        assert!((bd_limiting(3, 1).unwrap() - 0.375).abs() < 1e-15);
        let sum: f64 = (0..=50).map(|f| bd_limiting(10, f).unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(bd_limiting(2, 0).is_err());
    }

    #[test]
    fn transition_examples() {
        assert_eq!(bd_transition(5, 0, 1), 1.0);
        assert!((bd_transition(5, 3, 4) - 0.2).abs() < 1e-15);
        assert!((bd_transition(5, 3, 2) - 0.8).abs() < 1e-15);
        assert_eq!(bd_transition(5, 3, 5), 0.0);
        assert_eq!(bd_transition(5, 0, 0), 0.0);
    }

    #[test]
    fn rates() {
        for m in [3, 4, 10, 50] {
            assert!((bd_error_rate(m).unwrap() - 0.5).abs() < 1e-12);
            assert!((bd_growth_rate(m).unwrap() - m as f64 / 2.0).abs() < 1e-12);
            assert!((bd_counter_rate(m).unwrap() - 0.5).abs() < 1e-12);
        }
        assert_eq!(bd_growth_rate(4).unwrap(), 2.0);
        assert!((bd_growth_rate(3).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn error_series_truncated_at_60() {
        let m = 4usize;
        let mf = m as f64;
        let mut s = bd_limiting(m, 0).unwrap() / mf;
        for f in 1..=60 {
            s += ((mf - 1.0).powi(2) + 1.0) / (mf * mf) * bd_limiting(m, f).unwrap();
        }
        assert!((s - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gap_tail_examples() {
        assert!((bd_gap_tail(3, 1).unwrap() - 0.75).abs() < 1e-15);
        assert!((bd_gap_tail(10, 2).unwrap() - 10.0 / 162.0).abs() < 1e-15);
        for m in [3, 5, 10] {
            let pi0 = bd_limiting(m, 0).unwrap();
            assert!((1.0 - bd_gap_tail(m, 1).unwrap() - pi0).abs() < 1e-15);
            for g in 1..6 {
                let tail: f64 = (g..200).map(|f| bd_limiting(m, f).unwrap()).sum();
                assert!((tail - bd_gap_tail(m, g).unwrap()).abs() < 1e-12);
            }
        }
        assert!(bd_gap_tail(10, 0).is_err());
    }

    #[test]
    fn g1_examples() {
        let (l, u) = g1_asymptotic(3).unwrap();
        assert!((l - 0.4).abs() < 1e-15 && (u - 0.6).abs() < 1e-15);
        let (l, u) = g1_asymptotic(50).unwrap();
        assert!((l - 49.0 / 99.0).abs() < 1e-15 && (u - 50.0 / 99.0).abs() < 1e-15);
        let (l, u) = g1_asymptotic(1_000_000).unwrap();
        assert!((l - 0.5).abs() < 1e-6 && (u - 0.5).abs() < 1e-6);
        for m in 2..100 {
            let (l, u) = g1_asymptotic(m).unwrap();
            assert!(l < 0.5 && 0.5 < u);
            assert!((u - l - 1.0 / (2.0 * m as f64 - 1.0)).abs() < 1e-15);
        }
        assert!(g1_asymptotic(1).is_err());
    }

    #[test]
    fn summary() {
        let s = BirthDeathSummary::new(3, 11, &[1, 2, 3]).unwrap();
        assert_eq!(s.limiting.len(), 11);
        assert!((s.error_rate - 0.5).abs() < 1e-12);
        assert!(BirthDeathSummary::new(2, 11, &[1]).is_err());
    }
}
