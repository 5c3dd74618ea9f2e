//! Cross-check suites: Markov bounds against the brute-force oracle, the
//! pathwise sandwich, kernel soundness, and closed forms against the chains.
//! The test-suite and `cu-bound verify` both run these.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::binom::binomial;
use crate::closed_form::g1_asymptotic;
use crate::markov::{
    asymptotic_error, build_kernel, expected_error_on, ChainParams, StateSpace, TransitionKernel,
    Variant,
};
use crate::simulate::{
    brute_force_expected_error, estimate_error, gap_tail_probe, kernel_event_check, sandwich_trace,
    SimConfig,
};
use crate::sketch::Rule;
use crate::{Execution, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub level: Level,
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Outcome of a single suite: `Ok(detail)` on pass, `Err(detail)` on failure.
pub type Check = std::result::Result<String, String>;

fn timed(name: &str, f: impl FnOnce() -> Check) -> CheckOutcome {
    let started = Instant::now();
    let (passed, detail) = match f() {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    CheckOutcome {
        name: name.into(),
        passed,
        detail,
        seconds: started.elapsed().as_secs_f64(),
    }
}

fn err(e: crate::Error) -> String {
    e.to_string()
}

/// Default kernel source for the oracle check.
pub fn standard_kernel(params: ChainParams, variant: Variant) -> Result<TransitionKernel> {
    build_kernel(&StateSpace::enumerate(params)?, variant)
}

/// With `g = T` both chains must reproduce the exact CMS-CU error.
pub fn oracle_equivalence_with(
    cases: &[(usize, usize, u64)],
    kernel: impl Fn(ChainParams, Variant) -> Result<TransitionKernel>,
) -> Check {
    let mut worst: f64 = 0.0;
    for &(m, d, t) in cases {
        let exact = brute_force_expected_error(m, d, t)
            .map_err(err)?
            .expected_error_rate();
        let params = ChainParams::new(m, d, t as usize).map_err(err)?;
        for variant in [Variant::Lower, Variant::Upper] {
            let k = kernel(params, variant).map_err(err)?;
            let got = expected_error_on(&k, t, Execution::default()).map_err(err)?;
            let diff = (got - exact).abs();
            worst = worst.max(diff);
            if diff > 1e-10 {
                return Err(format!(
                    "m={m} d={d} T={t} {}: chain {got} vs oracle {exact}",
                    variant.label()
                ));
            }
        }
    }
    Ok(format!("{} cases, max |diff| = {worst:.3e}", cases.len()))
}

pub fn oracle_equivalence(cases: &[(usize, usize, u64)]) -> Check {
    oracle_equivalence_with(cases, standard_kernel)
}

/// Random `(m <= max_m, d, g <= 3, T <= 50)` sandwiches.
pub fn sandwich_sweep(configs: usize, max_m: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..configs {
        let m = rng.gen_range(2..=max_m);
        let d = rng.gen_range(1..=m);
        let g = rng.gen_range(1..=3u64);
        let t = rng.gen_range(1..=50u64);
        let s = rng.gen();
        let r = sandwich_trace(m, d, g, t, s).map_err(err)?;
        if let Some(v) = r.violation {
            return Err(format!(
                "config {i} (m={m} d={d} g={g} T={t} seed={s}): {v:?}"
            ));
        }
    }
    Ok(format!("{configs} configurations, no violations"))
}

/// State counts, row sums, beta range and target membership for every
/// `(m, d, g)` with `m <= max_m`, `g <= max_g`.
pub fn kernel_soundness(max_m: usize, max_g: usize) -> Check {
    let mut spaces = 0;
    let mut rows = 0usize;
    for m in 2..=max_m {
        for d in 1..=m {
            for g in 1..=max_g {
                let params = ChainParams::new(m, d, g).map_err(err)?;
                let space = StateSpace::enumerate(params).map_err(err)?;
                let expect = binomial((m + g - d) as u64, g as u64).unwrap();
                if space.len() as u128 != expect {
                    return Err(format!(
                        "m={m} d={d} g={g}: {} states, expected {expect}",
                        space.len()
                    ));
                }
                for variant in [Variant::Lower, Variant::Upper] {
                    let k = build_kernel(&space, variant).map_err(err)?;
                    kernel_rows_ok(&space, &k)
                        .map_err(|e| format!("m={m} d={d} g={g} {}: {e}", variant.label()))?;
                    rows += k.num_states();
                }
                spaces += 1;
            }
        }
    }
    Ok(format!("{spaces} spaces, {rows} rows"))
}

/// Row-level invariants of one kernel.
pub fn kernel_rows_ok(space: &StateSpace, k: &TransitionKernel) -> std::result::Result<(), String> {
    let params = space.params();
    if k.num_edges() > params.m() * space.len() {
        return Err(format!("{} edges exceed m |Ω|", k.num_edges()));
    }
    for i in 0..k.num_states() {
        let sum = k.row_sum(i);
        if (sum - 1.0).abs() > 1e-12 {
            return Err(format!("row {i} sums to {sum}"));
        }
        for e in k.row(i) {
            if !(0.0..=1.0).contains(&e.p) || !(0.0..=1.0).contains(&e.beta) {
                return Err(format!("row {i}: p={} beta={}", e.p, e.beta));
            }
            let t = e.target as usize;
            if t >= space.len() || !space.state(t).is_member(&params) {
                return Err(format!("row {i}: target {t} outside Ω_g"));
            }
        }
    }
    Ok(())
}

/// Empirical `(v, c)` frequencies on `states` random states of each space.
pub fn kernel_sampling(
    cases: &[(usize, usize, usize)],
    states: usize,
    samples: u64,
    seed: u64,
) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    for &(m, d, g) in cases {
        let space = StateSpace::enumerate(ChainParams::new(m, d, g).map_err(err)?).map_err(err)?;
        for _ in 0..states {
            let i = rng.gen_range(0..space.len());
            let r = kernel_event_check(&space, i, samples, rng.gen()).map_err(err)?;
            if !r.within(3.0) {
                return Err(format!("m={m} d={d} g={g} state {:?}: {r:?}", r.state));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} states sampled"))
}

/// `g = 1`, `d = m - 1` chains against the closed forms.
pub fn closed_form_agreement(ms: std::ops::RangeInclusive<usize>) -> Check {
    let mut worst: f64 = 0.0;
    for m in ms.clone() {
        let (lo, hi) = g1_asymptotic(m).map_err(err)?;
        let params = ChainParams::new(m, m - 1, 1).map_err(err)?;
        let l = asymptotic_error(params, Variant::Lower, 1e-13)
            .map_err(err)?
            .value;
        let u = asymptotic_error(params, Variant::Upper, 1e-13)
            .map_err(err)?
            .value;
        worst = worst.max((l - lo).abs()).max((u - hi).abs());
        if (l - lo).abs() > 1e-10 || (u - hi).abs() > 1e-10 {
            return Err(format!(
                "m={m}: chain ({l}, {u}) vs closed form ({lo}, {hi})"
            ));
        }
    }
    Ok(format!("m in {ms:?}, max |diff| = {worst:.3e}"))
}

/// `l_g(T)` strictly increasing and `U_g(T)` strictly decreasing in `g`.
pub fn monotone_squeeze(m: usize, d: usize, t: u64, max_g: usize) -> Check {
    let mut rows = Vec::new();
    for g in 1..=max_g {
        let params = ChainParams::new(m, d, g).map_err(err)?;
        let space = StateSpace::enumerate(params).map_err(err)?;
        let l = expected_error_on(
            &build_kernel(&space, Variant::Lower).map_err(err)?,
            t,
            Execution::default(),
        )
        .map_err(err)?;
        let u = expected_error_on(
            &build_kernel(&space, Variant::Upper).map_err(err)?,
            t,
            Execution::default(),
        )
        .map_err(err)?;
        rows.push((g, l, u));
    }
    for &(g, l, u) in &rows {
        if l > u {
            return Err(format!("g={g}: lower {l} > upper {u}"));
        }
    }
    for w in rows.windows(2) {
        let ((g, l0, u0), (_, l1, u1)) = (w[0], w[1]);
        if !(l0 < l1 && u0 > u1) {
            return Err(format!(
                "not strictly squeezed between g={g} and g={}: {rows:?}",
                g + 1
            ));
        }
    }
    Ok(format!("{rows:?}"))
}

/// `d = m - 1` CU simulation: error and counter rates near 1/2, gap tail
/// within three binomial standard errors for `g <= 4`.
pub fn birth_death_simulation(m: usize, horizon: u64, seed: u64) -> Check {
    let cfg = SimConfig::uniform(m, m - 1, horizon, 1, seed, Rule::Conservative);
    let stats = estimate_error(&cfg).map_err(err)?;
    if (stats.mean_error_rate - 0.5).abs() > 0.01 || (stats.mean_counter_rate - 0.5).abs() > 0.01 {
        return Err(format!(
            "error rate {}, counter rate {}",
            stats.mean_error_rate, stats.mean_counter_rate
        ));
    }
    let rows = gap_tail_probe(m, horizon, seed).map_err(err)?;
    for r in rows.iter().filter(|r| r.g <= 4) {
        if !r.within(3.0) {
            return Err(format!("gap tail {r:?}"));
        }
    }
    Ok(format!(
        "error rate {:.5}, counter rate {:.5}",
        stats.mean_error_rate, stats.mean_counter_rate
    ))
}

pub fn run(level: Level) -> VerifyReport {
    let oracle_cases: Vec<(usize, usize, u64)> = [3, 4]
        .into_iter()
        .flat_map(|m| (1..=3).map(move |t| (m, 2, t)))
        .collect();
    let mut checks = vec![
        timed("oracle-equivalence", || oracle_equivalence(&oracle_cases)),
        timed("closed-form-vs-markov", || closed_form_agreement(3..=20)),
    ];
    match level {
        Level::Quick => {
            checks.push(timed("sandwich", || sandwich_sweep(200, 8, 1)));
            checks.push(timed("kernel-soundness", || kernel_soundness(8, 3)));
            checks.push(timed("kernel-sampling", || {
                kernel_sampling(&[(6, 2, 2), (8, 3, 3)], 5, 20_000, 2)
            }));
            checks.push(timed("monotone-squeeze", || monotone_squeeze(10, 3, 20, 3)));
        }
        Level::Full => {
            checks.push(timed("sandwich", || sandwich_sweep(1000, 8, 1)));
            checks.push(timed("kernel-soundness", || kernel_soundness(12, 4)));
            checks.push(timed("kernel-sampling", || {
                kernel_sampling(&[(6, 2, 2), (8, 3, 3), (12, 4, 4)], 10, 50_000, 2)
            }));
            checks.push(timed("monotone-squeeze", || monotone_squeeze(10, 3, 20, 5)));
            checks.push(timed("birth-death-simulation", || {
                birth_death_simulation(10, 100_000, 5)
            }));
        }
    }
    VerifyReport { level, checks }
}
