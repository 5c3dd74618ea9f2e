use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{expected_subset_min, mean_and_se, run_rng};
use crate::binom::SubsetRatios;
use crate::closed_form::bd_gap_tail;
use crate::par::{self, Execution};
use crate::sketch::{IdealHashTable, Rule, Sketch, SketchConfig, UniformSelector};
use crate::{Error, Result};

/// First element-wise ordering violation seen by [`sandwich_trace`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SandwichViolation {
    pub step: u64,
    pub counter: usize,
    pub lower: String,
    pub upper: String,
    pub lower_value: u64,
    pub upper_value: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub steps: u64,
    pub violation: Option<SandwichViolation>,
    /// All five arrays were equal after every step.
    pub identical_throughout: bool,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.violation.is_none()
    }
}

/// Drives LB(g), LB(g+1), CU, UB(g+1), UB(g) on one selection sequence and
/// checks `LB(g) <= LB(g+1) <= CU <= UB(g+1) <= UB(g)` counter by counter.
pub fn sandwich_trace(
    m: usize,
    d: usize,
    g: u64,
    horizon: u64,
    seed: u64,
) -> Result<SandwichReport> {
    let cfg = SketchConfig::new(m, d)?;
    if g == 0 {
        return Err(Error::ZeroGap);
    }
    let chain = [
        ("lb(g)", Rule::lower(g)),
        ("lb(g+1)", Rule::lower(g + 1)),
        ("cu", Rule::Conservative),
        ("ub(g+1)", Rule::upper(g + 1)),
        ("ub(g)", Rule::upper(g)),
    ];
    let mut sketches = chain
        .iter()
        .map(|&(_, r)| Sketch::new(&cfg, r))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = run_rng(seed, 0);
    let mut selector = UniformSelector::new(cfg);
    let mut identical = true;
    for step in 1..=horizon {
        let s = selector.select(&mut rng);
        for sk in &mut sketches {
            sk.update(&s)?;
        }
        for w in 0..chain.len() - 1 {
            let lo = sketches[w].counters().values();
            let hi = sketches[w + 1].counters().values();
            if lo != hi {
                identical = false;
            }
            if let Some(counter) = (0..m).find(|&u| lo[u] > hi[u]) {
                return Ok(SandwichReport {
                    steps: step,
                    violation: Some(SandwichViolation {
                        step,
                        counter,
                        lower: chain[w].0.into(),
                        upper: chain[w + 1].0.into(),
                        lower_value: lo[counter],
                        upper_value: hi[counter],
                    }),
                    identical_throughout: false,
                });
            }
        }
    }
    Ok(SandwichReport {
        steps: horizon,
        violation: None,
        identical_throughout: identical,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemEstimate {
    pub item: u64,
    /// `n_i(T)`.
    pub count: u64,
    /// Estimate of `E[e_i(T, r)]`.
    pub error: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub m: usize,
    pub d: usize,
    pub horizon: u64,
    pub runs: u64,
    pub items: Vec<ItemEstimate>,
    /// Estimate of `E[e*(T, r)]` for an item absent from the stream.
    pub absent: Estimate,
    /// Every present-item mean is at most the absent mean plus three
    /// standard errors of the difference.
    pub holds: bool,
}

/// Compares present-item errors against the absent-item error on a fixed
/// stream, re-drawing the ideal hash table every run.
pub fn worst_case_probe(
    m: usize,
    d: usize,
    stream: &[u64],
    horizon: u64,
    runs: u64,
    seed: u64,
) -> Result<ProbeReport> {
    let cfg = SketchConfig::new(m, d)?;
    if horizon == 0 || runs == 0 || (stream.len() as u64) < horizon {
        return Err(Error::Config(
            "need T >= 1, runs >= 1 and at least T stream items".into(),
        ));
    }
    let stream = &stream[..horizon as usize];
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for &i in stream {
        *counts.entry(i).or_default() += 1;
    }
    let items: Vec<u64> = counts.keys().copied().collect();
    let ratios = SubsetRatios::new(m, d);
    let per_run = par::map_range(Execution::default(), runs as usize, |run| {
        let mut rng = run_rng(seed, run as u64);
        let mut table = IdealHashTable::new(cfg);
        let mut sketch = Sketch::conservative(&cfg);
        for item in stream {
            sketch.update(table.hash(item, &mut rng))?;
        }
        let y = sketch.counters();
        let errors = items
            .iter()
            .map(|i| {
                let est = y.query(table.get(i).unwrap())?;
                Ok(est as f64 - counts[i] as f64)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok::<_, Error>((errors, expected_subset_min(y.values(), &ratios)))
    });
    let mut by_item = vec![Vec::with_capacity(runs as usize); items.len()];
    let mut absent = Vec::with_capacity(runs as usize);
    for r in per_run {
        let (errors, a) = r?;
        for (slot, e) in by_item.iter_mut().zip(errors) {
            slot.push(e);
        }
        absent.push(a);
    }
    let (amean, ase) = mean_and_se(&absent);
    let estimates: Vec<ItemEstimate> = items
        .iter()
        .zip(&by_item)
        .map(|(&item, xs)| {
            let (mean, std_error) = mean_and_se(xs);
            ItemEstimate {
                item,
                count: counts[&item],
                error: Estimate { mean, std_error },
            }
        })
        .collect();
    let holds = estimates.iter().all(|e| {
        let se = (e.error.std_error.powi(2) + ase * ase).sqrt();
        e.error.mean <= amean + 3.0 * se
    });
    Ok(ProbeReport {
        m,
        d,
        horizon,
        runs,
        items: estimates,
        absent: Estimate {
            mean: amean,
            std_error: ase,
        },
        holds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapTailRow {
    pub g: u32,
    pub empirical: f64,
    /// `m / (2 (m-1)^g)`.
    pub expected: f64,
    /// Binomial standard error `sqrt(p (1 - p) / T)` at the expected `p`.
    pub std_error: f64,
}

impl GapTailRow {
    pub fn within(&self, k: f64) -> bool {
        (self.empirical - self.expected).abs() <= k * self.std_error
    }
}

/// Fraction of steps with `G(t) >= g`, `g = 1..=10`, along one CU trajectory
/// with `d = m - 1`.
pub fn gap_tail_probe(m: usize, horizon: u64, seed: u64) -> Result<Vec<GapTailRow>> {
    let cfg = SketchConfig::new(m, m - 1)?;
    bd_gap_tail(m, 1)?;
    if horizon == 0 {
        return Err(Error::Config("horizon T must be at least 1".into()));
    }
    let mut rng = run_rng(seed, 0);
    let mut selector = UniformSelector::new(cfg);
    let mut sketch = Sketch::conservative(&cfg);
    let mut at_least = [0u64; 11];
    for _ in 0..horizon {
        sketch.update(&selector.select(&mut rng))?;
        let gap = (sketch.counters().gap() as usize).min(10);
        for slot in &mut at_least[1..=gap] {
            *slot += 1;
        }
    }
    (1..=10u32)
        .map(|g| {
            let p = bd_gap_tail(m, g)?;
            Ok(GapTailRow {
                g,
                empirical: at_least[g as usize] as f64 / horizon as f64,
                expected: p,
                std_error: (p * (1.0 - p) / horizon as f64).sqrt(),
            })
        })
        .collect()
}
