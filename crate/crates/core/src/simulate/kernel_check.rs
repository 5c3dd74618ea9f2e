use serde::{Deserialize, Serialize};

use super::run_rng;
use crate::markov::{build_kernel, StateSpace, Variant};
use crate::sketch::{CounterArray, Rule, Sketch, UniformSelector};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventFrequency {
    pub level: usize,
    pub count: u32,
    pub expected: f64,
    pub observed: f64,
    /// Binomial standard error at the expected probability.
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventCheck {
    pub state: Vec<u32>,
    pub samples: u64,
    pub events: Vec<EventFrequency>,
    /// Observed events that have no kernel edge.
    pub unexpected: u64,
    /// One-step LB/UB sketch updates whose Δ-image differs from the kernel
    /// target for the same event.
    pub target_mismatches: u64,
}

impl EventCheck {
    pub fn within(&self, k: f64) -> bool {
        self.unexpected == 0
            && self.target_mismatches == 0
            && self
                .events
                .iter()
                .all(|e| (e.observed - e.expected).abs() <= k * e.std_error)
    }
}

/// Realises state `index` as a counter array, samples uniform selections, and
/// compares the observed `(v, c)` frequencies and one-step LB/UB images with
/// the kernels.
pub fn kernel_event_check(
    space: &StateSpace,
    index: usize,
    samples: u64,
    seed: u64,
) -> Result<EventCheck> {
    let params = space.params();
    let cfg = crate::sketch::SketchConfig::new(params.m(), params.d())?;
    let lb = build_kernel(space, Variant::Lower)?;
    let ub = build_kernel(space, Variant::Upper)?;
    let levels = space.levels(index).to_vec();
    let mut values = Vec::with_capacity(params.m());
    for (l, &k) in levels.iter().enumerate() {
        values.extend(std::iter::repeat_n(l as u64, k as usize));
    }
    let top = values.iter().copied().max().unwrap_or(0);
    let base = CounterArray::from_values(values, top)?;
    let g = params.g() as u64;
    let lb_rule = Rule::lower(g);
    let ub_rule = Rule::upper(g);

    let row = lb.row(index);
    let mut hits = vec![0u64; row.len()];
    let mut unexpected = 0;
    let mut mismatches = 0;
    let mut rng = run_rng(seed, index as u64);
    let mut selector = UniformSelector::new(cfg);
    for _ in 0..samples {
        let s = selector.select(&mut rng);
        let (v, c) = base.event(&s)?;
        let Some(pos) = row
            .iter()
            .position(|e| e.level as usize == v && u32::from(e.count) == c)
        else {
            unexpected += 1;
            continue;
        };
        hits[pos] += 1;
        for (rule, kern) in [(lb_rule, &lb), (ub_rule, &ub)] {
            let mut sk = Sketch::from_counters(base.clone(), rule)?;
            sk.update(&s)?;
            let got = space
                .index_of(&sk.counters().delta())
                .ok_or_else(|| Error::NotInSpace(sk.counters().delta().levels().to_vec()))?;
            if got != kern.row(index)[pos].target as usize {
                mismatches += 1;
            }
        }
    }
    let n = samples as f64;
    let events = row
        .iter()
        .zip(&hits)
        .map(|(e, &h)| EventFrequency {
            level: e.level as usize,
            count: u32::from(e.count),
            expected: e.p,
            observed: h as f64 / n,
            std_error: (e.p * (1.0 - e.p) / n).sqrt(),
        })
        .collect();
    Ok(EventCheck {
        state: levels,
        samples,
        events,
        unexpected,
        target_mismatches: mismatches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::ChainParams;

    #[test]
    fn small_space_events_match() {
        let s = StateSpace::enumerate(ChainParams::new(6, 2, 2).unwrap()).unwrap();
        for i in 0..s.len() {
            let r = kernel_event_check(&s, i, 20_000, 9).unwrap();
            assert!(r.within(4.0), "{r:?}");
        }
    }
}
