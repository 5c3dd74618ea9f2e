//! Single-row counter arrays updated by conservative update (CU) and its two
//! gap-capped variants.
//!
//! Counter indices are zero-based throughout: a [`SelectionSet`] for `m`
//! counters holds distinct indices in `0..m`.

use std::collections::{HashMap, VecDeque};
use std::hash::Hash;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::markov::DeltaState;
use crate::{Error, Result};

/// Problem size: `m` counters, `d` of them selected per item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SketchConfig {
    m: usize,
    d: usize,
}

impl SketchConfig {
    pub fn new(m: usize, d: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::Config(format!("m must be at least 2, got {m}")));
        }
        if d == 0 || d > m {
            return Err(Error::Config(format!("d must lie in [1, m={m}], got {d}")));
        }
        Ok(SketchConfig { m, d })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }
}

/// Which side of CU a capped sketch bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// LB-CU: freezes when the selection sits entirely on the top level.
    #[serde(rename = "lb")]
    Lower,
    /// UB-CU: additionally lifts the minimum level in that situation.
    #[serde(rename = "ub")]
    Upper,
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::Lower => "lb",
            Variant::Upper => "ub",
        }
    }
}

/// The `d` counters hashed to by one item, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SelectionSet(Vec<usize>);

impl SelectionSet {
    pub fn new(config: &SketchConfig, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        if v.len() != config.d {
            return Err(Error::Config(format!(
                "selection must contain {} distinct indices, got {v:?}",
                config.d
            )));
        }
        if let Some(&last) = v.last() {
            if last >= config.m {
                return Err(Error::Config(format!(
                    "counter index {last} out of range for m={}",
                    config.m
                )));
            }
        }
        Ok(SelectionSet(v))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Counter values `Y(t)` together with their level histogram.
///
/// `levels[l]` counts the counters sitting exactly `l` above the minimum, so
/// min, max, gap and the Δ-representation are all available in O(1)/O(gap).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterArray {
    values: Vec<u64>,
    steps: u64,
    min: u64,
    levels: VecDeque<u32>,
}

impl CounterArray {
    pub fn new(m: usize) -> Self {
        CounterArray {
            values: vec![0; m],
            steps: 0,
            min: 0,
            levels: VecDeque::from(vec![m as u32]),
        }
    }

    /// Builds an array from explicit values, e.g. to realise a given Δ-state.
    pub fn from_values(values: Vec<u64>, steps: u64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Config("need at least 2 counters".into()));
        }
        let min = *values.iter().min().unwrap();
        let max = *values.iter().max().unwrap();
        if max > steps {
            return Err(Error::Config(format!(
                "counter value {max} exceeds step count {steps}"
            )));
        }
        let mut levels = VecDeque::from(vec![0u32; (max - min) as usize + 1]);
        for &v in &values {
            levels[(v - min) as usize] += 1;
        }
        Ok(CounterArray {
            values,
            steps,
            min,
            levels,
        })
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn min(&self) -> u64 {
        self.min
    }

    pub fn max(&self) -> u64 {
        self.min + self.levels.len() as u64 - 1
    }

    /// `G(t) = max - min`.
    pub fn gap(&self) -> u64 {
        self.levels.len() as u64 - 1
    }

    pub fn total(&self) -> u64 {
        self.values.iter().sum()
    }

    fn check(&self, s: &SelectionSet) -> Result<()> {
        match s.0.last() {
            Some(&i) if i >= self.values.len() => Err(Error::Config(format!(
                "counter index {i} out of range for m={}",
                self.values.len()
            ))),
            _ => Ok(()),
        }
    }

    /// Minimum counter value over the selection: the CMS-CU point query.
    pub fn query(&self, s: &SelectionSet) -> Result<u64> {
        self.check(s)?;
        Ok(s.0.iter().map(|&i| self.values[i]).min().unwrap_or(0))
    }

    /// The event `(v, c)`: offset of the selection's minimum above the global
    /// minimum, and how many selected counters attain it.
    pub fn event(&self, s: &SelectionSet) -> Result<(usize, u32)> {
        let low = self.query(s)?;
        let c = s.0.iter().filter(|&&i| self.values[i] == low).count() as u32;
        Ok(((low - self.min) as usize, c))
    }

    /// Δ-representation: `k_l` = number of counters at `min + l`.
    pub fn delta(&self) -> DeltaState {
        DeltaState::from_levels(self.levels.iter().copied().collect())
    }

    fn bump(&mut self, i: usize) {
        let level = (self.values[i] - self.min) as usize;
        self.values[i] += 1;
        self.levels[level] -= 1;
        if level + 1 == self.levels.len() {
            self.levels.push_back(0);
        }
        self.levels[level + 1] += 1;
        if self.levels[0] == 0 {
            self.levels.pop_front();
            self.min += 1;
        }
    }

    /// Conservative update: every selected counter at the selection minimum
    /// goes up by one. Returns the number of counters incremented.
    pub fn cu_update(&mut self, s: &SelectionSet) -> Result<u32> {
        let low = self.query(s)?;
        let mut bumped = 0;
        for &i in &s.0 {
            if self.values[i] == low {
                self.bump(i);
                bumped += 1;
            }
        }
        self.steps += 1;
        Ok(bumped)
    }

    fn bump_all_equal(&mut self, value: u64) -> u32 {
        let mut bumped = 0;
        for i in 0..self.values.len() {
            if self.values[i] == value {
                self.bump(i);
                bumped += 1;
            }
        }
        bumped
    }
}

/// Update rule driving a [`Sketch`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    Conservative,
    Capped { variant: Variant, g: u64 },
}

impl Rule {
    pub fn lower(g: u64) -> Self {
        Rule::Capped {
            variant: Variant::Lower,
            g,
        }
    }

    pub fn upper(g: u64) -> Self {
        Rule::Capped {
            variant: Variant::Upper,
            g,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Rule::Capped { g: 0, .. } => Err(Error::ZeroGap),
            _ => Ok(()),
        }
    }
}

/// A counter array plus its update rule: CMS-CU, LB-CU(g) or UB-CU(g).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sketch {
    counters: CounterArray,
    rule: Rule,
}

impl Sketch {
    pub fn new(config: &SketchConfig, rule: Rule) -> Result<Self> {
        rule.validate()?;
        Ok(Sketch {
            counters: CounterArray::new(config.m),
            rule,
        })
    }

    pub fn conservative(config: &SketchConfig) -> Self {
        Sketch {
            counters: CounterArray::new(config.m),
            rule: Rule::Conservative,
        }
    }

    /// Wraps an existing array; for capped rules the gap must already be `<= g`.
    pub fn from_counters(counters: CounterArray, rule: Rule) -> Result<Self> {
        rule.validate()?;
        if let Rule::Capped { g, .. } = rule {
            if counters.gap() > g {
                return Err(Error::Config(format!(
                    "gap {} exceeds cap {g}",
                    counters.gap()
                )));
            }
        }
        Ok(Sketch { counters, rule })
    }

    pub fn counters(&self) -> &CounterArray {
        &self.counters
    }

    pub fn rule(&self) -> Rule {
        self.rule
    }

    /// One stream step. Returns the number of counters incremented.
    pub fn update(&mut self, s: &SelectionSet) -> Result<u32> {
        match self.rule {
            Rule::Conservative => self.counters.cu_update(s),
            Rule::Capped { variant, g } => {
                let c = &mut self.counters;
                // Both caps trigger when the gap is saturated and the whole
                // selection sits on the top level.
                let saturated = c.gap() == g && c.query(s)? == c.max();
                match (variant, saturated) {
                    (Variant::Lower, true) => {
                        c.steps += 1;
                        Ok(0)
                    }
                    (Variant::Upper, true) => {
                        let old_min = c.min();
                        let bumped = c.cu_update(s)?;
                        Ok(bumped + c.bump_all_equal(old_min))
                    }
                    (_, false) => c.cu_update(s),
                }
            }
        }
    }
}

/// Draws uniform d-subsets of `0..m` by partial Fisher-Yates shuffle.
#[derive(Debug, Clone)]
pub struct UniformSelector {
    config: SketchConfig,
    perm: Vec<usize>,
}

impl UniformSelector {
    pub fn new(config: SketchConfig) -> Self {
        UniformSelector {
            config,
            perm: (0..config.m).collect(),
        }
    }

    pub fn config(&self) -> &SketchConfig {
        &self.config
    }

    pub fn select<R: Rng + ?Sized>(&mut self, rng: &mut R) -> SelectionSet {
        // The buffer stays a permutation between draws, which is all the
        // partial shuffle needs for exact uniformity.
        let (chosen, _) = self.perm.partial_shuffle(rng, self.config.d);
        let mut v = chosen.to_vec();
        v.sort_unstable();
        SelectionSet(v)
    }
}

/// One uniformly random d-subset.
pub fn uniform_select<R: Rng + ?Sized>(config: &SketchConfig, rng: &mut R) -> SelectionSet {
    UniformSelector::new(*config).select(rng)
}

/// Memoised ideal hashing: each item gets an independent uniform d-subset on
/// first sight and keeps it forever.
#[derive(Debug, Clone)]
pub struct IdealHashTable<I> {
    selector: UniformSelector,
    assignments: HashMap<I, SelectionSet>,
}

impl<I: Hash + Eq + Clone> IdealHashTable<I> {
    pub fn new(config: SketchConfig) -> Self {
        IdealHashTable {
            selector: UniformSelector::new(config),
            assignments: HashMap::new(),
        }
    }

    pub fn hash<R: Rng + ?Sized>(&mut self, item: &I, rng: &mut R) -> &SelectionSet {
        if !self.assignments.contains_key(item) {
            let s = self.selector.select(rng);
            self.assignments.insert(item.clone(), s);
        }
        &self.assignments[item]
    }

    pub fn get(&self, item: &I) -> Option<&SelectionSet> {
        self.assignments.get(item)
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}
