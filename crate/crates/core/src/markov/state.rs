use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::binom::binomial;
use crate::sketch::SketchConfig;
use crate::{Error, Result};

/// Upper limit on `|Ω_g|` accepted by [`StateSpace::enumerate`].
pub const MAX_STATES: u128 = 200_000_000;

/// `(m, d, g)` with `1 <= d <= m`, `m >= 2`, `g >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChainParams {
    m: usize,
    d: usize,
    g: usize,
}

impl ChainParams {
    pub fn new(m: usize, d: usize, g: usize) -> Result<Self> {
        SketchConfig::new(m, d)?;
        if g == 0 {
            return Err(Error::ZeroGap);
        }
        Ok(ChainParams { m, d, g })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn g(&self) -> usize {
        self.g
    }

    /// `C(m + g - d, g)`, or `None` on overflow.
    pub fn state_count(&self) -> Option<u128> {
        binomial((self.m + self.g - self.d) as u64, self.g as u64)
    }
}

/// Δ-representation `(k_0, k_1, ...)` with trailing zeros stripped.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DeltaState(Vec<u32>);

impl DeltaState {
    pub fn from_levels(mut levels: Vec<u32>) -> Self {
        while levels.len() > 1 && *levels.last().unwrap() == 0 {
            levels.pop();
        }
        if levels.is_empty() {
            levels.push(0);
        }
        DeltaState(levels)
    }

    /// The initial state `(m, 0, ..., 0)`.
    pub fn initial(m: usize) -> Self {
        DeltaState(vec![m as u32])
    }

    pub fn levels(&self) -> &[u32] {
        &self.0
    }

    /// `k_l`, zero past the top level.
    pub fn get(&self, l: usize) -> u32 {
        self.0.get(l).copied().unwrap_or(0)
    }

    /// `L(k)`: the highest occupied level, i.e. the counters gap.
    pub fn top_level(&self) -> usize {
        self.0.len() - 1
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&x| u64::from(x)).sum()
    }

    /// Fixed-length `(g + 1)` copy padded with zeros.
    pub fn padded(&self, g: usize) -> Vec<u32> {
        let mut v = self.0.clone();
        v.resize(g + 1, 0);
        v
    }

    /// Membership in `Ω_g`.
    pub fn is_member(&self, p: &ChainParams) -> bool {
        let top = self.top_level();
        self.total() == p.m as u64 && self.0[0] >= 1 && self.0[top] as usize >= p.d && top <= p.g
    }
}

impl fmt::Debug for DeltaState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k{:?}", self.0)
    }
}

/// All of `Ω_g`, densely indexed.
///
/// States are ordered by top level `L(k)`, then lexicographically descending,
/// so index 0 is always `(m, 0, ..., 0)`. Lookups go through a bit-packed key.
#[derive(Debug, Clone)]
pub struct StateSpace {
    params: ChainParams,
    width: usize,
    flat: Vec<u32>,
    index: HashMap<u128, u32>,
    bits: u32,
}

impl StateSpace {
    pub fn enumerate(params: ChainParams) -> Result<Self> {
        let ChainParams { m, d, g } = params;
        let count = params
            .state_count()
            .filter(|&c| c <= MAX_STATES)
            .ok_or_else(|| {
                Error::TooLarge(format!("C({}, {g}) states exceed {MAX_STATES}", m + g - d))
            })? as usize;
        let bits = u64::BITS - (m as u64).leading_zeros();
        if bits as usize * (g + 1) > 128 {
            return Err(Error::StateTooWide {
                bits: bits * (g as u32 + 1),
            });
        }
        let width = g + 1;
        let mut space = StateSpace {
            params,
            width,
            flat: Vec::with_capacity(count * width),
            index: HashMap::with_capacity(count),
            bits,
        };
        let mut buf = vec![0u32; width];
        for top in 0..=g {
            if top == 0 {
                buf[0] = m as u32;
                space.push(&buf);
                continue;
            }
            // k_0 >= 1, middle levels >= 0, k_top >= d.
            for k0 in (1..=m - d).rev() {
                buf[0] = k0 as u32;
                space.fill_middle(&mut buf, 1, top, m - k0);
            }
        }
        if space.len() != count {
            return Err(Error::Internal(format!(
                "enumerated {} states, expected {count}",
                space.len()
            )));
        }
        Ok(space)
    }

    fn fill_middle(&mut self, buf: &mut [u32], level: usize, top: usize, rest: usize) {
        let d = self.params.d;
        if level == top {
            buf[top] = rest as u32;
            for x in &mut buf[top + 1..] {
                *x = 0;
            }
            self.push(buf);
            return;
        }
        for kl in (0..=rest - d).rev() {
            buf[level] = kl as u32;
            self.fill_middle(buf, level + 1, top, rest - kl);
        }
    }

    fn push(&mut self, levels: &[u32]) {
        let key = self.key(levels);
        let idx = self.len() as u32;
        self.flat.extend_from_slice(levels);
        self.index.insert(key, idx);
    }

    fn key(&self, levels: &[u32]) -> u128 {
        levels.iter().enumerate().fold(0u128, |acc, (l, &k)| {
            acc | (u128::from(k) << (l as u32 * self.bits))
        })
    }

    pub fn params(&self) -> ChainParams {
        self.params
    }

    pub fn len(&self) -> usize {
        self.flat.len() / self.width
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    /// Padded levels of state `i` (length `g + 1`).
    pub fn levels(&self, i: usize) -> &[u32] {
        &self.flat[i * self.width..(i + 1) * self.width]
    }

    pub fn state(&self, i: usize) -> DeltaState {
        DeltaState::from_levels(self.levels(i).to_vec())
    }

    pub fn iter(&self) -> impl Iterator<Item = DeltaState> + '_ {
        (0..self.len()).map(|i| self.state(i))
    }

    /// Index of padded levels; entries must not exceed `m`.
    pub fn index_of_levels(&self, levels: &[u32]) -> Option<usize> {
        if levels.len() > self.width || levels.iter().any(|&k| k as usize > self.params.m) {
            return None;
        }
        self.index.get(&self.key(levels)).map(|&i| i as usize)
    }

    pub fn index_of(&self, k: &DeltaState) -> Option<usize> {
        self.index_of_levels(k.levels())
    }
}
