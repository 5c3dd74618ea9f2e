use serde::{Deserialize, Serialize};

use super::state::{ChainParams, DeltaState, StateSpace};
use super::Variant;
use crate::binom::SubsetRatios;
use crate::par::{self, Execution};
use crate::{Error, Result};

/// One `(v, c)` event out of a state.
///
/// Events sharing a target are kept as separate edges; only `sum p * beta`
/// per row enters the bounds, and that is additive over events.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub target: u32,
    pub level: u16,
    pub count: u16,
    pub p: f64,
    pub beta: f64,
}

fn check_event(k: &[u32], v: usize, c: u32, p: &ChainParams) -> Result<()> {
    let kv = k.get(v).copied().unwrap_or(0);
    if v > p.g() || c == 0 || c as usize > p.d() || c > kv {
        return Err(Error::InvalidEvent {
            level: v,
            count: c,
            state: k.to_vec(),
        });
    }
    Ok(())
}

/// Image of padded `k` under event `(v, c)` written into `out` (both `g + 1`
/// long). Assumes the event passed [`check_event`].
fn apply(variant: Variant, k: &[u32], v: usize, c: u32, d: u32, out: &mut [u32]) -> bool {
    let g = k.len() - 1;
    let shift = |out: &mut [u32]| {
        out[0] = k[0] + k.get(1).copied().unwrap_or(0);
        if g > 1 {
            out[1..g].copy_from_slice(&k[2..=g]);
        }
        out[g] = 0;
    };
    if v == g && c == d {
        match variant {
            Variant::Lower => out.copy_from_slice(k),
            Variant::Upper => {
                // Minimum level merges into level 1, the d selected top
                // counters move one above the old top.
                shift(out);
                out[g - 1] -= d;
                out[g] = d;
            }
        }
        return true;
    }
    if v == 0 && c == k[0] {
        // c = k_0 <= d: the whole minimum level moves up.
        shift(out);
        return true;
    }
    if v == g {
        // c < d counters at the top would open level g + 1; such an event
        // has zero probability inside Ω_g.
        return false;
    }
    out.copy_from_slice(k);
    out[v] -= c;
    out[v + 1] += c;
    true
}

/// `Γ(k, v, c)` for the given variant.
pub fn gamma(
    variant: Variant,
    k: &DeltaState,
    v: usize,
    c: u32,
    p: &ChainParams,
) -> Result<DeltaState> {
    let padded = k.padded(p.g());
    check_event(&padded, v, c, p)?;
    let mut out = vec![0u32; p.g() + 1];
    if !apply(variant, &padded, v, c, p.d() as u32, &mut out) {
        return Err(Error::InvalidEvent {
            level: v,
            count: c,
            state: padded,
        });
    }
    Ok(DeltaState::from_levels(out))
}

pub fn gamma_lb(k: &DeltaState, v: usize, c: u32, p: &ChainParams) -> Result<DeltaState> {
    gamma(Variant::Lower, k, v, c, p)
}

pub fn gamma_ub(k: &DeltaState, v: usize, c: u32, p: &ChainParams) -> Result<DeltaState> {
    gamma(Variant::Upper, k, v, c, p)
}

fn above(k: &[u32], v: usize) -> usize {
    k.iter().skip(v + 1).map(|&x| x as usize).sum()
}

fn prob(r: &SubsetRatios, k: &[u32], v: usize, c: usize) -> f64 {
    let kv = k.get(v).copied().unwrap_or(0) as usize;
    let d = r.d();
    if c == 0 || c > d || c > kv {
        return 0.0;
    }
    let rest = above(k, v);
    if rest < d - c {
        return 0.0;
    }
    r.product(kv, c, rest, d - c)
}

fn beta(variant: Variant, r: &SubsetRatios, k: &[u32], v: usize, c: usize, g: usize) -> f64 {
    if v == g && c == r.d() {
        return match variant {
            Variant::Lower => 0.0,
            // Either h(j) is exactly the d lifted top counters, or it meets
            // the lifted minimum level.
            Variant::Upper => r.complement_plus(r.m() - k[0] as usize, 1),
        };
    }
    let rest = above(k, v);
    r.difference(rest + c, rest)
}

/// `C(k_v, c) C(sum_{l>v} k_l, d - c) / C(m, d)`; same for both variants.
pub fn transition_prob(k: &DeltaState, v: usize, c: u32, p: &ChainParams) -> f64 {
    let r = SubsetRatios::new(p.m(), p.d());
    prob(&r, &k.padded(p.g().max(k.top_level())), v, c as usize)
}

pub fn beta_lb(k: &DeltaState, v: usize, c: u32, p: &ChainParams) -> Result<f64> {
    let padded = k.padded(p.g());
    check_event(&padded, v, c, p)?;
    let r = SubsetRatios::new(p.m(), p.d());
    Ok(beta(Variant::Lower, &r, &padded, v, c as usize, p.g()))
}

pub fn beta_ub(k: &DeltaState, v: usize, c: u32, p: &ChainParams) -> Result<f64> {
    let padded = k.padded(p.g());
    check_event(&padded, v, c, p)?;
    let r = SubsetRatios::new(p.m(), p.d());
    Ok(beta(Variant::Upper, &r, &padded, v, c as usize, p.g()))
}

/// Sparse one-step kernel in CSR layout, plus the per-state expected error
/// increment `((P ⊙ B) 1)_k = sum_edges p * beta`.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    variant: Variant,
    params: ChainParams,
    offsets: Vec<usize>,
    edges: Vec<Edge>,
    increment: Vec<f64>,
}

pub fn build_kernel(space: &StateSpace, variant: Variant) -> Result<TransitionKernel> {
    build_kernel_with(space, variant, Execution::default())
}

pub fn build_kernel_with(
    space: &StateSpace,
    variant: Variant,
    exec: Execution,
) -> Result<TransitionKernel> {
    let params = space.params();
    let ratios = SubsetRatios::new(params.m(), params.d());
    const CHUNK: usize = 4096;
    let n = space.len();
    let chunks = par::map_range(exec, n.div_ceil(CHUNK), |ci| {
        let mut out = Vec::new();
        let mut lens = Vec::new();
        let mut buf = vec![0u32; params.g() + 1];
        for i in ci * CHUNK..((ci + 1) * CHUNK).min(n) {
            let before = out.len();
            row_edges(space, &ratios, variant, i, &mut buf, &mut out)?;
            lens.push(out.len() - before);
        }
        Ok::<_, Error>((out, lens))
    });
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    let total: usize = chunks
        .iter()
        .map(|c| c.as_ref().map(|(e, _)| e.len()).unwrap_or(0))
        .sum();
    let mut edges = Vec::with_capacity(total);
    for chunk in chunks {
        let (e, lens) = chunk?;
        for len in lens {
            offsets.push(offsets.last().unwrap() + len);
        }
        edges.extend(e);
    }
    let mut increment = vec![0.0; n];
    par::fill(exec, &mut increment, |i| {
        edges[offsets[i]..offsets[i + 1]]
            .iter()
            .map(|e| e.p * e.beta)
            .sum()
    });
    Ok(TransitionKernel {
        variant,
        params,
        offsets,
        edges,
        increment,
    })
}

fn row_edges(
    space: &StateSpace,
    ratios: &SubsetRatios,
    variant: Variant,
    i: usize,
    buf: &mut [u32],
    out: &mut Vec<Edge>,
) -> Result<()> {
    let params = space.params();
    let d = params.d();
    let k = space.levels(i);
    for v in 0..=params.g() {
        let kv = k[v] as usize;
        for c in 1..=kv.min(d) {
            let p = prob(ratios, k, v, c);
            if p <= 0.0 {
                continue;
            }
            if !apply(variant, k, v, c as u32, d as u32, buf) {
                return Err(Error::Internal(format!(
                    "event (v={v}, c={c}) with p={p} leaves the state space from {k:?}"
                )));
            }
            let target = space
                .index_of_levels(buf)
                .ok_or_else(|| Error::NotInSpace(buf.to_vec()))?;
            out.push(Edge {
                target: target as u32,
                level: v as u16,
                count: c as u16,
                p,
                beta: beta(variant, ratios, k, v, c, params.g()),
            });
        }
    }
    Ok(())
}

impl TransitionKernel {
    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn params(&self) -> ChainParams {
        self.params
    }

    pub fn num_states(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn row(&self, i: usize) -> &[Edge] {
        &self.edges[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Edge]> + '_ {
        (0..self.num_states()).map(move |i| self.row(i))
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).iter().map(|e| e.p).sum()
    }

    /// Per-state expected error increment, `(P ⊙ B) 1`.
    pub fn expected_increment(&self) -> &[f64] {
        &self.increment
    }

    /// Replaces every `beta` via `f(source, edge)` and refreshes the
    /// increment vector. Used to construct deliberately broken kernels when
    /// checking that the verification suites notice.
    pub fn map_beta(&mut self, f: impl Fn(usize, &Edge) -> f64) {
        for i in 0..self.num_states() {
            let (lo, hi) = (self.offsets[i], self.offsets[i + 1]);
            for e in &mut self.edges[lo..hi] {
                e.beta = f(i, e);
            }
            self.increment[i] = self.edges[lo..hi].iter().map(|e| e.p * e.beta).sum();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(m: usize, d: usize, g: usize) -> ChainParams {
        ChainParams::new(m, d, g).unwrap()
    }

    fn k(levels: &[u32]) -> DeltaState {
        DeltaState::from_levels(levels.to_vec())
    }

    #[test]
    fn gamma_lb_examples() {
        let p = params(3, 2, 1);
        assert_eq!(gamma_lb(&k(&[1, 2]), 1, 2, &p).unwrap(), k(&[1, 2]));
        assert_eq!(gamma_lb(&k(&[1, 2]), 0, 1, &p).unwrap(), k(&[3]));
        let p = params(5, 2, 2);
        assert_eq!(gamma_lb(&k(&[1, 2, 2]), 1, 1, &p).unwrap(), k(&[1, 1, 3]));
    }

    #[test]
    fn gamma_ub_examples() {
        let p = params(3, 2, 1);
        assert_eq!(gamma_ub(&k(&[1, 2]), 1, 2, &p).unwrap(), k(&[1, 2]));
        assert_eq!(gamma_ub(&k(&[1, 2]), 0, 1, &p).unwrap(), k(&[3]));
        let p = params(7, 2, 2);
        assert_eq!(gamma_ub(&k(&[1, 2, 4]), 2, 2, &p).unwrap(), k(&[3, 2, 2]));
    }

    #[test]
    fn gamma_rejects_bad_events() {
        let p = params(3, 2, 1);
        for (v, c) in [(0, 0), (0, 2), (1, 3), (2, 1)] {
            assert!(matches!(
                gamma_lb(&k(&[1, 2]), v, c, &p),
                Err(Error::InvalidEvent { .. })
            ));
        }
        // c < d at the top level would open level g + 1.
        assert!(gamma_ub(&k(&[1, 2]), 1, 1, &p).is_err());
    }

    #[test]
    fn transition_prob_examples() {
        let p = params(3, 2, 1);
        assert!((transition_prob(&k(&[1, 2]), 0, 1, &p) - 2.0 / 3.0).abs() < 1e-15);
        assert!((transition_prob(&k(&[1, 2]), 1, 2, &p) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(transition_prob(&k(&[1, 2]), 1, 1, &p), 0.0);
    }

    #[test]
    fn beta_examples() {
        let p = params(3, 2, 1);
        assert!((beta_lb(&k(&[3]), 0, 2, &p).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((beta_lb(&k(&[1, 2]), 0, 1, &p).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(beta_lb(&k(&[1, 2]), 1, 2, &p).unwrap(), 0.0);
        assert_eq!(beta_ub(&k(&[1, 2]), 1, 2, &p).unwrap(), 1.0);
        assert!((beta_ub(&k(&[1, 2]), 0, 1, &p).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let p = params(5, 2, 1);
        assert!((beta_ub(&k(&[1, 4]), 1, 2, &p).unwrap() - 0.5).abs() < 1e-15);
    }

    fn kernel(m: usize, d: usize, g: usize, variant: Variant) -> (StateSpace, TransitionKernel) {
        let s = StateSpace::enumerate(params(m, d, g)).unwrap();
        let kern = build_kernel(&s, variant).unwrap();
        (s, kern)
    }

    #[test]
    fn small_lb_kernel_rows() {
        let (_, kern) = kernel(3, 2, 1, Variant::Lower);
        assert_eq!(kern.row(0).len(), 1);
        let e = kern.row(0)[0];
        assert_eq!((e.target, e.p), (1, 1.0));
        assert!((e.beta - 1.0 / 3.0).abs() < 1e-15);

        let row = kern.row(1);
        assert_eq!(row.len(), 2);
        assert_eq!(row[0].target, 0);
        assert!((row[0].p - 2.0 / 3.0).abs() < 1e-15 && (row[0].beta - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(row[1].target, 1);
        assert!((row[1].p - 1.0 / 3.0).abs() < 1e-15 && row[1].beta == 0.0);
    }

    #[test]
    fn small_ub_kernel_rows() {
        let (_, kern) = kernel(3, 2, 1, Variant::Upper);
        let row = kern.row(1);
        assert_eq!(row[0].target, 0);
        assert!((row[0].beta - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(row[1].target, 1);
        assert_eq!(row[1].beta, 1.0);
    }

    #[test]
    fn rows_are_stochastic_and_sequential_matches_parallel() {
        for variant in [Variant::Lower, Variant::Upper] {
            let s = StateSpace::enumerate(params(9, 3, 3)).unwrap();
            let a = build_kernel_with(&s, variant, Execution::Sequential).unwrap();
            let b = build_kernel_with(&s, variant, Execution::Parallel).unwrap();
            assert_eq!(a.edges, b.edges);
            assert_eq!(a.increment, b.increment);
            for i in 0..a.num_states() {
                assert!((a.row_sum(i) - 1.0).abs() < 1e-12);
                assert!(a.row(i).len() <= 9);
            }
        }
    }
}
