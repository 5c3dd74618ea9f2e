use serde::{Deserialize, Serialize};

use super::kernel::TransitionKernel;
use crate::par::{self, Execution};

/// Distribution over `Ω_g` at step `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyVector {
    pub t: u64,
    pub probs: Vec<f64>,
}

impl OccupancyVector {
    pub fn initial(n: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[0] = 1.0;
        OccupancyVector { t: 0, probs }
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `<π, x>`.
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.probs.iter().zip(x).map(|(a, b)| a * b).sum()
    }
}

/// Incoming-edge (CSC) view of a kernel: `π'[j] = sum_{i -> j} π[i] p`.
///
/// Gathering per target keeps each output slot independent, so the update
/// parallelises without atomics and is bit-identical across thread counts.
#[derive(Debug, Clone)]
struct Incoming {
    offsets: Vec<usize>,
    sources: Vec<u32>,
    probs: Vec<f64>,
}

impl Incoming {
    fn new(kernel: &TransitionKernel) -> Self {
        let n = kernel.num_states();
        let mut offsets = vec![0usize; n + 1];
        for row in kernel.rows() {
            for e in row {
                offsets[e.target as usize + 1] += 1;
            }
        }
        for j in 0..n {
            offsets[j + 1] += offsets[j];
        }
        let mut cursor = offsets.clone();
        let mut sources = vec![0u32; kernel.num_edges()];
        let mut probs = vec![0.0; kernel.num_edges()];
        for (i, row) in kernel.rows().enumerate() {
            for e in row {
                let slot = &mut cursor[e.target as usize];
                sources[*slot] = i as u32;
                probs[*slot] = e.p;
                *slot += 1;
            }
        }
        Incoming {
            offsets,
            sources,
            probs,
        }
    }

    fn apply(&self, exec: Execution, from: &[f64], to: &mut [f64]) {
        par::fill(exec, to, |j| {
            let (lo, hi) = (self.offsets[j], self.offsets[j + 1]);
            self.sources[lo..hi]
                .iter()
                .zip(&self.probs[lo..hi])
                .map(|(&i, &p)| from[i as usize] * p)
                .sum()
        });
    }
}

/// Steps `π(t) -> π(t + 1) = π(t) P` starting from the point mass on
/// `(m, 0, ..., 0)`.
#[derive(Debug, Clone)]
pub struct Evolution<'k> {
    kernel: &'k TransitionKernel,
    incoming: Incoming,
    current: Vec<f64>,
    scratch: Vec<f64>,
    t: u64,
    exec: Execution,
}

impl<'k> Evolution<'k> {
    pub fn new(kernel: &'k TransitionKernel, exec: Execution) -> Self {
        let n = kernel.num_states();
        Evolution {
            kernel,
            incoming: Incoming::new(kernel),
            current: OccupancyVector::initial(n).probs,
            scratch: vec![0.0; n],
            t: 0,
            exec,
        }
    }

    /// Restarts from an arbitrary distribution.
    pub fn reset(&mut self, probs: &[f64]) {
        self.current.copy_from_slice(probs);
        self.t = 0;
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn probs(&self) -> &[f64] {
        &self.current
    }

    pub fn snapshot(&self) -> OccupancyVector {
        OccupancyVector {
            t: self.t,
            probs: self.current.clone(),
        }
    }

    /// `<π(t), (P ⊙ B) 1>`: expected error increment during step `t + 1`.
    pub fn expected_increment(&self) -> f64 {
        self.current
            .iter()
            .zip(self.kernel.expected_increment())
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Advances one step and returns `max_j |π(t+1)_j - π(t)_j|`.
    pub fn step(&mut self) -> f64 {
        self.incoming
            .apply(self.exec, &self.current, &mut self.scratch);
        std::mem::swap(&mut self.current, &mut self.scratch);
        self.t += 1;
        self.current
            .iter()
            .zip(&self.scratch)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `π(0), ..., π(T - 1)`. Keeps every vector; for long horizons on large
/// spaces stream through [`Evolution`] instead.
pub fn evolve_occupancy(kernel: &TransitionKernel, horizon: u64) -> Vec<OccupancyVector> {
    let mut evo = Evolution::new(kernel, Execution::default());
    let mut out = Vec::with_capacity(horizon as usize);
    for t in 0..horizon {
        if t > 0 {
            evo.step();
        }
        out.push(evo.snapshot());
    }
    out
}
