//! Markov chains of the Δ-representation for LB-CU(g) and UB-CU(g).
//!
//! A state `k = (k_0, ..., k_g)` counts the counters sitting `l` above the
//! minimum. Under uniform counter selection the next state depends only on
//! `k` and the event `(v, c)`: the offset of the selection minimum and how
//! many selected counters attain it. [`StateSpace`] enumerates the reachable
//! states, [`TransitionKernel`] stores one sparse edge per event with its
//! probability `p` and the conditional probability `beta` that an absent
//! item's estimate grows, and [`bounds`] turns those into the expected
//! average errors `l_g(T)`, `U_g(T)` and their limits.

mod bounds;
mod dump;
mod kernel;
mod occupancy;
mod state;

pub use bounds::{
    asymptotic_error, asymptotic_error_with, bounds, bounds_window, expected_error,
    expected_error_on, expected_error_window, expected_error_windows, stationary,
    stationary_direct, AsymptoticResult, BoundResult, Stationary, Window, WindowedError,
    DIRECT_CHECK_MAX_STATES,
};
pub use dump::KernelDump;
pub use kernel::{
    beta_lb, beta_ub, build_kernel, build_kernel_with, gamma, gamma_lb, gamma_ub, transition_prob,
    Edge, TransitionKernel,
};
pub use occupancy::{evolve_occupancy, Evolution, OccupancyVector};
pub use state::{ChainParams, DeltaState, StateSpace, MAX_STATES};

pub use crate::sketch::Variant;
