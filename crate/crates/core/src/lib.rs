//! Count-min sketch with conservative updates (CMS-CU), its gap-capped
//! lower/upper variants, and the finite Markov chains that turn those
//! variants into computable bounds on the average estimation error.
//!
//! Module map:
//!
//! * [`sketch`] counter arrays, update rules, counter selection.
//! * [`markov`] state-space enumeration, sparse kernels, occupancy evolution,
//!   finite-horizon and asymptotic bounds.
//! * [`closed_form`] the `d = m - 1` birth-death chain and the `g = 1`
//!   asymptotic formulas.
//! * [`simulate`] seeded Monte-Carlo driver and the brute-force oracle.
//! * [`verify`] cross-check suites shared by the test-suite and the CLI.
//!
//! With the default `parallel` feature, inner loops (kernel rows, occupancy
//! gathers, Monte-Carlo runs) run on rayon. Disabling it gives an identical
//! sequential build; see [`Execution`].

pub mod binom;
pub mod closed_form;
mod error;
pub mod markov;
mod par;
pub mod simulate;
pub mod sketch;
pub mod verify;

pub use error::{Error, Result};
pub use par::Execution;
