use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::kernel::{build_kernel_with, TransitionKernel};
use super::occupancy::{Evolution, OccupancyVector};
use super::state::{ChainParams, StateSpace};
use super::Variant;
use crate::par::Execution;
use crate::{Error, Result};

/// Spaces up to this size get a dense direct solve alongside power iteration.
pub const DIRECT_CHECK_MAX_STATES: usize = 2000;

const DIRECT_CHECK_TOLERANCE: f64 = 1e-6;

/// `l_g(T)` / `U_g(T)` (or their limits when `horizon` is `None`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub m: usize,
    pub d: usize,
    pub g: usize,
    pub horizon: Option<u64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub states: usize,
    pub edges: usize,
    pub lower_seconds: Option<f64>,
    pub upper_seconds: Option<f64>,
}

/// Which `T` occupancy vectors enter the time average.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    /// `π(0), ..., π(T-1)`: exactly `E[e(T)] / T`.
    #[default]
    Standard,
    /// `π(1), ..., π(T)`: one step later, `(E[e(T+1)] - E[e(1)]) / T`.
    /// The published `m = 50, d = 4, T = 250` table follows this indexing.
    Shifted,
}

impl Window {
    pub fn label(self) -> &'static str {
        match self {
            Window::Standard => "standard",
            Window::Shifted => "shifted",
        }
    }
}

/// `(1/T) sum_{t<T} <π(t), (P ⊙ B) 1>` for a built kernel.
pub fn expected_error_on(kernel: &TransitionKernel, horizon: u64, exec: Execution) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::Config("horizon T must be at least 1".into()));
    }
    let mut evo = Evolution::new(kernel, exec);
    let mut total = evo.expected_increment();
    for _ in 1..horizon {
        evo.step();
        total += evo.expected_increment();
    }
    Ok(total / horizon as f64)
}

/// Time-averaged expected increment over the chosen [`Window`].
pub fn expected_error_window(
    kernel: &TransitionKernel,
    horizon: u64,
    window: Window,
    exec: Execution,
) -> Result<f64> {
    let both = expected_error_windows(kernel, horizon, exec)?;
    Ok(match window {
        Window::Standard => both.standard,
        Window::Shifted => both.shifted,
    })
}

/// Both window averages from one evolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowedError {
    pub standard: f64,
    pub shifted: f64,
}

pub fn expected_error_windows(
    kernel: &TransitionKernel,
    horizon: u64,
    exec: Execution,
) -> Result<WindowedError> {
    if horizon == 0 {
        return Err(Error::Config("horizon T must be at least 1".into()));
    }
    let mut evo = Evolution::new(kernel, exec);
    let mut standard = evo.expected_increment();
    let mut shifted = 0.0;
    for t in 1..=horizon {
        evo.step();
        let inc = evo.expected_increment();
        if t < horizon {
            standard += inc;
        }
        shifted += inc;
    }
    let n = horizon as f64;
    Ok(WindowedError {
        standard: standard / n,
        shifted: shifted / n,
    })
}

/// `l_g(T)` for [`Variant::Lower`], `U_g(T)` for [`Variant::Upper`].
pub fn expected_error(params: ChainParams, horizon: u64, variant: Variant) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::Config("horizon T must be at least 1".into()));
    }
    let space = StateSpace::enumerate(params)?;
    let kernel = build_kernel_with(&space, variant, Execution::default())?;
    expected_error_on(&kernel, horizon, Execution::default())
}

/// Finite-horizon bounds for the requested variants over one shared state space.
pub fn bounds(
    params: ChainParams,
    horizon: u64,
    variants: &[Variant],
    exec: Execution,
) -> Result<BoundResult> {
    bounds_window(params, horizon, variants, Window::Standard, exec)
}

/// [`bounds`] over an explicit averaging window.
pub fn bounds_window(
    params: ChainParams,
    horizon: u64,
    variants: &[Variant],
    window: Window,
    exec: Execution,
) -> Result<BoundResult> {
    if horizon == 0 {
        return Err(Error::Config("horizon T must be at least 1".into()));
    }
    let started = Instant::now();
    let space = StateSpace::enumerate(params)?;
    let enumerate_secs = started.elapsed().as_secs_f64();
    let mut out = BoundResult {
        m: params.m(),
        d: params.d(),
        g: params.g(),
        horizon: Some(horizon),
        lower: None,
        upper: None,
        states: space.len(),
        edges: 0,
        lower_seconds: None,
        upper_seconds: None,
    };
    for &variant in variants {
        let started = Instant::now();
        let kernel = build_kernel_with(&space, variant, exec)?;
        let value = match window {
            Window::Standard => expected_error_on(&kernel, horizon, exec)?,
            Window::Shifted => expected_error_window(&kernel, horizon, window, exec)?,
        };
        let secs = enumerate_secs + started.elapsed().as_secs_f64();
        out.edges = kernel.num_edges();
        match variant {
            Variant::Lower => {
                out.lower = Some(value);
                out.lower_seconds = Some(secs);
            }
            Variant::Upper => {
                out.upper = Some(value);
                out.upper_seconds = Some(secs);
            }
        }
    }
    Ok(out)
}

/// Power-iteration result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stationary {
    pub occupancy: OccupancyVector,
    pub iterations: usize,
    /// `max_j |(πP)_j - π_j|` of the returned vector.
    pub residual: f64,
}

/// Limiting distribution by power iteration from `(m, 0, ..., 0)`.
pub fn stationary(kernel: &TransitionKernel, tol: f64, max_iters: usize) -> Result<Stationary> {
    stationary_with(kernel, tol, max_iters, Execution::default())
}

fn stationary_with(
    kernel: &TransitionKernel,
    tol: f64,
    max_iters: usize,
    exec: Execution,
) -> Result<Stationary> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Config(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let mut evo = Evolution::new(kernel, exec);
    let mut previous = evo.probs().to_vec();
    let mut residual = f64::INFINITY;
    for it in 0..max_iters {
        residual = evo.step();
        if residual <= tol {
            return Ok(Stationary {
                occupancy: OccupancyVector {
                    t: it as u64,
                    probs: previous,
                },
                iterations: it + 1,
                residual,
            });
        }
        previous.copy_from_slice(evo.probs());
    }
    Err(Error::NonConvergence {
        iterations: max_iters,
        residual,
    })
}

/// Limiting distribution by a dense solve of `(I - Pᵀ) π = 0`, `sum π = 1`.
pub fn stationary_direct(kernel: &TransitionKernel) -> Result<Vec<f64>> {
    let n = kernel.num_states();
    if n > DIRECT_CHECK_MAX_STATES {
        return Err(Error::TooLarge(format!(
            "dense solve limited to {DIRECT_CHECK_MAX_STATES} states, got {n}"
        )));
    }
    let mut a = DMatrix::<f64>::identity(n, n);
    for (i, row) in kernel.rows().enumerate() {
        for e in row {
            a[(e.target as usize, i)] -= e.p;
        }
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Internal("singular stationary system".into()))?;
    Ok(x.iter().copied().collect())
}

/// `l_g(∞)` / `U_g(∞)` with convergence diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticResult {
    pub variant: Variant,
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
    pub states: usize,
    /// Same quantity from the dense solve, for small spaces.
    pub direct_value: Option<f64>,
}

pub fn asymptotic_error(
    params: ChainParams,
    variant: Variant,
    tol: f64,
) -> Result<AsymptoticResult> {
    asymptotic_error_with(params, variant, tol, 1_000_000, Execution::default())
}

pub fn asymptotic_error_with(
    params: ChainParams,
    variant: Variant,
    tol: f64,
    max_iters: usize,
    exec: Execution,
) -> Result<AsymptoticResult> {
    let space = StateSpace::enumerate(params)?;
    let kernel = build_kernel_with(&space, variant, exec)?;
    let st = stationary_with(&kernel, tol, max_iters, exec)?;
    let value = st.occupancy.dot(kernel.expected_increment());
    let direct_value = if space.len() <= DIRECT_CHECK_MAX_STATES {
        let pi = stationary_direct(&kernel)?;
        let direct: f64 = pi
            .iter()
            .zip(kernel.expected_increment())
            .map(|(a, b)| a * b)
            .sum();
        if (direct - value).abs() > DIRECT_CHECK_TOLERANCE {
            return Err(Error::Internal(format!(
                "power iteration ({value}) and direct solve ({direct}) disagree"
            )));
        }
        Some(direct)
    } else {
        None
    };
    Ok(AsymptoticResult {
        variant,
        value,
        iterations: st.iterations,
        residual: st.residual,
        states: space.len(),
        direct_value,
    })
}
