//! Seeded Monte-Carlo driver for the sketches, plus exact oracles.
//!
//! Every run draws from its own ChaCha8 stream seeded by
//! [`run_seed`]`(master, run)`, the `(run + 1)`-th output of a SplitMix64
//! generator started at `master`. Runs can therefore execute in any order or
//! in parallel and still reproduce bit-for-bit; aggregation happens after the
//! fact, in run order.

mod kernel_check;
mod oracle;
mod probe;

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::binom::SubsetRatios;
use crate::par::{self, Execution};
use crate::sketch::{CounterArray, IdealHashTable, Rule, Sketch, SketchConfig, UniformSelector};
use crate::{Error, Result};

pub use kernel_check::{kernel_event_check, EventCheck, EventFrequency};
pub use oracle::{brute_force_expected_error, OracleResult, ORACLE_MAX_LEAVES};
pub use probe::{
    gap_tail_probe, sandwich_trace, worst_case_probe, Estimate, GapTailRow, ItemEstimate,
    ProbeReport, SandwichReport, SandwichViolation,
};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of run `run` under master seed `master`.
pub fn run_seed(master: u64, run: u64) -> u64 {
    splitmix64(master.wrapping_add(run.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub(crate) fn run_rng(master: u64, run: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(run_seed(master, run))
}

/// `E[min_{u in S} y_u]` for `S` a uniform d-subset, exactly.
///
/// With `y` sorted ascending, position `r` (1-based) is the minimum of `S`
/// iff `S` contains it and nothing below it: `C(m - r, d - 1)` subsets.
/// Ranging over positions rather than distinct values makes ties harmless.
pub fn expected_subset_min(values: &[u64], ratios: &SubsetRatios) -> f64 {
    let m = values.len();
    let d = ratios.d();
    debug_assert_eq!(m, ratios.m());
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    (1..=m - d + 1)
        .map(|r| sorted[r - 1] as f64 * ratios.difference(m - r + 1, m - r))
        .sum()
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Mean and standard error of the mean.
pub(crate) fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = compensated_sum(xs.iter().copied()) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = compensated_sum(xs.iter().map(|x| (x - mean).powi(2))) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Where the per-step selections come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StreamMode {
    /// Fresh uniform d-subset every step.
    Uniform,
    /// Explicit item stream hashed by a per-run ideal hash table.
    Items(Vec<u64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub m: usize,
    pub d: usize,
    pub horizon: u64,
    pub runs: u64,
    pub seed: u64,
    pub rule: Rule,
    pub stream: StreamMode,
    /// Keep per-run records in [`SimStats::per_run`].
    pub keep_runs: bool,
}

impl SimConfig {
    pub fn uniform(m: usize, d: usize, horizon: u64, runs: u64, seed: u64, rule: Rule) -> Self {
        SimConfig {
            m,
            d,
            horizon,
            runs,
            seed,
            rule,
            stream: StreamMode::Uniform,
            keep_runs: false,
        }
    }

    pub fn validate(&self) -> Result<SketchConfig> {
        let cfg = SketchConfig::new(self.m, self.d)?;
        self.rule.validate()?;
        if self.horizon == 0 {
            return Err(Error::Config("horizon T must be at least 1".into()));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if let StreamMode::Items(items) = &self.stream {
            if (items.len() as u64) < self.horizon {
                return Err(Error::Config(format!(
                    "stream has {} items, horizon is {}",
                    items.len(),
                    self.horizon
                )));
            }
        }
        Ok(cfg)
    }
}

/// Outcome of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub counters: CounterArray,
    /// `G(t)` after each step `t = 1..=T`.
    pub gap_trace: Vec<u32>,
    /// `E[e*(T) | Y(T)]` over the absent item's hash set.
    pub conditional_error: f64,
}

impl Trajectory {
    pub fn error_rate(&self) -> f64 {
        self.conditional_error / self.counters.steps() as f64
    }

    /// `sum_u Y_u(T) / (T m)`.
    pub fn counter_rate(&self) -> f64 {
        self.counters.total() as f64 / (self.counters.steps() as f64 * self.counters.m() as f64)
    }
}

pub fn run_trajectory(config: &SimConfig, run: u64) -> Result<Trajectory> {
    let cfg = config.validate()?;
    let ratios = SubsetRatios::new(cfg.m(), cfg.d());
    trajectory(config, &cfg, &ratios, run)
}

fn trajectory(
    config: &SimConfig,
    cfg: &SketchConfig,
    ratios: &SubsetRatios,
    run: u64,
) -> Result<Trajectory> {
    let mut rng = run_rng(config.seed, run);
    let mut sketch = Sketch::new(cfg, config.rule)?;
    let mut gap_trace = Vec::with_capacity(config.horizon as usize);
    match &config.stream {
        StreamMode::Uniform => {
            let mut selector = UniformSelector::new(*cfg);
            for _ in 0..config.horizon {
                let s = selector.select(&mut rng);
                sketch.update(&s)?;
                gap_trace.push(sketch.counters().gap() as u32);
            }
        }
        StreamMode::Items(items) => {
            let mut table = IdealHashTable::new(*cfg);
            for item in &items[..config.horizon as usize] {
                let s = table.hash(item, &mut rng);
                sketch.update(s)?;
                gap_trace.push(sketch.counters().gap() as u32);
            }
        }
    }
    let counters = sketch.counters().clone();
    let conditional_error = expected_subset_min(counters.values(), ratios);
    Ok(Trajectory {
        counters,
        gap_trace,
        conditional_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: u64,
    pub error: f64,
    pub counter_rate: f64,
}

/// Aggregate over runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub m: usize,
    pub d: usize,
    pub horizon: u64,
    pub runs: u64,
    pub seed: u64,
    pub rule: Rule,
    /// Estimate of `E[e*(T)/T]`.
    pub mean_error_rate: f64,
    pub error_rate_std_error: f64,
    pub mean_counter_rate: f64,
    pub counter_rate_std_error: f64,
    /// `(g, fraction of steps with G(t) >= g)` for `g = 1..=max gap seen`.
    pub gap_tail: Vec<(u32, f64)>,
    pub per_run: Option<Vec<RunRecord>>,
}

impl SimStats {
    /// Two CSV blocks: `run,error,counter_rate` then `g,fraction`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "run,error,counter_rate")?;
        if let Some(runs) = &self.per_run {
            for r in runs {
                writeln!(w, "{},{},{}", r.run, r.error, r.counter_rate)?;
            }
        }
        writeln!(w, "g,fraction")?;
        for (g, f) in &self.gap_tail {
            writeln!(w, "{g},{f}")?;
        }
        Ok(())
    }
}

pub fn estimate_error(config: &SimConfig) -> Result<SimStats> {
    estimate_error_with(config, Execution::default())
}

pub fn estimate_error_with(config: &SimConfig, exec: Execution) -> Result<SimStats> {
    let cfg = config.validate()?;
    let ratios = SubsetRatios::new(cfg.m(), cfg.d());
    let outcomes = par::map_range(exec, config.runs as usize, |run| {
        let tr = trajectory(config, &cfg, &ratios, run as u64)?;
        let mut hist = vec![0u64; 1];
        for &g in &tr.gap_trace {
            if g as usize >= hist.len() {
                hist.resize(g as usize + 1, 0);
            }
            hist[g as usize] += 1;
        }
        Ok::<_, Error>((tr.error_rate(), tr.counter_rate(), hist))
    });
    let mut errors = Vec::with_capacity(outcomes.len());
    let mut rates = Vec::with_capacity(outcomes.len());
    let mut hist: Vec<u64> = Vec::new();
    for o in outcomes {
        let (e, r, h) = o?;
        errors.push(e);
        rates.push(r);
        if h.len() > hist.len() {
            hist.resize(h.len(), 0);
        }
        for (a, b) in hist.iter_mut().zip(h) {
            *a += b;
        }
    }
    let steps = (config.horizon * config.runs) as f64;
    let mut gap_tail = Vec::new();
    let mut at_least: u64 = hist.iter().sum();
    for (g, &count) in hist.iter().enumerate() {
        if g > 0 {
            gap_tail.push((g as u32, at_least as f64 / steps));
        }
        at_least -= count;
    }
    let (mean_error_rate, error_rate_std_error) = mean_and_se(&errors);
    let (mean_counter_rate, counter_rate_std_error) = mean_and_se(&rates);
    let per_run = config.keep_runs.then(|| {
        errors
            .iter()
            .zip(&rates)
            .enumerate()
            .map(|(i, (&error, &counter_rate))| RunRecord {
                run: i as u64,
                error,
                counter_rate,
            })
            .collect()
    });
    Ok(SimStats {
        m: config.m,
        d: config.d,
        horizon: config.horizon,
        runs: config.runs,
        seed: config.seed,
        rule: config.rule,
        mean_error_rate,
        error_rate_std_error,
        mean_counter_rate,
        counter_rate_std_error,
        gap_tail,
        per_run,
    })
}
