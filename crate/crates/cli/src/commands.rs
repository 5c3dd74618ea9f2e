use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use cu_bound::closed_form::BirthDeathSummary;
use cu_bound::markov::{
    asymptotic_error_with, build_kernel_with, expected_error_on, expected_error_window,
    expected_error_windows, ChainParams, KernelDump, StateSpace, Variant, Window,
};
use cu_bound::simulate::{brute_force_expected_error, estimate_error, SimConfig, SimStats};
use cu_bound::sketch::Rule;
use cu_bound::verify::{self, Level};
use cu_bound::Execution;
use serde::{Deserialize, Serialize};

use crate::record::{num, OutputRecord, Timing};
use crate::{
    AsymptoticArgs, BoundVariant, BoundsArgs, CliError, ClosedFormArgs, Command, Format, LevelArg,
    OracleArgs, SimVariant, SimulateArgs, Table1Args, VerifyArgs, WindowArg,
};

type Result<T> = std::result::Result<T, CliError>;

/// Published reference values for `m = 50, d = 4, T = 250`, `g = 1..=5`.
pub const REFERENCE_TABLE: [(f64, f64); 5] = [
    (0.01860, 0.07654),
    (0.02956, 0.04090),
    (0.03420, 0.03637),
    (0.03540, 0.03572),
    (0.03559, 0.03562),
];

pub fn run(command: Command, started: Instant) -> Result<()> {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match command {
        Command::Bounds(a) => bounds(a, argv, started),
        Command::Asymptotic(a) => asymptotic(a, argv, started),
        Command::ClosedForm(a) => closed_form(a, argv, started),
        Command::Simulate(a) => simulate(a, argv, started),
        Command::Oracle(a) => oracle(a, argv, started),
        Command::Table1(a) => table1(a, argv, started),
        Command::Verify(a) => run_verify(a, argv, started),
    }
}

fn emit<P: Serialize, R: Serialize>(
    command: &str,
    argv: Vec<String>,
    parameters: P,
    results: R,
    timings: Vec<Timing>,
    started: Instant,
) -> Result<()> {
    let record = OutputRecord {
        command: command.into(),
        argv,
        parameters,
        results,
        timings,
        wall_time_seconds: num(started.elapsed().as_secs_f64()),
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    serde_json::to_writer_pretty(&mut out, &record)?;
    writeln!(out)?;
    Ok(())
}

fn variants(v: BoundVariant) -> &'static [Variant] {
    match v {
        BoundVariant::Lb => &[Variant::Lower],
        BoundVariant::Ub => &[Variant::Upper],
        BoundVariant::Both => &[Variant::Lower, Variant::Upper],
    }
}

fn variant_label(v: BoundVariant) -> &'static str {
    match v {
        BoundVariant::Lb => "lb",
        BoundVariant::Ub => "ub",
        BoundVariant::Both => "both",
    }
}

fn window(w: WindowArg) -> Window {
    match w {
        WindowArg::Standard => Window::Standard,
        WindowArg::Shifted => Window::Shifted,
    }
}

/// `k.json` becomes `k.lb.json` / `k.ub.json`.
pub fn dump_path(path: &Path, variant: Variant) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{}.{}", variant.label(), ext.to_string_lossy()),
        None => format!("{stem}.{}", variant.label()),
    };
    path.with_file_name(name)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsParams {
    pub m: usize,
    pub d: usize,
    pub g: usize,
    pub t: u64,
    pub variant: String,
    pub window: Window,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsResults {
    pub states: usize,
    pub edges: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kernel_dumps: Vec<String>,
}

fn bounds(a: BoundsArgs, argv: Vec<String>, started: Instant) -> Result<()> {
    let params = ChainParams::new(a.m, a.d, a.g)?;
    if a.t == 0 {
        return Err(CliError::Usage("--t must be at least 1".into()));
    }
    let win = window(a.window);
    let exec = Execution::default();
    let clock = Instant::now();
    let space = StateSpace::enumerate(params)?;
    let mut timings = vec![Timing::new("enumerate", clock.elapsed().as_secs_f64())];
    let mut results = BoundsResults {
        states: space.len(),
        edges: 0,
        lower: None,
        upper: None,
        kernel_dumps: Vec::new(),
    };
    let selected = variants(a.variant);
    let mut csv_rows = Vec::new();
    for &variant in selected {
        let clock = Instant::now();
        let kernel = build_kernel_with(&space, variant, exec)?;
        let value = match win {
            Window::Standard => expected_error_on(&kernel, a.t, exec)?,
            Window::Shifted => expected_error_window(&kernel, a.t, win, exec)?,
        };
        timings.push(Timing::new(variant.label(), clock.elapsed().as_secs_f64()));
        results.edges = kernel.num_edges();
        match variant {
            Variant::Lower => results.lower = Some(num(value)),
            Variant::Upper => results.upper = Some(num(value)),
        }
        csv_rows.push((variant, value));
        if let Some(path) = &a.dump_kernel {
            let path = if selected.len() > 1 {
                dump_path(path, variant)
            } else {
                path.clone()
            };
            let file = BufWriter::new(File::create(&path)?);
            KernelDump::new(&space, &kernel).write_json(file)?;
            results.kernel_dumps.push(path.display().to_string());
        }
    }
    match a.format {
        Format::Json => emit(
            "bounds",
            argv,
            BoundsParams {
                m: a.m,
                d: a.d,
                g: a.g,
                t: a.t,
                variant: variant_label(a.variant).into(),
                window: win,
            },
            results,
            timings,
            started,
        ),
        Format::Csv => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            writeln!(out, "m,d,g,t,window,variant,value,states,edges")?;
            for (variant, value) in csv_rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    a.m,
                    a.d,
                    a.g,
                    a.t,
                    win.label(),
                    variant.label(),
                    num(value),
                    results.states,
                    results.edges
                )?;
            }
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticParams {
    pub m: usize,
    pub d: usize,
    pub g: usize,
    pub tol: String,
    pub max_iters: usize,
    pub variant: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRow {
    pub variant: Variant,
    pub value: String,
    pub iterations: usize,
    pub residual: String,
    pub states: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direct_value: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticResults {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<AsymptoticRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<AsymptoticRow>,
}

fn asymptotic(a: AsymptoticArgs, argv: Vec<String>, started: Instant) -> Result<()> {
    let params = ChainParams::new(a.m, a.d, a.g)?;
    let mut results = AsymptoticResults {
        lower: None,
        upper: None,
    };
    let mut timings = Vec::new();
    for &variant in variants(a.variant) {
        let clock = Instant::now();
        let r = asymptotic_error_with(params, variant, a.tol, a.max_iters, Execution::default())?;
        timings.push(Timing::new(variant.label(), clock.elapsed().as_secs_f64()));
        let row = AsymptoticRow {
            variant,
            value: num(r.value),
            iterations: r.iterations,
            residual: num(r.residual),
            states: r.states,
            direct_value: r.direct_value.map(num),
        };
        match variant {
            Variant::Lower => results.lower = Some(row),
            Variant::Upper => results.upper = Some(row),
        }
    }
    emit(
        "asymptotic",
        argv,
        AsymptoticParams {
            m: a.m,
            d: a.d,
            g: a.g,
            tol: num(a.tol),
            max_iters: a.max_iters,
            variant: variant_label(a.variant).into(),
        },
        results,
        timings,
        started,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormParams {
    pub m: usize,
    pub d: usize,
    pub g: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormResults {
    /// `π_0 ..= π_10`.
    pub limiting: Vec<String>,
    pub error_rate: String,
    pub counter_rate: String,
    pub growth_rate: String,
    /// `[g, fraction of time with gap >= g]`.
    pub gap_tail: Vec<(u32, String)>,
    pub g1_lower: String,
    pub g1_upper: String,
}

fn closed_form(a: ClosedFormArgs, argv: Vec<String>, started: Instant) -> Result<()> {
    if a.m < 3 {
        return Err(CliError::Usage(format!(
            "closed forms need m >= 3 (d = m - 1), got m = {}",
            a.m
        )));
    }
    let gaps: Vec<u32> = match a.g {
        Some(g) => vec![g],
        None => (1..=10).collect(),
    };
    let s = BirthDeathSummary::new(a.m, 11, &gaps)?;
    emit(
        "closed-form",
        argv,
        ClosedFormParams {
            m: a.m,
            d: a.m - 1,
            g: a.g,
        },
        ClosedFormResults {
            limiting: s.limiting.iter().copied().map(num).collect(),
            error_rate: num(s.error_rate),
            counter_rate: num(s.counter_rate),
            growth_rate: num(s.growth_rate),
            gap_tail: s.gap_tail.iter().map(|&(g, f)| (g, num(f))).collect(),
            g1_lower: num(s.g1_lower),
            g1_upper: num(s.g1_upper),
        },
        Vec::new(),
        started,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateParams {
    pub m: usize,
    pub d: usize,
    pub t: u64,
    pub runs: u64,
    pub seed: u64,
    pub variant: String,
    pub cap: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub run: u64,
    pub error: String,
    pub counter_rate: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateResults {
    pub mean_error_rate: String,
    pub error_rate_std_error: String,
    pub mean_counter_rate: String,
    pub counter_rate_std_error: String,
    pub gap_tail: Vec<(u32, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_run: Option<Vec<RunRow>>,
}

impl From<&SimStats> for SimulateResults {
    fn from(s: &SimStats) -> Self {
        SimulateResults {
            mean_error_rate: num(s.mean_error_rate),
            error_rate_std_error: num(s.error_rate_std_error),
            mean_counter_rate: num(s.mean_counter_rate),
            counter_rate_std_error: num(s.counter_rate_std_error),
            gap_tail: s.gap_tail.iter().map(|&(g, f)| (g, num(f))).collect(),
            per_run: s.per_run.as_ref().map(|runs| {
                runs.iter()
                    .map(|r| RunRow {
                        run: r.run,
                        error: num(r.error),
                        counter_rate: num(r.counter_rate),
                    })
                    .collect()
            }),
        }
    }
}

fn simulate(a: SimulateArgs, argv: Vec<String>, started: Instant) -> Result<()> {
    let (rule, label) = match (a.variant, a.cap) {
        (SimVariant::Cu, None) => (Rule::Conservative, "cu"),
        (SimVariant::Cu, Some(_)) => {
            return Err(CliError::Usage("--cap applies to lb and ub only".into()))
        }
        (SimVariant::Lb, Some(g)) => (Rule::lower(g), "lb"),
        (SimVariant::Ub, Some(g)) => (Rule::upper(g), "ub"),
        (_, None) => return Err(CliError::Usage("--cap is required for lb and ub".into())),
    };
    let mut cfg = SimConfig::uniform(a.m, a.d, a.t, a.runs, a.seed, rule);
    cfg.keep_runs = a.keep_runs || a.format == Format::Csv;
    let stats = estimate_error(&cfg)?;
    match a.format {
        Format::Json => emit(
            "simulate",
            argv,
            SimulateParams {
                m: a.m,
                d: a.d,
                t: a.t,
                runs: a.runs,
                seed: a.seed,
                variant: label.into(),
                cap: a.cap,
            },
            SimulateResults::from(&stats),
            Vec::new(),
            started,
        ),
        Format::Csv => {
            let stdout = io::stdout();
            stats.write_csv(stdout.lock())?;
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleParams {
    pub m: usize,
    pub d: usize,
    pub t: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResults {
    pub numerator: String,
    pub denominator: String,
    pub expected_error: String,
    pub expected_error_rate: String,
}

fn oracle(a: OracleArgs, argv: Vec<String>, started: Instant) -> Result<()> {
    let r = brute_force_expected_error(a.m, a.d, a.t)?;
    emit(
        "oracle",
        argv,
        OracleParams {
            m: a.m,
            d: a.d,
            t: a.t,
        },
        OracleResults {
            numerator: r.numerator.to_string(),
            denominator: r.denominator.to_string(),
            expected_error: num(r.expected_error()),
            expected_error_rate: num(r.expected_error_rate()),
        },
        Vec::new(),
        started,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Params {
    pub m: usize,
    pub d: usize,
    pub t: u64,
    pub gmax: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub g: u32,
    pub states: usize,
    pub edges: usize,
    pub lower: String,
    pub upper: String,
    pub lower_shifted: String,
    pub upper_shifted: String,
    pub reference_lower: String,
    pub reference_upper: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Results {
    pub rows: Vec<Table1Row>,
}

const TABLE1_M: usize = 50;
const TABLE1_D: usize = 4;
const TABLE1_T: u64 = 250;

fn table1(a: Table1Args, argv: Vec<String>, started: Instant) -> Result<()> {
    if a.gmax >= 4 {
        eprintln!(
            "warning: g = 4 and g = 5 enumerate 230,300 and 2,349,060 states; \
             expect minutes and several GB of memory on slow hardware"
        );
    }
    let exec = Execution::default();
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    let mut human = Vec::new();
    for g in 1..=a.gmax {
        let clock = Instant::now();
        let space = StateSpace::enumerate(ChainParams::new(TABLE1_M, TABLE1_D, g as usize)?)?;
        let mut values = Vec::new();
        let mut edges = 0;
        for variant in [Variant::Lower, Variant::Upper] {
            let kernel = build_kernel_with(&space, variant, exec)?;
            edges = kernel.num_edges();
            values.push(expected_error_windows(&kernel, TABLE1_T, exec)?);
        }
        let secs = clock.elapsed().as_secs_f64();
        timings.push(Timing::new(format!("g={g}"), secs));
        let (ref_lower, ref_upper) = REFERENCE_TABLE[g as usize - 1];
        human.push((
            g,
            space.len(),
            values[0],
            values[1],
            ref_lower,
            ref_upper,
            secs,
        ));
        rows.push(Table1Row {
            g,
            states: space.len(),
            edges,
            lower: num(values[0].standard),
            upper: num(values[1].standard),
            lower_shifted: num(values[0].shifted),
            upper_shifted: num(values[1].shifted),
            reference_lower: num(ref_lower),
            reference_upper: num(ref_upper),
        });
    }
    eprintln!(
        "{:>2} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "g", "states", "lower", "upper", "lower+1", "upper+1", "ref lo", "ref up", "seconds"
    );
    for (g, n, l, u, rl, ru, secs) in human {
        eprintln!(
            "{g:>2} {n:>9} {:>9.5} {:>9.5} {:>9.5} {:>9.5} {rl:>9.5} {ru:>9.5} {secs:>9.2}",
            l.standard, u.standard, l.shifted, u.shifted
        );
    }
    match a.format {
        Format::Json => emit(
            "table1",
            argv,
            Table1Params {
                m: TABLE1_M,
                d: TABLE1_D,
                t: TABLE1_T,
                gmax: a.gmax,
            },
            Table1Results { rows },
            timings,
            started,
        ),
        Format::Csv => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            writeln!(
                out,
                "g,states,edges,lower,upper,lower_shifted,upper_shifted,reference_lower,reference_upper"
            )?;
            for r in rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    r.g,
                    r.states,
                    r.edges,
                    r.lower,
                    r.upper,
                    r.lower_shifted,
                    r.upper_shifted,
                    r.reference_lower,
                    r.reference_upper
                )?;
            }
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyParams {
    pub level: Level,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyResults {
    pub passed: bool,
    pub checks: Vec<VerifyCheck>,
}

fn run_verify(a: VerifyArgs, argv: Vec<String>, started: Instant) -> Result<()> {
    let level = match a.level {
        LevelArg::Quick => Level::Quick,
        LevelArg::Full => Level::Full,
    };
    let report = verify::run(level);
    let timings = report
        .checks
        .iter()
        .map(|c| Timing::new(c.name.clone(), c.seconds))
        .collect();
    let failed: Vec<String> = report.failures().map(|c| c.name.clone()).collect();
    for c in report.failures() {
        eprintln!("FAILED {}: {}", c.name, c.detail);
    }
    emit(
        "verify",
        argv,
        VerifyParams { level },
        VerifyResults {
            passed: report.passed(),
            checks: report
                .checks
                .iter()
                .map(|c| VerifyCheck {
                    name: c.name.clone(),
                    passed: c.passed,
                    detail: c.detail.clone(),
                })
                .collect(),
        },
        timings,
        started,
    )?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verify(failed.join(", ")))
    }
}
