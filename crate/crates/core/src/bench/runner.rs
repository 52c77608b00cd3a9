//! Benchmark runner: plans (or imports) one initial trajectory per scenario
//! and seed, runs every requested method on it and writes CSV tables.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bench::planner::plan_rrt_connect;
use crate::bench::scenario::Scenario;
use crate::error::{Error, Result};
use crate::shortcut::{run_shortcut_loop, AnytimeLog, Budget, EndpointKind, LoopConfig, Method};
use crate::strategy::{run_multi_strategy, DtsParams, MultiConfig, SelectorKind};
use crate::trajectory::{validate, Metrics, SyncTrajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BenchMethod {
    Composite,
    Prioritized,
    Path,
    Tpg,
    FwdLoop,
    BwdLoop,
    Rr,
    Dts,
}

impl BenchMethod {
    pub const ALL: [BenchMethod; 8] = [
        BenchMethod::Composite,
        BenchMethod::Prioritized,
        BenchMethod::Path,
        BenchMethod::Tpg,
        BenchMethod::FwdLoop,
        BenchMethod::BwdLoop,
        BenchMethod::Rr,
        BenchMethod::Dts,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchMethod::Composite => "composite",
            BenchMethod::Prioritized => "prioritized",
            BenchMethod::Path => "path",
            BenchMethod::Tpg => "tpg",
            BenchMethod::FwdLoop => "fwd_loop",
            BenchMethod::BwdLoop => "bwd_loop",
            BenchMethod::Rr => "rr",
            BenchMethod::Dts => "dts",
        }
    }

    fn stream(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for BenchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BenchMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let known: Vec<_> = BenchMethod::ALL.iter().map(|m| m.name()).collect();
                Error::InvalidArgument(format!(
                    "unknown method {s:?}, expected one of {}",
                    known.join(", ")
                ))
            })
    }
}

/// One scenario plus, optionally, an externally planned initial trajectory.
#[derive(Debug, Clone)]
pub struct BenchInput {
    pub scenario: Scenario,
    pub initial: Option<SyncTrajectory>,
}

impl From<Scenario> for BenchInput {
    fn from(scenario: Scenario) -> Self {
        BenchInput {
            scenario,
            initial: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub methods: Vec<BenchMethod>,
    pub seeds: Vec<u64>,
    /// Wall-clock budget for every cell; `None` uses each scenario's budget.
    pub budget: Option<Duration>,
    /// Iteration budget; takes precedence over wall-clock budgets.
    pub iterations: Option<u64>,
    pub plan_timeout: Duration,
    pub workers: usize,
    pub dts: DtsParams,
    pub stop_at_lower_bound: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            methods: BenchMethod::ALL.to_vec(),
            seeds: vec![0],
            budget: None,
            iterations: None,
            plan_timeout: Duration::from_secs(60),
            workers: 1,
            dts: DtsParams::default(),
            stop_at_lower_bound: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchRecord {
    pub scenario: String,
    pub planner: String,
    pub method: BenchMethod,
    pub seed: u64,
    /// `None` on success, otherwise the failure message.
    pub failure: Option<String>,
    pub before: Option<Metrics>,
    pub after: Option<Metrics>,
    pub candidates: u64,
    pub valid: u64,
    pub checks: u64,
    /// Shortcutting wall time in seconds.
    pub runtime: f64,
    pub log: AnytimeLog,
    pub trajectory: Option<SyncTrajectory>,
}

impl BenchRecord {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }

    /// Percentage makespan reduction relative to the input.
    pub fn makespan_improvement(&self) -> Option<f64> {
        let (b, a) = (self.before?, self.after?);
        Some(if b.makespan > 0.0 {
            100.0 * (b.makespan - a.makespan) / b.makespan
        } else {
            0.0
        })
    }

    pub fn path_length_improvement(&self) -> Option<f64> {
        let (b, a) = (self.before?, self.after?);
        Some(if b.path_length > 0.0 {
            100.0 * (b.path_length - a.path_length) / b.path_length
        } else {
            0.0
        })
    }

    /// Seconds of makespan saved per accepted shortcut.
    pub fn improvement_per_valid(&self) -> Option<f64> {
        let (b, a) = (self.before?, self.after?);
        Some(if self.valid > 0 {
            (b.makespan - a.makespan) / self.valid as f64
        } else {
            0.0
        })
    }

    /// Wall time at which the anytime curve first closed `fraction` of the
    /// run's final makespan improvement; `None` when nothing improved.
    pub fn time_to_fraction(&self, fraction: f64) -> Option<f64> {
        let (b, a) = (self.before?, self.after?);
        let gain = b.makespan - a.makespan;
        if gain <= 0.0 {
            return None;
        }
        let target = b.makespan - fraction * gain + 1e-9;
        self.log
            .samples
            .iter()
            .find(|s| s.makespan <= target)
            .map(|s| s.wall_time)
    }
}

#[derive(Debug, Clone, Serialize)]
struct RecordRow<'a> {
    scenario: &'a str,
    planner: &'a str,
    method: &'a str,
    seed: u64,
    status: &'a str,
    makespan_before: Option<f64>,
    makespan_after: Option<f64>,
    makespan_improvement_pct: Option<f64>,
    path_length_before: Option<f64>,
    path_length_after: Option<f64>,
    path_length_improvement_pct: Option<f64>,
    directional_consistency_before: Option<f64>,
    directional_consistency_after: Option<f64>,
    candidates: u64,
    valid: u64,
    improvement_per_valid_s: Option<f64>,
    collision_checks: u64,
    error: &'a str,
    runtime_s: f64,
}

impl<'a> From<&'a BenchRecord> for RecordRow<'a> {
    fn from(r: &'a BenchRecord) -> Self {
        RecordRow {
            scenario: &r.scenario,
            planner: &r.planner,
            method: r.method.name(),
            seed: r.seed,
            status: if r.succeeded() { "ok" } else { "failed" },
            makespan_before: r.before.map(|m| m.makespan),
            makespan_after: r.after.map(|m| m.makespan),
            makespan_improvement_pct: r.makespan_improvement(),
            path_length_before: r.before.map(|m| m.path_length),
            path_length_after: r.after.map(|m| m.path_length),
            path_length_improvement_pct: r.path_length_improvement(),
            directional_consistency_before: r.before.map(|m| m.directional_consistency),
            directional_consistency_after: r.after.map(|m| m.directional_consistency),
            candidates: r.candidates,
            valid: r.valid,
            improvement_per_valid_s: r.improvement_per_valid(),
            collision_checks: r.checks,
            error: r.failure.as_deref().unwrap_or(""),
            runtime_s: r.runtime,
        }
    }
}

/// Column order of `records.csv`; the wall-clock column is last.
pub const RECORD_COLUMNS: [&str; 19] = [
    "scenario",
    "planner",
    "method",
    "seed",
    "status",
    "makespan_before",
    "makespan_after",
    "makespan_improvement_pct",
    "path_length_before",
    "path_length_after",
    "path_length_improvement_pct",
    "directional_consistency_before",
    "directional_consistency_after",
    "candidates",
    "valid",
    "improvement_per_valid_s",
    "collision_checks",
    "error",
    "runtime_s",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Sample standard deviation; zero for fewer than two values.
    pub fn of(values: &[f64]) -> MeanStd {
        if values.is_empty() {
            return MeanStd {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MeanStd { mean, std }
    }
}

/// One row of `summary.csv`, aggregated over successful runs of a method.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: BenchMethod,
    pub runs: usize,
    pub failures: usize,
    pub makespan_improvement: MeanStd,
    pub makespan_after: MeanStd,
    pub path_length_improvement: MeanStd,
    pub candidates: MeanStd,
    pub valid: MeanStd,
    pub improvement_per_valid: MeanStd,
}

pub fn summarize(records: &[BenchRecord]) -> Vec<SummaryRow> {
    let mut by_method: BTreeMap<BenchMethod, Vec<&BenchRecord>> = BTreeMap::new();
    for r in records {
        by_method.entry(r.method).or_default().push(r);
    }
    by_method
        .into_iter()
        .map(|(method, rs)| {
            let ok: Vec<&BenchRecord> = rs.iter().copied().filter(|r| r.succeeded()).collect();
            let col = |f: &dyn Fn(&BenchRecord) -> Option<f64>| {
                MeanStd::of(&ok.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
            };
            SummaryRow {
                method,
                runs: ok.len(),
                failures: rs.len() - ok.len(),
                makespan_improvement: col(&|r| r.makespan_improvement()),
                makespan_after: col(&|r| r.after.map(|m| m.makespan)),
                path_length_improvement: col(&|r| r.path_length_improvement()),
                candidates: col(&|r| Some(r.candidates as f64)),
                valid: col(&|r| Some(r.valid as f64)),
                improvement_per_valid: col(&|r| r.improvement_per_valid()),
            }
        })
        .collect()
}

pub const SUMMARY_COLUMNS: [&str; 17] = [
    "method",
    "runs",
    "failures",
    "makespan_improvement_pct_mean",
    "makespan_improvement_pct_std",
    "makespan_after_mean",
    "makespan_after_std",
    "path_length_improvement_pct_mean",
    "path_length_improvement_pct_std",
    "candidates_mean",
    "candidates_std",
    "valid_mean",
    "valid_std",
    "improvement_per_valid_s_mean",
    "improvement_per_valid_s_std",
    "makespan_improvement_pct",
    "improvement_per_valid_s",
];

fn pm(x: MeanStd) -> String {
    format!("{:.2} ± {:.2}", x.mean, x.std)
}

pub fn write_records<W: std::io::Write>(records: &[BenchRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(RecordRow::from(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary<W: std::io::Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_COLUMNS)?;
    for s in rows {
        let mut rec = vec![
            s.method.name().to_string(),
            s.runs.to_string(),
            s.failures.to_string(),
        ];
        for x in [
            s.makespan_improvement,
            s.makespan_after,
            s.path_length_improvement,
            s.candidates,
            s.valid,
            s.improvement_per_valid,
        ] {
            rec.push(x.mean.to_string());
            rec.push(x.std.to_string());
        }
        rec.push(pm(s.makespan_improvement));
        rec.push(pm(s.improvement_per_valid));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Anytime samples of one run: wall time against makespan and path length.
pub fn write_anytime<W: std::io::Write>(log: &AnytimeLog, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "wall_time_s",
        "makespan_s",
        "path_length",
        "candidates",
        "valid",
    ])?;
    for s in &log.samples {
        w.write_record([
            s.wall_time.to_string(),
            s.makespan.to_string(),
            s.path_length.to_string(),
            s.candidates.to_string(),
            s.valid.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn anytime_file_name(scenario: &str, method: BenchMethod, seed: u64) -> String {
    format!("{scenario}_{}_{seed}.csv", method.name())
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    /// Sorted by scenario order, then seed, then method order.
    pub records: Vec<BenchRecord>,
    pub summary: Vec<SummaryRow>,
}

impl BenchReport {
    pub fn failures(&self) -> impl Iterator<Item = &BenchRecord> {
        self.records.iter().filter(|r| !r.succeeded())
    }
}

fn rng_for(scenario: &Scenario, seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng =
        ChaCha8Rng::seed_from_u64(scenario.seed ^ seed.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(stream);
    rng
}

fn cell_budget(cfg: &BenchConfig, scenario: &Scenario) -> Budget {
    match (cfg.iterations, cfg.budget) {
        (Some(k), _) => Budget::Iterations(k),
        (None, Some(t)) => Budget::Time(t),
        (None, None) => Budget::Time(scenario.budget()),
    }
}

/// Runs one method on one initial trajectory.
pub fn run_cell(
    scenario: &Scenario,
    initial: &SyncTrajectory,
    method: BenchMethod,
    seed: u64,
    cfg: &BenchConfig,
) -> Result<(SyncTrajectory, AnytimeLog, u64, u64, u64, f64)> {
    let scene = &scenario.scene;
    let budget = cell_budget(cfg, scenario);
    let mut rng = rng_for(scenario, seed, method.stream());
    let start = Instant::now();
    let single = |m: Method, e: EndpointKind| {
        let mut c = LoopConfig::new(m, e, budget);
        c.stop_at_lower_bound = cfg.stop_at_lower_bound;
        c
    };
    let result = match method {
        BenchMethod::Composite => run_shortcut_loop(
            initial,
            scene,
            &single(Method::Composite, EndpointKind::Randomized),
            &mut rng,
        )?,
        BenchMethod::Prioritized => run_shortcut_loop(
            initial,
            scene,
            &single(Method::Prioritized, EndpointKind::Randomized),
            &mut rng,
        )?,
        BenchMethod::Path => run_shortcut_loop(
            initial,
            scene,
            &single(Method::Path, EndpointKind::Randomized),
            &mut rng,
        )?,
        BenchMethod::Tpg => run_shortcut_loop(
            initial,
            scene,
            &single(Method::Tpg, EndpointKind::Randomized),
            &mut rng,
        )?,
        BenchMethod::FwdLoop => run_shortcut_loop(
            initial,
            scene,
            &single(Method::Path, EndpointKind::ForwardLoop),
            &mut rng,
        )?,
        BenchMethod::BwdLoop => run_shortcut_loop(
            initial,
            scene,
            &single(Method::Path, EndpointKind::BackwardLoop),
            &mut rng,
        )?,
        BenchMethod::Rr | BenchMethod::Dts => {
            let selector = if method == BenchMethod::Rr {
                SelectorKind::RoundRobin
            } else {
                SelectorKind::Dts
            };
            let mut mc = MultiConfig::new(selector, budget);
            mc.dts = cfg.dts;
            mc.stop_at_lower_bound = cfg.stop_at_lower_bound;
            run_multi_strategy(initial, scene, &mc, &mut rng)?.into_loop_result()
        }
    };
    let runtime = start.elapsed().as_secs_f64();
    let violations = validate(&result.trajectory, scene);
    if !violations.is_empty() {
        return Err(Error::InvalidTrajectory(violations));
    }
    let s = result.stats;
    Ok((
        result.trajectory,
        result.log,
        s.candidates,
        s.accepted,
        s.checks,
        runtime,
    ))
}

/// Plans the initial trajectory of one (scenario, seed) pair.
pub fn initial_trajectory(
    input: &BenchInput,
    seed: u64,
    timeout: Duration,
) -> Result<SyncTrajectory> {
    match &input.initial {
        Some(t) => {
            let violations = validate(t, &input.scenario.scene);
            if violations.is_empty() {
                Ok(t.clone())
            } else {
                Err(Error::InvalidTrajectory(violations))
            }
        }
        None => {
            let mut rng = rng_for(&input.scenario, seed, 0);
            plan_rrt_connect(&input.scenario, timeout, &mut rng)
        }
    }
}

/// Runs `jobs` on a bounded pool of scoped threads; results come back in
/// job order.
fn parallel_map<T: Sync, U: Send>(
    jobs: &[T],
    workers: usize,
    f: impl Fn(&T) -> U + Sync,
) -> Vec<U> {
    let workers = workers.clamp(1, jobs.len().max(1));
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|s| {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, f) = (&next, &f);
            s.spawn(move || loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(k) else { break };
                if tx.send((k, f(job))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut out: Vec<Option<U>> = (0..jobs.len()).map(|_| None).collect();
        for (k, u) in rx {
            out[k] = Some(u);
        }
        out.into_iter()
            .map(|u| u.expect("every job reports"))
            .collect()
    })
}

/// Plans once per (scenario, seed), runs every method on the shared input,
/// and writes `records.csv`, `summary.csv` and one anytime file per cell to
/// `out_dir` when given. Cell failures are recorded and the run continues.
pub fn run_benchmark(
    inputs: &[BenchInput],
    cfg: &BenchConfig,
    out_dir: Option<&Path>,
) -> Result<BenchReport> {
    if cfg.methods.is_empty() || cfg.seeds.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one method and one seed".into(),
        ));
    }
    let anytime_dir = match out_dir {
        Some(dir) => {
            let a = dir.join("anytime");
            fs::create_dir_all(&a)?;
            Some(a)
        }
        None => None,
    };

    let plan_jobs: Vec<(usize, u64)> = (0..inputs.len())
        .flat_map(|i| cfg.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let plans = parallel_map(&plan_jobs, cfg.workers, |&(i, seed)| {
        initial_trajectory(&inputs[i], seed, cfg.plan_timeout)
    });

    let cells: Vec<(usize, usize, BenchMethod)> = (0..plan_jobs.len())
        .flat_map(|p| cfg.methods.iter().enumerate().map(move |(k, &m)| (p, k, m)))
        .collect();
    let write_err: Mutex<Option<Error>> = Mutex::new(None);
    let records = parallel_map(&cells, cfg.workers, |&(p, _, method)| {
        let (i, seed) = plan_jobs[p];
        let scenario = &inputs[i].scenario;
        let mut rec = BenchRecord {
            scenario: scenario.name.clone(),
            planner: if inputs[i].initial.is_some() {
                "import"
            } else {
                "rrt"
            }
            .to_string(),
            method,
            seed,
            failure: None,
            before: None,
            after: None,
            candidates: 0,
            valid: 0,
            checks: 0,
            runtime: 0.0,
            log: AnytimeLog::default(),
            trajectory: None,
        };
        match &plans[p] {
            Err(e) => rec.failure = Some(e.to_string()),
            Ok(initial) => {
                rec.before = Some(initial.metrics(0.0));
                match run_cell(scenario, initial, method, seed, cfg) {
                    Err(e) => rec.failure = Some(e.to_string()),
                    Ok((traj, log, candidates, valid, checks, runtime)) => {
                        rec.after = Some(traj.metrics(runtime));
                        rec.candidates = candidates;
                        rec.valid = valid;
                        rec.checks = checks;
                        rec.runtime = runtime;
                        rec.log = log;
                        rec.trajectory = Some(traj);
                    }
                }
            }
        }
        if let Some(dir) = &anytime_dir {
            let path = dir.join(anytime_file_name(&rec.scenario, method, seed));
            if let Err(e) = fs::File::create(&path)
                .map_err(Error::from)
                .and_then(|f| write_anytime(&rec.log, f))
            {
                write_err.lock().unwrap().get_or_insert(e);
            }
        }
        rec
    });
    if let Some(e) = write_err.into_inner().unwrap() {
        return Err(e);
    }
    let summary = summarize(&records);
    if let Some(dir) = out_dir {
        write_records(&records, fs::File::create(dir.join("records.csv"))?)?;
        write_summary(&summary, fs::File::create(dir.join("summary.csv"))?)?;
    }
    Ok(BenchReport { records, summary })
}
