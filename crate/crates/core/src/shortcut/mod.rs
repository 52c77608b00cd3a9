//! Endpoint selection, the composite / prioritized / path shortcut methods
//! and the anytime shortcut loop.

mod endpoint;
mod methods;

use std::time::{Duration, Instant};

use rand::Rng;

use crate::error::{Error, Result};
use crate::trajectory::{l1_dist, segment_steps, SyncTrajectory};
use crate::world::{BodyGeometry, Config, Scene};

pub use endpoint::{
    next_candidate, CandidateSampler, EndpointKind, EndpointStrategy, RobotSelect,
    ShortcutCandidate,
};
pub(crate) use methods::smooth_after_path;
pub use methods::{attempt_composite, attempt_path, attempt_prioritized};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Composite,
    Prioritized,
    Path,
    Tpg,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Composite,
        Method::Prioritized,
        Method::Path,
        Method::Tpg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Composite => "composite",
            Method::Prioritized => "prioritized",
            Method::Path => "path",
            Method::Tpg => "tpg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RejectReason {
    None,
    Collision,
    NotShorter,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShortcutOutcome {
    pub accepted: bool,
    pub reject_reason: RejectReason,
    /// Wall time of the attempt in seconds.
    pub time_spent: f64,
    /// `(PL_before - PL_after) / PL_before` over the whole trajectory.
    pub rel_length_reduction: f64,
    /// Makespan in seconds after the attempt.
    pub makespan_after: f64,
    pub checks_performed: u64,
}

impl ShortcutOutcome {
    pub(crate) fn rejected(
        reason: RejectReason,
        makespan: f64,
        checks: u64,
        started: Instant,
    ) -> Self {
        ShortcutOutcome {
            accepted: false,
            reject_reason: reason,
            time_spent: started.elapsed().as_secs_f64(),
            rel_length_reduction: 0.0,
            makespan_after: makespan,
            checks_performed: checks,
        }
    }

    pub(crate) fn accepted(
        pl_before: f64,
        pl_after: f64,
        makespan: f64,
        checks: u64,
        started: Instant,
    ) -> Self {
        ShortcutOutcome {
            accepted: true,
            reject_reason: RejectReason::None,
            time_spent: started.elapsed().as_secs_f64(),
            rel_length_reduction: relative_reduction(pl_before, pl_after),
            makespan_after: makespan,
            checks_performed: checks,
        }
    }
}

pub(crate) fn relative_reduction(before: f64, after: f64) -> f64 {
    if before > 0.0 {
        ((before - after) / before).max(0.0)
    } else {
        0.0
    }
}

/// Collision predicate wrapper that counts evaluations.
pub(crate) struct Checker<'a> {
    pub scene: &'a Scene,
    pub checks: u64,
}

impl<'a> Checker<'a> {
    pub fn new(scene: &'a Scene) -> Self {
        Checker { scene, checks: 0 }
    }

    /// Limits and obstacles for robot `i`; returns the body for reuse.
    pub fn static_ok(&mut self, i: usize, c: &Config) -> Option<BodyGeometry> {
        self.checks += 1;
        if !self.scene.within_limits(i, c) {
            return None;
        }
        let body = self.scene.body(i, c);
        (!body.hits_any(&self.scene.obstacles)).then_some(body)
    }

    pub fn pair_ok(&mut self, body: &BodyGeometry, j: usize, cj: &Config) -> bool {
        self.checks += 1;
        !body.intersects(&self.scene.body(j, cj))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    Time(Duration),
    Iterations(u64),
}

impl Budget {
    pub fn seconds(s: f64) -> Budget {
        Budget::Time(Duration::from_secs_f64(s.max(0.0)))
    }

    pub fn is_empty(&self) -> bool {
        match *self {
            Budget::Time(d) => d.is_zero(),
            Budget::Iterations(k) => k == 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnytimeSample {
    pub wall_time: f64,
    pub makespan: f64,
    pub path_length: f64,
    pub candidates: u64,
    pub valid: u64,
}

/// Objective value a method improved, before and after an accepted shortcut.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// Step count of the affected sequence.
    Steps { before: usize, after: usize },
    /// Whole-trajectory path length.
    Length { before: f64, after: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptEvent {
    pub iteration: u64,
    pub method: Method,
    pub robot: Option<usize>,
    pub m: usize,
    pub n: usize,
    pub objective: Objective,
    pub makespan_before: f64,
    pub makespan_after: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnytimeLog {
    pub samples: Vec<AnytimeSample>,
    pub accepts: Vec<AcceptEvent>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoopStats {
    pub candidates: u64,
    pub accepted: u64,
    pub rejected_collision: u64,
    pub rejected_not_shorter: u64,
    pub checks: u64,
}

impl LoopStats {
    pub(crate) fn record(&mut self, outcome: &ShortcutOutcome) {
        self.candidates += 1;
        self.checks += outcome.checks_performed;
        match outcome.reject_reason {
            RejectReason::None => self.accepted += 1,
            RejectReason::Collision => self.rejected_collision += 1,
            RejectReason::NotShorter => self.rejected_not_shorter += 1,
        }
    }
}

pub const DEFAULT_HEARTBEAT: Duration = Duration::from_millis(100);

#[derive(Debug, Clone, PartialEq)]
pub struct LoopConfig {
    pub method: Method,
    pub endpoints: EndpointKind,
    pub robot_select: RobotSelect,
    pub budget: Budget,
    /// Extra log samples at this period; only used with time budgets.
    pub heartbeat: Option<Duration>,
    /// Stop once the makespan reaches the straight-line lower bound.
    pub stop_at_lower_bound: bool,
}

impl LoopConfig {
    pub fn new(method: Method, endpoints: EndpointKind, budget: Budget) -> Self {
        LoopConfig {
            method,
            endpoints,
            robot_select: RobotSelect::Random,
            budget,
            heartbeat: Some(DEFAULT_HEARTBEAT),
            stop_at_lower_bound: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoopResult {
    pub trajectory: SyncTrajectory,
    pub log: AnytimeLog,
    pub stats: LoopStats,
}

/// Steps no trajectory between the same endpoints can beat: every robot needs
/// at least its own straight-line step count.
pub fn makespan_lower_bound_steps(traj: &SyncTrajectory, scene: &Scene) -> usize {
    (0..traj.num_robots())
        .map(|i| {
            let r = traj.robot(i);
            let d = l1_dist(&r[0], &r[r.len() - 1]);
            if d == 0.0 {
                0
            } else {
                segment_steps(d, traj.dt, scene.robots[i].v_max)
            }
        })
        .max()
        .unwrap_or(0)
}

/// Budget accounting plus anytime sampling shared by all loops.
pub(crate) struct Recorder {
    started: Instant,
    budget: Budget,
    heartbeat: Option<Duration>,
    last_sample: Duration,
    pub log: AnytimeLog,
    pub stats: LoopStats,
}

impl Recorder {
    pub fn new(budget: Budget, heartbeat: Option<Duration>) -> Self {
        let heartbeat = match budget {
            Budget::Time(_) => heartbeat,
            Budget::Iterations(_) => None,
        };
        Recorder {
            started: Instant::now(),
            budget,
            heartbeat,
            last_sample: Duration::ZERO,
            log: AnytimeLog::default(),
            stats: LoopStats::default(),
        }
    }

    pub fn exhausted(&self) -> bool {
        match self.budget {
            Budget::Time(d) => self.started.elapsed() >= d,
            Budget::Iterations(k) => self.stats.candidates >= k,
        }
    }

    pub fn sample(&mut self, makespan: f64, path_length: f64) {
        let now = self.started.elapsed();
        self.last_sample = now;
        let wall_time = now
            .as_secs_f64()
            .max(self.log.samples.last().map_or(0.0, |s| s.wall_time));
        self.log.samples.push(AnytimeSample {
            wall_time,
            makespan,
            path_length,
            candidates: self.stats.candidates,
            valid: self.stats.accepted,
        });
    }

    pub fn heartbeat(&mut self, makespan: f64, path_length: f64) {
        if let Some(p) = self.heartbeat {
            if self.started.elapsed() >= self.last_sample + p {
                self.sample(makespan, path_length);
            }
        }
    }
}

/// Synchronized-grid trajectory plus the bookkeeping every accepted shortcut
/// must redo: path smoothing for path shortcuts and trimming of global waits.
pub(crate) struct SyncEngine<'a> {
    pub scene: &'a Scene,
    pub traj: SyncTrajectory,
    pub path_length: f64,
}

impl<'a> SyncEngine<'a> {
    pub fn new(traj: SyncTrajectory, scene: &'a Scene) -> Self {
        let path_length = traj.path_length();
        SyncEngine {
            scene,
            traj,
            path_length,
        }
    }

    /// Tries `cand`, applying it on acceptance. The outcome's length reduction
    /// and makespan refer to the trajectory after post-processing.
    pub fn apply(
        &mut self,
        cand: &ShortcutCandidate,
        iteration: u64,
    ) -> (ShortcutOutcome, Option<AcceptEvent>) {
        let started = Instant::now();
        let makespan_before = self.traj.makespan();
        let (mut outcome, new) = match (cand.method, cand.robot) {
            (Method::Composite, _) => attempt_composite(&self.traj, cand.m, cand.n, self.scene),
            (Method::Prioritized, Some(i)) => {
                attempt_prioritized(&self.traj, i, cand.m, cand.n, self.scene)
            }
            (Method::Path, Some(i)) => attempt_path(&self.traj, i, cand.m, cand.n, self.scene),
            _ => panic!("candidate {cand:?} is not a synchronized shortcut"),
        };
        let Some(mut new) = new else {
            outcome.time_spent = started.elapsed().as_secs_f64();
            return (outcome, None);
        };
        let objective = match cand.method {
            Method::Composite => Objective::Steps {
                before: self.traj.horizon(),
                after: new.horizon(),
            },
            Method::Prioritized => {
                let i = cand.robot.unwrap_or(0);
                let d = l1_dist(self.traj.config(i, cand.m), self.traj.config(i, cand.n));
                Objective::Steps {
                    before: cand.n,
                    after: cand.m + segment_steps(d, self.traj.dt, self.scene.robots[i].v_max),
                }
            }
            _ => Objective::Length {
                before: self.path_length,
                after: new.path_length(),
            },
        };
        if cand.method == Method::Path {
            let mut checker = Checker::new(self.scene);
            new = smooth_after_path(new, &mut checker);
            outcome.checks_performed += checker.checks;
        }
        new.trim_trailing_waits();
        let pl_after = new.path_length();
        outcome.rel_length_reduction = relative_reduction(self.path_length, pl_after);
        outcome.makespan_after = new.makespan();
        outcome.time_spent = started.elapsed().as_secs_f64();
        let event = AcceptEvent {
            iteration,
            method: cand.method,
            robot: cand.robot,
            m: cand.m,
            n: cand.n,
            objective,
            makespan_before,
            makespan_after: outcome.makespan_after,
        };
        self.traj = new;
        self.path_length = pl_after;
        (outcome, Some(event))
    }
}

/// Runs one shortcut method until the budget is spent.
pub fn run_shortcut_loop<R: Rng + ?Sized>(
    traj: &SyncTrajectory,
    scene: &Scene,
    cfg: &LoopConfig,
    rng: &mut R,
) -> Result<LoopResult> {
    if traj.num_robots() != scene.num_robots() {
        return Err(Error::InvalidArgument(format!(
            "trajectory has {} robots, scene has {}",
            traj.num_robots(),
            scene.num_robots()
        )));
    }
    if cfg.budget.is_empty() {
        return Ok(LoopResult {
            trajectory: traj.clone(),
            log: AnytimeLog::default(),
            stats: LoopStats::default(),
        });
    }
    if cfg.method == Method::Tpg {
        return crate::tpg::run_tpg_loop(traj, scene, cfg, rng);
    }
    let bound = makespan_lower_bound_steps(traj, scene);
    let mut engine = SyncEngine::new(traj.clone(), scene);
    let mut sampler = CandidateSampler::new(cfg.endpoints, cfg.robot_select);
    let mut rec = Recorder::new(cfg.budget, cfg.heartbeat);
    rec.sample(engine.traj.makespan(), engine.path_length);
    while !rec.exhausted() {
        if cfg.stop_at_lower_bound && engine.traj.horizon() <= bound + 1 {
            break;
        }
        let horizons = vec![engine.traj.horizon(); engine.traj.num_robots()];
        let Some(cand) = sampler.next_candidate(cfg.method, &horizons, rng) else {
            break;
        };
        let (outcome, event) = engine.apply(&cand, rec.stats.candidates);
        rec.stats.record(&outcome);
        if let Some(ev) = event {
            rec.log.accepts.push(ev);
            sampler.reset();
            rec.sample(engine.traj.makespan(), engine.path_length);
        } else {
            rec.heartbeat(engine.traj.makespan(), engine.path_length);
        }
    }
    rec.sample(engine.traj.makespan(), engine.path_length);
    Ok(LoopResult {
        trajectory: engine.traj,
        log: rec.log,
        stats: rec.stats,
    })
}
