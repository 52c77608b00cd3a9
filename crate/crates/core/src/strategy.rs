//! Multi-strategy shortcutting: round robin and dynamic Thompson sampling
//! over the composite, prioritized and path methods.

use std::time::Duration;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shortcut::{
    makespan_lower_bound_steps, CandidateSampler, EndpointKind, LoopResult, Method, Recorder,
    RobotSelect, ShortcutOutcome, SyncEngine, DEFAULT_HEARTBEAT,
};
use crate::shortcut::{AnytimeLog, Budget, LoopStats};
use crate::trajectory::SyncTrajectory;
use crate::world::Scene;

/// Strategies available to the selectors, in tie-breaking order.
pub const STRATEGIES: [Method; 3] = [Method::Composite, Method::Prioritized, Method::Path];

fn slot(method: Method) -> usize {
    STRATEGIES
        .iter()
        .position(|&m| m == method)
        .expect("multi-strategy selection excludes TPG")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SelectorKind {
    RoundRobin,
    Dts,
}

impl SelectorKind {
    pub fn name(self) -> &'static str {
        match self {
            SelectorKind::RoundRobin => "rr",
            SelectorKind::Dts => "dts",
        }
    }
}

pub fn rr_next(counter: u64) -> Method {
    STRATEGIES[(counter % STRATEGIES.len() as u64) as usize]
}

/// Reward and update constants plus the Beta priors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DtsParams {
    /// Normalizing time scale in seconds.
    pub sigma: f64,
    pub gamma_t: f64,
    pub gamma_alpha: f64,
    pub gamma_beta: f64,
    pub z: f64,
    /// Priors in [`STRATEGIES`] order.
    pub alpha: [f64; 3],
    pub beta: [f64; 3],
    /// Seconds charged per collision check for the reward's attempt time
    /// under iteration budgets, so those runs stay reproducible.
    pub check_cost: f64,
}

impl Default for DtsParams {
    fn default() -> Self {
        DtsParams {
            sigma: 0.01,
            gamma_t: 1.0,
            gamma_alpha: 100.0,
            gamma_beta: 0.1,
            z: 1000.0,
            alpha: [10.0, 1.0, 1.0],
            beta: [1.0, 1.0, 1.0],
            check_cost: 1e-6,
        }
    }
}

impl DtsParams {
    pub fn check(&self) -> Result<()> {
        let positive = [
            self.sigma,
            self.gamma_alpha,
            self.gamma_beta,
            self.z,
            self.check_cost,
        ]
        .into_iter()
        .chain(self.alpha)
        .chain(self.beta)
        .all(|x| x > 0.0 && x.is_finite());
        if !positive || !(self.gamma_t >= 0.0 && self.gamma_t.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "invalid DTS parameters {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DtsState {
    pub params: DtsParams,
    pub alpha: [f64; 3],
    pub beta: [f64; 3],
}

impl DtsState {
    pub fn new(params: DtsParams) -> Self {
        DtsState {
            alpha: params.alpha,
            beta: params.beta,
            params,
        }
    }
}

impl Default for DtsState {
    fn default() -> Self {
        DtsState::new(DtsParams::default())
    }
}

/// `Beta(a, b)` as `X / (X + Y)` with `X ~ Gamma(a, 1)`, `Y ~ Gamma(b, 1)`.
fn sample_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let x = Gamma::new(a, 1.0).expect("alpha is positive").sample(rng);
    let y = Gamma::new(b, 1.0).expect("beta is positive").sample(rng);
    if x + y > 0.0 {
        x / (x + y)
    } else {
        0.5
    }
}

pub fn dts_select<R: Rng + ?Sized>(state: &DtsState, rng: &mut R) -> Method {
    let mut best = (0, f64::NEG_INFINITY);
    for k in 0..STRATEGIES.len() {
        let theta = sample_beta(state.alpha[k], state.beta[k], rng);
        if theta > best.1 {
            best = (k, theta);
        }
    }
    STRATEGIES[best.0]
}

/// `r = d + gamma_t * max(0, 1 - t / sigma)` for an accepted shortcut.
pub fn dts_reward(outcome: &ShortcutOutcome, state: &DtsState) -> Result<f64> {
    if !outcome.accepted {
        return Err(Error::InvalidArgument(
            "reward is only defined for accepted shortcuts".into(),
        ));
    }
    let p = &state.params;
    Ok(outcome.rel_length_reduction + p.gamma_t * (1.0 - outcome.time_spent / p.sigma).max(0.0))
}

/// Accepts raise alpha by `gamma_alpha * r`, rejections of either kind raise
/// beta by `gamma_beta`; a sum above `Z` is rescaled to `Z` keeping the ratio.
pub fn dts_update(state: &mut DtsState, strategy: Method, outcome: &ShortcutOutcome) {
    let k = slot(strategy);
    let p = state.params;
    if outcome.accepted {
        let r = dts_reward(outcome, state).expect("accepted outcome");
        state.alpha[k] += p.gamma_alpha * r;
    } else {
        state.beta[k] += p.gamma_beta;
    }
    let sum = state.alpha[k] + state.beta[k];
    if sum > p.z {
        let mut a = state.alpha[k] / sum * p.z;
        let mut b = state.beta[k] / sum * p.z;
        // Rounding may leave the sum one ulp above Z.
        while a + b > p.z {
            if a >= b {
                a = a.next_down();
            } else {
                b = b.next_down();
            }
        }
        state.alpha[k] = a;
        state.beta[k] = b;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StrategyCounters {
    /// Per strategy in [`STRATEGIES`] order.
    pub sampled: [u64; 3],
    pub valid: [u64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiConfig {
    pub selector: SelectorKind,
    pub budget: Budget,
    pub robot_select: RobotSelect,
    pub heartbeat: Option<Duration>,
    pub stop_at_lower_bound: bool,
    pub dts: DtsParams,
}

impl MultiConfig {
    pub fn new(selector: SelectorKind, budget: Budget) -> Self {
        MultiConfig {
            selector,
            budget,
            robot_select: RobotSelect::Random,
            heartbeat: Some(DEFAULT_HEARTBEAT),
            stop_at_lower_bound: false,
            dts: DtsParams::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MultiResult {
    pub trajectory: SyncTrajectory,
    pub log: AnytimeLog,
    pub stats: LoopStats,
    pub counters: StrategyCounters,
    /// Strategy chosen at every iteration and whether its shortcut was accepted.
    pub history: Vec<(Method, bool)>,
    pub dts: DtsState,
}

impl MultiResult {
    pub fn into_loop_result(self) -> LoopResult {
        LoopResult {
            trajectory: self.trajectory,
            log: self.log,
            stats: self.stats,
        }
    }
}

/// Each iteration picks one strategy, draws one randomized candidate for it
/// and applies it if valid.
pub fn run_multi_strategy<R: Rng + ?Sized>(
    traj: &SyncTrajectory,
    scene: &Scene,
    cfg: &MultiConfig,
    rng: &mut R,
) -> Result<MultiResult> {
    cfg.dts.check()?;
    if traj.num_robots() != scene.num_robots() {
        return Err(Error::InvalidArgument(format!(
            "trajectory has {} robots, scene has {}",
            traj.num_robots(),
            scene.num_robots()
        )));
    }
    let mut state = DtsState::new(cfg.dts);
    let mut counters = StrategyCounters::default();
    let mut history = Vec::new();
    if cfg.budget.is_empty() {
        return Ok(MultiResult {
            trajectory: traj.clone(),
            log: AnytimeLog::default(),
            stats: LoopStats::default(),
            counters,
            history,
            dts: state,
        });
    }
    let bound = makespan_lower_bound_steps(traj, scene);
    let mut engine = SyncEngine::new(traj.clone(), scene);
    let mut sampler = CandidateSampler::new(EndpointKind::Randomized, cfg.robot_select);
    let mut rec = Recorder::new(cfg.budget, cfg.heartbeat);
    rec.sample(engine.traj.makespan(), engine.path_length);
    let mut counter = 0u64;
    while !rec.exhausted() {
        if cfg.stop_at_lower_bound && engine.traj.horizon() <= bound + 1 {
            break;
        }
        let strategy = match cfg.selector {
            SelectorKind::RoundRobin => rr_next(counter),
            SelectorKind::Dts => dts_select(&state, rng),
        };
        counter += 1;
        let horizons = vec![engine.traj.horizon(); engine.traj.num_robots()];
        let Some(cand) = sampler.next_candidate(strategy, &horizons, rng) else {
            break;
        };
        let (outcome, event) = engine.apply(&cand, rec.stats.candidates);
        rec.stats.record(&outcome);
        let k = slot(strategy);
        counters.sampled[k] += 1;
        history.push((strategy, outcome.accepted));
        if cfg.selector == SelectorKind::Dts {
            let mut scored = outcome;
            if let Budget::Iterations(_) = cfg.budget {
                scored.time_spent = outcome.checks_performed as f64 * cfg.dts.check_cost;
            }
            dts_update(&mut state, strategy, &scored);
        }
        if let Some(ev) = event {
            counters.valid[k] += 1;
            rec.log.accepts.push(ev);
            rec.sample(engine.traj.makespan(), engine.path_length);
        } else {
            rec.heartbeat(engine.traj.makespan(), engine.path_length);
        }
    }
    rec.sample(engine.traj.makespan(), engine.path_length);
    Ok(MultiResult {
        trajectory: engine.traj,
        log: rec.log,
        stats: rec.stats,
        counters,
        history,
        dts: state,
    })
}
