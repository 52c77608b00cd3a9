//! Synchronized multi-robot trajectories on a shared uniform time grid,
//! retiming, uniform resampling and quality metrics.

use std::fmt;

use crate::error::{Error, Result};
use crate::world::{Config, Scene};

pub const DEFAULT_DT: f64 = 0.1;
/// Slack on the per-step L1 velocity bound.
pub const VELOCITY_SLACK: f64 = 1e-9;
pub const ZERO_VECTOR: f64 = 1e-12;
pub const LENGTH_TOL: f64 = 1e-6;
/// Tolerance applied to step-count ceilings so float noise does not add a step.
const STEP_TOL: f64 = 1e-9;

/// Per-robot configuration sequences sharing steps `0..H`, with `t_n = n * dt`.
///
/// Robots that finish early repeat their goal configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncTrajectory {
    pub dt: f64,
    states: Vec<Vec<Config>>,
}

impl SyncTrajectory {
    /// `states[i][n]` is robot `i` at step `n`; every robot needs the same
    /// number of steps (at least one).
    pub fn new(dt: f64, states: Vec<Vec<Config>>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "dt must be positive, got {dt}"
            )));
        }
        let h = states.first().map_or(0, Vec::len);
        if states.is_empty() || h == 0 {
            return Err(Error::InvalidArgument(
                "trajectory needs at least one robot and one step".into(),
            ));
        }
        if let Some(bad) = states.iter().position(|s| s.len() != h) {
            return Err(Error::InvalidArgument(format!(
                "robot {bad} has {} steps, robot 0 has {h}",
                states[bad].len()
            )));
        }
        Ok(SyncTrajectory { dt, states })
    }

    pub(crate) fn from_parts_unchecked(dt: f64, states: Vec<Vec<Config>>) -> Self {
        SyncTrajectory { dt, states }
    }

    pub fn num_robots(&self) -> usize {
        self.states.len()
    }

    /// Number of steps `H`.
    pub fn horizon(&self) -> usize {
        self.states[0].len()
    }

    pub fn robot(&self, i: usize) -> &[Config] {
        &self.states[i]
    }

    pub fn config(&self, i: usize, n: usize) -> &Config {
        &self.states[i][n]
    }

    pub fn states(&self) -> &[Vec<Config>] {
        &self.states
    }

    pub fn into_states(self) -> Vec<Vec<Config>> {
        self.states
    }

    pub fn composite(&self, n: usize) -> Vec<&Config> {
        self.states.iter().map(|s| &s[n]).collect()
    }

    pub fn starts(&self) -> Vec<Config> {
        self.states.iter().map(|s| s[0].clone()).collect()
    }

    pub fn goals(&self) -> Vec<Config> {
        self.states.iter().map(|s| s[s.len() - 1].clone()).collect()
    }

    pub fn makespan(&self) -> f64 {
        (self.horizon() - 1) as f64 * self.dt
    }

    /// Last step at which each robot is not yet resting at its goal.
    pub fn last_motion_steps(&self) -> Vec<usize> {
        self.states
            .iter()
            .map(|s| {
                let goal = &s[s.len() - 1];
                s.iter().rposition(|c| c != goal).map_or(0, |n| n + 1)
            })
            .collect()
    }

    /// Drops trailing steps where every robot already rests at its goal.
    pub fn trim_trailing_waits(&mut self) -> usize {
        let h = self.horizon();
        let keep = self.last_motion_steps().into_iter().max().unwrap_or(0) + 1;
        if keep < h {
            for s in &mut self.states {
                s.truncate(keep);
            }
        }
        h - keep.min(h)
    }

    pub fn path_length(&self) -> f64 {
        path_length(self)
    }

    pub fn metrics(&self, runtime: f64) -> Metrics {
        Metrics {
            makespan: self.makespan(),
            path_length: path_length(self),
            directional_consistency: directional_consistency(self),
            runtime,
        }
    }
}

/// Trajectory whose shared timestamps need not be uniformly spaced.
#[derive(Debug, Clone, PartialEq)]
pub struct NonUniformTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<Config>>,
}

impl NonUniformTrajectory {
    pub fn new(times: Vec<f64>, states: Vec<Vec<Config>>) -> Result<Self> {
        if times.is_empty() || states.is_empty() {
            return Err(Error::InvalidArgument("empty trajectory".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "first timestamp must be 0, got {}",
                times[0]
            )));
        }
        if let Some(k) = times
            .windows(2)
            .position(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::InvalidArgument(format!(
                "timestamps must increase strictly (index {})",
                k + 1
            )));
        }
        if let Some(bad) = states.iter().position(|s| s.len() != times.len()) {
            return Err(Error::InvalidArgument(format!(
                "robot {bad} has {} states for {} timestamps",
                states[bad].len(),
                times.len()
            )));
        }
        Ok(NonUniformTrajectory { times, states })
    }

    pub fn makespan(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn path_length(&self) -> f64 {
        self.states
            .iter()
            .map(|s| s.windows(2).map(|w| l1_dist(&w[0], &w[1])).sum::<f64>())
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    pub makespan: f64,
    pub path_length: f64,
    pub directional_consistency: f64,
    pub runtime: f64,
}

/// `(1 - s) * a + s * b`.
pub fn interpolate(a: &Config, b: &Config, s: f64) -> Result<Config> {
    if a.dof() != b.dof() {
        return Err(Error::DimensionMismatch {
            expected: a.dof(),
            got: b.dof(),
        });
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidArgument(format!(
            "interpolation parameter {s} outside [0, 1]"
        )));
    }
    Ok(lerp(a, b, s))
}

pub(crate) fn lerp(a: &Config, b: &Config, s: f64) -> Config {
    if s == 0.0 {
        return a.clone();
    }
    if s == 1.0 {
        return b.clone();
    }
    Config::new(
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (1.0 - s) * x + s * y)
            .collect(),
    )
}

/// L1 distance. Panics on a dimension mismatch.
pub fn l1_dist(a: &Config, b: &Config) -> f64 {
    assert_eq!(a.dof(), b.dof(), "l1_dist: dimension mismatch");
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum()
}

/// Number of max-speed steps needed to cover L1 distance `d`.
pub fn segment_steps(d: f64, dt: f64, v_max: f64) -> usize {
    let k = (d / (dt * v_max) - STEP_TOL).ceil();
    if k.is_finite() && k > 1.0 {
        k as usize
    } else {
        1
    }
}

/// `K + 1` evenly spaced configs from `a` to `b` (inclusive), with `K` the
/// fewest steps that respect the speed limit.
pub fn discretize_segment(a: &Config, b: &Config, dt: f64, v_max: f64) -> Vec<Config> {
    let k = segment_steps(l1_dist(a, b), dt, v_max);
    evenly_spaced(a, b, k)
}

pub(crate) fn evenly_spaced(a: &Config, b: &Config, k: usize) -> Vec<Config> {
    (0..=k).map(|s| lerp(a, b, s as f64 / k as f64)).collect()
}

/// Discretizes each robot's waypoint polyline at its speed limit and pads
/// robots that finish early with their goal.
pub fn from_waypoints(waypoints: &[Vec<Config>], dt: f64, scene: &Scene) -> Result<SyncTrajectory> {
    if waypoints.len() != scene.num_robots() {
        return Err(Error::InvalidArgument(format!(
            "{} waypoint lists for {} robots",
            waypoints.len(),
            scene.num_robots()
        )));
    }
    let mut states = Vec::with_capacity(waypoints.len());
    for (i, wps) in waypoints.iter().enumerate() {
        let Some(first) = wps.first() else {
            return Err(Error::InvalidArgument(format!(
                "robot {i} has no waypoints"
            )));
        };
        if let Some(bad) = wps.iter().find(|c| c.dof() != scene.robots[i].dof()) {
            return Err(Error::DimensionMismatch {
                expected: scene.robots[i].dof(),
                got: bad.dof(),
            });
        }
        let mut seq = vec![first.clone()];
        for w in wps.windows(2) {
            seq.extend(
                discretize_segment(&w[0], &w[1], dt, scene.robots[i].v_max)
                    .into_iter()
                    .skip(1),
            );
        }
        states.push(seq);
    }
    let h = states.iter().map(Vec::len).max().unwrap_or(1);
    for seq in &mut states {
        let goal = seq[seq.len() - 1].clone();
        seq.resize(h, goal);
    }
    SyncTrajectory::new(dt, states)
}

/// Reassigns timestamps so the fastest robot in every interval moves at its
/// speed limit: `t_n = t_{n-1} + max_i d(C^i_n, C^i_{n-1}) / v^i_max`.
/// Steps where no robot moves are dropped first.
pub fn retime(traj: &SyncTrajectory, scene: &Scene) -> NonUniformTrajectory {
    let n_robots = traj.num_robots();
    let h = traj.horizon();
    let mut keep = Vec::with_capacity(h);
    keep.push(0);
    for n in 1..h {
        let last = *keep.last().unwrap();
        if (0..n_robots).any(|i| traj.config(i, n) != traj.config(i, last)) {
            keep.push(n);
        }
    }
    let mut times = Vec::with_capacity(keep.len());
    times.push(0.0);
    for w in keep.windows(2) {
        let dt = (0..n_robots)
            .map(|i| l1_dist(traj.config(i, w[0]), traj.config(i, w[1])) / scene.robots[i].v_max)
            .fold(0.0, f64::max);
        times.push(times.last().unwrap() + dt);
    }
    let states = (0..n_robots)
        .map(|i| keep.iter().map(|&n| traj.config(i, n).clone()).collect())
        .collect();
    NonUniformTrajectory { times, states }
}

/// Samples a non-uniform trajectory at `n * dt` by linear interpolation; the
/// final step is exactly the final input state.
pub fn resample_uniform(
    traj: &NonUniformTrajectory,
    dt: f64,
    scene: &Scene,
) -> Result<SyncTrajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let total = traj.makespan();
    let steps = if total > 0.0 {
        (total / dt - STEP_TOL).ceil().max(1.0) as usize
    } else {
        0
    };
    let h = steps + 1;
    let last = traj.times.len() - 1;
    let mut states: Vec<Vec<Config>> = traj.states.iter().map(|_| Vec::with_capacity(h)).collect();
    let mut k = 0;
    for n in 0..h {
        if n + 1 == h {
            for (out, src) in states.iter_mut().zip(&traj.states) {
                out.push(src[last].clone());
            }
            break;
        }
        let t = (n as f64 * dt).min(total);
        while k + 1 < last && traj.times[k + 1] <= t {
            k += 1;
        }
        let (t0, t1) = (traj.times[k], traj.times[(k + 1).min(last)]);
        let s = if t1 > t0 {
            ((t - t0) / (t1 - t0)).clamp(0.0, 1.0)
        } else {
            0.0
        };
        for (out, src) in states.iter_mut().zip(&traj.states) {
            out.push(lerp(&src[k], &src[(k + 1).min(last)], s));
        }
    }
    let out = SyncTrajectory::from_parts_unchecked(dt, states);
    for (i, robot) in out.states.iter().enumerate() {
        let limit = dt * scene.robots[i].v_max + VELOCITY_SLACK;
        for (n, w) in robot.windows(2).enumerate() {
            let d = l1_dist(&w[0], &w[1]);
            if d > limit {
                return Err(Error::Internal(format!(
                    "resampling robot {i} step {} moves {d} > {limit}",
                    n + 1
                )));
            }
        }
    }
    Ok(out)
}

/// Sum of L1 step lengths over all robots; waits contribute nothing.
pub fn path_length(traj: &SyncTrajectory) -> f64 {
    traj.states
        .iter()
        .map(|s| s.windows(2).map(|w| l1_dist(&w[0], &w[1])).sum::<f64>())
        .sum()
}

/// Sum over robots of `1 - cos` between consecutive step vectors (Euclidean),
/// skipping any pair that involves a (near) zero vector.
pub fn directional_consistency(traj: &SyncTrajectory) -> f64 {
    let mut total = 0.0;
    for s in &traj.states {
        let steps: Vec<Vec<f64>> = s
            .windows(2)
            .map(|w| w[1].iter().zip(w[0].iter()).map(|(b, a)| b - a).collect())
            .collect();
        for w in steps.windows(2) {
            let (u, v) = (&w[0], &w[1]);
            let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nu < ZERO_VECTOR || nv < ZERO_VECTOR {
                continue;
            }
            let cos = u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / (nu * nv);
            total += 1.0 - cos.clamp(-1.0, 1.0);
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Shape(String),
    Velocity {
        robot: usize,
        step: usize,
        distance: f64,
        limit: f64,
    },
    JointLimit {
        robot: usize,
        step: usize,
    },
    Obstacle {
        robot: usize,
        step: usize,
    },
    RobotRobot {
        robots: (usize, usize),
        step: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape(msg) => write!(f, "shape: {msg}"),
            Violation::Velocity {
                robot,
                step,
                distance,
                limit,
            } => {
                write!(
                    f,
                    "velocity: robot {robot} step {step} moves {distance:.6} > {limit:.6}"
                )
            }
            Violation::JointLimit { robot, step } => {
                write!(f, "joint limit: robot {robot} step {step}")
            }
            Violation::Obstacle { robot, step } => write!(f, "obstacle: robot {robot} step {step}"),
            Violation::RobotRobot {
                robots: (a, b),
                step,
            } => {
                write!(f, "collision: robots {a} and {b} at step {step}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ValidateOptions {
    /// Extra interpolated checks between consecutive steps; 0 checks the
    /// discrete steps only.
    pub substeps: usize,
}

pub fn validate(traj: &SyncTrajectory, scene: &Scene) -> Vec<Violation> {
    validate_with(traj, scene, ValidateOptions::default())
}

pub fn validate_with(
    traj: &SyncTrajectory,
    scene: &Scene,
    opts: ValidateOptions,
) -> Vec<Violation> {
    let mut out = Vec::new();
    if traj.num_robots() != scene.num_robots() {
        out.push(Violation::Shape(format!(
            "trajectory has {} robots, scene has {}",
            traj.num_robots(),
            scene.num_robots()
        )));
        return out;
    }
    for (i, s) in traj.states.iter().enumerate() {
        if let Some(n) = s.iter().position(|c| c.dof() != scene.robots[i].dof()) {
            out.push(Violation::Shape(format!(
                "robot {i} step {n} has wrong dimension"
            )));
            return out;
        }
    }

    for (i, s) in traj.states.iter().enumerate() {
        let limit = traj.dt * scene.robots[i].v_max + VELOCITY_SLACK;
        for (n, w) in s.windows(2).enumerate() {
            let distance = l1_dist(&w[0], &w[1]);
            if distance > limit {
                out.push(Violation::Velocity {
                    robot: i,
                    step: n + 1,
                    distance,
                    limit,
                });
            }
        }
    }

    let h = traj.horizon();
    let check_step = |out: &mut Vec<Violation>, step: usize, configs: &[Config]| {
        let bodies: Vec<_> = configs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if !scene.within_limits(i, c) {
                    out.push(Violation::JointLimit { robot: i, step });
                }
                let b = scene.body(i, c);
                if b.hits_any(&scene.obstacles) {
                    out.push(Violation::Obstacle { robot: i, step });
                }
                b
            })
            .collect();
        for a in 0..bodies.len() {
            for b in a + 1..bodies.len() {
                if bodies[a].intersects(&bodies[b]) {
                    out.push(Violation::RobotRobot {
                        robots: (a, b),
                        step,
                    });
                }
            }
        }
    };
    for n in 0..h {
        let configs: Vec<Config> = traj.states.iter().map(|s| s[n].clone()).collect();
        check_step(&mut out, n, &configs);
        if opts.substeps > 0 && n + 1 < h {
            for k in 1..=opts.substeps {
                let s = k as f64 / (opts.substeps + 1) as f64;
                let configs: Vec<Config> = traj
                    .states
                    .iter()
                    .map(|st| lerp(&st[n], &st[n + 1], s))
                    .collect();
                let before = out.len();
                check_step(&mut out, n, &configs);
                if out.len() > before {
                    break;
                }
            }
        }
    }
    out
}
