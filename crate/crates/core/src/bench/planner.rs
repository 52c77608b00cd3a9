use std::time::{Duration, Instant};

use rand::Rng;

use super::scenario::Scenario;
use crate::error::{Error, Result};
use crate::trajectory::{resample_uniform, retime, segment_steps, validate, SyncTrajectory};
use crate::world::{Config, Scene};

/// Extension step in L1 distance of the composite configuration.
pub const RRT_STEP: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Extend {
    Reached,
    Advanced,
    Trapped,
}

struct Tree {
    points: Vec<Vec<f64>>,
    parents: Vec<usize>,
}

impl Tree {
    fn new(root: Vec<f64>) -> Self {
        Tree {
            points: vec![root],
            parents: vec![usize::MAX],
        }
    }

    fn nearest(&self, q: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (k, p) in self.points.iter().enumerate() {
            let d = l1(p, q);
            if d < best.1 {
                best = (k, d);
            }
        }
        best.0
    }

    fn branch(&self, mut k: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        while k != usize::MAX {
            out.push(self.points[k].clone());
            k = self.parents[k];
        }
        out
    }
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Splits composite coordinates into per-robot configs.
struct Layout {
    offsets: Vec<usize>,
}

impl Layout {
    fn new(scene: &Scene) -> Self {
        let mut offsets = vec![0];
        for r in &scene.robots {
            offsets.push(offsets.last().unwrap() + r.dof());
        }
        Layout { offsets }
    }

    fn split(&self, q: &[f64]) -> Vec<Config> {
        self.offsets
            .windows(2)
            .map(|w| Config::new(q[w[0]..w[1]].to_vec()))
            .collect()
    }

    fn join(configs: &[Config]) -> Vec<f64> {
        configs.iter().flat_map(|c| c.iter().copied()).collect()
    }

    /// Joint step count of the straight edge when every robot respects its
    /// speed limit.
    fn steps(&self, a: &[f64], b: &[f64], dt: f64, scene: &Scene) -> usize {
        self.offsets
            .windows(2)
            .zip(&scene.robots)
            .map(|(w, r)| segment_steps(l1(&a[w[0]..w[1]], &b[w[0]..w[1]]), dt, r.v_max))
            .max()
            .unwrap_or(1)
    }
}

fn lerp(a: &[f64], b: &[f64], s: f64) -> Vec<f64> {
    if s == 1.0 {
        return b.to_vec();
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| (1.0 - s) * x + s * y)
        .collect()
}

struct Planner<'a> {
    scene: &'a Scene,
    layout: Layout,
    dt: f64,
}

impl Planner<'_> {
    fn valid(&self, q: &[f64]) -> bool {
        self.scene.composite_config_valid(&self.layout.split(q))
    }

    /// Checks the edge at the resolution of the trajectory it will become.
    fn edge_free(&self, a: &[f64], b: &[f64]) -> bool {
        let k = self.layout.steps(a, b, self.dt, self.scene);
        (1..=k).all(|s| self.valid(&lerp(a, b, s as f64 / k as f64)))
    }

    fn extend(&self, tree: &mut Tree, target: &[f64]) -> (Extend, usize) {
        let near = tree.nearest(target);
        let from = &tree.points[near];
        let d = l1(from, target);
        let (q, status) = if d <= RRT_STEP {
            (target.to_vec(), Extend::Reached)
        } else {
            (lerp(from, target, RRT_STEP / d), Extend::Advanced)
        };
        if !self.edge_free(from, &q) {
            return (Extend::Trapped, near);
        }
        tree.points.push(q);
        tree.parents.push(near);
        (status, tree.points.len() - 1)
    }

    fn connect(&self, tree: &mut Tree, target: &[f64]) -> (Extend, usize) {
        loop {
            let (status, k) = self.extend(tree, target);
            if status != Extend::Advanced {
                return (status, k);
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.scene
            .robots
            .iter()
            .flat_map(|r| r.limits())
            .map(|[lo, hi]| {
                if hi > lo {
                    rng.random_range(lo..=hi)
                } else {
                    lo
                }
            })
            .collect()
    }
}

/// Bidirectional RRT-Connect in the composite configuration space. The
/// waypoint path is densified so that every robot respects its speed limit,
/// then retimed and resampled when the resampled version stays valid.
pub fn plan_rrt_connect<R: Rng + ?Sized>(
    scenario: &Scenario,
    timeout: Duration,
    rng: &mut R,
) -> Result<SyncTrajectory> {
    scenario.check()?;
    let scene = &scenario.scene;
    let planner = Planner {
        scene,
        layout: Layout::new(scene),
        dt: scenario.dt,
    };
    let start = Layout::join(&scenario.starts);
    let goal = Layout::join(&scenario.goals);
    let started = Instant::now();
    let mut waypoints = None;
    let mut a = Tree::new(start);
    let mut b = Tree::new(goal);
    let mut a_is_start = true;
    while waypoints.is_none() {
        if started.elapsed() >= timeout {
            return Err(Error::PlanningFailed(format!(
                "{}: no path within {:.1} s ({} + {} nodes)",
                scenario.name,
                timeout.as_secs_f64(),
                a.points.len(),
                b.points.len()
            )));
        }
        let target = planner.sample(rng);
        let (status, new) = planner.extend(&mut a, &target);
        if status != Extend::Trapped {
            let q = a.points[new].clone();
            let (status, other) = planner.connect(&mut b, &q);
            if status == Extend::Reached {
                let (s_tree, s_idx, g_tree, g_idx) = if a_is_start {
                    (&a, new, &b, other)
                } else {
                    (&b, other, &a, new)
                };
                let mut path = s_tree.branch(s_idx);
                path.reverse();
                let tail = g_tree.branch(g_idx);
                path.extend(tail.into_iter().skip(1));
                waypoints = Some(path);
                break;
            }
        }
        std::mem::swap(&mut a, &mut b);
        a_is_start = !a_is_start;
    }
    let waypoints = waypoints.unwrap();
    densify_and_time(&planner, &waypoints)
}

fn densify_and_time(planner: &Planner<'_>, waypoints: &[Vec<f64>]) -> Result<SyncTrajectory> {
    let scene = planner.scene;
    let mut composite = vec![waypoints[0].clone()];
    for w in waypoints.windows(2) {
        let k = planner.layout.steps(&w[0], &w[1], planner.dt, scene);
        composite.extend((1..=k).map(|s| lerp(&w[0], &w[1], s as f64 / k as f64)));
    }
    let mut states: Vec<Vec<Config>> =
        vec![Vec::with_capacity(composite.len()); scene.num_robots()];
    for q in &composite {
        for (seq, c) in states.iter_mut().zip(planner.layout.split(q)) {
            seq.push(c);
        }
    }
    let dense = SyncTrajectory::new(planner.dt, states)?;
    if let Ok(timed) = resample_uniform(&retime(&dense, scene), planner.dt, scene) {
        if validate(&timed, scene).is_empty() {
            return Ok(timed);
        }
    }
    let violations = validate(&dense, scene);
    if violations.is_empty() {
        Ok(dense)
    } else {
        Err(Error::InvalidTrajectory(violations))
    }
}
