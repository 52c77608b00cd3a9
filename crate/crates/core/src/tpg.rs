//! Temporal plan graphs: per-robot node chains plus inter-robot precedence
//! edges, shortcutting on the graph and earliest-start scheduling.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::time::Instant;

use rand::Rng;

use crate::error::{Error, Result};
use crate::shortcut::{
    relative_reduction, AcceptEvent, CandidateSampler, Checker, LoopConfig, LoopResult, Method,
    Objective, Recorder, RejectReason, ShortcutOutcome,
};
use crate::trajectory::{evenly_spaced, l1_dist, segment_steps, SyncTrajectory};
use crate::world::{BodyGeometry, Config, Scene};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    pub robot: usize,
    pub step: usize,
}

impl NodeId {
    pub fn new(robot: usize, step: usize) -> Self {
        NodeId { robot, step }
    }
}

/// Node `v^i_m` with its configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TpgNode<'a> {
    pub robot: usize,
    pub step: usize,
    pub config: &'a Config,
}

#[derive(Debug, Clone)]
pub struct Tpg {
    pub dt: f64,
    nodes: Vec<Vec<Config>>,
    bodies: Vec<Vec<BodyGeometry>>,
    /// Inter-robot edges `from -> to`: `to` may only be reached once `from` has been.
    edges: BTreeSet<(NodeId, NodeId)>,
    incoming: Vec<Vec<Vec<NodeId>>>,
    outgoing: Vec<Vec<Vec<NodeId>>>,
}

impl Tpg {
    fn from_parts(
        dt: f64,
        nodes: Vec<Vec<Config>>,
        bodies: Vec<Vec<BodyGeometry>>,
        edges: BTreeSet<(NodeId, NodeId)>,
    ) -> Self {
        let mut g = Tpg {
            dt,
            nodes,
            bodies,
            edges,
            incoming: Vec::new(),
            outgoing: Vec::new(),
        };
        g.index_edges();
        g
    }

    fn index_edges(&mut self) {
        self.incoming = self
            .nodes
            .iter()
            .map(|n| vec![Vec::new(); n.len()])
            .collect();
        self.outgoing = self.incoming.clone();
        for &(a, b) in &self.edges {
            self.outgoing[a.robot][a.step].push(b);
            self.incoming[b.robot][b.step].push(a);
        }
    }

    pub fn num_robots(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_nodes(&self, i: usize) -> usize {
        self.nodes[i].len()
    }

    pub fn node_counts(&self) -> Vec<usize> {
        self.nodes.iter().map(Vec::len).collect()
    }

    pub fn node(&self, id: NodeId) -> TpgNode<'_> {
        TpgNode {
            robot: id.robot,
            step: id.step,
            config: &self.nodes[id.robot][id.step],
        }
    }

    pub fn configs(&self, i: usize) -> &[Config] {
        &self.nodes[i]
    }

    /// Inter-robot precedence edges in sorted order.
    pub fn type2_edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn num_type2_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, from: NodeId, to: NodeId) -> bool {
        self.edges.contains(&(from, to))
    }

    pub fn path_length(&self) -> f64 {
        self.nodes
            .iter()
            .map(|s| s.windows(2).map(|w| l1_dist(&w[0], &w[1])).sum::<f64>())
            .sum()
    }

    fn predecessors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let chain = (id.step > 0).then(|| NodeId::new(id.robot, id.step - 1));
        chain
            .into_iter()
            .chain(self.incoming[id.robot][id.step].iter().copied())
    }

    fn successors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let chain =
            (id.step + 1 < self.nodes[id.robot].len()).then(|| NodeId::new(id.robot, id.step + 1));
        chain
            .into_iter()
            .chain(self.outgoing[id.robot][id.step].iter().copied())
    }

    fn closure(&self, start: NodeId, forward: bool) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            let next: Vec<NodeId> = if forward {
                self.successors(v).collect()
            } else {
                self.predecessors(v).collect()
            };
            for u in next {
                if seen.insert(u) {
                    queue.push_back(u);
                }
            }
        }
        seen
    }

    /// All nodes with a path to `id` (excluding `id` unless on a cycle).
    pub fn ancestors(&self, id: NodeId) -> BTreeSet<NodeId> {
        self.closure(id, false)
    }

    pub fn descendants(&self, id: NodeId) -> BTreeSet<NodeId> {
        self.closure(id, true)
    }

    /// For every robot, the half-open node range `(lo, hi)` that is neither an
    /// ancestor of `(i, m)` nor a descendant of `(i, n)`; `lo` is one past the
    /// last ancestor. Ancestor sets are prefixes and descendant sets are
    /// suffixes of each chain.
    fn unordered_ranges(
        &self,
        i: usize,
        m: usize,
        n: usize,
    ) -> (Vec<(usize, usize)>, Vec<Option<usize>>) {
        let robots = self.num_robots();
        let mut last_ancestor: Vec<Option<usize>> = vec![None; robots];
        for v in self.ancestors(NodeId::new(i, m)) {
            let e = &mut last_ancestor[v.robot];
            *e = Some(e.map_or(v.step, |s: usize| s.max(v.step)));
        }
        let mut first_descendant: Vec<usize> = self.nodes.iter().map(Vec::len).collect();
        for v in self.descendants(NodeId::new(i, n)) {
            let e = &mut first_descendant[v.robot];
            *e = (*e).min(v.step);
        }
        let ranges = (0..robots)
            .map(|j| (last_ancestor[j].map_or(0, |s| s + 1), first_descendant[j]))
            .collect();
        (ranges, last_ancestor)
    }

    /// Graphviz rendering of the graph.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph tpg {\n  rankdir=LR;\n");
        for (i, chain) in self.nodes.iter().enumerate() {
            let _ = writeln!(out, "  subgraph cluster_{i} {{\n    label=\"robot {i}\";");
            for k in 0..chain.len() {
                let _ = writeln!(out, "    r{i}_{k} [label=\"{i}:{k}\"];");
            }
            for k in 1..chain.len() {
                let _ = writeln!(out, "    r{i}_{} -> r{i}_{k};", k - 1);
            }
            out.push_str("  }\n");
        }
        for (a, b) in &self.edges {
            let _ = writeln!(
                out,
                "  r{}_{} -> r{}_{} [color=red];",
                a.robot, a.step, b.robot, b.step
            );
        }
        out.push_str("}\n");
        out
    }

    /// True when every colliding pair of nodes from different robots is
    /// ordered by a direct edge `(i, m+1) -> (j, n)` in one of the two
    /// orientations. This is the property the schedule relies on.
    pub fn precedence_complete(&self) -> bool {
        let robots = self.num_robots();
        for i in 0..robots {
            for j in i + 1..robots {
                for (m, bi) in self.bodies[i].iter().enumerate() {
                    for (n, bj) in self.bodies[j].iter().enumerate() {
                        if !bi.intersects(bj) {
                            continue;
                        }
                        let i_first = m + 1 < self.nodes[i].len()
                            && self.has_edge(NodeId::new(i, m + 1), NodeId::new(j, n));
                        let j_first = n + 1 < self.nodes[j].len()
                            && self.has_edge(NodeId::new(j, n + 1), NodeId::new(i, m));
                        if !(i_first || j_first) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

/// Builds the graph of a synchronized trajectory: node chains mirror the
/// steps up to each robot's arrival and every colliding pair `(C^i_m, C^j_n)` with `m < n` adds the edge
/// `v^i_{m+1} -> v^j_n`.
pub fn build_tpg(traj: &SyncTrajectory, scene: &Scene) -> Result<Tpg> {
    if traj.num_robots() != scene.num_robots() {
        return Err(Error::InvalidArgument(format!(
            "trajectory has {} robots, scene has {}",
            traj.num_robots(),
            scene.num_robots()
        )));
    }
    // Trailing goal waits carry no extra ordering: a robot rests at its last
    // node forever.
    let nodes: Vec<Vec<Config>> = traj
        .states()
        .iter()
        .zip(traj.last_motion_steps())
        .map(|(s, arrival)| s[..=arrival].to_vec())
        .collect();
    let bodies: Vec<Vec<BodyGeometry>> = nodes
        .iter()
        .enumerate()
        .map(|(i, chain)| chain.iter().map(|c| scene.body(i, c)).collect())
        .collect();
    let mut edges = BTreeSet::new();
    let robots = nodes.len();
    for i in 0..robots {
        for j in i + 1..robots {
            for (m, bi) in bodies[i].iter().enumerate() {
                for (n, bj) in bodies[j].iter().enumerate() {
                    if !bi.intersects(bj) {
                        continue;
                    }
                    match m.cmp(&n) {
                        std::cmp::Ordering::Less => {
                            edges.insert((NodeId::new(i, m + 1), NodeId::new(j, n)));
                        }
                        std::cmp::Ordering::Greater => {
                            edges.insert((NodeId::new(j, n + 1), NodeId::new(i, m)));
                        }
                        std::cmp::Ordering::Equal => {
                            return Err(Error::Internal(format!(
                                "robots {i} and {j} collide at step {m}"
                            )));
                        }
                    }
                }
            }
        }
    }
    Ok(Tpg::from_parts(traj.dt, nodes, bodies, edges))
}

/// Earliest step of every node: one step after its chain predecessor and no
/// earlier than the source of any incoming precedence edge.
pub fn node_steps(tpg: &Tpg) -> Result<Vec<Vec<usize>>> {
    let robots = tpg.num_robots();
    let mut indegree: Vec<Vec<usize>> = (0..robots)
        .map(|i| {
            (0..tpg.num_nodes(i))
                .map(|k| tpg.incoming[i][k].len() + usize::from(k > 0))
                .collect()
        })
        .collect();
    let mut steps: Vec<Vec<usize>> = tpg.nodes.iter().map(|c| vec![0; c.len()]).collect();
    let mut queue: VecDeque<NodeId> = (0..robots)
        .filter(|&i| indegree[i][0] == 0)
        .map(|i| NodeId::new(i, 0))
        .collect();
    let mut visited = 0;
    while let Some(v) = queue.pop_front() {
        visited += 1;
        let here = steps[v.robot][v.step];
        for u in tpg.successors(v) {
            let lower = if u.robot == v.robot { here + 1 } else { here };
            let s = &mut steps[u.robot][u.step];
            *s = (*s).max(lower);
            let d = &mut indegree[u.robot][u.step];
            *d -= 1;
            if *d == 0 {
                queue.push_back(u);
            }
        }
    }
    if visited != tpg.nodes.iter().map(Vec::len).sum::<usize>() {
        return Err(Error::Cycle);
    }
    Ok(steps)
}

/// Earliest-start schedule on the shared grid; robots wait at their current
/// node while blocked and rest at their last node once done.
pub fn tpg_schedule(tpg: &Tpg) -> Result<SyncTrajectory> {
    let steps = node_steps(tpg)?;
    let horizon = steps.iter().map(|s| s[s.len() - 1]).max().unwrap_or(0) + 1;
    let states = tpg
        .nodes
        .iter()
        .zip(&steps)
        .map(|(chain, at)| {
            let mut out = Vec::with_capacity(horizon);
            let mut k = 0;
            for s in 0..horizon {
                while k + 1 < chain.len() && at[k + 1] <= s {
                    k += 1;
                }
                out.push(chain[k].clone());
            }
            out
        })
        .collect();
    SyncTrajectory::new(tpg.dt, states)
}

/// Makespan in steps of the schedule with trailing global waits removed.
fn schedule_steps(tpg: &Tpg) -> Result<usize> {
    let mut traj = tpg_schedule(tpg)?;
    traj.trim_trailing_waits();
    Ok(traj.horizon() - 1)
}

/// Shortcuts robot `i` between nodes `m` and `n` at max speed, checking the
/// new configs only against nodes of other robots that are not ordered
/// before `(i, m)` or after `(i, n)`.
pub fn attempt_tpg_shortcut(
    tpg: &Tpg,
    i: usize,
    m: usize,
    n: usize,
    scene: &Scene,
) -> (ShortcutOutcome, Option<Tpg>) {
    let started = Instant::now();
    let chain = &tpg.nodes[i];
    assert!(
        m + 2 <= n && n < chain.len(),
        "shortcut pair ({m}, {n}) outside {} nodes",
        chain.len()
    );
    let before_steps = match schedule_steps(tpg) {
        Ok(s) => s,
        Err(_) => {
            return (
                ShortcutOutcome::rejected(RejectReason::Collision, f64::NAN, 0, started),
                None,
            )
        }
    };
    let makespan_before = before_steps as f64 * tpg.dt;
    let mut checker = Checker::new(scene);
    let reject = |reason, checks| {
        (
            ShortcutOutcome::rejected(reason, makespan_before, checks, started),
            None,
        )
    };

    let k = segment_steps(l1_dist(&chain[m], &chain[n]), tpg.dt, scene.robots[i].v_max);
    if k >= n - m {
        return reject(RejectReason::NotShorter, 0);
    }
    let segment = evenly_spaced(&chain[m], &chain[n], k);
    let (ranges, last_ancestor) = tpg.unordered_ranges(i, m, n);
    let mut new_bodies = Vec::with_capacity(k.saturating_sub(1));
    for q in &segment[1..k] {
        let Some(body) = checker.static_ok(i, q) else {
            return reject(RejectReason::Collision, checker.checks);
        };
        for (j, &(lo, hi)) in ranges.iter().enumerate() {
            if j == i {
                continue;
            }
            for other in &tpg.bodies[j][lo.min(hi)..hi] {
                checker.checks += 1;
                if body.intersects(other) {
                    return reject(RejectReason::Collision, checker.checks);
                }
            }
        }
        new_bodies.push(body);
    }

    // Splice robot i's chain: old node index -> new index.
    let shift = (n - m) - k;
    let remap = |s: usize| if s >= n { s - shift } else { s };
    let mut edges = BTreeSet::new();
    for &(a, b) in &tpg.edges {
        let drop_source = a.robot == i && a.step >= m + 2 && a.step <= n;
        let drop_target = b.robot == i && b.step > m && b.step < n;
        if drop_source || drop_target {
            continue;
        }
        let a = if a.robot == i {
            NodeId::new(i, remap(a.step))
        } else {
            a
        };
        let b = if b.robot == i {
            NodeId::new(i, remap(b.step))
        } else {
            b
        };
        edges.insert((a, b));
    }
    // Collisions with exempted nodes still need an explicit order.
    for (s, body) in new_bodies.iter().enumerate() {
        let x = m + 1 + s;
        for j in (0..tpg.num_robots()).filter(|&j| j != i) {
            let (lo, hi) = ranges[j];
            let anc_end = last_ancestor[j].map_or(0, |a| a + 1);
            for (kk, other) in tpg.bodies[j].iter().enumerate() {
                if kk >= lo.min(hi) && kk < hi {
                    continue;
                }
                checker.checks += 1;
                if !body.intersects(other) {
                    continue;
                }
                if kk < anc_end {
                    if kk + 1 >= tpg.nodes[j].len() {
                        return reject(RejectReason::Collision, checker.checks);
                    }
                    edges.insert((NodeId::new(j, kk + 1), NodeId::new(i, x)));
                } else {
                    edges.insert((NodeId::new(i, x + 1), NodeId::new(j, kk)));
                }
            }
        }
    }
    let mut nodes = tpg.nodes.clone();
    let mut bodies = tpg.bodies.clone();
    nodes[i].splice(m + 1..n, segment[1..k].iter().cloned());
    bodies[i].splice(m + 1..n, new_bodies);
    let new = Tpg::from_parts(tpg.dt, nodes, bodies, edges);
    let after_steps = match schedule_steps(&new) {
        Ok(s) => s,
        Err(_) => return reject(RejectReason::Collision, checker.checks),
    };
    if after_steps > before_steps {
        return reject(RejectReason::NotShorter, checker.checks);
    }
    let outcome = ShortcutOutcome::accepted(
        tpg.path_length(),
        new.path_length(),
        after_steps as f64 * tpg.dt,
        checker.checks,
        started,
    );
    (outcome, Some(new))
}

pub(crate) fn run_tpg_loop<R: Rng + ?Sized>(
    traj: &SyncTrajectory,
    scene: &Scene,
    cfg: &LoopConfig,
    rng: &mut R,
) -> Result<LoopResult> {
    let bound = crate::shortcut::makespan_lower_bound_steps(traj, scene);
    let mut rec = Recorder::new(cfg.budget, cfg.heartbeat);
    let mut tpg = build_tpg(traj, scene)?;
    let mut makespan = schedule_steps(&tpg)? as f64 * tpg.dt;
    let mut path_length = tpg.path_length();
    rec.sample(makespan, path_length);
    let mut sampler = CandidateSampler::new(cfg.endpoints, cfg.robot_select);
    while !rec.exhausted() {
        if cfg.stop_at_lower_bound && makespan <= bound as f64 * tpg.dt + 1e-9 {
            break;
        }
        let Some(cand) = sampler.next_candidate(Method::Tpg, &tpg.node_counts(), rng) else {
            break;
        };
        let i = cand.robot.expect("tpg candidates name a robot");
        let (mut outcome, new) = attempt_tpg_shortcut(&tpg, i, cand.m, cand.n, scene);
        if let Some(new) = new {
            outcome.rel_length_reduction = relative_reduction(path_length, new.path_length());
            rec.log.accepts.push(AcceptEvent {
                iteration: rec.stats.candidates,
                method: Method::Tpg,
                robot: cand.robot,
                m: cand.m,
                n: cand.n,
                objective: Objective::Steps {
                    before: tpg.num_nodes(i),
                    after: new.num_nodes(i),
                },
                makespan_before: makespan,
                makespan_after: outcome.makespan_after,
            });
            tpg = new;
            makespan = outcome.makespan_after;
            path_length = tpg.path_length();
            rec.stats.record(&outcome);
            sampler.reset();
            rec.sample(makespan, path_length);
        } else {
            rec.stats.record(&outcome);
            rec.heartbeat(makespan, path_length);
        }
    }
    rec.sample(makespan, path_length);
    let mut trajectory = tpg_schedule(&tpg)?;
    trajectory.trim_trailing_waits();
    Ok(LoopResult {
        trajectory,
        log: rec.log,
        stats: rec.stats,
    })
}
