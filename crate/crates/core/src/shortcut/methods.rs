use std::time::Instant;

use super::{Checker, RejectReason, ShortcutOutcome};
use crate::trajectory::{
    evenly_spaced, l1_dist, resample_uniform, retime, segment_steps, SyncTrajectory, LENGTH_TOL,
};
use crate::world::{Config, Scene};

fn assert_pair(traj: &SyncTrajectory, m: usize, n: usize) {
    assert!(
        m + 2 <= n && n < traj.horizon(),
        "shortcut pair ({m}, {n}) outside horizon {}",
        traj.horizon()
    );
}

/// Treats all robots as one agent: a joint straight segment from the composite
/// config at `m` to the one at `n`, timed by the slowest robot.
pub fn attempt_composite(
    traj: &SyncTrajectory,
    m: usize,
    n: usize,
    scene: &Scene,
) -> (ShortcutOutcome, Option<SyncTrajectory>) {
    assert_pair(traj, m, n);
    let started = Instant::now();
    let mut checker = Checker::new(scene);
    let robots = traj.num_robots();
    let k = (0..robots)
        .map(|i| {
            let d = l1_dist(traj.config(i, m), traj.config(i, n));
            segment_steps(d, traj.dt, scene.robots[i].v_max)
        })
        .max()
        .unwrap_or(1);
    if k >= n - m {
        return (
            ShortcutOutcome::rejected(RejectReason::NotShorter, traj.makespan(), 0, started),
            None,
        );
    }
    let segments: Vec<Vec<Config>> = (0..robots)
        .map(|i| evenly_spaced(traj.config(i, m), traj.config(i, n), k))
        .collect();
    for s in 1..k {
        let mut bodies = Vec::with_capacity(robots);
        for (i, seg) in segments.iter().enumerate() {
            match checker.static_ok(i, &seg[s]) {
                Some(b) => bodies.push(b),
                None => {
                    return (
                        ShortcutOutcome::rejected(
                            RejectReason::Collision,
                            traj.makespan(),
                            checker.checks,
                            started,
                        ),
                        None,
                    )
                }
            }
        }
        for a in 0..robots {
            for b in a + 1..robots {
                checker.checks += 1;
                if bodies[a].intersects(&bodies[b]) {
                    return (
                        ShortcutOutcome::rejected(
                            RejectReason::Collision,
                            traj.makespan(),
                            checker.checks,
                            started,
                        ),
                        None,
                    );
                }
            }
        }
    }
    let states = traj
        .states()
        .iter()
        .zip(&segments)
        .map(|(seq, seg)| {
            let mut out = Vec::with_capacity(seq.len() - (n - m - k));
            out.extend_from_slice(&seq[..=m]);
            out.extend_from_slice(&seg[1..k]);
            out.extend_from_slice(&seq[n..]);
            out
        })
        .collect();
    let new = SyncTrajectory::from_parts_unchecked(traj.dt, states);
    let outcome = ShortcutOutcome::accepted(
        traj.path_length(),
        new.path_length(),
        new.makespan(),
        checker.checks,
        started,
    );
    (outcome, Some(new))
}

/// Shortcuts robot `i` at max speed, treating the others as dynamic obstacles.
/// The rest of robot `i`'s trajectory moves earlier by the saved steps and the
/// robot then waits at its goal.
pub fn attempt_prioritized(
    traj: &SyncTrajectory,
    i: usize,
    m: usize,
    n: usize,
    scene: &Scene,
) -> (ShortcutOutcome, Option<SyncTrajectory>) {
    assert_pair(traj, m, n);
    let started = Instant::now();
    let mut checker = Checker::new(scene);
    let reject = |reason, checks| {
        (
            ShortcutOutcome::rejected(reason, traj.makespan(), checks, started),
            None,
        )
    };
    let seq = traj.robot(i);
    let h = seq.len();
    let k = segment_steps(l1_dist(&seq[m], &seq[n]), traj.dt, scene.robots[i].v_max);
    if k >= n - m {
        return reject(RejectReason::NotShorter, 0);
    }
    let shift = (n - m) - k;
    let goal = &seq[h - 1];
    // Only an earlier arrival at the goal counts as progress; spans that end
    // in the goal wait would otherwise just re-discretize the final approach.
    let arrival = seq.iter().rposition(|c| c != goal).map_or(0, |s| s + 1);
    let new_arrival = if n <= arrival { arrival - shift } else { m + k };
    if new_arrival >= arrival {
        return reject(RejectReason::NotShorter, 0);
    }
    let segment = evenly_spaced(&seq[m], &seq[n], k);
    let mut new_seq: Vec<Config> = Vec::with_capacity(h);
    new_seq.extend_from_slice(&seq[..=m]);
    new_seq.extend_from_slice(&segment[1..k]);
    new_seq.extend_from_slice(&seq[n..]);
    new_seq.extend(std::iter::repeat_n(goal.clone(), shift));
    debug_assert_eq!(new_seq.len(), h);
    for step in m + 1..h {
        let q = &new_seq[step];
        // Unchanged placements were valid in the input.
        if *q == seq[step] {
            continue;
        }
        let fresh = step < m + k;
        let body = if fresh {
            match checker.static_ok(i, q) {
                Some(b) => b,
                None => return reject(RejectReason::Collision, checker.checks),
            }
        } else {
            scene.body(i, q)
        };
        for j in (0..traj.num_robots()).filter(|&j| j != i) {
            if !checker.pair_ok(&body, j, traj.config(j, step)) {
                return reject(RejectReason::Collision, checker.checks);
            }
        }
    }
    let mut states = traj.states().to_vec();
    states[i] = new_seq;
    let new = SyncTrajectory::from_parts_unchecked(traj.dt, states);
    let outcome = ShortcutOutcome::accepted(
        traj.path_length(),
        new.path_length(),
        new.makespan(),
        checker.checks,
        started,
    );
    (outcome, Some(new))
}

/// Replaces robot `i`'s configs at steps `m..=n` with the same number of
/// evenly spaced configs on the straight segment; timing is untouched.
pub fn attempt_path(
    traj: &SyncTrajectory,
    i: usize,
    m: usize,
    n: usize,
    scene: &Scene,
) -> (ShortcutOutcome, Option<SyncTrajectory>) {
    assert_pair(traj, m, n);
    let started = Instant::now();
    let mut checker = Checker::new(scene);
    let reject = |reason, checks| {
        (
            ShortcutOutcome::rejected(reason, traj.makespan(), checks, started),
            None,
        )
    };
    let seq = traj.robot(i);
    let original: f64 = seq[m..=n].windows(2).map(|w| l1_dist(&w[0], &w[1])).sum();
    let straight = l1_dist(&seq[m], &seq[n]);
    if straight >= original - LENGTH_TOL {
        return reject(RejectReason::NotShorter, 0);
    }
    let segment = evenly_spaced(&seq[m], &seq[n], n - m);
    for (s, config) in segment.iter().enumerate().take(n - m).skip(1) {
        let step = m + s;
        let Some(body) = checker.static_ok(i, config) else {
            return reject(RejectReason::Collision, checker.checks);
        };
        for j in (0..traj.num_robots()).filter(|&j| j != i) {
            if !checker.pair_ok(&body, j, traj.config(j, step)) {
                return reject(RejectReason::Collision, checker.checks);
            }
        }
    }
    let mut states = traj.states().to_vec();
    states[i].splice(m + 1..n, segment[1..n - m].iter().cloned());
    let new = SyncTrajectory::from_parts_unchecked(traj.dt, states);
    let outcome = ShortcutOutcome::accepted(
        traj.path_length(),
        new.path_length(),
        new.makespan(),
        checker.checks,
        started,
    );
    (outcome, Some(new))
}

/// Retimes and resamples after a path shortcut. Resampling interpolates
/// between neighbouring states, which can cut corners into collision; in that
/// case the uniform trajectory is kept as is.
pub(crate) fn smooth_after_path(traj: SyncTrajectory, checker: &mut Checker<'_>) -> SyncTrajectory {
    let scene = checker.scene;
    let Ok(resampled) = resample_uniform(&retime(&traj, scene), traj.dt, scene) else {
        return traj;
    };
    if resampled.horizon() > traj.horizon() {
        return traj;
    }
    for step in 0..resampled.horizon() {
        checker.checks += 1;
        if !scene.composite_config_valid(&resampled.composite(step)) {
            return traj;
        }
    }
    resampled
}
