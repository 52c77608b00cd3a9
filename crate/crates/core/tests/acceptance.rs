//! Acceptance suite: one pass/fail line per criterion, nonzero exit on any
//! failure.
//!
//! `ACCEPTANCE_ECHO_SCALE` multiplies the benchmark-echo time budgets; values
//! other than 1 are for local iteration and are reported in the output.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shortcut_core::bench::corpus::{
    desk_corpus, detour_lanes, disc_fixtures, early_arrival, full_corpus, timed_crossing,
};
use shortcut_core::bench::runner::{write_anytime, write_records};
use shortcut_core::bench::{run_benchmark, BenchConfig, BenchInput, BenchMethod, BenchRecord};
use shortcut_core::shortcut::{
    attempt_composite, attempt_path, attempt_prioritized, Method, Objective, RejectReason,
    ShortcutOutcome,
};
use shortcut_core::strategy::{dts_select, dts_update, DtsState, STRATEGIES};
use shortcut_core::tpg::{attempt_tpg_shortcut, build_tpg, tpg_schedule, NodeId};
use shortcut_core::trajectory::{from_waypoints, retime, validate, SyncTrajectory};
use shortcut_core::world::{Config, Rect, RobotModel, Scene};

const RETIME_TOL: f64 = 1e-9;
const DTS_TOL: f64 = 1e-9;
/// Frequency band for 10^5 Thompson draws (about six standard deviations).
const FREQ_BAND: f64 = 0.01;
const ECHO_SEEDS: u64 = 5;
const ECHO_DOMINANCE_SLACK: f64 = 0.02;
const SAFETY_ITERATIONS: u64 = 4000;
const DETERMINISM_ITERATIONS: u64 = 1500;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn c(x: f64, y: f64) -> Config {
    Config::new(vec![x, y])
}

fn safety_inputs() -> Vec<BenchInput> {
    let mut inputs: Vec<BenchInput> = full_corpus().into_iter().map(BenchInput::from).collect();
    inputs.extend(disc_fixtures().into_iter().map(|f| BenchInput {
        scenario: f.scenario,
        initial: Some(f.trajectory),
    }));
    inputs
}

fn safety_records() -> Vec<BenchRecord> {
    let cfg = BenchConfig {
        seeds: vec![0, 1],
        iterations: Some(SAFETY_ITERATIONS),
        ..BenchConfig::default()
    };
    run_benchmark(&safety_inputs(), &cfg, None)
        .expect("benchmark runs")
        .records
}

fn safety(records: &[BenchRecord]) -> Verdict {
    let inputs = safety_inputs();
    let scene_of = |name: &str| {
        &inputs
            .iter()
            .find(|i| i.scenario.name == name)
            .unwrap()
            .scenario
            .scene
    };
    let mut bad = Vec::new();
    for r in records {
        match &r.trajectory {
            Some(t) if r.succeeded() => {
                let v = validate(t, scene_of(&r.scenario));
                if !v.is_empty() {
                    bad.push(format!("{} {} {}: {}", r.scenario, r.method, r.seed, v[0]));
                }
            }
            _ => bad.push(format!(
                "{} {} {}: {}",
                r.scenario,
                r.method,
                r.seed,
                r.failure.as_deref().unwrap_or("no output")
            )),
        }
    }
    verdict(
        records.len() >= 200 && bad.is_empty(),
        format!(
            "{} runs, {} invalid or failed {:?}",
            records.len(),
            bad.len(),
            bad.first()
        ),
    )
}

fn monotonicity(records: &[BenchRecord]) -> Verdict {
    let mut bad = Vec::new();
    let mut accepts = 0usize;
    for r in records {
        let tag = format!("{} {} {}", r.scenario, r.method, r.seed);
        if r.log
            .samples
            .windows(2)
            .any(|w| w[1].makespan > w[0].makespan)
        {
            bad.push(format!("{tag}: anytime curve rises"));
        }
        for e in &r.log.accepts {
            accepts += 1;
            let improved = match e.objective {
                Objective::Steps { before, after } => after < before,
                Objective::Length { before, after } => after < before,
            };
            if !improved || e.makespan_after > e.makespan_before {
                bad.push(format!("{tag}: accept {e:?}"));
            }
        }
        if let (Some(b), Some(a)) = (r.before, r.after) {
            if a.makespan > b.makespan {
                bad.push(format!("{tag}: makespan grew"));
            }
        }
    }
    verdict(
        bad.is_empty() && accepts > 0,
        format!(
            "{} logs, {accepts} accepted shortcuts, {} exceptions {:?}",
            records.len(),
            bad.len(),
            bad.first()
        ),
    )
}

fn disc_fixture_discrimination() -> Verdict {
    let mut notes = Vec::new();
    let a = detour_lanes();
    let s = &a.scenario.scene;
    let mut pass = attempt_composite(&a.trajectory, a.m, a.n, s).0.accepted;
    notes.push(format!("a: composite ({},{}) {}", a.m, a.n, pass));

    let b = early_arrival();
    let s = &b.scenario.scene;
    let p = attempt_prioritized(&b.trajectory, b.robot, b.m, b.n, s).0;
    let comp = attempt_composite(&b.trajectory, b.m, b.n, s).0;
    let path = attempt_path(&b.trajectory, b.robot, b.m, b.n, s).0;
    let ok_b = p.accepted && !comp.accepted && !path.accepted;
    notes.push(format!(
        "b: prioritized {} composite {:?} path {:?}",
        p.accepted, comp.reject_reason, path.reject_reason
    ));

    let cfx = timed_crossing();
    let s = &cfx.scenario.scene;
    let path = attempt_path(&cfx.trajectory, cfx.robot, cfx.m, cfx.n, s).0;
    let comp = attempt_composite(&cfx.trajectory, cfx.m, cfx.n, s).0;
    let p = attempt_prioritized(&cfx.trajectory, cfx.robot, cfx.m, cfx.n, s).0;
    let ok_c = path.accepted && !comp.accepted && !p.accepted;
    notes.push(format!(
        "c: path {} composite {:?} prioritized {:?}",
        path.accepted, comp.reject_reason, p.reject_reason
    ));
    pass &= ok_b && ok_c;
    verdict(pass, notes.join("; "))
}

/// Independent `t_n = t_{n-1} + max_i |C^i_n - C^i_{n-1}|_1 / v^i`, skipping
/// intervals in which nobody moves.
fn oracle_times(states: &[Vec<Config>], v: &[f64]) -> Vec<f64> {
    let h = states[0].len();
    let mut times = vec![0.0];
    for n in 1..h {
        let mut step: f64 = 0.0;
        for (i, s) in states.iter().enumerate() {
            let d: f64 = s[n]
                .values()
                .iter()
                .zip(s[n - 1].values())
                .map(|(a, b)| (a - b).abs())
                .sum();
            step = step.max(d / v[i]);
        }
        if step > 0.0 {
            times.push(times[times.len() - 1] + step);
        }
    }
    times
}

fn retime_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut mismatched = 0;
    for _ in 0..1000 {
        let robots = rng.random_range(1..=4);
        let mut models = Vec::new();
        for _ in 0..robots {
            let v = rng.random_range(0.3..3.0);
            models.push(if rng.random_bool(0.5) {
                RobotModel::disc(0.05, Rect::new([-10.0, -10.0], [10.0, 10.0]), v)
            } else {
                RobotModel::planar_arm([0.0, 0.0], vec![0.5, 0.4], 0.02, v)
            });
        }
        let scene = Scene::new(models, vec![]);
        let h = rng.random_range(2..40);
        let states: Vec<Vec<Config>> = (0..robots)
            .map(|_| {
                let mut s = vec![c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))];
                for _ in 1..h {
                    let last = s.last().unwrap().values().to_vec();
                    let next = if rng.random_bool(0.3) {
                        last.clone()
                    } else {
                        vec![
                            last[0] + rng.random_range(-0.3..0.3),
                            last[1] + rng.random_range(-0.3..0.3),
                        ]
                    };
                    s.push(Config::new(next));
                }
                s
            })
            .collect();
        let traj = SyncTrajectory::new(0.1, states.clone()).unwrap();
        let got = retime(&traj, &scene);
        let v: Vec<f64> = scene.robots.iter().map(|r| r.v_max).collect();
        let want = oracle_times(&states, &v);
        if got.times.len() != want.len() {
            mismatched += 1;
            continue;
        }
        for (a, b) in got.times.iter().zip(&want) {
            worst = worst.max((a - b).abs());
        }
    }
    verdict(
        mismatched == 0 && worst <= RETIME_TOL,
        format!("1000 trajectories, {mismatched} length mismatches, max deviation {worst:.2e} (tol {RETIME_TOL:e})"),
    )
}

fn brute_force_edges(
    traj: &SyncTrajectory,
    scene: &Scene,
) -> std::collections::BTreeSet<(NodeId, NodeId)> {
    let arrival = traj.last_motion_steps();
    let mut out = std::collections::BTreeSet::new();
    for i in 0..traj.num_robots() {
        for j in 0..traj.num_robots() {
            if i == j {
                continue;
            }
            for m in 0..=arrival[i] {
                for n in m + 1..=arrival[j] {
                    if scene.robots_collide(i, traj.config(i, m), j, traj.config(j, n)) {
                        out.insert((NodeId::new(i, m + 1), NodeId::new(j, n)));
                    }
                }
            }
        }
    }
    out
}

fn tpg_fixture(seed: u64) -> (Scene, SyncTrajectory) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let robots = rng.random_range(2..=4);
    let scene = Scene::new(
        vec![RobotModel::disc(0.15, Rect::new([-2.0, -2.0], [2.0, 2.0]), 1.0); robots],
        vec![],
    );
    loop {
        let wps: Vec<Vec<Config>> = (0..robots)
            .map(|_| {
                (0..3)
                    .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect()
            })
            .collect();
        let traj = from_waypoints(&wps, 0.1, &scene).unwrap();
        if validate(&traj, &scene).is_empty() {
            return (scene, traj);
        }
    }
}

fn tpg_soundness() -> Verdict {
    let mut edge_mismatch = Vec::new();
    let mut bad_schedules = 0;
    let mut accepted = 0;
    let mut edges = 0;
    for seed in 0..50 {
        let (scene, traj) = tpg_fixture(seed);
        let mut g = build_tpg(&traj, &scene).unwrap();
        let got: std::collections::BTreeSet<_> = g.type2_edges().collect();
        edges += got.len();
        if got != brute_force_edges(&traj, &scene) {
            edge_mismatch.push(seed);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..300 {
            let i = rng.random_range(0..g.num_robots());
            let h = g.num_nodes(i);
            if h < 3 {
                continue;
            }
            let (a, b) = (rng.random_range(0..h), rng.random_range(0..h));
            let (m, n) = (a.min(b), a.max(b));
            if n < m + 2 {
                continue;
            }
            let (out, next) = attempt_tpg_shortcut(&g, i, m, n, &scene);
            if let (true, Some(next)) = (out.accepted, next) {
                accepted += 1;
                let ok = tpg_schedule(&next)
                    .map(|t| validate(&t, &scene).is_empty())
                    .unwrap_or(false);
                if !ok {
                    bad_schedules += 1;
                }
                g = next;
            }
        }
    }
    verdict(
        edge_mismatch.is_empty() && bad_schedules == 0 && accepted > 0,
        format!(
            "50 fixtures, {edges} edges, mismatched seeds {edge_mismatch:?}; {accepted} accepted shortcuts, {bad_schedules} invalid schedules"
        ),
    )
}

fn outcome(accepted: bool, d: f64, t: f64) -> ShortcutOutcome {
    ShortcutOutcome {
        accepted,
        reject_reason: if accepted {
            RejectReason::None
        } else {
            RejectReason::Collision
        },
        time_spent: t,
        rel_length_reduction: d,
        makespan_after: 0.0,
        checks_performed: 0,
    }
}

fn frequencies(state: &DtsState, seed: u64) -> [f64; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = [0usize; 3];
    for _ in 0..100_000 {
        let m = dts_select(state, &mut rng);
        counts[STRATEGIES.iter().position(|&s| s == m).unwrap()] += 1;
    }
    counts.map(|k| k as f64 / 100_000.0)
}

fn dts_mechanics() -> Verdict {
    let mut notes = Vec::new();
    let mut s = DtsState::default();
    dts_update(&mut s, Method::Composite, &outcome(true, 0.05, 0.005));
    let a65 = (s.alpha[0] - 65.0).abs() <= DTS_TOL;
    dts_update(&mut s, Method::Prioritized, &outcome(false, 0.0, 0.0));
    let b11 = (s.beta[1] - 1.1).abs() <= DTS_TOL;
    let mut r = DtsState::default();
    r.alpha[2] = 900.0;
    r.beta[2] = 199.9;
    dts_update(&mut r, Method::Path, &outcome(false, 0.0, 0.0));
    let rescale = (r.alpha[2] - 9000.0 / 11.0).abs() <= DTS_TOL
        && (r.beta[2] - 2000.0 / 11.0).abs() <= DTS_TOL
        && (r.alpha[2] + r.beta[2] - 1000.0).abs() <= DTS_TOL;
    notes.push(format!(
        "alpha {:.6} beta {:.6} rescaled {:.4}/{:.4}",
        s.alpha[0], s.beta[1], r.alpha[2], r.beta[2]
    ));

    let mut conc = DtsState::default();
    conc.alpha = [1e12, 1.0, 1.0];
    conc.beta = [1.0, 1e12, 1e12];
    let f_conc = frequencies(&conc, 1)[0];
    let mut flat = DtsState::default();
    flat.alpha = [1.0; 3];
    let f_flat = frequencies(&flat, 2);
    // P(X > max(U1, U2)) for X ~ Beta(10, 1): integral of 10 x^9 * x^2 = 10/12.
    let f_prior = frequencies(&DtsState::default(), 3)[0];
    let flat_ok = f_flat.iter().all(|f| (f - 1.0 / 3.0).abs() <= FREQ_BAND);
    let prior_ok = (f_prior - 10.0 / 12.0).abs() <= FREQ_BAND;
    notes.push(format!(
        "concentrated {f_conc:.5}, flat {f_flat:.4?}, priors {f_prior:.4} vs 0.8333"
    ));
    verdict(
        a65 && b11 && rescale && f_conc > 0.999 && flat_ok && prior_ok,
        notes.join("; "),
    )
}

fn echo_scale() -> f64 {
    std::env::var("ACCEPTANCE_ECHO_SCALE")
        .ok()
        .and_then(|s| s.parse().ok())
        .filter(|s: &f64| *s > 0.0)
        .unwrap_or(1.0)
}

fn echo() -> Vec<(String, Verdict)> {
    let scale = echo_scale();
    let corpus = desk_corpus();
    let cfg = BenchConfig {
        seeds: (0..ECHO_SEEDS).collect(),
        ..BenchConfig::default()
    };
    let inputs: Vec<BenchInput> = corpus
        .into_iter()
        .map(|mut s| {
            s.budget = Some(s.budget().as_secs_f64() * scale);
            s.into()
        })
        .collect();
    let started = Instant::now();
    let records = run_benchmark(&inputs, &cfg, None)
        .expect("benchmark runs")
        .records;
    let elapsed = started.elapsed();
    let failures = records.iter().filter(|r| !r.succeeded()).count();

    let mut by: BTreeMap<BenchMethod, Vec<&BenchRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.succeeded()) {
        by.entry(r.method).or_default().push(r);
    }
    let mean = |xs: Vec<f64>| xs.iter().sum::<f64>() / xs.len().max(1) as f64;
    let improvement = |m: BenchMethod| {
        mean(
            by[&m]
                .iter()
                .filter_map(|r| r.makespan_improvement())
                .collect(),
        )
    };
    let makespan =
        |m: BenchMethod| mean(by[&m].iter().map(|r| r.after.unwrap().makespan).collect());
    let half_time = |m: BenchMethod| {
        mean(
            by[&m]
                .iter()
                .filter_map(|r| r.time_to_fraction(0.5))
                .collect(),
        )
    };

    let context = format!(
        "{} scenarios x {ECHO_SEEDS} seeds, {} runs, {failures} failures, {:.0} s, budget scale {scale}",
        inputs.len(),
        records.len(),
        elapsed.as_secs_f64()
    );
    let mut out = Vec::new();
    let all_present = BenchMethod::ALL.iter().all(|m| by.contains_key(m)) && failures == 0;
    if !all_present {
        out.push(("echo".to_string(), verdict(false, context)));
        return out;
    }

    let imp: Vec<String> = BenchMethod::ALL
        .iter()
        .map(|&m| format!("{m} {:.2}%", improvement(m)))
        .collect();
    out.push((
        "echo (i) positive mean improvement".into(),
        verdict(
            BenchMethod::ALL.iter().all(|&m| improvement(m) > 0.0),
            format!("{}; {context}", imp.join(", ")),
        ),
    ));
    let (p, f, b) = (
        makespan(BenchMethod::Path),
        makespan(BenchMethod::FwdLoop),
        makespan(BenchMethod::BwdLoop),
    );
    out.push((
        "echo (ii) randomized endpoints vs loops".into(),
        verdict(
            p <= f && p <= b,
            format!("mean makespan path {p:.4} s, fwd_loop {f:.4} s, bwd_loop {b:.4} s"),
        ),
    ));
    let singles = [
        BenchMethod::Composite,
        BenchMethod::Prioritized,
        BenchMethod::Path,
    ];
    let best = singles
        .iter()
        .map(|&m| makespan(m))
        .fold(f64::INFINITY, f64::min);
    let (rr, dts) = (makespan(BenchMethod::Rr), makespan(BenchMethod::Dts));
    let limit = best * (1.0 + ECHO_DOMINANCE_SLACK);
    out.push((
        "echo (iii) selectors vs best single".into(),
        verdict(
            rr <= limit && dts <= limit,
            format!(
                "rr {rr:.4} s, dts {dts:.4} s, best single {best:.4} s (limit {limit:.4}), tpg {:.4} s",
                makespan(BenchMethod::Tpg)
            ),
        ),
    ));
    let (tc, tp) = (
        half_time(BenchMethod::Composite),
        half_time(BenchMethod::Path),
    );
    out.push((
        "echo (iv) composite reaches half its gain first".into(),
        verdict(
            tc < tp,
            format!("mean time to 50% of final gain: composite {tc:.6} s, path {tp:.6} s"),
        ),
    ));
    out
}

fn strip_runtime(csv: &[u8]) -> String {
    String::from_utf8_lossy(csv)
        .lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

fn anytime_body(r: &BenchRecord) -> String {
    let mut buf = Vec::new();
    write_anytime(&r.log, &mut buf).unwrap();
    // Drop the wall-clock column.
    String::from_utf8(buf)
        .unwrap()
        .lines()
        .map(|l| l.split_once(',').map_or(l, |(_, rest)| rest).to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

fn determinism() -> Verdict {
    let inputs: Vec<BenchInput> = desk_corpus().into_iter().map(BenchInput::from).collect();
    let cfg = BenchConfig {
        seeds: vec![3, 11],
        iterations: Some(DETERMINISM_ITERATIONS),
        ..BenchConfig::default()
    };
    let run = || run_benchmark(&inputs, &cfg, None).unwrap().records;
    let (a, b) = (run(), run());
    let csv = |rs: &[BenchRecord]| {
        let mut buf = Vec::new();
        write_records(rs, &mut buf).unwrap();
        strip_runtime(&buf)
    };
    let same_csv = csv(&a) == csv(&b);
    let same_traj = a
        .iter()
        .zip(&b)
        .all(|(x, y)| x.trajectory == y.trajectory && x.trajectory.is_some());
    let same_curves = a
        .iter()
        .zip(&b)
        .all(|(x, y)| anytime_body(x) == anytime_body(y));
    verdict(
        same_csv && same_traj && same_curves && a.len() == b.len(),
        format!(
            "{} cells twice: records {same_csv}, trajectories {same_traj}, anytime curves {same_curves}",
            a.len()
        ),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(String, Verdict)> = Vec::new();
    let mut report = |name: &str, v: Verdict, t: Duration| {
        println!(
            "{} {name}: {} [{:.1} s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            t.as_secs_f64()
        );
        results.push((name.to_string(), v));
    };
    let timed = |f: &dyn Fn() -> Verdict| {
        let t = Instant::now();
        let v = f();
        (v, t.elapsed())
    };

    let t = Instant::now();
    let records = safety_records();
    let run_time = t.elapsed();
    let (v, dt) = timed(&|| safety(&records));
    report("safety", v, run_time + dt);
    let (v, dt) = timed(&|| monotonicity(&records));
    report("monotonicity", v, dt);
    let (v, dt) = timed(&disc_fixture_discrimination);
    report("disc fixture discrimination", v, dt);
    let (v, dt) = timed(&retime_oracle);
    report("retiming oracle", v, dt);
    let (v, dt) = timed(&tpg_soundness);
    report("tpg soundness", v, dt);
    let (v, dt) = timed(&dts_mechanics);
    report("dts mechanics", v, dt);
    let (v, dt) = timed(&determinism);
    report("determinism", v, dt);
    let t = Instant::now();
    let echo_results = echo();
    let dt = t.elapsed();
    for (name, v) in echo_results {
        report(&name, v, dt);
    }

    let failed: Vec<_> = results
        .iter()
        .filter(|(_, v)| !v.pass)
        .map(|(n, _)| n.as_str())
        .collect();
    println!(
        "{} of {} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed: {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
