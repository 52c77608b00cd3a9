use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use shortcut_core::bench::corpus::{desk_corpus, disc_fixtures, full_corpus};
use shortcut_core::bench::runner::{initial_trajectory, run_cell, write_anytime};
use shortcut_core::bench::trajfile::{parse_timed, to_uniform};
use shortcut_core::bench::{
    export_trajectory, import_trajectory, load_scenario, run_benchmark, save_scenario, BenchConfig,
    BenchInput, BenchMethod, Scenario,
};
use shortcut_core::strategy::DtsParams;
use shortcut_core::trajectory::{validate, SyncTrajectory};

#[derive(Parser)]
#[command(
    name = "shortcut-bench",
    version,
    about = "Multi-robot trajectory shortcutting benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan an initial trajectory with RRT-Connect.
    Plan {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Planning timeout in seconds.
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Shortcut one trajectory with one method.
    Shortcut {
        #[arg(long)]
        scenario: PathBuf,
        /// Input trajectory; planned with RRT-Connect when omitted.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long, value_parser = parse_method)]
        method: BenchMethod,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Write the anytime samples to this CSV file.
        #[arg(long)]
        anytime: Option<PathBuf>,
    },
    /// Run every (scenario, method, seed) cell and write CSV tables.
    Bench {
        /// Scenario files; combined with --corpus.
        #[arg(long = "scenario", num_args = 1..)]
        scenarios: Vec<PathBuf>,
        /// Built-in scenario set.
        #[arg(long, value_enum)]
        corpus: Option<Corpus>,
        /// Comma-separated method tags.
        #[arg(long, value_delimiter = ',', value_parser = parse_method, default_value = "composite,prioritized,path,tpg,fwd_loop,bwd_loop,rr,dts")]
        methods: Vec<BenchMethod>,
        /// Comma-separated seeds or a range `a..b`.
        #[arg(long, default_value = "0")]
        seeds: String,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value_t = 60.0)]
        plan_timeout: f64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// TOML file with a `[dts]` table overriding selector constants.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a trajectory file against a scenario.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Write the built-in corpus as scenario files, plus the disc fixtures'
    /// trajectories.
    Corpus {
        #[arg(long, value_enum, default_value_t = Corpus::Full)]
        set: Corpus,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct BudgetArgs {
    /// Wall-clock budget in seconds; defaults to the scenario's budget.
    #[arg(long)]
    budget: Option<f64>,
    /// Iteration budget; overrides --budget and makes runs reproducible.
    #[arg(long)]
    iterations: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Corpus {
    Desk,
    Full,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct BenchFile {
    #[serde(default)]
    dts: DtsParams,
}

fn parse_method(s: &str) -> std::result::Result<BenchMethod, String> {
    s.parse().map_err(|e: shortcut_core::Error| e.to_string())
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
        if a >= b {
            bail!("empty seed range {s}");
        }
        return Ok((a..b).collect());
    }
    s.split(',')
        .map(|x| x.trim().parse().with_context(|| format!("bad seed {x:?}")))
        .collect()
}

fn seconds(s: f64, what: &str) -> Result<Duration> {
    Duration::try_from_secs_f64(s).with_context(|| format!("invalid {what} {s}"))
}

fn load(path: &Path, dt: Option<f64>) -> Result<Scenario> {
    let mut s = load_scenario(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(dt) = dt {
        s.dt = dt;
        s.check()?;
    }
    Ok(s)
}

fn apply_budget(cfg: &mut BenchConfig, b: &BudgetArgs) -> Result<()> {
    cfg.iterations = b.iterations;
    cfg.budget = b.budget.map(|s| seconds(s, "budget")).transpose()?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Plan {
            scenario,
            seed,
            timeout,
            dt,
            out,
        } => {
            let s = load(&scenario, dt)?;
            let traj = initial_trajectory(&s.into(), seed, seconds(timeout, "timeout")?)?;
            export_trajectory(&traj, &out)?;
            println!(
                "makespan {:.3} s, {} steps -> {}",
                traj.makespan(),
                traj.horizon(),
                out.display()
            );
            Ok(true)
        }
        Command::Shortcut {
            scenario,
            trajectory,
            method,
            seed,
            budget,
            dt,
            out,
            anytime,
        } => {
            let s = load(&scenario, dt)?;
            let mut cfg = BenchConfig::default();
            apply_budget(&mut cfg, &budget)?;
            let initial = match &trajectory {
                Some(p) => import_trajectory(p, &s.scene, s.dt)
                    .with_context(|| format!("importing {}", p.display()))?,
                None => initial_trajectory(&s.clone().into(), seed, cfg.plan_timeout)?,
            };
            let (traj, log, candidates, valid, _, runtime) =
                run_cell(&s, &initial, method, seed, &cfg)?;
            export_trajectory(&traj, &out)?;
            if let Some(p) = anytime {
                write_anytime(&log, fs::File::create(&p)?)?;
            }
            println!(
                "{method}: makespan {:.3} -> {:.3} s, {valid}/{candidates} valid shortcuts in {runtime:.2} s",
                initial.makespan(),
                traj.makespan()
            );
            Ok(true)
        }
        Command::Bench {
            scenarios,
            corpus,
            methods,
            seeds,
            budget,
            dt,
            plan_timeout,
            workers,
            config,
            out,
        } => {
            let mut list: Vec<Scenario> = match corpus {
                Some(Corpus::Desk) => desk_corpus(),
                Some(Corpus::Full) => full_corpus(),
                None => Vec::new(),
            };
            for p in &scenarios {
                list.push(load(p, None)?);
            }
            if list.is_empty() {
                bail!("no scenarios given; use --scenario or --corpus");
            }
            if let Some(dt) = dt {
                for s in &mut list {
                    s.dt = dt;
                    s.check()?;
                }
            }
            let file: BenchFile = match &config {
                Some(p) => {
                    let text = fs::read_to_string(p)
                        .with_context(|| format!("reading {}", p.display()))?;
                    toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
                }
                None => BenchFile::default(),
            };
            let mut cfg = BenchConfig {
                methods,
                seeds: parse_seeds(&seeds)?,
                plan_timeout: seconds(plan_timeout, "plan timeout")?,
                workers,
                dts: file.dts,
                ..BenchConfig::default()
            };
            apply_budget(&mut cfg, &budget)?;
            fs::create_dir_all(&out)?;
            let inputs: Vec<BenchInput> = list.into_iter().map(BenchInput::from).collect();
            let report = run_benchmark(&inputs, &cfg, Some(&out))?;
            for row in &report.summary {
                println!(
                    "{:<12} runs {:>4}  improvement {:>6.2} ± {:<6.2} %  valid {:>8.1}",
                    row.method.name(),
                    row.runs,
                    row.makespan_improvement.mean,
                    row.makespan_improvement.std,
                    row.valid.mean
                );
            }
            let failures: Vec<_> = report.failures().collect();
            for f in &failures {
                eprintln!(
                    "failed: {} {} seed {}: {}",
                    f.scenario,
                    f.method,
                    f.seed,
                    f.failure.as_deref().unwrap_or_default()
                );
            }
            println!("wrote {}", out.display());
            if !failures.is_empty() {
                eprintln!(
                    "{} of {} cells failed",
                    failures.len(),
                    report.records.len()
                );
            }
            Ok(failures.is_empty())
        }
        Command::Validate {
            scenario,
            trajectory,
            dt,
        } => {
            let s = load(&scenario, dt)?;
            let text = fs::read_to_string(&trajectory)
                .with_context(|| format!("reading {}", trajectory.display()))?;
            let timed = parse_timed(&text, &trajectory.display().to_string())?;
            let on_grid = timed
                .times
                .iter()
                .enumerate()
                .all(|(n, t)| (t - n as f64 * s.dt).abs() <= 1e-9);
            let traj = if on_grid {
                SyncTrajectory::new(s.dt, timed.states)?
            } else {
                println!(
                    "times are not on the {} s grid; checking the retimed trajectory",
                    s.dt
                );
                match to_uniform(timed, s.dt, &s.scene) {
                    Ok(t) => t,
                    Err(shortcut_core::Error::InvalidTrajectory(_)) => {
                        eprintln!("retimed trajectory is invalid");
                        return Ok(false);
                    }
                    Err(e) => return Err(e.into()),
                }
            };
            let violations = validate(&traj, &s.scene);
            for v in &violations {
                eprintln!("{v}");
            }
            let mut ok = violations.is_empty();
            if !ok {
                eprintln!("{} violation(s)", violations.len());
            }
            if traj.starts() != s.starts || traj.goals() != s.goals {
                eprintln!("trajectory endpoints differ from the scenario's starts and goals");
                ok = false;
            }
            if ok {
                println!(
                    "valid: makespan {:.3} s, path length {:.3}",
                    traj.makespan(),
                    traj.path_length()
                );
            }
            Ok(ok)
        }
        Command::Corpus { set, out } => {
            fs::create_dir_all(&out)?;
            let list = match set {
                Corpus::Desk => desk_corpus(),
                Corpus::Full => full_corpus(),
            };
            for s in &list {
                save_scenario(s, out.join(format!("{}.toml", s.name)))?;
            }
            for f in disc_fixtures() {
                export_trajectory(
                    &f.trajectory,
                    out.join(format!("{}.traj.toml", f.scenario.name)),
                )?;
            }
            println!("wrote {} scenarios to {}", list.len(), out.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
