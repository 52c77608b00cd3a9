use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{
    resample_uniform, retime, validate, NonUniformTrajectory, SyncTrajectory, VELOCITY_SLACK,
};
use crate::world::{Config, Scene};

pub const TRAJECTORY_FORMAT: &str = "shortcut-trajectory";
pub const TRAJECTORY_VERSION: u32 = 1;
const UNIFORM_TOL: f64 = 1e-9;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryFile {
    format: String,
    version: u32,
    /// One timestamp per step; omitted means `n * dt`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dt: Option<f64>,
    #[serde(rename = "robot")]
    robots: Vec<RobotStates>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotStates {
    configs: Vec<Vec<f64>>,
}

pub fn trajectory_to_string(traj: &SyncTrajectory) -> Result<String> {
    let file = TrajectoryFile {
        format: TRAJECTORY_FORMAT.into(),
        version: TRAJECTORY_VERSION,
        times: None,
        dt: Some(traj.dt),
        robots: traj
            .states()
            .iter()
            .map(|s| RobotStates {
                configs: s.iter().map(|c| c.values().to_vec()).collect(),
            })
            .collect(),
    };
    toml::to_string(&file).map_err(|e| Error::Internal(format!("trajectory serialization: {e}")))
}

pub fn export_trajectory(traj: &SyncTrajectory, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, trajectory_to_string(traj)?)?;
    Ok(())
}

/// Timed configuration sequences exactly as stored in the file.
pub fn parse_timed(text: &str, origin: &str) -> Result<NonUniformTrajectory> {
    let parse_err = |line, msg: String| Error::Parse {
        path: origin.to_string(),
        line,
        msg,
    };
    let file: TrajectoryFile = toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(0, |s| {
            text[..s.start.min(text.len())].matches('\n').count() + 1
        });
        parse_err(line, e.message().trim().to_string())
    })?;
    if file.format != TRAJECTORY_FORMAT || file.version != TRAJECTORY_VERSION {
        return Err(parse_err(
            1,
            format!(
                "unsupported trajectory format {} version {}",
                file.format, file.version
            ),
        ));
    }
    let states: Vec<Vec<Config>> = file
        .robots
        .into_iter()
        .map(|r| r.configs.into_iter().map(Config::new).collect())
        .collect();
    let steps = states.first().map_or(0, Vec::len);
    let times = match (file.times, file.dt) {
        (Some(t), _) => t,
        (None, Some(dt)) => (0..steps).map(|n| n as f64 * dt).collect(),
        (None, None) => return Err(parse_err(1, "either `times` or `dt` is required".into())),
    };
    NonUniformTrajectory::new(times, states).map_err(|e| parse_err(1, e.to_string()))
}

/// Brings a timed trajectory onto the uniform grid `dt`. Trajectories that
/// already use that grid and respect every speed limit are kept verbatim;
/// anything else is retimed and resampled. The result must validate.
pub fn to_uniform(timed: NonUniformTrajectory, dt: f64, scene: &Scene) -> Result<SyncTrajectory> {
    if timed.states.len() != scene.num_robots() {
        return Err(Error::InvalidArgument(format!(
            "trajectory has {} robots, scene has {}",
            timed.states.len(),
            scene.num_robots()
        )));
    }
    for (i, s) in timed.states.iter().enumerate() {
        if let Some(c) = s.iter().find(|c| c.dof() != scene.robots[i].dof()) {
            return Err(Error::DimensionMismatch {
                expected: scene.robots[i].dof(),
                got: c.dof(),
            });
        }
    }
    let on_grid = timed
        .times
        .iter()
        .enumerate()
        .all(|(n, t)| (t - n as f64 * dt).abs() <= UNIFORM_TOL);
    let uniform = SyncTrajectory::new(dt, timed.states.clone())?;
    let within_speed = uniform.states().iter().enumerate().all(|(i, s)| {
        let limit = dt * scene.robots[i].v_max + VELOCITY_SLACK;
        s.windows(2)
            .all(|w| crate::trajectory::l1_dist(&w[0], &w[1]) <= limit)
    });
    let traj = if on_grid && within_speed {
        uniform
    } else {
        resample_uniform(&retime(&uniform, scene), dt, scene)?
    };
    let violations = validate(&traj, scene);
    if violations.is_empty() {
        Ok(traj)
    } else {
        Err(Error::InvalidTrajectory(violations))
    }
}

pub fn import_trajectory(path: impl AsRef<Path>, scene: &Scene, dt: f64) -> Result<SyncTrajectory> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    to_uniform(parse_timed(&text, &path.display().to_string())?, dt, scene)
}
