use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::DEFAULT_DT;
use crate::world::{Config, Obstacle, Rect, RobotKind, RobotModel, Scene};

pub const SCENARIO_VERSION: u32 = 1;

/// A multi-robot problem instance: scene, one start and goal per robot.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub scene: Scene,
    pub starts: Vec<Config>,
    pub goals: Vec<Config>,
    pub seed: u64,
    /// Shortcutting budget in seconds; `None` picks a default from the scene.
    pub budget: Option<f64>,
    pub dt: f64,
}

impl Scenario {
    pub fn new(
        name: impl Into<String>,
        scene: Scene,
        starts: Vec<Config>,
        goals: Vec<Config>,
    ) -> Self {
        Scenario {
            name: name.into(),
            scene,
            starts,
            goals,
            seed: 0,
            budget: None,
            dt: DEFAULT_DT,
        }
    }

    pub fn num_robots(&self) -> usize {
        self.scene.num_robots()
    }

    /// Explicit budget, or 5 s for disc-only scenes, 10 s for two robots and
    /// 60 s for larger scenes with arms.
    pub fn budget(&self) -> Duration {
        Duration::from_secs_f64(self.budget.unwrap_or_else(|| default_budget(&self.scene)))
    }

    /// Structural and semantic validation with robot-indexed messages.
    pub fn check(&self) -> Result<()> {
        self.scene
            .check()
            .map_err(|e| Error::Semantic(e.to_string()))?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Semantic(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if let Some(b) = self.budget {
            if !(b >= 0.0 && b.is_finite()) {
                return Err(Error::Semantic(format!(
                    "budget must be non-negative, got {b}"
                )));
            }
        }
        let n = self.num_robots();
        if self.starts.len() != n || self.goals.len() != n {
            return Err(Error::Semantic(format!(
                "{n} robots but {} starts and {} goals",
                self.starts.len(),
                self.goals.len()
            )));
        }
        for (label, configs) in [("start", &self.starts), ("goal", &self.goals)] {
            for (i, c) in configs.iter().enumerate() {
                let dof = self.scene.robots[i].dof();
                if c.dof() != dof {
                    return Err(Error::Semantic(format!(
                        "robot {i}: {label} has {} values, robot has {dof} degrees of freedom",
                        c.dof()
                    )));
                }
                if !self.scene.within_limits(i, c) {
                    return Err(Error::Semantic(format!(
                        "robot {i}: {label} violates the robot's limits"
                    )));
                }
                if self.scene.robot_hits_obstacle(i, c) {
                    return Err(Error::Semantic(format!(
                        "robot {i}: {label} collides with an obstacle"
                    )));
                }
            }
            for i in 0..n {
                for j in i + 1..n {
                    if self.scene.robots_collide(i, &configs[i], j, &configs[j]) {
                        return Err(Error::Semantic(format!(
                            "robots {i} and {j}: {label} configurations collide"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn default_budget(scene: &Scene) -> f64 {
    let arms = scene
        .robots
        .iter()
        .any(|r| matches!(r.kind, RobotKind::PlanarArm { .. }));
    match (arms, scene.num_robots()) {
        (false, _) => 5.0,
        (true, 0..=2) => 10.0,
        (true, _) => 60.0,
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    version: u32,
    name: String,
    #[serde(default)]
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    budget: Option<f64>,
    #[serde(default = "default_dt")]
    dt: f64,
    #[serde(rename = "robot", default)]
    robots: Vec<RobotSpec>,
    #[serde(rename = "obstacle", default)]
    obstacles: Vec<ObstacleSpec>,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RobotSpec {
    Disc {
        v_max: f64,
        radius: f64,
        bounds: [[f64; 2]; 2],
        start: Vec<f64>,
        goal: Vec<f64>,
    },
    Arm {
        v_max: f64,
        base: [f64; 2],
        links: Vec<f64>,
        link_radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        joint_limits: Option<Vec<[f64; 2]>>,
        start: Vec<f64>,
        goal: Vec<f64>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ObstacleSpec {
    Circle { center: [f64; 2], radius: f64 },
    Rect { min: [f64; 2], max: [f64; 2] },
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses scenario text; `origin` only labels error messages.
pub fn parse_scenario(text: &str, origin: &str) -> Result<Scenario> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_string(),
        line: e.span().map_or(0, |s| line_of(text, s.start)),
        msg: e.message().trim().to_string(),
    })?;
    if file.version != SCENARIO_VERSION {
        return Err(Error::Parse {
            path: origin.to_string(),
            line: 1,
            msg: format!("unsupported scenario version {}", file.version),
        });
    }
    let mut robots = Vec::new();
    let mut starts = Vec::new();
    let mut goals = Vec::new();
    for spec in file.robots {
        match spec {
            RobotSpec::Disc {
                v_max,
                radius,
                bounds,
                start,
                goal,
            } => {
                robots.push(RobotModel::disc(
                    radius,
                    Rect::new(bounds[0], bounds[1]),
                    v_max,
                ));
                starts.push(Config::new(start));
                goals.push(Config::new(goal));
            }
            RobotSpec::Arm {
                v_max,
                base,
                links,
                link_radius,
                joint_limits,
                start,
                goal,
            } => {
                let mut model = RobotModel::planar_arm(base, links, link_radius, v_max);
                if let Some(limits) = joint_limits {
                    model = model.with_joint_limits(limits);
                }
                robots.push(model);
                starts.push(Config::new(start));
                goals.push(Config::new(goal));
            }
        }
    }
    let obstacles = file
        .obstacles
        .into_iter()
        .map(|o| match o {
            ObstacleSpec::Circle { center, radius } => Obstacle::Circle { center, radius },
            ObstacleSpec::Rect { min, max } => Obstacle::Rect(Rect::new(min, max)),
        })
        .collect();
    let scenario = Scenario {
        name: file.name,
        scene: Scene::new(robots, obstacles),
        starts,
        goals,
        seed: file.seed,
        budget: file.budget,
        dt: file.dt,
    };
    scenario.check().map_err(|e| match e {
        Error::Semantic(msg) => Error::Semantic(format!("{origin}: {msg}")),
        other => other,
    })?;
    Ok(scenario)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text, &path.display().to_string())
}

pub fn scenario_to_string(scenario: &Scenario) -> Result<String> {
    let robots = scenario
        .scene
        .robots
        .iter()
        .zip(scenario.starts.iter().zip(&scenario.goals))
        .map(|(r, (s, g))| match &r.kind {
            RobotKind::Disc { radius, bounds } => RobotSpec::Disc {
                v_max: r.v_max,
                radius: *radius,
                bounds: [bounds.min, bounds.max],
                start: s.values().to_vec(),
                goal: g.values().to_vec(),
            },
            RobotKind::PlanarArm {
                base,
                link_lengths,
                link_radius,
                joint_limits,
            } => RobotSpec::Arm {
                v_max: r.v_max,
                base: *base,
                links: link_lengths.clone(),
                link_radius: *link_radius,
                joint_limits: Some(joint_limits.clone()),
                start: s.values().to_vec(),
                goal: g.values().to_vec(),
            },
        })
        .collect();
    let obstacles = scenario
        .scene
        .obstacles
        .iter()
        .map(|o| match o {
            Obstacle::Circle { center, radius } => ObstacleSpec::Circle {
                center: *center,
                radius: *radius,
            },
            Obstacle::Rect(r) => ObstacleSpec::Rect {
                min: r.min,
                max: r.max,
            },
        })
        .collect();
    let file = ScenarioFile {
        version: SCENARIO_VERSION,
        name: scenario.name.clone(),
        seed: scenario.seed,
        budget: scenario.budget,
        dt: scenario.dt,
        robots,
        obstacles,
    };
    toml::to_string(&file).map_err(|e| Error::Internal(format!("scenario serialization: {e}")))
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, scenario_to_string(scenario)?)?;
    Ok(())
}
