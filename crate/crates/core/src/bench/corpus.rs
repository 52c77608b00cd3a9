//! Built-in scenarios: the three disc fixtures with designated trajectories
//! and candidates, and a generated corpus of disc and planar-arm scenes.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::scenario::Scenario;
use crate::trajectory::{from_waypoints, SyncTrajectory, DEFAULT_DT};
use crate::world::{Config, Obstacle, Rect, RobotModel, Scene};

/// A scenario with a hand-built trajectory and one designated shortcut.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub scenario: Scenario,
    pub trajectory: SyncTrajectory,
    pub robot: usize,
    pub m: usize,
    pub n: usize,
}

fn c(x: f64, y: f64) -> Config {
    Config::new(vec![x, y])
}

fn fixture(
    name: &str,
    scene: Scene,
    waypoints: Vec<Vec<Config>>,
    robot: usize,
    m: usize,
    n: usize,
) -> Fixture {
    let trajectory =
        from_waypoints(&waypoints, DEFAULT_DT, &scene).expect("fixture waypoints are well formed");
    let mut scenario = Scenario::new(name, scene, trajectory.starts(), trajectory.goals());
    scenario.budget = Some(5.0);
    Fixture {
        scenario,
        trajectory,
        robot,
        m,
        n,
    }
}

fn fixture_disc() -> RobotModel {
    RobotModel::disc(0.1, Rect::new([-2.0, -2.0], [4.0, 4.0]), 1.0)
}

/// Three discs in separate lanes, each taking the same rectangular detour.
/// Composite shortcutting removes all detours in one step.
pub fn detour_lanes() -> Fixture {
    let lane = |y: f64| vec![c(0.0, y), c(0.0, y + 0.5), c(2.0, y + 0.5), c(2.0, y)];
    let scene = Scene::new(vec![fixture_disc(); 3], vec![]);
    fixture(
        "detour_lanes",
        scene,
        vec![lane(0.0), lane(1.5), lane(3.0)],
        0,
        0,
        30,
    )
}

/// Robot 0 detours over the lane of robot 1, which moves straight at full
/// speed. Only the prioritized shortcut of robot 0 over the whole span works:
/// it passes the crossing early, while the slowed path shortcut meets robot 1.
pub fn early_arrival() -> Fixture {
    let scene = Scene::new(vec![fixture_disc(); 2], vec![]);
    let r0 = vec![c(0.0, 0.0), c(0.0, 0.5), c(2.0, 0.5), c(2.0, 0.0)];
    let r1 = vec![c(1.0, -1.3), c(1.0, 1.7)];
    fixture("early_arrival", scene, vec![r0, r1], 0, 0, 30)
}

/// Robot 0 makes an early sideways detour before crossing the lane of the
/// other robot. Shortcutting the detour with a time shift brings robot 0 to
/// the crossing while robot 1 is there; the path shortcut keeps the timing and succeeds.
pub fn timed_crossing() -> Fixture {
    let scene = Scene::new(vec![fixture_disc(); 2], vec![]);
    let r0 = vec![c(1.0, -1.5), c(1.6, -1.0), c(1.0, -0.5), c(1.0, 1.5)];
    let r1 = vec![c(-0.5, 0.0), c(2.5, 0.0)];
    fixture("timed_crossing", scene, vec![r0, r1], 0, 0, 22)
}

pub fn disc_fixtures() -> Vec<Fixture> {
    vec![detour_lanes(), early_arrival(), timed_crossing()]
}

fn sample_valid<R: Rng>(
    scene: &Scene,
    rng: &mut R,
    draw: impl Fn(&mut R) -> Vec<Config>,
) -> Vec<Config> {
    loop {
        let q = draw(rng);
        if scene.composite_config_valid(&q) {
            return q;
        }
    }
}

fn separated(a: &[Config], b: &[Config], min_l1: f64) -> bool {
    a.iter()
        .zip(b)
        .all(|(x, y)| crate::trajectory::l1_dist(x, y) >= min_l1)
}

/// Two discs swapping sides of a cluttered square.
pub fn two_disc(variant: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD15C ^ variant);
    let bounds = Rect::new([-2.0, -2.0], [2.0, 2.0]);
    let robot = RobotModel::disc(0.15, bounds, 1.0);
    let count = rng.random_range(2..=4);
    let obstacles: Vec<Obstacle> = (0..count)
        .map(|_| Obstacle::Circle {
            center: [rng.random_range(-0.9..0.9), rng.random_range(-1.2..1.2)],
            radius: rng.random_range(0.2..0.4),
        })
        .collect();
    let scene = Scene::new(vec![robot.clone(), robot], obstacles);
    let side = |rng: &mut ChaCha8Rng, x: f64| {
        c(x + rng.random_range(-0.3..0.3), rng.random_range(-1.6..1.6))
    };
    let starts = sample_valid(&scene, &mut rng, |r| vec![side(r, -1.5), side(r, 1.5)]);
    let goals = sample_valid(&scene, &mut rng, |r| vec![side(r, 1.5), side(r, -1.5)]);
    let mut s = Scenario::new(format!("two_disc_{variant:02}"), scene, starts, goals);
    s.seed = variant;
    s
}

fn random_arm_configs<R: Rng>(scene: &Scene, rng: &mut R) -> Vec<Config> {
    sample_valid(scene, rng, |r| {
        scene
            .robots
            .iter()
            .map(|m| {
                Config::new(
                    (0..m.dof())
                        .map(|_| r.random_range(-PI * 0.9..PI * 0.9))
                        .collect(),
                )
            })
            .collect()
    })
}

fn arm_scenario(name: String, scene: Scene, variant: u64, salt: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(salt ^ variant);
    let starts = random_arm_configs(&scene, &mut rng);
    let goals = loop {
        let g = random_arm_configs(&scene, &mut rng);
        if separated(&starts, &g, 1.5) {
            break g;
        }
    };
    let mut s = Scenario::new(name, scene, starts, goals);
    s.seed = variant;
    s
}

/// Two 2-link arms facing each other with overlapping workspaces.
pub fn two_arm(variant: u64) -> Scenario {
    let arm = |x: f64| RobotModel::planar_arm([x, 0.0], vec![0.5, 0.4], 0.05, 2.0);
    let scene = Scene::new(vec![arm(0.0), arm(1.2)], vec![]);
    arm_scenario(format!("two_arm_{variant:02}"), scene, variant, 0xA2)
}

/// Two arms whose long final links act like a held rod.
pub fn two_arm_rod(variant: u64) -> Scenario {
    let arm = |x: f64| RobotModel::planar_arm([x, 0.0], vec![0.4, 0.75], 0.06, 2.0);
    let scene = Scene::new(vec![arm(0.0), arm(1.4)], vec![]);
    arm_scenario(format!("two_arm_rod_{variant:02}"), scene, variant, 0x20D)
}

/// Three arms around a central post.
pub fn three_arm(variant: u64) -> Scenario {
    let arm = |x: f64, y: f64| RobotModel::planar_arm([x, y], vec![0.45, 0.35], 0.05, 2.0);
    let scene = Scene::new(
        vec![arm(0.0, 0.0), arm(1.2, 0.0), arm(0.6, 1.04)],
        vec![Obstacle::Circle {
            center: [0.6, 0.35],
            radius: 0.12,
        }],
    );
    arm_scenario(format!("three_arm_{variant:02}"), scene, variant, 0x3A)
}

/// Four arms at the corners of a square.
pub fn four_arm(variant: u64) -> Scenario {
    let arm = |x: f64, y: f64| RobotModel::planar_arm([x, y], vec![0.45, 0.35], 0.05, 2.0);
    let scene = Scene::new(
        vec![arm(0.0, 0.0), arm(1.2, 0.0), arm(0.0, 1.2), arm(1.2, 1.2)],
        vec![],
    );
    arm_scenario(format!("four_arm_{variant:02}"), scene, variant, 0x4A)
}

/// Scenario counts per family in [`desk_corpus`].
pub const TWO_DISC_VARIANTS: u64 = 11;
pub const TWO_ARM_VARIANTS: u64 = 4;
pub const TWO_ARM_ROD_VARIANTS: u64 = 2;

/// Scenes used for timed benchmark comparisons: the disc fixtures, the
/// two-disc family and the two-arm families.
pub fn desk_corpus() -> Vec<Scenario> {
    let mut out: Vec<Scenario> = disc_fixtures().into_iter().map(|f| f.scenario).collect();
    out.extend((0..TWO_DISC_VARIANTS).map(two_disc));
    out.extend((0..TWO_ARM_VARIANTS).map(two_arm));
    out.extend((0..TWO_ARM_ROD_VARIANTS).map(two_arm_rod));
    out
}

/// Every shipped scenario, including the larger arm scenes.
pub fn full_corpus() -> Vec<Scenario> {
    let mut out = desk_corpus();
    out.push(three_arm(0));
    out.push(four_arm(0));
    out
}
