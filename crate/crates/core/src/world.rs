//! Planar multi-robot environment.
//!
//! Robots are either serial planar arms (revolute joints, cumulative angles,
//! one capsule per link) or discs translating in a bounding rectangle. Every
//! collision predicate works on world-frame capsules and uses strict
//! inequality, so shapes exactly at touching distance do not collide.

use std::borrow::Borrow;
use std::f64::consts::PI;
use std::ops::Deref;

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];

/// Joint values (radians) or planar coordinates (meters) of one robot.
#[derive(Debug, Clone, PartialEq)]
pub struct Config(Vec<f64>);

impl Config {
    pub fn new(values: Vec<f64>) -> Self {
        Config(values)
    }

    pub fn zeros(dof: usize) -> Self {
        Config(vec![0.0; dof])
    }

    pub fn dof(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Deref for Config {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Config {
    fn from(values: Vec<f64>) -> Self {
        Config(values)
    }
}

impl<const D: usize> From<[f64; D]> for Config {
    fn from(values: [f64; D]) -> Self {
        Config(values.to_vec())
    }
}

/// Axis-aligned rectangle, closed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        Rect { min, max }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }

    fn corners(&self) -> [Vec2; 4] {
        [
            self.min,
            [self.max[0], self.min[1]],
            self.max,
            [self.min[0], self.max[1]],
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RobotKind {
    PlanarArm {
        base: Vec2,
        link_lengths: Vec<f64>,
        link_radius: f64,
        joint_limits: Vec<[f64; 2]>,
    },
    Disc {
        radius: f64,
        bounds: Rect,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    pub kind: RobotKind,
    /// Cumulative L1 speed limit.
    pub v_max: f64,
}

impl RobotModel {
    /// Planar arm with the default joint limits of `[-pi, pi]` per joint.
    pub fn planar_arm(base: Vec2, link_lengths: Vec<f64>, link_radius: f64, v_max: f64) -> Self {
        let joint_limits = vec![[-PI, PI]; link_lengths.len()];
        RobotModel {
            kind: RobotKind::PlanarArm {
                base,
                link_lengths,
                link_radius,
                joint_limits,
            },
            v_max,
        }
    }

    pub fn disc(radius: f64, bounds: Rect, v_max: f64) -> Self {
        RobotModel {
            kind: RobotKind::Disc { radius, bounds },
            v_max,
        }
    }

    pub fn with_joint_limits(mut self, limits: Vec<[f64; 2]>) -> Self {
        if let RobotKind::PlanarArm { joint_limits, .. } = &mut self.kind {
            *joint_limits = limits;
        }
        self
    }

    pub fn dof(&self) -> usize {
        match &self.kind {
            RobotKind::PlanarArm { link_lengths, .. } => link_lengths.len(),
            RobotKind::Disc { .. } => 2,
        }
    }

    /// Per-coordinate closed intervals of the configuration box.
    pub fn limits(&self) -> Vec<[f64; 2]> {
        match &self.kind {
            RobotKind::PlanarArm { joint_limits, .. } => joint_limits.clone(),
            RobotKind::Disc { bounds, .. } => vec![
                [bounds.min[0], bounds.max[0]],
                [bounds.min[1], bounds.max[1]],
            ],
        }
    }

    pub fn reach(&self) -> f64 {
        match &self.kind {
            RobotKind::PlanarArm { link_lengths, .. } => link_lengths.iter().sum(),
            RobotKind::Disc { .. } => 0.0,
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "v_max must be positive, got {}",
                self.v_max
            )));
        }
        match &self.kind {
            RobotKind::PlanarArm {
                base,
                link_lengths,
                link_radius,
                joint_limits,
            } => {
                if link_lengths.is_empty() {
                    return Err(Error::InvalidArgument(
                        "planar arm needs at least one link".into(),
                    ));
                }
                if link_lengths.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
                    return Err(Error::InvalidArgument(
                        "link lengths must be positive".into(),
                    ));
                }
                if !(*link_radius > 0.0 && link_radius.is_finite()) {
                    return Err(Error::InvalidArgument(
                        "link radius must be positive".into(),
                    ));
                }
                if !(base[0].is_finite() && base[1].is_finite()) {
                    return Err(Error::InvalidArgument("arm base must be finite".into()));
                }
                if joint_limits.len() != link_lengths.len() {
                    return Err(Error::DimensionMismatch {
                        expected: link_lengths.len(),
                        got: joint_limits.len(),
                    });
                }
                if joint_limits.iter().any(|[lo, hi]| {
                    !matches!(
                        lo.partial_cmp(hi),
                        Some(std::cmp::Ordering::Less | std::cmp::Ordering::Equal)
                    )
                }) {
                    return Err(Error::InvalidArgument("joint limit with lo > hi".into()));
                }
            }
            RobotKind::Disc { radius, bounds } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::InvalidArgument(
                        "disc radius must be positive".into(),
                    ));
                }
                if !(bounds.min[0] <= bounds.max[0] && bounds.min[1] <= bounds.max[1]) {
                    return Err(Error::InvalidArgument("disc bounds with min > max".into()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Obstacle {
    Circle { center: Vec2, radius: f64 },
    Rect(Rect),
}

/// Segment swept by a disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capsule {
    pub a: Vec2,
    pub b: Vec2,
    pub radius: f64,
}

impl Capsule {
    fn bounds(&self) -> Rect {
        Rect {
            min: [
                self.a[0].min(self.b[0]) - self.radius,
                self.a[1].min(self.b[1]) - self.radius,
            ],
            max: [
                self.a[0].max(self.b[0]) + self.radius,
                self.a[1].max(self.b[1]) + self.radius,
            ],
        }
    }

    pub fn intersects(&self, other: &Capsule) -> bool {
        let (p, q) = (self.bounds(), other.bounds());
        if p.max[0] <= q.min[0]
            || q.max[0] <= p.min[0]
            || p.max[1] <= q.min[1]
            || q.max[1] <= p.min[1]
        {
            return false;
        }
        segment_distance(self.a, self.b, other.a, other.b) < self.radius + other.radius
    }

    pub fn hits(&self, obstacle: &Obstacle) -> bool {
        match obstacle {
            Obstacle::Circle { center, radius } => {
                point_segment_distance(*center, self.a, self.b) < self.radius + radius
            }
            Obstacle::Rect(rect) => segment_rect_distance(self.a, self.b, rect) < self.radius,
        }
    }
}

/// World-frame geometry of one robot at one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyGeometry {
    pub capsules: Vec<Capsule>,
}

impl BodyGeometry {
    pub fn intersects(&self, other: &BodyGeometry) -> bool {
        self.capsules
            .iter()
            .any(|a| other.capsules.iter().any(|b| a.intersects(b)))
    }

    pub fn hits_any(&self, obstacles: &[Obstacle]) -> bool {
        self.capsules
            .iter()
            .any(|c| obstacles.iter().any(|o| c.hits(o)))
    }
}

pub fn forward_kinematics(model: &RobotModel, config: &Config) -> Result<BodyGeometry> {
    if config.dof() != model.dof() {
        return Err(Error::DimensionMismatch {
            expected: model.dof(),
            got: config.dof(),
        });
    }
    Ok(fk(model, config))
}

fn fk(model: &RobotModel, config: &[f64]) -> BodyGeometry {
    match &model.kind {
        RobotKind::PlanarArm {
            base,
            link_lengths,
            link_radius,
            ..
        } => {
            let mut capsules = Vec::with_capacity(link_lengths.len());
            let mut angle = 0.0;
            let mut p = *base;
            for (len, q) in link_lengths.iter().zip(config) {
                angle += q;
                let next = [p[0] + len * angle.cos(), p[1] + len * angle.sin()];
                capsules.push(Capsule {
                    a: p,
                    b: next,
                    radius: *link_radius,
                });
                p = next;
            }
            BodyGeometry { capsules }
        }
        RobotKind::Disc { radius, .. } => {
            let c = [config[0], config[1]];
            BodyGeometry {
                capsules: vec![Capsule {
                    a: c,
                    b: c,
                    radius: *radius,
                }],
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scene {
    pub robots: Vec<RobotModel>,
    pub obstacles: Vec<Obstacle>,
}

impl Scene {
    pub fn new(robots: Vec<RobotModel>, obstacles: Vec<Obstacle>) -> Self {
        Scene { robots, obstacles }
    }

    pub fn num_robots(&self) -> usize {
        self.robots.len()
    }

    pub fn check(&self) -> Result<()> {
        if self.robots.is_empty() {
            return Err(Error::InvalidArgument(
                "scene needs at least one robot".into(),
            ));
        }
        for (i, r) in self.robots.iter().enumerate() {
            r.check()
                .map_err(|e| Error::InvalidArgument(format!("robot {i}: {e}")))?;
        }
        Ok(())
    }

    /// Geometry of robot `i`. Panics if the config has the wrong length.
    pub fn body(&self, i: usize, config: &Config) -> BodyGeometry {
        let model = &self.robots[i];
        assert_eq!(
            config.dof(),
            model.dof(),
            "robot {i}: config dimension mismatch"
        );
        fk(model, config)
    }

    pub fn robots_collide(&self, i: usize, ci: &Config, j: usize, cj: &Config) -> bool {
        debug_assert_ne!(i, j);
        self.body(i, ci).intersects(&self.body(j, cj))
    }

    pub fn robot_hits_obstacle(&self, i: usize, ci: &Config) -> bool {
        self.body(i, ci).hits_any(&self.obstacles)
    }

    pub fn within_limits(&self, i: usize, ci: &Config) -> bool {
        let model = &self.robots[i];
        ci.dof() == model.dof()
            && ci.is_finite()
            && match &model.kind {
                RobotKind::PlanarArm { joint_limits, .. } => ci
                    .iter()
                    .zip(joint_limits)
                    .all(|(q, [lo, hi])| *q >= *lo && *q <= *hi),
                RobotKind::Disc { bounds, .. } => bounds.contains([ci[0], ci[1]]),
            }
    }

    /// Limits and static obstacles only.
    pub fn robot_config_valid(&self, i: usize, ci: &Config) -> bool {
        self.within_limits(i, ci) && !self.robot_hits_obstacle(i, ci)
    }

    pub fn composite_config_valid<C: Borrow<Config>>(&self, configs: &[C]) -> bool {
        if configs.len() != self.robots.len() {
            return false;
        }
        if !configs
            .iter()
            .enumerate()
            .all(|(i, c)| self.within_limits(i, c.borrow()))
        {
            return false;
        }
        let bodies: Vec<BodyGeometry> = configs
            .iter()
            .enumerate()
            .map(|(i, c)| self.body(i, c.borrow()))
            .collect();
        if bodies.iter().any(|b| b.hits_any(&self.obstacles)) {
            return false;
        }
        for i in 0..bodies.len() {
            for j in i + 1..bodies.len() {
                if bodies[i].intersects(&bodies[j]) {
                    return false;
                }
            }
        }
        true
    }
}

fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn cross(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    let t = if len2 > 0.0 {
        (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let c = [a[0] + t * ab[0], a[1] + t * ab[1]];
    let d = sub(p, c);
    dot(d, d).sqrt()
}

fn segments_cross(p1: Vec2, q1: Vec2, p2: Vec2, q2: Vec2) -> bool {
    let d1 = cross(sub(q1, p1), sub(p2, p1));
    let d2 = cross(sub(q1, p1), sub(q2, p1));
    let d3 = cross(sub(q2, p2), sub(p1, p2));
    let d4 = cross(sub(q2, p2), sub(q1, p2));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Exact distance between two closed segments (either may be degenerate).
pub fn segment_distance(p1: Vec2, q1: Vec2, p2: Vec2, q2: Vec2) -> f64 {
    if segments_cross(p1, q1, p2, q2) {
        return 0.0;
    }
    point_segment_distance(p1, p2, q2)
        .min(point_segment_distance(q1, p2, q2))
        .min(point_segment_distance(p2, p1, q1))
        .min(point_segment_distance(q2, p1, q1))
}

/// Distance from a segment to a solid rectangle; zero on overlap.
pub fn segment_rect_distance(a: Vec2, b: Vec2, rect: &Rect) -> f64 {
    if rect.contains(a) || rect.contains(b) {
        return 0.0;
    }
    let c = rect.corners();
    (0..4)
        .map(|k| segment_distance(a, b, c[k], c[(k + 1) % 4]))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn wide() -> Rect {
        Rect::new([-10.0, -10.0], [10.0, 10.0])
    }

    fn two_discs() -> Scene {
        Scene::new(
            vec![
                RobotModel::disc(0.1, wide(), 1.0),
                RobotModel::disc(0.1, wide(), 1.0),
            ],
            vec![],
        )
    }

    #[test]
    fn disc_geometry_is_a_point_capsule() {
        let m = RobotModel::disc(0.1, wide(), 1.0);
        let g = forward_kinematics(&m, &Config::from([0.0, 0.0])).unwrap();
        assert_eq!(g.capsules.len(), 1);
        assert_eq!(g.capsules[0].a, [0.0, 0.0]);
        assert_eq!(g.capsules[0].b, [0.0, 0.0]);
        assert_eq!(g.capsules[0].radius, 0.1);
    }

    #[test]
    fn arm_zero_angle() {
        let m = RobotModel::planar_arm([0.0, 0.0], vec![1.0], 0.05, 1.0);
        let g = forward_kinematics(&m, &Config::from([0.0])).unwrap();
        assert_eq!(g.capsules.len(), 1);
        assert_eq!(g.capsules[0].a, [0.0, 0.0]);
        assert_eq!(g.capsules[0].b, [1.0, 0.0]);
    }

    #[test]
    fn arm_angles_are_cumulative() {
        let m = RobotModel::planar_arm([0.0, 0.0], vec![1.0, 1.0], 0.05, 1.0);
        let g = forward_kinematics(&m, &Config::from([PI / 2.0, -PI / 2.0])).unwrap();
        assert_eq!(g.capsules.len(), 2);
        let end = g.capsules[1].b;
        assert!(
            (end[0] - 1.0).abs() < 1e-12 && (end[1] - 1.0).abs() < 1e-12,
            "{end:?}"
        );
    }

    #[test]
    fn fk_rejects_wrong_dimension() {
        let m = RobotModel::planar_arm([0.0, 0.0], vec![1.0, 1.0], 0.05, 1.0);
        assert!(matches!(
            forward_kinematics(&m, &Config::from([0.0])),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn disc_pairs() {
        let s = two_discs();
        let o = Config::from([0.0, 0.0]);
        assert!(!s.robots_collide(0, &o, 1, &Config::from([0.5, 0.0])));
        assert!(s.robots_collide(0, &o, 1, &Config::from([0.15, 0.0])));
        // touching exactly is not a collision
        assert!(!s.robots_collide(0, &o, 1, &Config::from([0.2, 0.0])));
        assert!(!s.robots_collide(0, &Config::from([0.0, 0.0]), 1, &Config::from([0.0, 0.2])));
    }

    #[test]
    fn disc_obstacles() {
        let mut s = two_discs();
        s.obstacles = vec![Obstacle::Circle {
            center: [1.0, 0.0],
            radius: 0.1,
        }];
        assert!(!s.robot_hits_obstacle(0, &Config::from([0.0, 0.0])));
        s.obstacles = vec![Obstacle::Rect(Rect::new([-0.05, -0.05], [0.05, 0.05]))];
        assert!(s.robot_hits_obstacle(0, &Config::from([0.0, 0.0])));
    }

    #[test]
    fn composite_validity_is_a_conjunction() {
        let s = two_discs();
        assert!(s.composite_config_valid(&[Config::from([0.0, 0.0]), Config::from([1.0, 1.0])]));
        assert!(!s.composite_config_valid(&[Config::from([0.0, 0.0]), Config::from([0.1, 0.0])]));
        // outside the bounding rectangle
        assert!(!s.composite_config_valid(&[Config::from([11.0, 0.0]), Config::from([1.0, 1.0])]));
        // wrong robot count
        assert!(!s.composite_config_valid(&[Config::from([0.0, 0.0])]));
    }

    #[test]
    fn arm_joint_limits_default_to_pi() {
        let s = Scene::new(
            vec![RobotModel::planar_arm([0.0, 0.0], vec![1.0], 0.05, 1.0)],
            vec![],
        );
        assert!(s.within_limits(0, &Config::from([PI])));
        assert!(!s.within_limits(0, &Config::from([PI + 1e-6])));
    }

    // ---- dense-sampling oracle ----

    fn sample_axis(c: &Capsule, step: f64) -> Vec<Vec2> {
        let len = ((c.b[0] - c.a[0]).powi(2) + (c.b[1] - c.a[1]).powi(2)).sqrt();
        let k = (len / step).ceil().max(1.0) as usize;
        (0..=k)
            .map(|s| {
                let t = s as f64 / k as f64;
                [
                    c.a[0] + t * (c.b[0] - c.a[0]),
                    c.a[1] + t * (c.b[1] - c.a[1]),
                ]
            })
            .collect()
    }

    /// (min clearance) between two bodies estimated by dense sampling.
    fn sampled_clearance(a: &BodyGeometry, b: &BodyGeometry, step: f64) -> f64 {
        let mut best = f64::INFINITY;
        for ca in &a.capsules {
            let pa = sample_axis(ca, step);
            for cb in &b.capsules {
                let pb = sample_axis(cb, step);
                let mut d = f64::INFINITY;
                for p in &pa {
                    for q in &pb {
                        d = d.min(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
                    }
                }
                best = best.min(d - ca.radius - cb.radius);
            }
        }
        best
    }

    fn sampled_obstacle_clearance(b: &BodyGeometry, obstacles: &[Obstacle], step: f64) -> f64 {
        let mut best = f64::INFINITY;
        for c in &b.capsules {
            for p in sample_axis(c, step) {
                for o in obstacles {
                    let d = match o {
                        Obstacle::Circle { center, radius } => {
                            ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt()
                                - radius
                        }
                        Obstacle::Rect(r) => {
                            let dx = (r.min[0] - p[0]).max(0.0).max(p[0] - r.max[0]);
                            let dy = (r.min[1] - p[1]).max(0.0).max(p[1] - r.max[1]);
                            (dx * dx + dy * dy).sqrt()
                        }
                    };
                    best = best.min(d - c.radius);
                }
            }
        }
        best
    }

    fn random_config(rng: &mut ChaCha8Rng, m: &RobotModel) -> Config {
        Config::new(
            m.limits()
                .iter()
                .map(|[lo, hi]| rng.random_range(*lo..=*hi))
                .collect(),
        )
    }

    #[test]
    fn arm_pairs_agree_with_sampling_oracle() {
        let scene = Scene::new(
            vec![
                RobotModel::planar_arm([0.0, 0.0], vec![0.5, 0.4], 0.05, 1.0),
                RobotModel::planar_arm([0.9, 0.0], vec![0.5, 0.4], 0.05, 1.0),
            ],
            vec![],
        );
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (mut hits, mut checked) = (0, 0);
        for _ in 0..1000 {
            let c0 = random_config(&mut rng, &scene.robots[0]);
            let c1 = random_config(&mut rng, &scene.robots[1]);
            let clearance = sampled_clearance(&scene.body(0, &c0), &scene.body(1, &c1), 1e-3);
            let analytic = scene.robots_collide(0, &c0, 1, &c1);
            assert_eq!(analytic, scene.robots_collide(1, &c1, 0, &c0), "symmetry");
            if clearance.abs() > 1e-3 {
                checked += 1;
                assert_eq!(analytic, clearance < 0.0, "clearance {clearance}");
            }
            hits += analytic as usize;
        }
        assert!(checked > 900);
        assert!(
            hits > 50 && hits < 950,
            "poses should mix contact and free: {hits}"
        );
    }

    #[test]
    fn arm_disc_pairs_agree_with_sampling_oracle() {
        let scene = Scene::new(
            vec![
                RobotModel::planar_arm([0.0, 0.0], vec![0.6, 0.5, 0.3], 0.04, 1.0),
                RobotModel::disc(0.15, Rect::new([-1.5, -1.5], [1.5, 1.5]), 1.0),
            ],
            vec![],
        );
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let c0 = random_config(&mut rng, &scene.robots[0]);
            let c1 = random_config(&mut rng, &scene.robots[1]);
            let clearance = sampled_clearance(&scene.body(0, &c0), &scene.body(1, &c1), 1e-3);
            let analytic = scene.robots_collide(0, &c0, 1, &c1);
            assert_eq!(analytic, scene.robots_collide(1, &c1, 0, &c0));
            if clearance.abs() > 1e-3 {
                assert_eq!(analytic, clearance < 0.0);
            }
        }
    }

    #[test]
    fn arm_obstacles_agree_with_sampling_oracle() {
        let obstacles = vec![
            Obstacle::Rect(Rect::new([0.3, 0.2], [0.6, 0.5])),
            Obstacle::Circle {
                center: [-0.4, -0.3],
                radius: 0.15,
            },
        ];
        let scene = Scene::new(
            vec![RobotModel::planar_arm(
                [0.0, 0.0],
                vec![0.5, 0.4],
                0.05,
                1.0,
            )],
            obstacles.clone(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut hits = 0;
        for _ in 0..1000 {
            let c = random_config(&mut rng, &scene.robots[0]);
            let clearance = sampled_obstacle_clearance(&scene.body(0, &c), &obstacles, 1e-3);
            let analytic = scene.robot_hits_obstacle(0, &c);
            if clearance.abs() > 1e-3 {
                assert_eq!(analytic, clearance < 0.0, "clearance {clearance} at {c:?}");
            }
            hits += analytic as usize;
        }
        assert!(hits > 20);
    }

    #[test]
    fn sweeping_past_rect_corner() {
        let rect = Rect::new([0.5, 0.5], [1.0, 1.0]);
        let scene = Scene::new(
            vec![RobotModel::planar_arm([0.0, 0.0], vec![1.0], 0.02, 1.0)],
            vec![Obstacle::Rect(rect)],
        );
        for k in 0..=200 {
            let q = PI / 4.0 * k as f64 / 100.0 - PI / 8.0;
            let c = Config::from([q]);
            let clearance = sampled_obstacle_clearance(&scene.body(0, &c), &scene.obstacles, 1e-3);
            if clearance.abs() > 1e-3 {
                assert_eq!(scene.robot_hits_obstacle(0, &c), clearance < 0.0, "q = {q}");
            }
        }
    }

    #[test]
    fn kinematic_continuity() {
        let m = RobotModel::planar_arm([0.2, -0.1], vec![0.5, 0.4, 0.3], 0.05, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let reach = m.reach();
        for _ in 0..500 {
            let c = random_config(&mut rng, &m);
            let mut d = c.clone();
            let mut budget: f64 = 1e-6;
            for v in d.values_mut() {
                let step: f64 = rng.random_range(-budget..=budget) * 0.999;
                budget -= step.abs();
                *v += step;
            }
            let g0 = forward_kinematics(&m, &c).unwrap();
            let g1 = forward_kinematics(&m, &d).unwrap();
            for (a, b) in g0.capsules.iter().zip(&g1.capsules) {
                for (p, q) in [(a.a, b.a), (a.b, b.b)] {
                    let moved = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
                    assert!(moved <= reach * 1e-6 + 1e-9);
                }
            }
        }
    }

    #[test]
    fn composite_validity_matches_pairwise_oracle() {
        let scene = Scene::new(
            vec![
                RobotModel::planar_arm([0.0, 0.0], vec![0.5, 0.4], 0.05, 1.0),
                RobotModel::planar_arm([0.9, 0.0], vec![0.5, 0.4], 0.05, 1.0),
                RobotModel::disc(0.1, Rect::new([-1.0, -1.0], [2.0, 1.0]), 1.0),
            ],
            vec![Obstacle::Circle {
                center: [0.45, 0.8],
                radius: 0.1,
            }],
        );
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let cs: Vec<Config> = scene
                .robots
                .iter()
                .map(|m| random_config(&mut rng, m))
                .collect();
            let mut oracle = true;
            for i in 0..3 {
                oracle &= scene.within_limits(i, &cs[i]) && !scene.robot_hits_obstacle(i, &cs[i]);
                for j in 0..3 {
                    if i != j {
                        oracle &= !scene.robots_collide(i, &cs[i], j, &cs[j]);
                    }
                }
            }
            assert_eq!(scene.composite_config_valid(&cs), oracle);
        }
    }
}
