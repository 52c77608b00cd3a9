use rand::Rng;

use super::Method;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EndpointKind {
    Randomized,
    ForwardLoop,
    BackwardLoop,
}

impl EndpointKind {
    pub fn name(self) -> &'static str {
        match self {
            EndpointKind::Randomized => "randomized",
            EndpointKind::ForwardLoop => "forward_loop",
            EndpointKind::BackwardLoop => "backward_loop",
        }
    }
}

/// How prioritized, path and TPG shortcuts pick the robot to modify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RobotSelect {
    #[default]
    Random,
    RoundRobin,
}

/// Endpoint pair enumeration with its loop cursors.
///
/// Every pair satisfies `m + 2 <= n <= H - 1`.
#[derive(Debug, Clone)]
pub struct EndpointStrategy {
    kind: EndpointKind,
    cursor: Option<(usize, usize)>,
}

impl EndpointStrategy {
    pub fn new(kind: EndpointKind) -> Self {
        EndpointStrategy { kind, cursor: None }
    }

    pub fn kind(&self) -> EndpointKind {
        self.kind
    }

    /// Restarts iterative enumeration at `m = 0`.
    pub fn reset(&mut self) {
        self.cursor = None;
    }

    pub fn next_pair<R: Rng + ?Sized>(
        &mut self,
        horizon: usize,
        rng: &mut R,
    ) -> Option<(usize, usize)> {
        if horizon < 3 {
            return None;
        }
        let last = horizon - 1;
        match self.kind {
            EndpointKind::Randomized => loop {
                let a = rng.random_range(0..horizon);
                let b = rng.random_range(0..horizon);
                let (m, n) = if a <= b { (a, b) } else { (b, a) };
                if n >= m + 2 {
                    return Some((m, n));
                }
            },
            EndpointKind::ForwardLoop => {
                let (m, n) = match self.cursor {
                    Some((m, n)) if m + 2 <= last && n >= m + 2 && n <= last => (m, n),
                    Some((m, _)) if m + 2 <= last => (m, m + 2),
                    _ => (0, 2),
                };
                let next = if n < last {
                    (m, n + 1)
                } else if m + 3 <= last {
                    (m + 1, m + 3)
                } else {
                    (0, 2)
                };
                self.cursor = Some(next);
                Some((m, n))
            }
            EndpointKind::BackwardLoop => {
                let (m, n) = match self.cursor {
                    Some((m, n)) if m + 2 <= last && n >= m + 2 && n <= last => (m, n),
                    Some((m, _)) if m + 2 <= last => (m, last),
                    _ => (0, last),
                };
                let next = if n > m + 2 {
                    (m, n - 1)
                } else if m + 3 <= last {
                    (m + 1, last)
                } else {
                    (0, last)
                };
                self.cursor = Some(next);
                Some((m, n))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShortcutCandidate {
    pub method: Method,
    /// `None` for composite shortcuts.
    pub robot: Option<usize>,
    pub m: usize,
    pub n: usize,
}

/// Combines an endpoint strategy with robot selection.
#[derive(Debug, Clone)]
pub struct CandidateSampler {
    pub endpoints: EndpointStrategy,
    pub robot_select: RobotSelect,
    next_robot: usize,
}

impl CandidateSampler {
    pub fn new(kind: EndpointKind, robot_select: RobotSelect) -> Self {
        CandidateSampler {
            endpoints: EndpointStrategy::new(kind),
            robot_select,
            next_robot: 0,
        }
    }

    pub fn reset(&mut self) {
        self.endpoints.reset();
    }

    /// Draws the next candidate. `horizons[i]` is the number of steps (or
    /// nodes) available to robot `i`; composite candidates use `horizons[0]`.
    pub fn next_candidate<R: Rng + ?Sized>(
        &mut self,
        method: Method,
        horizons: &[usize],
        rng: &mut R,
    ) -> Option<ShortcutCandidate> {
        if horizons.is_empty() {
            return None;
        }
        let robot = if method == Method::Composite {
            None
        } else {
            Some(match self.robot_select {
                RobotSelect::Random => rng.random_range(0..horizons.len()),
                RobotSelect::RoundRobin => {
                    let r = self.next_robot % horizons.len();
                    self.next_robot = r + 1;
                    r
                }
            })
        };
        let (m, n) = self
            .endpoints
            .next_pair(horizons[robot.unwrap_or(0)], rng)?;
        Some(ShortcutCandidate {
            method,
            robot,
            m,
            n,
        })
    }
}

/// Same as [`CandidateSampler::next_candidate`] on a shared horizon `h`.
pub fn next_candidate<R: Rng + ?Sized>(
    strategy: &mut CandidateSampler,
    h: usize,
    n_robots: usize,
    method: Method,
    rng: &mut R,
) -> Option<ShortcutCandidate> {
    strategy.next_candidate(method, &vec![h; n_robots], rng)
}
