//! The per-step loop: nominal controls, proximity graph, enforced edge set,
//! QP, integration and metrics.

use alloc::vec::Vec;
use core::fmt;

use crate::behaviors::{nominal_controls_capped, BehaviorAssignment};
use crate::graph::{
    self, algebraic_connectivity, build_comm_graph, inflate_weights, kruskal_mccst, CommGraph, GraphError,
};
use crate::model::{Dynamics, RobotState, Scenario, ScenarioError, WorldConfig};
use crate::protocol::{run_protocol, DeliveryPolicy, ProtocolError};
use crate::qp::{assemble_qp, perturbation, solve_qp, QpStatus};
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConnectivityMode {
    DistributedMccst,
    CentralizedMccst,
    /// The MCCST of the initial state, kept forever.
    FixedInitialMst,
    /// Every proximity edge of the initial state, kept forever.
    FixedInitialGraph,
}

impl ConnectivityMode {
    pub const ALL: [ConnectivityMode; 4] = [
        ConnectivityMode::DistributedMccst,
        ConnectivityMode::CentralizedMccst,
        ConnectivityMode::FixedInitialMst,
        ConnectivityMode::FixedInitialGraph,
    ];

    /// Command-line name.
    pub fn as_str(self) -> &'static str {
        match self {
            ConnectivityMode::DistributedMccst => "mccst",
            ConnectivityMode::CentralizedMccst => "centralized",
            ConnectivityMode::FixedInitialMst => "fixed-mst",
            ConnectivityMode::FixedInitialGraph => "fixed-graph",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }

    pub fn is_fixed(self) -> bool {
        matches!(self, ConnectivityMode::FixedInitialMst | ConnectivityMode::FixedInitialGraph)
    }
}

impl fmt::Display for ConnectivityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("fixed edge ({i},{j}) stretched to {distance} beyond the communication radius")]
    FixedEdgeLost { i: usize, j: usize, distance: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: usize,
    /// Time after the step.
    pub time: f64,
    /// `None` for a single robot.
    pub min_pair_distance: Option<f64>,
    pub lambda2: f64,
    pub subgroup_connected: Vec<bool>,
    pub perturbation: f64,
    pub mean_dist_to_target: f64,
    pub protocol_messages: u64,
    pub enforced_edges: usize,
    pub qp_status: QpStatus,
    pub mean_speed: f64,
}

impl StepReport {
    pub fn connected(&self) -> bool {
        (self.min_pair_distance.is_none() || self.lambda2 > 0.0) && self.subgroup_connected.iter().all(|&c| c)
    }
}

/// Controls applied during one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepControls {
    pub u_hat: Vec<Vec2>,
    pub u_star: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub robots: Vec<RobotState>,
    pub time: f64,
    pub steps_taken: usize,
    pub config: WorldConfig,
    pub assignment: BehaviorAssignment,
    pub mode: ConnectivityMode,
    fixed_edges: Vec<(usize, usize)>,
    last_enforced: Vec<(usize, usize)>,
}

impl World {
    pub fn new(scenario: &Scenario, mode: ConnectivityMode) -> Result<Self, SimError> {
        scenario.validate()?;
        let robots = scenario.robots.clone();
        let assignment = BehaviorAssignment::new(&robots, &scenario.subgroup_behaviors);
        let config = scenario.config.clone();
        let fixed_edges = match mode {
            ConnectivityMode::FixedInitialGraph => {
                let x: Vec<Vec2> = robots.iter().map(|r| r.position).collect();
                graph::proximity_pairs(&x, config.comm_radius)
            }
            ConnectivityMode::FixedInitialMst => {
                let u_hat = nominal_controls_capped(&robots, &assignment, speed_cap(&config));
                let g = inflate_weights(build_comm_graph(&robots, &config, &u_hat), config.lambda_mode)?;
                kruskal_mccst(&g)?.edges().to_vec()
            }
            _ => Vec::new(),
        };
        Ok(Self { robots, time: 0.0, steps_taken: 0, config, assignment, mode, fixed_edges, last_enforced: Vec::new() })
    }

    /// Edge set enforced during the last step (the stored set for fixed modes).
    pub fn enforced_edges(&self) -> &[(usize, usize)] {
        if self.mode.is_fixed() {
            &self.fixed_edges
        } else {
            &self.last_enforced
        }
    }

    pub fn positions(&self) -> Vec<Vec2> {
        self.robots.iter().map(|r| r.position).collect()
    }

    fn weighted_graph(&self, u_hat: &[Vec2]) -> Result<CommGraph, SimError> {
        Ok(inflate_weights(build_comm_graph(&self.robots, &self.config, u_hat), self.config.lambda_mode)?)
    }

    /// Advances one step.
    pub fn step(&mut self) -> Result<StepReport, SimError> {
        self.step_with_controls().map(|(r, _)| r)
    }

    /// Advances one step and also returns the nominal and applied controls.
    pub fn step_with_controls(&mut self) -> Result<(StepReport, StepControls), SimError> {
        let u_hat = nominal_controls_capped(&self.robots, &self.assignment, speed_cap(&self.config));
        let mut messages = 0;
        let enforced: Vec<(usize, usize)> = match self.mode {
            ConnectivityMode::DistributedMccst => {
                let g = self.weighted_graph(&u_hat)?;
                let policy = match self.config.delivery {
                    // A fresh schedule every step, fixed by the run seed.
                    DeliveryPolicy::RandomizedDelay(seed) => DeliveryPolicy::RandomizedDelay(
                        seed.wrapping_add(self.config.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15))
                            .wrapping_add(self.steps_taken as u64),
                    ),
                    p => p,
                };
                let (tree, stats) = run_protocol(&g, policy)?;
                messages = stats.messages;
                tree.edges().to_vec()
            }
            ConnectivityMode::CentralizedMccst => kruskal_mccst(&self.weighted_graph(&u_hat)?)?.edges().to_vec(),
            ConnectivityMode::FixedInitialMst | ConnectivityMode::FixedInitialGraph => {
                let rc = self.config.comm_radius;
                for &(i, j) in &self.fixed_edges {
                    let distance = (self.robots[i].position - self.robots[j].position).norm();
                    if distance > rc {
                        return Err(SimError::FixedEdgeLost { i, j, distance });
                    }
                }
                self.fixed_edges.clone()
            }
        };
        let problem = assemble_qp(&self.robots, &u_hat, &enforced, &self.config);
        let solution = solve_qp(&problem, self.config.qp.tolerance);
        integrate(&mut self.robots, &solution.u_star, &self.config);
        self.time = (self.steps_taken + 1) as f64 * self.config.dt;
        self.steps_taken += 1;
        self.last_enforced = enforced;
        let mut report = compute_metrics(
            &self.robots,
            &self.config,
            &self.assignment,
            &solution.u_star,
            &u_hat,
            messages,
        );
        report.step = self.steps_taken - 1;
        report.time = self.time;
        report.enforced_edges = self.last_enforced.len();
        report.qp_status = solution.status;
        Ok((report, StepControls { u_hat, u_star: solution.u_star }))
    }
}

/// Nominal controls saturate at the inscribed radius of the speed
/// polygon, so a lone robot's nominal command is always feasible.
pub fn speed_cap(config: &WorldConfig) -> f64 {
    libm::cos(core::f64::consts::PI / config.qp.velocity_facets as f64)
}

/// v along the heading and ω from the lateral component over look-ahead l.
pub fn unicycle_map(u: Vec2, heading: f64, lookahead: f64) -> (f64, f64) {
    let (s, c) = (libm::sin(heading), libm::cos(heading));
    (c * u.x + s * u.y, (-s * u.x + c * u.y) / lookahead)
}

/// Explicit Euler. Under unicycle dynamics the stored position is the
/// look-ahead point; the axle moves with (v, ω) and the point follows.
fn integrate(robots: &mut [RobotState], u: &[Vec2], config: &WorldConfig) {
    let dt = config.dt;
    for (r, &ui) in robots.iter_mut().zip(u) {
        match config.dynamics {
            Dynamics::SingleIntegrator => r.position += ui * dt,
            Dynamics::Unicycle { lookahead } => {
                let (v, omega) = unicycle_map(ui, r.heading, lookahead);
                let axle = r.position - Vec2::from_angle(r.heading) * lookahead;
                let axle = axle + Vec2::from_angle(r.heading) * (v * dt);
                r.heading += omega * dt;
                r.position = axle + Vec2::from_angle(r.heading) * lookahead;
            }
        }
    }
}

/// Metrics of a post-step state.
pub fn compute_metrics(
    robots: &[RobotState],
    config: &WorldConfig,
    assignment: &BehaviorAssignment,
    u_star: &[Vec2],
    u_hat: &[Vec2],
    protocol_messages: u64,
) -> StepReport {
    let x: Vec<Vec2> = robots.iter().map(|r| r.position).collect();
    let mut min_d: Option<f64> = None;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let d = (x[i] - x[j]).norm();
            min_d = Some(min_d.map_or(d, |m| m.min(d)));
        }
    }
    let labels: Vec<usize> = robots.iter().map(|r| r.subgroup).collect();
    let pairs = graph::proximity_pairs(&x, config.comm_radius);
    let subgroup_connected = (0..crate::model::subgroup_count(robots))
        .map(|m| graph::edges_induced_connected(&labels, &pairs, m))
        .collect();
    let unweighted = CommGraph::from_weighted_edges(labels, pairs.iter().map(|&(i, j)| (i, j, 0.0)))
        .expect("proximity pairs are canonical");
    let n = robots.len().max(1) as f64;
    let mean_dist_to_target = robots
        .iter()
        .zip(assignment.bindings())
        .map(|(r, b)| (r.position - b.goal()).norm())
        .sum::<f64>()
        / n;
    StepReport {
        step: 0,
        time: 0.0,
        min_pair_distance: min_d,
        lambda2: algebraic_connectivity(&unweighted),
        subgroup_connected,
        perturbation: perturbation(u_star, u_hat),
        mean_dist_to_target,
        protocol_messages,
        enforced_edges: 0,
        qp_status: QpStatus::Optimal,
        mean_speed: u_star.iter().map(|u| u.norm()).sum::<f64>() / n,
    }
}

/// Mean speed below this for `STALL_WINDOW` consecutive steps is a stall.
pub const STALL_SPEED: f64 = 1e-4;
pub const STALL_WINDOW: usize = 100;

/// Deadlock diagnostic over a report stream.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StallDetector {
    slow: usize,
    stalled_at: Option<usize>,
}

impl StallDetector {
    pub fn observe(&mut self, report: &StepReport) {
        self.slow = if report.mean_speed < STALL_SPEED { self.slow + 1 } else { 0 };
        if self.slow >= STALL_WINDOW && self.stalled_at.is_none() {
            self.stalled_at = Some(report.step);
        }
    }

    /// First step at which the window filled.
    pub fn stalled_at(&self) -> Option<usize> {
        self.stalled_at
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub reports: Vec<StepReport>,
    pub world: World,
    pub stalled_at: Option<usize>,
}

/// Runs `scenario.step_count` steps under `mode`.
pub fn run(scenario: &Scenario, mode: ConnectivityMode) -> Result<RunResult, SimError> {
    run_steps(scenario, mode, scenario.step_count)
}

pub fn run_steps(scenario: &Scenario, mode: ConnectivityMode, steps: usize) -> Result<RunResult, SimError> {
    let mut world = World::new(scenario, mode)?;
    let mut reports = Vec::with_capacity(steps);
    let mut stall = StallDetector::default();
    for _ in 0..steps {
        let r = world.step()?;
        stall.observe(&r);
        reports.push(r);
    }
    Ok(RunResult { reports, world, stalled_at: stall.stalled_at() })
}

#[cfg(test)]
mod tests {
    use alloc::collections::BTreeMap;
    use alloc::vec;

    use super::*;
    use crate::model::{validate_world, BehaviorKind, BehaviorSpec};

    fn robot(id: usize, x: f64, y: f64, subgroup: usize) -> RobotState {
        RobotState { id, position: Vec2::new(x, y), heading: 0.0, subgroup, speed_limit: 1.0 }
    }

    fn rendezvous(target: Vec2) -> BehaviorSpec {
        BehaviorSpec { kind: BehaviorKind::Rendezvous { target }, gain: 1.0 }
    }

    fn scenario(robots: Vec<RobotState>, specs: &[BehaviorSpec], steps: usize) -> Scenario {
        Scenario {
            robots,
            subgroup_behaviors: specs.iter().copied().enumerate().collect::<BTreeMap<_, _>>(),
            config: WorldConfig::default(),
            step_count: steps,
        }
    }

    #[test]
    fn unicycle_examples() {
        let (v, w) = unicycle_map(Vec2::new(0.6, 0.8), 0.0, 0.1);
        assert!((v - 0.6).abs() < 1e-12 && (w - 8.0).abs() < 1e-12);
        let (v, w) = unicycle_map(Vec2::new(0.0, 0.5), core::f64::consts::FRAC_PI_2, 0.2);
        assert!((v - 0.5).abs() < 1e-12 && w.abs() < 1e-12);
        let (v, w) = unicycle_map(Vec2::new(0.0, 0.5), 0.0, 0.2);
        assert!(v.abs() < 1e-12 && (w - 2.5).abs() < 1e-12);
    }

    #[test]
    fn single_robot_goes_straight() {
        let target = Vec2::new(3.0, 4.0);
        let s = scenario(vec![robot(0, 0.0, 0.0, 0)], &[rendezvous(target)], 200);
        let out = run(&s, ConnectivityMode::DistributedMccst).unwrap();
        let mid = &out.reports[99];
        // Saturated at the capped speed along the straight line.
        assert!((mid.mean_dist_to_target - (5.0 - speed_cap(&s.config))).abs() < 1e-6);
        assert_eq!(mid.min_pair_distance, None);
        assert!(out.reports.iter().all(|r| r.perturbation < 1e-20));
        let p = out.world.robots[0].position;
        assert!((p.x * 4.0 - p.y * 3.0).abs() < 1e-9);
    }

    #[test]
    fn zero_steps_leave_world_unchanged() {
        let s = scenario(vec![robot(0, 0.0, 0.0, 0), robot(1, 0.5, 0.0, 0)], &[rendezvous(Vec2::ZERO)], 0);
        let out = run(&s, ConnectivityMode::CentralizedMccst).unwrap();
        assert!(out.reports.is_empty());
        assert_eq!(out.world.robots, s.robots);
    }

    #[test]
    fn pair_pulled_apart_plateaus_at_range() {
        let mut s = scenario(
            vec![robot(0, 0.0, 0.0, 0), robot(1, 0.5, 0.0, 1)],
            &[rendezvous(Vec2::new(-5.0, 0.0)), rendezvous(Vec2::new(5.0, 0.0))],
            1500,
        );
        s.config.dt = 0.01;
        for mode in ConnectivityMode::ALL {
            let out = run(&s, mode).unwrap();
            let d = |w: &World| (w.robots[0].position - w.robots[1].position).norm();
            assert!(d(&out.world) <= 1.0 + 1e-9, "{mode}: {}", d(&out.world));
            assert!(d(&out.world) > 0.99);
            assert!(out.reports.iter().all(|r| r.lambda2 > 0.0));
            assert!(out.stalled_at.is_some());
        }
    }

    #[test]
    fn mccst_modes_agree_and_keep_invariants() {
        let robots = vec![
            robot(0, 0.0, 0.0, 0),
            robot(1, 0.4, 0.1, 0),
            robot(2, 0.8, 0.0, 1),
            robot(3, 1.2, 0.2, 1),
            robot(4, 0.5, 0.7, 2),
            robot(5, 0.9, 0.8, 2),
        ];
        let specs = [
            rendezvous(Vec2::new(-3.0, 0.0)),
            BehaviorSpec { kind: BehaviorKind::CircleFormation { center: Vec2::new(3.0, 0.0), radius: 0.4 }, gain: 1.0 },
            BehaviorSpec { kind: BehaviorKind::Waypoint { target: Vec2::new(0.5, 3.0) }, gain: 2.0 },
        ];
        let s = scenario(robots, &specs, 400);
        let mut a = World::new(&s, ConnectivityMode::DistributedMccst).unwrap();
        let mut b = World::new(&s, ConnectivityMode::CentralizedMccst).unwrap();
        for _ in 0..400 {
            let ra = a.step().unwrap();
            let rb = b.step().unwrap();
            assert_eq!(a.robots, b.robots);
            assert_eq!(a.enforced_edges(), b.enforced_edges());
            assert_eq!(ra.enforced_edges, 5);
            assert!(ra.protocol_messages > 0 && rb.protocol_messages == 0);
            assert!(validate_world(&a.robots, &a.config).is_empty());
            assert!(ra.connected());
        }
    }

    #[test]
    fn fixed_modes_keep_their_edges() {
        let robots = vec![robot(0, 0.0, 0.0, 0), robot(1, 0.5, 0.0, 0), robot(2, 0.25, 0.4, 0)];
        let s = scenario(robots, &[rendezvous(Vec2::new(2.0, 2.0))], 50);
        let mut w = World::new(&s, ConnectivityMode::FixedInitialGraph).unwrap();
        assert_eq!(w.enforced_edges(), &[(0, 1), (0, 2), (1, 2)]);
        w.step().unwrap();
        assert_eq!(w.enforced_edges(), &[(0, 1), (0, 2), (1, 2)]);
        let w = World::new(&s, ConnectivityMode::FixedInitialMst).unwrap();
        assert_eq!(w.enforced_edges().len(), 2);
    }

    #[test]
    fn metrics() {
        let robots = [robot(0, 0.0, 0.0, 0), robot(1, 0.5, 0.0, 0)];
        let specs: BTreeMap<_, _> = [(0, rendezvous(Vec2::ZERO))].into_iter().collect();
        let a = BehaviorAssignment::new(&robots, &specs);
        let u = [Vec2::new(0.1, 0.0), Vec2::ZERO];
        let r = compute_metrics(&robots, &WorldConfig::default(), &a, &u, &u, 0);
        assert_eq!(r.min_pair_distance, Some(0.5));
        assert_eq!(r.perturbation, 0.0);
        assert!((r.mean_dist_to_target - 0.25).abs() < 1e-12);
        assert!((r.lambda2 - 2.0).abs() < 1e-9);
        let far = [robot(0, 0.0, 0.0, 0), robot(1, 5.0, 0.0, 0)];
        let r = compute_metrics(&far, &WorldConfig::default(), &a, &u, &u, 0);
        assert_eq!(r.lambda2, 0.0);
        assert!(!r.connected());
    }

    #[test]
    fn fixed_edge_beyond_range_is_an_error() {
        let robots = vec![robot(0, 0.0, 0.0, 0), robot(1, 0.5, 0.0, 0)];
        let s = scenario(robots, &[rendezvous(Vec2::ZERO)], 1);
        let mut w = World::new(&s, ConnectivityMode::FixedInitialGraph).unwrap();
        w.robots[1].position = Vec2::new(1.5, 0.0);
        assert!(matches!(w.step(), Err(SimError::FixedEdgeLost { i: 0, j: 1, .. })));
    }

    #[test]
    fn repeated_runs_are_identical() {
        let robots = vec![robot(0, 0.0, 0.0, 0), robot(1, 0.4, 0.1, 0), robot(2, 0.8, 0.0, 1)];
        let mut s = scenario(robots, &[rendezvous(Vec2::new(-2.0, 1.0)), rendezvous(Vec2::new(2.0, -1.0))], 100);
        s.config.delivery = DeliveryPolicy::RandomizedDelay(9);
        let a = run(&s, ConnectivityMode::DistributedMccst).unwrap();
        let b = run(&s, ConnectivityMode::DistributedMccst).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unicycle_point_tracks_the_command() {
        let mut s = scenario(vec![robot(0, 0.0, 0.0, 0)], &[rendezvous(Vec2::new(0.0, 2.0))], 800);
        s.config.dynamics = Dynamics::Unicycle { lookahead: 0.05 };
        let out = run(&s, ConnectivityMode::CentralizedMccst).unwrap();
        assert!(out.reports.last().unwrap().mean_dist_to_target < 1e-2);
        assert!(out.world.robots[0].position.x.abs() < 1e-2);
    }
}
