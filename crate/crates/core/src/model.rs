//! Shared domain types: robots, world configuration, scenarios and the
//! validity checks every other module relies on.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::graph;
use crate::protocol::DeliveryPolicy;
use crate::Vec2;

pub type RobotId = usize;
pub type SubgroupId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    pub id: RobotId,
    /// Position in meters. For unicycle robots this is the controlled
    /// look-ahead point, not the wheel axle.
    pub position: Vec2,
    /// Radians; only advanced by unicycle integration.
    pub heading: f64,
    pub subgroup: SubgroupId,
    /// Per-robot speed bound in m/s.
    pub speed_limit: f64,
}

/// How intra-subgroup edge weights are inflated before the spanning tree
/// is selected.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LambdaMode {
    /// Every intra-subgroup edge is strictly preferred to every
    /// inter-subgroup edge, whatever the sign of the weights.
    #[default]
    Lexicographic,
    /// Intra-subgroup weights are multiplied by the given factor (> 1).
    Explicit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Dynamics {
    #[default]
    SingleIntegrator,
    /// Unicycle driven through the look-ahead point at distance
    /// `lookahead` ahead of the axle.
    Unicycle { lookahead: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpSettings {
    /// KKT / feasibility tolerance for an `Optimal` verdict.
    pub tolerance: f64,
    /// Facet count of the polygonal speed bound.
    pub velocity_facets: usize,
    /// Drop safety rows that cannot bind under the speed bounds.
    pub prune_safety: bool,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            velocity_facets: 8,
            prune_safety: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldConfig {
    pub comm_radius: f64,
    pub safe_radius: f64,
    /// Barrier gain shared by safety and connectivity certificates.
    pub gamma: f64,
    pub dt: f64,
    pub lambda_mode: LambdaMode,
    pub qp: QpSettings,
    pub dynamics: Dynamics,
    pub delivery: DeliveryPolicy,
    pub seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            comm_radius: 1.0,
            safe_radius: 0.1,
            gamma: 1.0,
            dt: 0.01,
            lambda_mode: LambdaMode::Lexicographic,
            qp: QpSettings::default(),
            dynamics: Dynamics::SingleIntegrator,
            delivery: DeliveryPolicy::ImmediateFifo,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BehaviorKind {
    Rendezvous { target: Vec2 },
    CircleFormation { center: Vec2, radius: f64 },
    Waypoint { target: Vec2 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BehaviorSpec {
    pub kind: BehaviorKind,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub robots: Vec<RobotState>,
    pub subgroup_behaviors: BTreeMap<SubgroupId, BehaviorSpec>,
    pub config: WorldConfig,
    pub step_count: usize,
}

/// A violated world invariant. Violations are data, not errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Safety(RobotId, RobotId),
    GlobalConnectivity,
    SubgroupConnectivity(SubgroupId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Safety(i, j) => write!(f, "safety violation ({i},{j})"),
            Violation::GlobalConnectivity => f.write_str("global connectivity lost"),
            Violation::SubgroupConnectivity(m) => {
                write!(f, "subgroup {m} induced graph disconnected")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("scenario has no robots")]
    NoRobots,
    #[error("robot ids must be dense 0..N-1 in order; found id {found} at index {index}")]
    RobotIds { index: usize, found: RobotId },
    #[error("subgroup ids must be dense 0..M-1; subgroup {0} has no robots")]
    SubgroupIds(SubgroupId),
    #[error("robot {0} has non-positive speed limit")]
    SpeedLimit(RobotId),
    #[error("robot {0} has a non-finite position or heading")]
    NonFinite(RobotId),
    #[error("radii must satisfy 0 < safe_radius < comm_radius")]
    Radii,
    #[error("gamma must be positive")]
    Gamma,
    #[error("dt must be positive")]
    Dt,
    #[error("lambda must exceed 1 in explicit mode")]
    Lambda,
    #[error("unicycle look-ahead must be positive")]
    Lookahead,
    #[error("velocity bound needs at least 4 facets")]
    Facets,
    #[error("subgroup {0} has no behavior")]
    MissingBehavior(SubgroupId),
    #[error("behavior for subgroup {0} has negative gain or non-positive radius")]
    Behavior(SubgroupId),
    #[error("initial graph disconnected")]
    InitialGraphDisconnected,
    #[error("subgroup {0} induced graph disconnected")]
    SubgroupDisconnected(SubgroupId),
    #[error("safety violation ({0},{1})")]
    InitialSafety(RobotId, RobotId),
}

impl WorldConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.safe_radius > 0.0 && self.safe_radius < self.comm_radius) {
            return Err(ScenarioError::Radii);
        }
        if !(self.gamma > 0.0) {
            return Err(ScenarioError::Gamma);
        }
        if !(self.dt > 0.0) {
            return Err(ScenarioError::Dt);
        }
        if let LambdaMode::Explicit(l) = self.lambda_mode {
            if !(l > 1.0) {
                return Err(ScenarioError::Lambda);
            }
        }
        if let Dynamics::Unicycle { lookahead } = self.dynamics {
            if !(lookahead > 0.0) {
                return Err(ScenarioError::Lookahead);
            }
        }
        if self.qp.velocity_facets < 4 {
            return Err(ScenarioError::Facets);
        }
        Ok(())
    }
}

impl Scenario {
    pub fn subgroup_count(&self) -> usize {
        subgroup_count(&self.robots)
    }

    /// Checks every scenario invariant, reporting the first one violated.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.config.validate()?;
        if self.robots.is_empty() {
            return Err(ScenarioError::NoRobots);
        }
        for (index, r) in self.robots.iter().enumerate() {
            if r.id != index {
                return Err(ScenarioError::RobotIds { index, found: r.id });
            }
            if !(r.speed_limit > 0.0) {
                return Err(ScenarioError::SpeedLimit(r.id));
            }
            if !r.position.is_finite() || !r.heading.is_finite() {
                return Err(ScenarioError::NonFinite(r.id));
            }
        }
        let m = self.subgroup_count();
        let mut seen = alloc::vec![false; m];
        for r in &self.robots {
            seen[r.subgroup] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(ScenarioError::SubgroupIds(missing));
        }
        for sg in 0..m {
            let spec = self
                .subgroup_behaviors
                .get(&sg)
                .ok_or(ScenarioError::MissingBehavior(sg))?;
            let radius_ok = match spec.kind {
                BehaviorKind::CircleFormation { radius, .. } => radius > 0.0,
                _ => true,
            };
            if !(spec.gain >= 0.0) || !radius_ok {
                return Err(ScenarioError::Behavior(sg));
            }
        }
        if let Some(v) = validate_world(&self.robots, &self.config).into_iter().next() {
            return Err(match v {
                Violation::Safety(i, j) => ScenarioError::InitialSafety(i, j),
                Violation::GlobalConnectivity => ScenarioError::InitialGraphDisconnected,
                Violation::SubgroupConnectivity(m) => ScenarioError::SubgroupDisconnected(m),
            });
        }
        Ok(())
    }
}

/// Number of subgroups, taken as one past the largest subgroup id.
pub fn subgroup_count(robots: &[RobotState]) -> usize {
    robots.iter().map(|r| r.subgroup + 1).max().unwrap_or(0)
}

/// Lists every violated world invariant at the given state: pairwise
/// safety, global connectivity and per-subgroup induced connectivity of
/// the proximity graph.
pub fn validate_world(robots: &[RobotState], config: &WorldConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    for i in 0..robots.len() {
        for j in (i + 1)..robots.len() {
            let h = graph::h_safety(robots[i].position, robots[j].position, config.safe_radius);
            if h < 0.0 {
                out.push(Violation::Safety(i, j));
            }
        }
    }
    let positions: Vec<Vec2> = robots.iter().map(|r| r.position).collect();
    let edges = graph::proximity_pairs(&positions, config.comm_radius);
    if !graph::edges_connected(robots.len(), &edges) {
        out.push(Violation::GlobalConnectivity);
    }
    let subgroups: Vec<SubgroupId> = robots.iter().map(|r| r.subgroup).collect();
    for m in 0..subgroup_count(robots) {
        if !graph::edges_induced_connected(&subgroups, &edges, m) {
            out.push(Violation::SubgroupConnectivity(m));
        }
    }
    out
}

/// Deterministic generator for stream `stream` of a run seeded by `seed`.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    fn robot(id: usize, x: f64, y: f64, sg: usize) -> RobotState {
        RobotState {
            id,
            position: Vec2::new(x, y),
            heading: 0.0,
            subgroup: sg,
            speed_limit: 1.0,
        }
    }

    fn scenario(robots: Vec<RobotState>) -> Scenario {
        let m = subgroup_count(&robots);
        let spec = BehaviorSpec {
            kind: BehaviorKind::Rendezvous { target: Vec2::ZERO },
            gain: 1.0,
        };
        Scenario {
            robots,
            subgroup_behaviors: (0..m).map(|s| (s, spec)).collect(),
            config: WorldConfig::default(),
            step_count: 10,
        }
    }

    #[test]
    fn minimal_connected_case_is_valid() {
        let s = scenario(alloc::vec![robot(0, 0.0, 0.0, 0), robot(1, 0.5, 0.0, 0)]);
        assert_eq!(s.validate(), Ok(()));
    }

    #[test]
    fn distant_pair_is_disconnected() {
        let s = scenario(alloc::vec![robot(0, 0.0, 0.0, 0), robot(1, 2.0, 0.0, 0)]);
        let err = s.validate().unwrap_err();
        assert_eq!(err, ScenarioError::InitialGraphDisconnected);
        assert_eq!(alloc::format!("{err}"), "initial graph disconnected");
    }

    #[test]
    fn split_subgroup_is_rejected() {
        // 1 and 2 are 1.6 apart but both within 0.8 of robot 0.
        let s = scenario(alloc::vec![
            robot(0, 0.0, 0.0, 0),
            robot(1, -0.8, 0.0, 1),
            robot(2, 0.8, 0.0, 1),
        ]);
        let err = s.validate().unwrap_err();
        assert_eq!(alloc::format!("{err}"), "subgroup 1 induced graph disconnected");
    }

    #[test]
    fn validate_world_reports() {
        let cfg = WorldConfig::default();
        let ok = [robot(0, 0.0, 0.0, 0), robot(1, 0.5, 0.0, 0)];
        assert!(validate_world(&ok, &cfg).is_empty());

        let close = [robot(0, 0.0, 0.0, 0), robot(1, cfg.safe_radius / 2.0, 0.0, 0)];
        let v = validate_world(&close, &cfg);
        assert_eq!(v, alloc::vec![Violation::Safety(0, 1)]);
        assert_eq!(alloc::format!("{}", v[0]), "safety violation (0,1)");

        let far = [robot(0, 0.0, 0.0, 0), robot(1, 3.0, 0.0, 0)];
        let v = validate_world(&far, &cfg);
        assert!(v.contains(&Violation::GlobalConnectivity));
        assert_eq!(alloc::format!("{}", Violation::GlobalConnectivity), "global connectivity lost");
    }

    #[test]
    fn config_invariants() {
        let mut c = WorldConfig::default();
        c.safe_radius = c.comm_radius;
        assert_eq!(c.validate(), Err(ScenarioError::Radii));
        let c = WorldConfig { lambda_mode: LambdaMode::Explicit(1.0), ..WorldConfig::default() };
        assert_eq!(c.validate(), Err(ScenarioError::Lambda));
        let c = WorldConfig { gamma: 0.0, ..WorldConfig::default() };
        assert_eq!(c.validate(), Err(ScenarioError::Gamma));
    }

    #[test]
    fn dense_ids_required() {
        let mut s = scenario(alloc::vec![robot(0, 0.0, 0.0, 0), robot(1, 0.5, 0.0, 0)]);
        s.robots[1].id = 5;
        assert!(matches!(s.validate(), Err(ScenarioError::RobotIds { index: 1, found: 5 })));
        let s = scenario(alloc::vec![robot(0, 0.0, 0.0, 0), robot(1, 0.5, 0.0, 2)]);
        assert_eq!(s.validate(), Err(ScenarioError::SubgroupIds(1)));
    }
}
