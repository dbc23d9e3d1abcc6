//! TOML scenario documents.
//!
//! ```toml
//! step_count = 1500
//!
//! [config]
//! comm_radius = 1.0
//! safe_radius = 0.02
//! gamma = 1.0
//! dt = 0.01
//! seed = 7
//! lambda_mode = { mode = "lexicographic" }      # or { mode = "explicit", lambda = 50.0 }
//! dynamics = { model = "single-integrator" }   # or { model = "unicycle", lookahead = 0.05 }
//! delivery = { policy = "fifo" }               # or { policy = "random", seed = 3 }
//! qp = { tolerance = 1e-8, velocity_facets = 8, prune_safety = true }
//!
//! [[robots]]
//! id = 0
//! position = [0.0, 0.0]
//! heading = 0.0
//! subgroup = 0
//! speed_limit = 1.0
//!
//! [[behaviors]]
//! subgroup = 0
//! gain = 1.0
//! kind = { type = "rendezvous", target = [3.0, 0.0] }
//! # { type = "circle-formation", center = [0.0, 3.0], radius = 0.5 }
//! # { type = "waypoint", target = [1.0, 1.0] }
//! ```
//!
//! Every `[config]` key is optional and defaults as above (R_s defaults to
//! 0.1). `heading` and `speed_limit` default to 0 and 1. Seeds are TOML
//! integers, so at most 2⁶³−1.

use std::collections::BTreeMap;
use std::path::Path;

use mccst_core::model::{
    BehaviorKind, BehaviorSpec, Dynamics, LambdaMode, QpSettings, RobotState, Scenario, ScenarioError, WorldConfig,
};
use mccst_core::protocol::DeliveryPolicy;
use mccst_core::Vec2;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read scenario {path}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed scenario document: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("seed {0} does not fit a TOML integer")]
    Seed(u64),
    #[error("duplicate behavior for subgroup {0}")]
    DuplicateBehavior(usize),
    #[error("invalid scenario: {0}")]
    Invalid(#[from] ScenarioError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    #[serde(default)]
    step_count: usize,
    #[serde(default)]
    config: ConfigDoc,
    robots: Vec<RobotDoc>,
    #[serde(default)]
    behaviors: Vec<BehaviorDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigDoc {
    comm_radius: f64,
    safe_radius: f64,
    gamma: f64,
    dt: f64,
    seed: i64,
    lambda_mode: LambdaDoc,
    dynamics: DynamicsDoc,
    delivery: DeliveryDoc,
    qp: QpDoc,
}

impl Default for ConfigDoc {
    fn default() -> Self {
        ConfigDoc::from_config(&WorldConfig::default()).expect("default seed fits")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
enum LambdaDoc {
    Lexicographic,
    Explicit { lambda: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
enum DynamicsDoc {
    SingleIntegrator,
    Unicycle { lookahead: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case", deny_unknown_fields)]
enum DeliveryDoc {
    Fifo,
    Random { seed: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct QpDoc {
    tolerance: f64,
    velocity_facets: usize,
    prune_safety: bool,
}

impl Default for QpDoc {
    fn default() -> Self {
        let q = QpSettings::default();
        QpDoc { tolerance: q.tolerance, velocity_facets: q.velocity_facets, prune_safety: q.prune_safety }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotDoc {
    id: usize,
    position: [f64; 2],
    #[serde(default)]
    heading: f64,
    #[serde(default)]
    subgroup: usize,
    #[serde(default = "one")]
    speed_limit: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BehaviorDoc {
    subgroup: usize,
    #[serde(default = "one")]
    gain: f64,
    kind: KindDoc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
enum KindDoc {
    Rendezvous { target: [f64; 2] },
    CircleFormation { center: [f64; 2], radius: f64 },
    Waypoint { target: [f64; 2] },
}

fn seed_to_doc(seed: u64) -> Result<i64, LoadError> {
    i64::try_from(seed).map_err(|_| LoadError::Seed(seed))
}

fn seed_from_doc(seed: i64) -> Result<u64, LoadError> {
    u64::try_from(seed).map_err(|_| LoadError::Seed(seed as u64))
}

impl ConfigDoc {
    fn from_config(c: &WorldConfig) -> Result<Self, LoadError> {
        Ok(ConfigDoc {
            comm_radius: c.comm_radius,
            safe_radius: c.safe_radius,
            gamma: c.gamma,
            dt: c.dt,
            seed: seed_to_doc(c.seed)?,
            lambda_mode: match c.lambda_mode {
                LambdaMode::Lexicographic => LambdaDoc::Lexicographic,
                LambdaMode::Explicit(lambda) => LambdaDoc::Explicit { lambda },
            },
            dynamics: match c.dynamics {
                Dynamics::SingleIntegrator => DynamicsDoc::SingleIntegrator,
                Dynamics::Unicycle { lookahead } => DynamicsDoc::Unicycle { lookahead },
            },
            delivery: match c.delivery {
                DeliveryPolicy::ImmediateFifo => DeliveryDoc::Fifo,
                DeliveryPolicy::RandomizedDelay(seed) => DeliveryDoc::Random { seed: seed_to_doc(seed)? },
            },
            qp: QpDoc {
                tolerance: c.qp.tolerance,
                velocity_facets: c.qp.velocity_facets,
                prune_safety: c.qp.prune_safety,
            },
        })
    }

    fn to_config(&self) -> Result<WorldConfig, LoadError> {
        Ok(WorldConfig {
            comm_radius: self.comm_radius,
            safe_radius: self.safe_radius,
            gamma: self.gamma,
            dt: self.dt,
            seed: seed_from_doc(self.seed)?,
            lambda_mode: match self.lambda_mode {
                LambdaDoc::Lexicographic => LambdaMode::Lexicographic,
                LambdaDoc::Explicit { lambda } => LambdaMode::Explicit(lambda),
            },
            dynamics: match self.dynamics {
                DynamicsDoc::SingleIntegrator => Dynamics::SingleIntegrator,
                DynamicsDoc::Unicycle { lookahead } => Dynamics::Unicycle { lookahead },
            },
            delivery: match self.delivery {
                DeliveryDoc::Fifo => DeliveryPolicy::ImmediateFifo,
                DeliveryDoc::Random { seed } => DeliveryPolicy::RandomizedDelay(seed_from_doc(seed)?),
            },
            qp: QpSettings {
                tolerance: self.qp.tolerance,
                velocity_facets: self.qp.velocity_facets,
                prune_safety: self.qp.prune_safety,
            },
        })
    }
}

fn v(p: [f64; 2]) -> Vec2 {
    Vec2::from(p)
}

/// Parses and validates a scenario document.
pub fn load_scenario(text: &str) -> Result<Scenario, LoadError> {
    let doc: ScenarioDoc = toml::from_str(text)?;
    let robots = doc
        .robots
        .iter()
        .map(|r| RobotState {
            id: r.id,
            position: v(r.position),
            heading: r.heading,
            subgroup: r.subgroup,
            speed_limit: r.speed_limit,
        })
        .collect();
    let mut subgroup_behaviors = BTreeMap::new();
    for b in &doc.behaviors {
        let kind = match b.kind {
            KindDoc::Rendezvous { target } => BehaviorKind::Rendezvous { target: v(target) },
            KindDoc::CircleFormation { center, radius } => BehaviorKind::CircleFormation { center: v(center), radius },
            KindDoc::Waypoint { target } => BehaviorKind::Waypoint { target: v(target) },
        };
        if subgroup_behaviors.insert(b.subgroup, BehaviorSpec { kind, gain: b.gain }).is_some() {
            return Err(LoadError::DuplicateBehavior(b.subgroup));
        }
    }
    let scenario = Scenario { robots, subgroup_behaviors, config: doc.config.to_config()?, step_count: doc.step_count };
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_scenario_file(path: &Path) -> Result<Scenario, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.display().to_string(), source })?;
    load_scenario(&text)
}

/// Renders a scenario as a document `load_scenario` reads back unchanged.
pub fn serialize_scenario(s: &Scenario) -> Result<String, LoadError> {
    let doc = ScenarioDoc {
        step_count: s.step_count,
        config: ConfigDoc::from_config(&s.config)?,
        robots: s
            .robots
            .iter()
            .map(|r| RobotDoc {
                id: r.id,
                position: r.position.into(),
                heading: r.heading,
                subgroup: r.subgroup,
                speed_limit: r.speed_limit,
            })
            .collect(),
        behaviors: s
            .subgroup_behaviors
            .iter()
            .map(|(&subgroup, spec)| BehaviorDoc {
                subgroup,
                gain: spec.gain,
                kind: match spec.kind {
                    BehaviorKind::Rendezvous { target } => KindDoc::Rendezvous { target: target.into() },
                    BehaviorKind::CircleFormation { center, radius } => {
                        KindDoc::CircleFormation { center: center.into(), radius }
                    }
                    BehaviorKind::Waypoint { target } => KindDoc::Waypoint { target: target.into() },
                },
            })
            .collect(),
    };
    Ok(toml::to_string(&doc).expect("scenario documents always serialize"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO: &str = r#"
step_count = 10
[config]
comm_radius = 1.0
safe_radius = 0.1

[[robots]]
id = 0
position = [0.0, 0.0]

[[robots]]
id = 1
position = [0.5, 0.0]

[[behaviors]]
subgroup = 0
kind = { type = "rendezvous", target = [1.0, 1.0] }
"#;

    #[test]
    fn minimal_two_robot_document() {
        let s = load_scenario(TWO).unwrap();
        assert_eq!(s.robots.len(), 2);
        assert_eq!(s.robots[1].position, Vec2::new(0.5, 0.0));
        assert_eq!(s.robots[1].speed_limit, 1.0);
        assert_eq!(s.config.gamma, 1.0);
        assert_eq!(s.step_count, 10);
    }

    #[test]
    fn disconnected_document_is_rejected() {
        let text = TWO.replace("[0.5, 0.0]", "[2.0, 0.0]");
        let err = load_scenario(&text).unwrap_err();
        assert_eq!(err.to_string(), "invalid scenario: initial graph disconnected");
    }

    #[test]
    fn subgroup_disconnected_document_is_rejected() {
        let text = r#"
[[robots]]
id = 0
position = [0.0, 0.0]
[[robots]]
id = 1
position = [-0.8, 0.0]
subgroup = 1
[[robots]]
id = 2
position = [0.8, 0.0]
subgroup = 1
[[behaviors]]
subgroup = 0
kind = { type = "waypoint", target = [0.0, 0.0] }
[[behaviors]]
subgroup = 1
kind = { type = "circle-formation", center = [0.0, 0.0], radius = 1.0 }
"#;
        let err = load_scenario(text).unwrap_err();
        assert!(err.to_string().ends_with("subgroup 1 induced graph disconnected"), "{err}");
    }

    #[test]
    fn malformed_documents() {
        assert!(matches!(load_scenario("robots = 3"), Err(LoadError::Parse(_))));
        assert!(matches!(load_scenario(&TWO.replace("comm_radius", "comm_radiuss")), Err(LoadError::Parse(_))));
        let dup = format!("{TWO}\n[[behaviors]]\nsubgroup = 0\nkind = {{ type = \"waypoint\", target = [0.0, 0.0] }}\n");
        assert!(matches!(load_scenario(&dup), Err(LoadError::DuplicateBehavior(0))));
    }

    #[test]
    fn unknown_variants_are_rejected() {
        let text = TWO.replace("\"rendezvous\"", "\"flocking\"");
        assert!(matches!(load_scenario(&text), Err(LoadError::Parse(_))));
    }

    #[test]
    fn demo_round_trips() {
        let s = crate::generate::demo_scenario(4).unwrap();
        assert_eq!(load_scenario(&serialize_scenario(&s).unwrap()).unwrap(), s);
    }
}
