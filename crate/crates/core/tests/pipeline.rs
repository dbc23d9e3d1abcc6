use std::collections::BTreeMap;

use mccst_core::graph::{algebraic_connectivity, build_comm_graph, inflate_weights, kruskal_mccst};
use mccst_core::model::{BehaviorKind, BehaviorSpec, Dynamics, RobotState, Scenario, WorldConfig};
use mccst_core::protocol::{run_protocol, DeliveryPolicy};
use mccst_core::sim::{run_steps, ConnectivityMode, World};
use mccst_core::Vec2;

/// Two subgroups of four side by side, pulled in opposite directions.
fn tug_of_war(dynamics: Dynamics) -> Scenario {
    let robots = (0..8)
        .map(|i| RobotState {
            id: i,
            position: Vec2::new(0.4 * i as f64, 0.05 * (i % 2) as f64),
            heading: 0.0,
            subgroup: i / 4,
            speed_limit: 1.0,
        })
        .collect();
    let mut behaviors = BTreeMap::new();
    behaviors.insert(0, BehaviorSpec { kind: BehaviorKind::Rendezvous { target: Vec2::new(-3.0, 0.0) }, gain: 1.0 });
    behaviors.insert(
        1,
        BehaviorSpec { kind: BehaviorKind::CircleFormation { center: Vec2::new(6.0, 0.0), radius: 0.4 }, gain: 1.0 },
    );
    let config = WorldConfig {
        dynamics,
        delivery: DeliveryPolicy::RandomizedDelay(9),
        ..WorldConfig::default()
    };
    Scenario { robots, subgroup_behaviors: behaviors, config, step_count: 400 }
}

#[test]
fn every_mode_keeps_the_team_safe_and_connected() {
    for dynamics in [Dynamics::SingleIntegrator, Dynamics::Unicycle { lookahead: 0.1 }] {
        let scenario = tug_of_war(dynamics);
        for mode in ConnectivityMode::ALL {
            let out = run_steps(&scenario, mode, scenario.step_count).unwrap();
            assert_eq!(out.reports.len(), 400);
            for r in &out.reports {
                assert!(r.connected(), "{mode} step {}", r.step);
                assert!(r.min_pair_distance.unwrap() >= scenario.config.safe_radius);
            }
        }
    }
}

#[test]
fn distributed_and_centralized_trajectories_coincide() {
    let scenario = tug_of_war(Dynamics::SingleIntegrator);
    let mut a = World::new(&scenario, ConnectivityMode::DistributedMccst).unwrap();
    let mut b = World::new(&scenario, ConnectivityMode::CentralizedMccst).unwrap();
    for _ in 0..200 {
        let (ra, rb) = (a.step().unwrap(), b.step().unwrap());
        assert!(ra.protocol_messages > 0);
        assert_eq!(rb.protocol_messages, 0);
        assert_eq!(a.enforced_edges(), b.enforced_edges());
        assert_eq!(a.robots, b.robots);
    }
}

#[test]
fn initial_tree_spans_and_keeps_subgroups_whole() {
    let scenario = tug_of_war(Dynamics::SingleIntegrator);
    let u_hat = vec![Vec2::new(0.3, 0.0); 8];
    let graph = inflate_weights(build_comm_graph(&scenario.robots, &scenario.config, &u_hat), scenario.config.lambda_mode)
        .unwrap();
    assert!(algebraic_connectivity(&graph) > 0.0);
    let (tree, stats) = run_protocol(&graph, DeliveryPolicy::ImmediateFifo).unwrap();
    assert_eq!(tree, kruskal_mccst(&graph).unwrap());
    assert_eq!(tree.edges().len(), 7);
    let inter = tree.edges().iter().filter(|&&(i, j)| i / 4 != j / 4).count();
    assert_eq!(inter, 1);
    assert_eq!(stats.merges.len(), 7);
}
