//! Random small QP instances for cross-checking solvers.

use alloc::vec::Vec;

use rand_core::RngCore;

use crate::graph::random::{index, uniform};
use crate::graph::{proximity_pairs, DisjointSet};
use crate::model::{RobotState, WorldConfig};
use crate::Vec2;

#[derive(Debug, Clone)]
pub struct SmallInstance {
    pub robots: Vec<RobotState>,
    pub u_hat: Vec<Vec2>,
    /// A random spanning tree of the proximity graph.
    pub enforced: Vec<(usize, usize)>,
    pub config: WorldConfig,
}

/// Up to `max_robots` robots in a 1.2 m box, pairwise at least R_s apart
/// with a connected proximity graph; nominal controls up to twice the
/// speed limit so that facets bind too.
pub fn random_small_instance(rng: &mut impl RngCore, max_robots: usize) -> SmallInstance {
    let mut config = WorldConfig { gamma: uniform(rng, 0.5, 5.0), ..WorldConfig::default() };
    config.qp.velocity_facets = [4, 5, 6, 8][index(rng, 4)];
    config.qp.prune_safety = index(rng, 2) == 0;
    let n = 1 + index(rng, max_robots.max(1));
    loop {
        let x: Vec<Vec2> = (0..n).map(|_| Vec2::new(uniform(rng, 0.0, 1.2), uniform(rng, 0.0, 1.2))).collect();
        let separated = (0..n).all(|i| (i + 1..n).all(|j| (x[i] - x[j]).norm() >= config.safe_radius));
        let pairs = proximity_pairs(&x, config.comm_radius);
        if !separated || !crate::graph::edges_connected(n, &pairs) {
            continue;
        }
        let mut keyed: Vec<(u64, (usize, usize))> = pairs.iter().map(|&p| (rng.next_u64(), p)).collect();
        keyed.sort_unstable();
        let mut dsu = DisjointSet::new(n);
        let enforced: Vec<(usize, usize)> = keyed.into_iter().map(|(_, p)| p).filter(|&(i, j)| dsu.union(i, j)).collect();
        let robots: Vec<RobotState> = x
            .iter()
            .enumerate()
            .map(|(id, &position)| RobotState {
                id,
                position,
                heading: 0.0,
                subgroup: 0,
                speed_limit: uniform(rng, 0.3, 1.5),
            })
            .collect();
        let u_hat = robots
            .iter()
            .map(|r| Vec2::from_angle(uniform(rng, 0.0, core::f64::consts::TAU)) * uniform(rng, 0.0, 2.0 * r.speed_limit))
            .collect();
        return SmallInstance { robots, u_hat, enforced, config };
    }
}
