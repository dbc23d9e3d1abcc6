//! Nominal task controllers û_i, saturated to the robot's speed limit.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::model::{BehaviorKind, BehaviorSpec, RobotState, SubgroupId};
use crate::Vec2;

/// Go-to-goal: gain·(target − x), saturated to `alpha`.
pub fn rendezvous_control(x: Vec2, target: Vec2, gain: f64, alpha: f64) -> Vec2 {
    ((target - x) * gain).saturate(alpha)
}

/// Point of `slot` on the circle, at angle 2π·slot/slot_count.
pub fn slot_point(center: Vec2, radius: f64, slot: usize, slot_count: usize) -> Vec2 {
    let theta = 2.0 * core::f64::consts::PI * slot as f64 / slot_count as f64;
    center + Vec2::from_angle(theta) * radius
}

pub fn circle_formation_control(
    x: Vec2,
    center: Vec2,
    radius: f64,
    slot: usize,
    slot_count: usize,
    gain: f64,
    alpha: f64,
) -> Vec2 {
    rendezvous_control(x, slot_point(center, radius, slot, slot_count), gain, alpha)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Binding {
    pub spec: BehaviorSpec,
    /// Position of the robot within its subgroup, by id order.
    pub slot: usize,
    pub slot_count: usize,
}

impl Binding {
    /// Where the behavior drives the robot: the target, or its formation slot.
    pub fn goal(&self) -> Vec2 {
        match self.spec.kind {
            BehaviorKind::Rendezvous { target } | BehaviorKind::Waypoint { target } => target,
            BehaviorKind::CircleFormation { center, radius } => slot_point(center, radius, self.slot, self.slot_count),
        }
    }
}

/// Per-robot behavior binding, fixed when the scenario is loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorAssignment {
    bindings: Vec<Binding>,
}

impl BehaviorAssignment {
    /// Binds each robot to its subgroup's behavior. Panics if a subgroup has
    /// no behavior; scenario validation rules that out.
    pub fn new(robots: &[RobotState], behaviors: &BTreeMap<SubgroupId, BehaviorSpec>) -> Self {
        let mut sizes: BTreeMap<SubgroupId, usize> = BTreeMap::new();
        for r in robots {
            *sizes.entry(r.subgroup).or_default() += 1;
        }
        let mut next: BTreeMap<SubgroupId, usize> = BTreeMap::new();
        let bindings = robots
            .iter()
            .map(|r| {
                let slot = next.entry(r.subgroup).or_default();
                let b = Binding { spec: behaviors[&r.subgroup], slot: *slot, slot_count: sizes[&r.subgroup] };
                *slot += 1;
                b
            })
            .collect();
        Self { bindings }
    }

    pub fn bindings(&self) -> &[Binding] {
        &self.bindings
    }

    pub fn get(&self, robot: usize) -> &Binding {
        &self.bindings[robot]
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }
}

pub fn nominal_control(robot: &RobotState, binding: &Binding) -> Vec2 {
    rendezvous_control(robot.position, binding.goal(), binding.spec.gain, robot.speed_limit)
}

pub fn nominal_controls(robots: &[RobotState], assignment: &BehaviorAssignment) -> Vec<Vec2> {
    nominal_controls_capped(robots, assignment, 1.0)
}

/// As [`nominal_controls`], saturating at `cap`·α_i instead of α_i.
pub fn nominal_controls_capped(robots: &[RobotState], assignment: &BehaviorAssignment, cap: f64) -> Vec<Vec2> {
    robots
        .iter()
        .zip(assignment.bindings())
        .map(|(r, b)| rendezvous_control(r.position, b.goal(), b.spec.gain, cap * r.speed_limit))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn robot(id: usize, x: f64, y: f64, subgroup: usize) -> RobotState {
        RobotState { id, position: Vec2::new(x, y), heading: 0.0, subgroup, speed_limit: 1.0 }
    }

    #[test]
    fn rendezvous_examples() {
        let t = Vec2::new(1.0, 2.0);
        assert_eq!(rendezvous_control(t, t, 1.0, 1.0), Vec2::ZERO);
        assert_eq!(rendezvous_control(Vec2::ZERO, Vec2::new(2.0, 0.0), 1.0, 1.0), Vec2::new(1.0, 0.0));
        assert_eq!(rendezvous_control(Vec2::ZERO, Vec2::new(0.3, 0.4), 1.0, 1.0), Vec2::new(0.3, 0.4));
    }

    #[test]
    fn slots_are_axis_aligned_for_four() {
        let c = Vec2::new(1.0, 1.0);
        let expect = [(2.0, 1.0), (1.0, 2.0), (0.0, 1.0), (1.0, 0.0)];
        for (slot, &(x, y)) in expect.iter().enumerate() {
            let p = slot_point(c, 1.0, slot, 4);
            assert!((p - Vec2::new(x, y)).norm() < 1e-12);
            assert_eq!(circle_formation_control(p, c, 1.0, slot, 4, 2.0, 1.0), Vec2::ZERO);
        }
    }

    #[test]
    fn converged_slots_are_evenly_spaced() {
        let c = Vec2::ZERO;
        let pts: Vec<Vec2> = (0..7).map(|s| slot_point(c, 2.0, s, 7)).collect();
        for k in 0..7 {
            let a = pts[k];
            let b = pts[(k + 1) % 7];
            let angle = libm::acos(a.dot(b) / (a.norm() * b.norm()));
            assert!((angle - 2.0 * core::f64::consts::PI / 7.0).abs() < 1e-9);
        }
    }

    #[test]
    fn dispatch() {
        let robots = [robot(0, 0.0, 0.0, 0), robot(1, 1.0, 0.0, 1), robot(2, 2.0, 0.0, 1), robot(3, 0.5, 0.0, 0)];
        let mut specs = BTreeMap::new();
        specs.insert(0, BehaviorSpec { kind: BehaviorKind::Rendezvous { target: Vec2::new(0.5, 0.5) }, gain: 1.0 });
        specs.insert(1, BehaviorSpec { kind: BehaviorKind::CircleFormation { center: Vec2::ZERO, radius: 1.0 }, gain: 1.0 });
        let a = BehaviorAssignment::new(&robots, &specs);
        let slots: Vec<usize> = a.bindings().iter().map(|b| b.slot).collect();
        assert_eq!(slots, [0, 0, 1, 1]);
        let u = nominal_controls(&robots, &a);
        assert_eq!(u[0], rendezvous_control(robots[0].position, Vec2::new(0.5, 0.5), 1.0, 1.0));
        assert_eq!(u[1], Vec2::ZERO);
        assert_eq!(u[2], circle_formation_control(robots[2].position, Vec2::ZERO, 1.0, 1, 2, 1.0, 1.0));

        specs.insert(0, BehaviorSpec { kind: BehaviorKind::Waypoint { target: Vec2::new(9.0, 9.0) }, gain: 0.0 });
        specs.insert(1, BehaviorSpec { kind: BehaviorKind::Rendezvous { target: Vec2::new(9.0, 9.0) }, gain: 0.0 });
        let a = BehaviorAssignment::new(&robots, &specs);
        assert!(nominal_controls(&robots, &a).iter().all(|&u| u == Vec2::ZERO));
    }

    proptest! {
        #[test]
        fn saturated(x in -5.0..5.0f64, y in -5.0..5.0f64, gain in 0.0..10.0f64, alpha in 0.01..2.0f64) {
            let u = rendezvous_control(Vec2::new(x, y), Vec2::ZERO, gain, alpha);
            prop_assert!(u.norm() <= alpha * (1.0 + 1e-12));
        }
    }
}
