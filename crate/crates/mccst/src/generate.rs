//! Scenario generators: the 40-robot, four-subgroup mixing demo and the
//! random team layouts used by sweeps.

use std::collections::BTreeMap;

use mccst_core::model::{seeded_rng, BehaviorKind, BehaviorSpec, RobotState, Scenario, WorldConfig};
use mccst_core::protocol::DeliveryPolicy;
use mccst_core::Vec2;
use rand::Rng;

/// Attempts per generator call before giving up.
pub const MAX_RETRIES: usize = 100;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("no valid {n}-robot layout after {attempts} attempts (last error: {last})")]
pub struct GenerateError {
    pub n: usize,
    pub attempts: usize,
    pub last: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutParams {
    /// Grid pitch inside a subgroup block.
    pub spacing: f64,
    /// Uniform jitter half-width per coordinate.
    pub jitter: f64,
    /// Distance from the team centroid to each subgroup's target.
    pub reach: f64,
    pub formation_radius: f64,
    pub steps: usize,
}

impl Default for LayoutParams {
    fn default() -> Self {
        Self { spacing: 0.3, jitter: 0.04, reach: 3.5, formation_radius: 0.6, steps: 1500 }
    }
}

/// Sizes of `k` subgroups over `n` robots, as even as possible.
pub fn split_sizes(n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|m| n / k + usize::from(m < n % k)).collect()
}

/// Robots on a jittered grid per subgroup. Subgroup blocks sit on a
/// square grid of cells one grid pitch apart, so neighbouring blocks are
/// in range of each other. Even subgroups rendezvous and odd subgroups
/// form circles, each at `reach` from the team centroid in the direction
/// of its block.
pub fn block_layout(
    rng: &mut impl Rng,
    sizes: &[usize],
    config: &WorldConfig,
    params: &LayoutParams,
) -> Scenario {
    let k = sizes.len();
    let cell_cols = (k as f64).sqrt().ceil() as usize;
    let block_cols: Vec<usize> = sizes.iter().map(|&s| (s as f64).sqrt().ceil().max(1.0) as usize).collect();
    let widest = block_cols.iter().copied().max().unwrap_or(1);
    let tallest = sizes.iter().zip(&block_cols).map(|(&s, &c)| s.div_ceil(c)).max().unwrap_or(1);
    let pitch_x = widest as f64 * params.spacing;
    let pitch_y = tallest as f64 * params.spacing;

    let mut robots = Vec::new();
    let mut centroids = Vec::new();
    for (m, (&size, &cols)) in sizes.iter().zip(&block_cols).enumerate() {
        let origin = Vec2::new((m % cell_cols) as f64 * pitch_x, (m / cell_cols) as f64 * pitch_y);
        let mut sum = Vec2::ZERO;
        for s in 0..size {
            let grid = Vec2::new((s % cols) as f64, (s / cols) as f64) * params.spacing;
            let jitter = Vec2::new(
                rng.random_range(-params.jitter..=params.jitter),
                rng.random_range(-params.jitter..=params.jitter),
            );
            let position = origin + grid + jitter;
            sum += position;
            robots.push(RobotState {
                id: robots.len(),
                position,
                heading: rng.random_range(0.0..std::f64::consts::TAU),
                subgroup: m,
                speed_limit: 1.0,
            });
        }
        centroids.push(sum * (1.0 / size.max(1) as f64));
    }
    let team = centroids.iter().fold(Vec2::ZERO, |a, &c| a + c) * (1.0 / k.max(1) as f64);
    let mut behaviors = BTreeMap::new();
    for (m, &c) in centroids.iter().enumerate() {
        let dir = c - team;
        let dir = if dir.norm() > 1e-9 {
            dir * (1.0 / dir.norm())
        } else {
            Vec2::from_angle(std::f64::consts::TAU * m as f64 / k as f64)
        };
        let goal = team + dir * params.reach;
        let kind = if m % 2 == 0 {
            BehaviorKind::Rendezvous { target: goal }
        } else {
            BehaviorKind::CircleFormation { center: goal, radius: params.formation_radius }
        };
        behaviors.insert(m, BehaviorSpec { kind, gain: 1.0 });
    }
    Scenario { robots, subgroup_behaviors: behaviors, config: config.clone(), step_count: params.steps }
}

/// Retries `block_layout` with fresh randomness until the scenario
/// validates.
pub fn valid_layout(
    seed: u64,
    sizes: &[usize],
    config: &WorldConfig,
    params: &LayoutParams,
) -> Result<Scenario, GenerateError> {
    let n = sizes.iter().sum();
    let mut last = String::new();
    for attempt in 0..MAX_RETRIES {
        let mut rng = seeded_rng(seed, attempt as u64);
        let s = block_layout(&mut rng, sizes, config, params);
        match s.validate() {
            Ok(()) => return Ok(s),
            Err(e) => last = e.to_string(),
        }
    }
    Err(GenerateError { n, attempts: MAX_RETRIES, last })
}

/// Configuration of the mixing demo: R_s = 0.02 m and randomized message
/// delivery, other values default.
pub fn demo_config(seed: u64) -> WorldConfig {
    WorldConfig { safe_radius: 0.02, seed, delivery: DeliveryPolicy::RandomizedDelay(seed), ..WorldConfig::default() }
}

/// Forty robots in four subgroups of ten; two subgroups rendezvous and two
/// form circles at spread-out goals. The seed only moves the jitter.
pub fn demo_scenario(seed: u64) -> Result<Scenario, GenerateError> {
    valid_layout(seed, &split_sizes(40, 4), &demo_config(seed), &LayoutParams::default())
}

/// Random team of `n` robots in `k` subgroups for sweeps.
pub fn sweep_scenario(seed: u64, n: usize, k: usize, steps: usize) -> Result<Scenario, GenerateError> {
    let params = LayoutParams { steps, ..LayoutParams::default() };
    valid_layout(seed, &split_sizes(n, k.min(n).max(1)), &demo_config(seed), &params)
}
