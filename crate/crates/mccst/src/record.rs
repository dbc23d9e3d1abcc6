//! Runs that keep every frame for CSV output and trajectory comparisons.

use mccst_core::model::{RobotState, Scenario};
use mccst_core::sim::{ConnectivityMode, SimError, StallDetector, StepReport, World};
use mccst_core::Vec2;

/// State before a step together with the controls computed from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub time: f64,
    pub robots: Vec<RobotState>,
    pub u_hat: Vec<Vec2>,
    pub u_star: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub mode: ConnectivityMode,
    pub frames: Vec<Frame>,
    pub reports: Vec<StepReport>,
    pub world: World,
    pub stalled_at: Option<usize>,
}

impl Recording {
    /// Time average of the perturbation column.
    pub fn mean_perturbation(&self) -> f64 {
        mean(self.reports.iter().map(|r| r.perturbation))
    }

    pub fn final_distance(&self) -> Option<f64> {
        self.reports.last().map(|r| r.mean_dist_to_target)
    }

    pub fn min_distance(&self) -> Option<f64> {
        self.reports.iter().filter_map(|r| r.min_pair_distance).reduce(f64::min)
    }

    pub fn trajectory_csv(&self) -> String {
        let mut s = String::from(crate::formats::TRAJECTORY_HEADER);
        s.push('\n');
        for f in &self.frames {
            crate::formats::trajectory_rows(&mut s, f.time, &f.robots, &f.u_hat, &f.u_star);
        }
        s
    }
}

pub fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn record(scenario: &Scenario, mode: ConnectivityMode, steps: usize) -> Result<Recording, SimError> {
    let mut world = World::new(scenario, mode)?;
    let mut frames = Vec::with_capacity(steps);
    let mut reports = Vec::with_capacity(steps);
    let mut stall = StallDetector::default();
    for _ in 0..steps {
        let time = world.time;
        let robots = world.robots.clone();
        let (report, controls) = world.step_with_controls()?;
        stall.observe(&report);
        frames.push(Frame { time, robots, u_hat: controls.u_hat, u_star: controls.u_star });
        reports.push(report);
    }
    Ok(Recording { mode, frames, reports, world, stalled_at: stall.stalled_at() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use mccst_core::sim::run_steps;

    #[test]
    fn recording_matches_plain_run() {
        let s = crate::generate::sweep_scenario(3, 8, 2, 30).unwrap();
        let rec = record(&s, ConnectivityMode::DistributedMccst, 30).unwrap();
        let plain = run_steps(&s, ConnectivityMode::DistributedMccst, 30).unwrap();
        assert_eq!(rec.reports, plain.reports);
        assert_eq!(rec.world, plain.world);
        assert_eq!(rec.frames[0].robots, s.robots);
        assert_eq!(rec.trajectory_csv().lines().count(), 1 + 30 * 8);
    }
}
