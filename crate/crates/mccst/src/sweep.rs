//! Team-size sweeps over all connectivity modes.

use std::fmt::Write as _;
use std::time::Instant;

use mccst_core::behaviors::nominal_controls_capped;
use mccst_core::graph::{build_comm_graph, inflate_weights};
use mccst_core::protocol::run_protocol;
use mccst_core::sim::{run_steps, speed_cap, ConnectivityMode, SimError};
use mccst_core::behaviors::BehaviorAssignment;
use rayon::prelude::*;

use crate::generate::{sweep_scenario, GenerateError};
use crate::record::mean;

/// Subgroups per generated team.
pub const SWEEP_SUBGROUPS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub sizes: Vec<usize>,
    pub reps: usize,
    pub steps: usize,
    pub seed: u64,
    pub modes: Vec<ConnectivityMode>,
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("sweep sizes must be at least 2, got {0}")]
    Size(usize),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error("N={n} rep {rep} mode {mode}: {source}")]
    Sim { n: usize, rep: usize, mode: ConnectivityMode, source: SimError },
}

/// One (mode, N, repetition) cell. Message columns are per protocol
/// construction, over the steps of the run; they are zero outside the
/// distributed mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub mode: ConnectivityMode,
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    pub steps: usize,
    pub messages_mean: f64,
    pub messages_min: u64,
    pub messages_max: u64,
    pub final_distance: f64,
    pub perturbation_mean: f64,
    pub min_pair_distance: f64,
    pub always_connected: bool,
    pub fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTiming {
    pub mode: ConnectivityMode,
    pub n: usize,
    pub rep: usize,
    pub run_seconds: f64,
    /// One distributed construction on the initial graph.
    pub construction_seconds: f64,
}

/// Seed of the team for a cell.
pub fn cell_seed(base: u64, n: usize, rep: usize) -> u64 {
    base.wrapping_add((n as u64) << 20).wrapping_add(rep as u64)
}

pub fn run_sweep(spec: &SweepSpec) -> Result<(Vec<SweepRow>, Vec<SweepTiming>), SweepError> {
    if let Some(&bad) = spec.sizes.iter().find(|&&n| n < 2) {
        return Err(SweepError::Size(bad));
    }
    let cells: Vec<(usize, usize)> = spec.sizes.iter().flat_map(|&n| (0..spec.reps).map(move |r| (n, r))).collect();
    let results: Vec<Result<Vec<(SweepRow, SweepTiming)>, SweepError>> =
        cells.par_iter().map(|&(n, rep)| run_cell(spec, n, rep)).collect();
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for cell in results {
        for (r, t) in cell? {
            rows.push(r);
            timings.push(t);
        }
    }
    let order = |m: ConnectivityMode, n: usize, rep: usize| (m, n, rep);
    rows.sort_by_key(|r| order(r.mode, r.n, r.rep));
    timings.sort_by_key(|t| order(t.mode, t.n, t.rep));
    Ok((rows, timings))
}

fn run_cell(spec: &SweepSpec, n: usize, rep: usize) -> Result<Vec<(SweepRow, SweepTiming)>, SweepError> {
    let seed = cell_seed(spec.seed, n, rep);
    let scenario = sweep_scenario(seed, n, SWEEP_SUBGROUPS, spec.steps)?;
    let assignment = BehaviorAssignment::new(&scenario.robots, &scenario.subgroup_behaviors);
    let u_hat = nominal_controls_capped(&scenario.robots, &assignment, speed_cap(&scenario.config));
    let graph = inflate_weights(build_comm_graph(&scenario.robots, &scenario.config, &u_hat), scenario.config.lambda_mode)
        .expect("lambda validated with the scenario");
    let clock = Instant::now();
    run_protocol(&graph, scenario.config.delivery).map_err(|e| SweepError::Sim {
        n,
        rep,
        mode: ConnectivityMode::DistributedMccst,
        source: e.into(),
    })?;
    let construction_seconds = clock.elapsed().as_secs_f64();

    spec.modes
        .iter()
        .map(|&mode| {
            let clock = Instant::now();
            let out = run_steps(&scenario, mode, spec.steps).map_err(|source| SweepError::Sim { n, rep, mode, source })?;
            let run_seconds = clock.elapsed().as_secs_f64();
            let msgs: Vec<u64> = out.reports.iter().map(|r| r.protocol_messages).collect();
            let row = SweepRow {
                mode,
                n,
                rep,
                seed,
                steps: spec.steps,
                messages_mean: mean(msgs.iter().map(|&m| m as f64)),
                messages_min: msgs.iter().copied().min().unwrap_or(0),
                messages_max: msgs.iter().copied().max().unwrap_or(0),
                final_distance: out.reports.last().map_or_else(
                    || mean(scenario.robots.iter().zip(assignment.bindings()).map(|(r, b)| (r.position - b.goal()).norm())),
                    |r| r.mean_dist_to_target,
                ),
                perturbation_mean: mean(out.reports.iter().map(|r| r.perturbation)),
                min_pair_distance: out.reports.iter().filter_map(|r| r.min_pair_distance).fold(f64::INFINITY, f64::min),
                always_connected: out.reports.iter().all(|r| r.connected()),
                fallbacks: out.reports.iter().filter(|r| r.qp_status != mccst_core::qp::QpStatus::Optimal).count(),
            };
            let timing = SweepTiming { mode, n, rep, run_seconds, construction_seconds };
            Ok((row, timing))
        })
        .collect()
}

pub const SWEEP_HEADER: &str = "mode,n,rep,seed,steps,messages_mean,messages_min,messages_max,final_distance,perturbation_mean,min_pair_distance,always_connected,fallbacks";

pub fn write_sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.mode,
            r.n,
            r.rep,
            r.seed,
            r.steps,
            r.messages_mean,
            r.messages_min,
            r.messages_max,
            r.final_distance,
            r.perturbation_mean,
            r.min_pair_distance,
            u8::from(r.always_connected),
            r.fallbacks
        );
    }
    s
}

pub const TIMING_HEADER: &str = "mode,n,rep,run_seconds,construction_seconds";

pub fn write_timing_csv(rows: &[SweepTiming]) -> String {
    let mut s = String::from(TIMING_HEADER);
    s.push('\n');
    for t in rows {
        let _ = writeln!(s, "{},{},{},{},{}", t.mode, t.n, t.rep, t.run_seconds, t.construction_seconds);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sizes_two_reps_give_four_rows_per_mode() {
        let spec = SweepSpec {
            sizes: vec![10, 20],
            reps: 2,
            steps: 3,
            seed: 1,
            modes: ConnectivityMode::ALL.to_vec(),
        };
        let (rows, timing) = run_sweep(&spec).unwrap();
        for mode in ConnectivityMode::ALL {
            assert_eq!(rows.iter().filter(|r| r.mode == mode).count(), 4);
        }
        assert_eq!(timing.len(), rows.len());
        assert!(rows.iter().all(|r| r.always_connected));
        let mccst: Vec<_> = rows.iter().filter(|r| r.mode == ConnectivityMode::DistributedMccst).collect();
        assert!(mccst.iter().all(|r| r.messages_min > 0));
        let csv = write_sweep_csv(&rows);
        assert_eq!(csv, write_sweep_csv(&run_sweep(&spec).unwrap().0));
        assert_eq!(csv.lines().count(), 17);
    }

    #[test]
    fn tiny_sizes_are_rejected() {
        let spec = SweepSpec { sizes: vec![1], reps: 1, steps: 1, seed: 0, modes: vec![ConnectivityMode::CentralizedMccst] };
        assert!(matches!(run_sweep(&spec), Err(SweepError::Size(1))));
    }
}
