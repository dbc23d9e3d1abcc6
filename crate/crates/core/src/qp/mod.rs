//! Barrier-certificate rows and the minimally invasive control QP
//!
//! minimize Σ‖u_i − û_i‖²  subject to  a_k·u ≤ b_k  for every row k.

use alloc::vec::Vec;
use core::fmt;

use crate::model::{RobotId, RobotState, WorldConfig};
use crate::Vec2;

pub mod random;
pub mod reference;
mod solver;

pub use solver::solve_qp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RowKind {
    Safety(RobotId, RobotId),
    Connectivity(RobotId, RobotId),
    /// Robot and facet index.
    VelocityFacet(RobotId, usize),
}

impl RowKind {
    pub fn tag(&self) -> &'static str {
        match self {
            RowKind::Safety(..) => "safety",
            RowKind::Connectivity(..) => "connectivity",
            RowKind::VelocityFacet(..) => "velocity",
        }
    }
}

/// One linear inequality `Σ coeffs[r]·u_r ≤ bound` over the joint control.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRow {
    pub kind: RowKind,
    /// Sparse gradient: robot id with the 2-vector acting on its control.
    pub coeffs: Vec<(RobotId, Vec2)>,
    pub bound: f64,
}

impl ConstraintRow {
    /// `a·u` for a joint control.
    pub fn eval(&self, u: &[Vec2]) -> f64 {
        self.coeffs.iter().map(|&(r, g)| g.dot(u[r])).sum()
    }

    /// Positive when `u` violates the row.
    pub fn violation(&self, u: &[Vec2]) -> f64 {
        self.eval(u) - self.bound
    }

    pub fn gradient_norm(&self) -> f64 {
        libm::sqrt(self.coeffs.iter().map(|&(_, g)| g.norm_sq()).sum())
    }

    /// Zero gradient with a negative bound: no control satisfies it.
    pub fn is_degenerate(&self) -> bool {
        self.gradient_norm() == 0.0 && self.bound < 0.0
    }
}

/// −2(x_i−x_j)·(u_i−u_j) ≤ γ(‖x_i−x_j‖² − R_s²).
pub fn safety_row(i: usize, j: usize, x: &[Vec2], gamma: f64, safe_radius: f64) -> ConstraintRow {
    debug_assert_ne!(i, j);
    let d = x[i] - x[j];
    ConstraintRow {
        kind: RowKind::Safety(i, j),
        coeffs: alloc::vec![(i, d * -2.0), (j, d * 2.0)],
        bound: gamma * (d.norm_sq() - safe_radius * safe_radius),
    }
}

/// 2(x_i−x_j)·(u_i−u_j) ≤ γ(R_c² − ‖x_i−x_j‖²).
pub fn connectivity_row(i: usize, j: usize, x: &[Vec2], gamma: f64, comm_radius: f64) -> ConstraintRow {
    debug_assert_ne!(i, j);
    let d = x[i] - x[j];
    ConstraintRow {
        kind: RowKind::Connectivity(i, j),
        coeffs: alloc::vec![(i, d * 2.0), (j, d * -2.0)],
        bound: gamma * (comm_radius * comm_radius - d.norm_sq()),
    }
}

/// Inscribed regular polygon of the disc ‖u_i‖ ≤ α_i: facet k has outward
/// normal at angle 2πk/facets and offset α_i·cos(π/facets).
pub fn velocity_rows(i: usize, alpha: f64, facets: usize) -> Vec<ConstraintRow> {
    debug_assert!(facets >= 4);
    let offset = alpha * libm::cos(core::f64::consts::PI / facets as f64);
    (0..facets)
        .map(|k| {
            let theta = 2.0 * core::f64::consts::PI * k as f64 / facets as f64;
            ConstraintRow {
                kind: RowKind::VelocityFacet(i, k),
                coeffs: alloc::vec![(i, Vec2::from_angle(theta))],
                bound: offset,
            }
        })
        .collect()
}

/// True when the safety row of a pair can never bind: under the speed
/// bounds its left side is at most 2‖d‖(α_i+α_j).
pub fn safety_row_redundant(xi: Vec2, xj: Vec2, alpha_i: f64, alpha_j: f64, gamma: f64, safe_radius: f64) -> bool {
    let d_sq = (xi - xj).norm_sq();
    gamma * (d_sq - safe_radius * safe_radius) >= 2.0 * libm::sqrt(d_sq) * (alpha_i + alpha_j)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    /// Stacked nominal controls û (2N variables).
    pub nominal: Vec<Vec2>,
    pub rows: Vec<ConstraintRow>,
    /// Safety rows left out as provably inactive.
    pub pruned_safety_rows: usize,
}

impl QpProblem {
    pub fn n_vars(&self) -> usize {
        2 * self.nominal.len()
    }

    pub fn count(&self, tag: &str) -> usize {
        self.rows.iter().filter(|r| r.kind.tag() == tag).count()
    }
}

/// Safety rows for all pairs, one connectivity row per enforced edge and
/// the speed facets of every robot.
pub fn assemble_qp(
    robots: &[RobotState],
    u_hat: &[Vec2],
    enforced: &[(usize, usize)],
    config: &WorldConfig,
) -> QpProblem {
    let x: Vec<Vec2> = robots.iter().map(|r| r.position).collect();
    let n = robots.len();
    let mut rows = Vec::with_capacity(n * (n.saturating_sub(1)) / 2 + enforced.len() + n * config.qp.velocity_facets);
    let mut pruned = 0;
    for i in 0..n {
        for j in i + 1..n {
            if config.qp.prune_safety
                && safety_row_redundant(
                    x[i],
                    x[j],
                    robots[i].speed_limit,
                    robots[j].speed_limit,
                    config.gamma,
                    config.safe_radius,
                )
            {
                pruned += 1;
                continue;
            }
            rows.push(safety_row(j, i, &x, config.gamma, config.safe_radius));
        }
    }
    for &(i, j) in enforced {
        rows.push(connectivity_row(i, j, &x, config.gamma, config.comm_radius));
    }
    for r in robots {
        rows.extend(velocity_rows(r.id, r.speed_limit, config.qp.velocity_facets));
    }
    QpProblem { nominal: u_hat.to_vec(), rows, pruned_safety_rows: pruned }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    FellBackToZero,
}

impl fmt::Display for QpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QpStatus::Optimal => "optimal",
            QpStatus::FellBackToZero => "fallback",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FallbackReason {
    /// A row with zero gradient and negative bound.
    DegenerateRow(usize),
    Infeasible,
    IterationBudget,
    /// Terminated, but the KKT residual exceeded the tolerance.
    Residual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub u_star: Vec<Vec2>,
    /// Row indices of the final active set, ascending.
    pub active_set: Vec<usize>,
    /// Multipliers aligned with `active_set`.
    pub multipliers: Vec<f64>,
    pub kkt_residual: f64,
    pub status: QpStatus,
    pub iterations: usize,
    pub fallback: Option<FallbackReason>,
}

/// Largest of: stationarity ‖(u−û) + Σ μ_k a_k‖∞, primal violation,
/// negative multipliers and |μ_k·slack_k|.
pub fn kkt_residual(problem: &QpProblem, u: &[Vec2], active: &[usize], mu: &[f64]) -> f64 {
    let mut station: Vec<Vec2> = u.iter().zip(&problem.nominal).map(|(&a, &b)| a - b).collect();
    let mut worst = 0.0f64;
    for (&k, &m) in active.iter().zip(mu) {
        let row = &problem.rows[k];
        for &(r, g) in &row.coeffs {
            station[r] += g * m;
        }
        worst = worst.max(-m).max((m * row.violation(u)).abs());
    }
    for s in &station {
        worst = worst.max(s.x.abs()).max(s.y.abs());
    }
    for row in &problem.rows {
        worst = worst.max(row.violation(u));
    }
    worst
}

/// Mean squared deviation (1/N)Σ‖u*_i − û_i‖².
pub fn perturbation(u_star: &[Vec2], u_hat: &[Vec2]) -> f64 {
    assert_eq!(u_star.len(), u_hat.len());
    if u_star.is_empty() {
        return 0.0;
    }
    u_star.iter().zip(u_hat).map(|(&a, &b)| (a - b).norm_sq()).sum::<f64>() / u_star.len() as f64
}
