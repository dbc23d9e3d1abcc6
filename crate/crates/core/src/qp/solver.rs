//! Dual active-set method (Goldfarb-Idnani) specialised to an identity
//! Hessian. Constraints enter one at a time, most violated first; the
//! factorisation N = J₁R of the active normals is kept up to date with
//! Givens rotations.

use alloc::vec;
use alloc::vec::Vec;

use super::{kkt_residual, FallbackReason, QpProblem, QpSolution, QpStatus};
use crate::Vec2;

/// Normalised violation a row must exceed to enter the active set.
const ADD_THRESHOLD: f64 = 1e-12;

struct Workspace {
    n: usize,
    /// Orthogonal n×n, row-major.
    j: Vec<f64>,
    /// Upper triangular, row-major; column c belongs to active[c].
    r: Vec<f64>,
    active: Vec<usize>,
    mu: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        let mut j = vec![0.0; n * n];
        for k in 0..n {
            j[k * n + k] = 1.0;
        }
        Self { n, j, r: vec![0.0; n * n], active: Vec::new(), mu: Vec::new() }
    }

    fn q(&self) -> usize {
        self.active.len()
    }

    /// d = Jᵀ n for a sparse normal.
    fn project(&self, normal: &[(usize, f64)], d: &mut [f64]) {
        d.iter_mut().for_each(|v| *v = 0.0);
        for &(idx, v) in normal {
            let row = &self.j[idx * self.n..(idx + 1) * self.n];
            for (dc, &jc) in d.iter_mut().zip(row) {
                *dc += jc * v;
            }
        }
    }

    /// Rotates columns a, b of J by (c, s).
    fn rotate_j(&mut self, a: usize, b: usize, c: f64, s: f64) {
        let n = self.n;
        for k in 0..n {
            let x = self.j[k * n + a];
            let y = self.j[k * n + b];
            self.j[k * n + a] = c * x + s * y;
            self.j[k * n + b] = -s * x + c * y;
        }
    }

    /// z = J₂d₂ (primal direction) and r = R⁻¹d₁ (dual direction).
    fn directions(&self, d: &[f64], z: &mut [f64], r: &mut Vec<f64>) {
        let (n, q) = (self.n, self.q());
        for (k, zk) in z.iter_mut().enumerate() {
            let row = &self.j[k * n..(k + 1) * n];
            *zk = row[q..].iter().zip(&d[q..]).map(|(a, b)| a * b).sum();
        }
        r.clear();
        r.resize(q, 0.0);
        for i in (0..q).rev() {
            let mut acc = d[i];
            for c in i + 1..q {
                acc -= self.r[i * n + c] * r[c];
            }
            r[i] = acc / self.r[i * n + i];
        }
    }

    /// Appends a normal whose projection is `d`. Returns false if it is
    /// numerically dependent on the active set.
    fn add(&mut self, row: usize, d: &mut [f64], mu: f64) -> bool {
        let (n, q) = (self.n, self.q());
        for k in (q + 1..n).rev() {
            if d[k] == 0.0 {
                continue;
            }
            let h = libm::hypot(d[k - 1], d[k]);
            let (c, s) = (d[k - 1] / h, d[k] / h);
            d[k - 1] = h;
            d[k] = 0.0;
            self.rotate_j(k - 1, k, c, s);
        }
        if d[q].abs() <= 1e-14 {
            return false;
        }
        for i in 0..=q {
            self.r[i * n + q] = d[i];
        }
        self.active.push(row);
        self.mu.push(mu);
        true
    }

    /// Removes the active constraint at position l and retriangularises R.
    fn drop(&mut self, l: usize) {
        let (n, q) = (self.n, self.q());
        for c in l..q - 1 {
            for i in 0..=c + 1 {
                self.r[i * n + c] = self.r[i * n + c + 1];
            }
        }
        for i in 0..q {
            self.r[i * n + q - 1] = 0.0;
        }
        for k in l..q - 1 {
            let a = self.r[k * n + k];
            let b = self.r[(k + 1) * n + k];
            if b == 0.0 {
                continue;
            }
            let h = libm::hypot(a, b);
            let (c, s) = (a / h, b / h);
            for col in k..q - 1 {
                let x = self.r[k * n + col];
                let y = self.r[(k + 1) * n + col];
                self.r[k * n + col] = c * x + s * y;
                self.r[(k + 1) * n + col] = -s * x + c * y;
            }
            self.rotate_j(k, k + 1, c, s);
        }
        self.active.remove(l);
        self.mu.remove(l);
    }
}

fn to_flat(v: &[Vec2]) -> Vec<f64> {
    v.iter().flat_map(|p| [p.x, p.y]).collect()
}

fn from_flat(v: &[f64]) -> Vec<Vec2> {
    v.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect()
}

fn fallback(problem: &QpProblem, reason: FallbackReason, iterations: usize) -> QpSolution {
    QpSolution {
        u_star: vec![Vec2::ZERO; problem.nominal.len()],
        active_set: Vec::new(),
        multipliers: Vec::new(),
        kkt_residual: f64::INFINITY,
        status: QpStatus::FellBackToZero,
        iterations,
        fallback: Some(reason),
    }
}

/// Solves the QP. Infeasibility, an exhausted iteration budget (50 per
/// row) or a KKT residual above `tol` yields the braking control u = 0.
pub fn solve_qp(problem: &QpProblem, tol: f64) -> QpSolution {
    let n = problem.n_vars();
    let rows = &problem.rows;
    let norms: Vec<f64> = rows.iter().map(|r| r.gradient_norm()).collect();
    // In GI form: n_kᵀx ≥ d_k with n_k = −a_k, d_k = −b_k.
    let normals: Vec<Vec<(usize, f64)>> = rows
        .iter()
        .map(|r| r.coeffs.iter().flat_map(|&(id, g)| [(2 * id, -g.x), (2 * id + 1, -g.y)]).collect())
        .collect();
    for (k, row) in rows.iter().enumerate() {
        if norms[k] == 0.0 && row.bound < 0.0 {
            return fallback(problem, FallbackReason::DegenerateRow(k), 0);
        }
    }

    let mut x = to_flat(&problem.nominal);
    let slack = |x: &[f64], k: usize| -> f64 {
        rows[k].bound + normals[k].iter().map(|&(i, v)| v * x[i]).sum::<f64>()
    };
    let mut ws = Workspace::new(n);
    let budget = 50 * rows.len();
    let mut iterations = 0;
    let mut d = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut r = Vec::new();

    loop {
        // Most violated row by normalised slack.
        let mut pick: Option<(usize, f64)> = None;
        for k in 0..rows.len() {
            if norms[k] == 0.0 || ws.active.contains(&k) {
                continue;
            }
            let s = slack(&x, k) / norms[k];
            if s < -ADD_THRESHOLD && pick.is_none_or(|(_, best)| s < best) {
                pick = Some((k, s));
            }
        }
        let Some((p, _)) = pick else { break };
        let mut mu_p = 0.0;
        loop {
            iterations += 1;
            if iterations > budget {
                return fallback(problem, FallbackReason::IterationBudget, iterations);
            }
            ws.project(&normals[p], &mut d);
            ws.directions(&d, &mut z, &mut r);
            // Partial step: largest dual move keeping active multipliers ≥ 0.
            let mut t1 = f64::INFINITY;
            let mut leave = None;
            for (c, &rc) in r.iter().enumerate() {
                if rc > 0.0 {
                    let t = ws.mu[c] / rc;
                    if t < t1 {
                        t1 = t;
                        leave = Some(c);
                    }
                }
            }
            let z_norm_sq: f64 = z.iter().map(|v| v * v).sum();
            let zn: f64 = normals[p].iter().map(|&(i, v)| z[i] * v).sum();
            let s_p = slack(&x, p);
            let t2 = if z_norm_sq > 1e-28 * norms[p] * norms[p] && zn > 0.0 { -s_p / zn } else { f64::INFINITY };
            let t = t1.min(t2);
            if !t.is_finite() {
                return fallback(problem, FallbackReason::Infeasible, iterations);
            }
            if t2.is_finite() {
                for (xi, zi) in x.iter_mut().zip(&z) {
                    *xi += t * zi;
                }
            }
            for (m, rc) in ws.mu.iter_mut().zip(&r) {
                *m -= t * rc;
            }
            mu_p += t;
            if t == t2 {
                if !ws.add(p, &mut d, mu_p) {
                    return fallback(problem, FallbackReason::Infeasible, iterations);
                }
                break;
            }
            ws.drop(leave.expect("finite partial step has a leaving row"));
        }
    }

    let u_star = from_flat(&x);
    let mut order: Vec<usize> = (0..ws.active.len()).collect();
    order.sort_by_key(|&c| ws.active[c]);
    let active_set: Vec<usize> = order.iter().map(|&c| ws.active[c]).collect();
    let multipliers: Vec<f64> = order.iter().map(|&c| ws.mu[c].max(0.0)).collect();
    let residual = kkt_residual(problem, &u_star, &active_set, &multipliers);
    if residual > tol {
        return fallback(problem, FallbackReason::Residual, iterations);
    }
    QpSolution {
        u_star,
        active_set,
        multipliers,
        kkt_residual: residual,
        status: QpStatus::Optimal,
        iterations,
        fallback: None,
    }
}
