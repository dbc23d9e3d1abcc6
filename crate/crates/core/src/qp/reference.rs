//! Slow, independent solvers used as test oracles: accelerated projected
//! gradient on the dual, and exhaustive active-set enumeration.

use alloc::vec;
use alloc::vec::Vec;

use super::QpProblem;
use crate::Vec2;

/// Projected-gradient (FISTA with gradient restart) ascent on the dual
///   max_{μ≥0} −½‖Âᵀμ‖² + μᵀ(Âû − b̂)
/// over unit-normalised rows, returning u = û − Âᵀμ. `None` when a
/// zero-gradient row has a negative bound, or when the iterate has not
/// settled to `tol` (max primal violation and max |μ_k·slack_k|) within
/// `max_iter` iterations.
pub fn solve_projected_gradient(problem: &QpProblem, tol: f64, max_iter: usize) -> Option<Vec<Vec2>> {
    let nominal: Vec<f64> = problem.nominal.iter().flat_map(|p| [p.x, p.y]).collect();
    let mut a: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut b = Vec::new();
    for row in &problem.rows {
        let norm = row.gradient_norm();
        if norm == 0.0 {
            if row.bound < 0.0 {
                return None;
            }
            continue;
        }
        a.push(row.coeffs.iter().flat_map(|&(id, g)| [(2 * id, g.x / norm), (2 * id + 1, g.y / norm)]).collect());
        b.push(row.bound / norm);
    }
    let m = a.len();
    if m == 0 {
        return Some(problem.nominal.clone());
    }
    // Gershgorin bound on λmax(ÂÂᵀ).
    let n = nominal.len();
    let mut dense = vec![0.0; m * n];
    for (k, row) in a.iter().enumerate() {
        for &(i, v) in row {
            dense[k * n + i] = v;
        }
    }
    let mut lipschitz = 0.0f64;
    for k in 0..m {
        let mut s = 0.0;
        for l in 0..m {
            let dot: f64 = (0..n).map(|i| dense[k * n + i] * dense[l * n + i]).sum();
            s += dot.abs();
        }
        lipschitz = lipschitz.max(s);
    }
    let step = 1.0 / lipschitz;

    let primal = |mu: &[f64]| -> Vec<f64> {
        let mut u = nominal.clone();
        for (k, row) in a.iter().enumerate() {
            for &(i, v) in row {
                u[i] -= mu[k] * v;
            }
        }
        u
    };
    let slack = |u: &[f64], k: usize| -> f64 { b[k] - a[k].iter().map(|&(i, v)| v * u[i]).sum::<f64>() };

    let mut mu = vec![0.0; m];
    let mut y = mu.clone();
    let mut theta = 1.0f64;
    for _ in 0..max_iter {
        let u = primal(&y);
        let mut next = vec![0.0; m];
        for k in 0..m {
            // ∂D/∂μ_k = â_k·u − b̂_k.
            next[k] = (y[k] - step * slack(&u, k)).max(0.0);
        }
        let u_next = primal(&next);
        let settled = (0..m).all(|k| {
            let s = slack(&u_next, k);
            s >= -tol && (next[k] * s).abs() <= tol
        });
        if settled {
            return Some(u_next.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect());
        }
        // Restart momentum when the step points against the dual ascent.
        let g_dot: f64 = (0..m).map(|k| (y[k] - next[k]) * (next[k] - mu[k])).sum();
        if g_dot > 0.0 {
            theta = 1.0;
            y = next.clone();
        } else {
            let theta_next = 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * theta * theta));
            let beta = (theta - 1.0) / theta_next;
            for k in 0..m {
                y[k] = next[k] + beta * (next[k] - mu[k]);
            }
            theta = theta_next;
        }
        mu = next;
    }
    None
}

/// Exact minimiser by enumerating candidate active sets: for every subset
/// of at most `n_vars` rows, project û onto the subset's equality plane and
/// keep the first point that is feasible with non-negative multipliers.
/// Exponential; `None` when there are more than 16 rows or the problem is
/// infeasible.
pub fn solve_by_enumeration(problem: &QpProblem) -> Option<Vec<Vec2>> {
    let rows = &problem.rows;
    if rows.len() > 16 {
        return None;
    }
    let n = problem.n_vars();
    let flat = |r: &super::ConstraintRow| -> Vec<f64> {
        let mut v = vec![0.0; n];
        for &(id, g) in &r.coeffs {
            v[2 * id] += g.x;
            v[2 * id + 1] += g.y;
        }
        v
    };
    let a: Vec<Vec<f64>> = rows.iter().map(flat).collect();
    let nominal: Vec<f64> = problem.nominal.iter().flat_map(|p| [p.x, p.y]).collect();
    let mut subsets: Vec<u32> = (0..1u32 << rows.len()).filter(|s| s.count_ones() as usize <= n).collect();
    subsets.sort_by_key(|s| s.count_ones());
    for set in subsets {
        let idx: Vec<usize> = (0..rows.len()).filter(|k| set >> k & 1 == 1).collect();
        let q = idx.len();
        // Gram system (A_S A_Sᵀ) μ = A_S û − b_S.
        let mut g = vec![0.0; q * (q + 1)];
        for (r, &kr) in idx.iter().enumerate() {
            for (c, &kc) in idx.iter().enumerate() {
                g[r * (q + 1) + c] = dot(&a[kr], &a[kc]);
            }
            g[r * (q + 1) + q] = dot(&a[kr], &nominal) - rows[kr].bound;
        }
        let Some(mu) = gauss_solve(q, &mut g) else { continue };
        if mu.iter().any(|&m| m < -1e-12) {
            continue;
        }
        let mut u = nominal.clone();
        for (&k, &m) in idx.iter().zip(&mu) {
            for (ui, ai) in u.iter_mut().zip(&a[k]) {
                *ui -= m * ai;
            }
        }
        if rows.iter().zip(&a).all(|(r, ak)| dot(ak, &u) - r.bound <= 1e-10) {
            return Some(u.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect());
        }
    }
    None
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves a q×q system stored as an augmented row-major matrix.
fn gauss_solve(q: usize, m: &mut [f64]) -> Option<Vec<f64>> {
    let w = q + 1;
    for col in 0..q {
        let piv = (col..q).max_by(|&r, &s| m[r * w + col].abs().total_cmp(&m[s * w + col].abs()))?;
        if m[piv * w + col].abs() < 1e-12 {
            return None;
        }
        for c in 0..w {
            m.swap(col * w + c, piv * w + c);
        }
        for r in 0..q {
            if r != col {
                let f = m[r * w + col] / m[col * w + col];
                for c in col..w {
                    m[r * w + c] -= f * m[col * w + c];
                }
            }
        }
    }
    Some((0..q).map(|r| m[r * w + q] / m[r * w + r]).collect())
}
