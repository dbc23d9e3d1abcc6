use alloc::vec;
use alloc::vec::Vec;

use super::CommGraph;

/// λ₂ values below this are reported as exactly zero.
const ZERO_EIGENVALUE_TOL: f64 = 1e-9;

/// Eigenvalues (ascending) of a dense symmetric matrix given row-major.
///
/// Householder reduction to tridiagonal form followed by implicit QL
/// with Wilkinson shifts.
pub fn symmetric_eigenvalues(n: usize, matrix: &[f64]) -> Vec<f64> {
    assert_eq!(matrix.len(), n * n);
    if n == 0 {
        return Vec::new();
    }
    let mut a = matrix.to_vec();
    let idx = |r: usize, c: usize| r * n + c;
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];

    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| a[idx(i, k)].abs()).sum();
            if scale == 0.0 {
                e[i] = a[idx(i, l)];
            } else {
                for k in 0..=l {
                    a[idx(i, k)] /= scale;
                    h += a[idx(i, k)] * a[idx(i, k)];
                }
                let f = a[idx(i, l)];
                let g = if f >= 0.0 { -libm::sqrt(h) } else { libm::sqrt(h) };
                e[i] = scale * g;
                h -= f * g;
                a[idx(i, l)] = f - g;
                let mut f = 0.0;
                for j in 0..=l {
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[idx(j, k)] * a[idx(i, k)];
                    }
                    for k in (j + 1)..=l {
                        g += a[idx(k, j)] * a[idx(i, k)];
                    }
                    e[j] = g / h;
                    f += e[j] * a[idx(i, j)];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = a[idx(i, j)];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[idx(j, k)] -= f * e[k] + g * a[idx(i, k)];
                    }
                }
            }
        } else {
            e[i] = a[idx(i, l)];
        }
        d[i] = h;
    }
    for (i, di) in d.iter_mut().enumerate() {
        *di = a[idx(i, i)];
    }

    // Implicit QL on the tridiagonal (d, e).
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 64 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = libm::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = libm::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    d
}

/// Eigenvalues of the unweighted Laplacian `D - A`, ascending.
pub fn laplacian_eigenvalues(graph: &CommGraph) -> Vec<f64> {
    let n = graph.n();
    let mut lap = vec![0.0; n * n];
    for e in graph.edges() {
        lap[e.i * n + e.j] -= 1.0;
        lap[e.j * n + e.i] -= 1.0;
        lap[e.i * n + e.i] += 1.0;
        lap[e.j * n + e.j] += 1.0;
    }
    symmetric_eigenvalues(n, &lap)
}

/// Second-smallest eigenvalue of the unweighted Laplacian; positive iff
/// the graph is connected. Graphs with fewer than two vertices give 0.
pub fn algebraic_connectivity(graph: &CommGraph) -> f64 {
    if graph.n() < 2 {
        return 0.0;
    }
    let l2 = laplacian_eigenvalues(graph)[1];
    if l2.abs() < ZERO_EIGENVALUE_TOL {
        0.0
    } else {
        l2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{is_connected, CommGraph};
    use proptest::prelude::*;

    fn graph(n: usize, pairs: &[(usize, usize)]) -> CommGraph {
        CommGraph::from_weighted_edges(vec![0; n], pairs.iter().map(|&(i, j)| (i, j, 1.0))).unwrap()
    }

    #[test]
    fn complete_and_path() {
        let k3 = graph(3, &[(0, 1), (0, 2), (1, 2)]);
        assert!((algebraic_connectivity(&k3) - 3.0).abs() < 1e-9);
        let ev = laplacian_eigenvalues(&k3);
        assert!(ev[0].abs() < 1e-9 && (ev[2] - 3.0).abs() < 1e-9);

        let p3 = graph(3, &[(0, 1), (1, 2)]);
        let ev = laplacian_eigenvalues(&p3);
        for (got, want) in ev.iter().zip([0.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-9, "{ev:?}");
        }
    }

    #[test]
    fn disconnected_is_zero() {
        assert_eq!(algebraic_connectivity(&graph(3, &[(0, 1)])), 0.0);
        assert_eq!(algebraic_connectivity(&graph(2, &[])), 0.0);
    }

    #[test]
    fn long_path_matches_closed_form() {
        let n = 60;
        let pairs: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        let want = 2.0 * (1.0 - libm::cos(core::f64::consts::PI / n as f64));
        assert!((algebraic_connectivity(&graph(n, &pairs)) - want).abs() < 1e-9);
    }

    fn arb_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
        (2usize..25).prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
            let m = pairs.len();
            proptest::collection::vec(proptest::bool::weighted(0.15), m).prop_map(move |keep| {
                let chosen = pairs.iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| *p).collect();
                (n, chosen)
            })
        })
    }

    proptest! {
        #[test]
        fn matches_dense_reference((n, pairs) in arb_graph()) {
            let g = graph(n, &pairs);
            let mut lap = nalgebra::DMatrix::<f64>::zeros(n, n);
            for &(i, j) in &pairs {
                lap[(i, j)] -= 1.0;
                lap[(j, i)] -= 1.0;
                lap[(i, i)] += 1.0;
                lap[(j, j)] += 1.0;
            }
            let mut reference: Vec<f64> = nalgebra::SymmetricEigen::new(lap).eigenvalues.iter().copied().collect();
            reference.sort_by(f64::total_cmp);
            let ours = laplacian_eigenvalues(&g);
            for (a, b) in ours.iter().zip(&reference) {
                prop_assert!((a - b).abs() < 1e-9, "{:?} vs {:?}", ours, reference);
            }
        }

        #[test]
        fn positive_iff_connected((n, pairs) in arb_graph()) {
            let g = graph(n, &pairs);
            prop_assert_eq!(algebraic_connectivity(&g) > 0.0, is_connected(&g));
        }
    }
}
