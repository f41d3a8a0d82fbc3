//! Random walk with restart on the directed tripartite graph.

use super::{GraphError, ScpGraph};

pub const DEFAULT_RESTART_P: f64 = 0.45;
pub const RWR_TOLERANCE: f64 = 1e-10;
pub const RWR_MAX_SWEEPS: usize = 10_000;

/// Stationary distribution of the walk that jumps back to node 0 with
/// probability `restart_p` and otherwise follows a uniform out-edge. Sinks
/// always jump back.
pub fn rwr_scores(graph: &ScpGraph, restart_p: f64) -> Result<Vec<f64>, GraphError> {
    if !(restart_p > 0.0 && restart_p <= 1.0) {
        return Err(GraphError::InvalidRestart(restart_p));
    }
    let count = graph.node_count();
    if count == 0 {
        return Ok(Vec::new());
    }
    let mut pi = vec![0.0; count];
    pi[0] = 1.0;
    let mut next = vec![0.0; count];
    for _ in 0..RWR_MAX_SWEEPS {
        next.iter_mut().for_each(|x| *x = 0.0);
        for (u, &mass) in pi.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let out = graph.out_neighbors(u);
            if out.is_empty() {
                next[0] += mass;
            } else {
                next[0] += restart_p * mass;
                let share = (1.0 - restart_p) * mass / out.len() as f64;
                for &v in out {
                    next[v] += share;
                }
            }
        }
        let diff: f64 = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if diff < RWR_TOLERANCE {
            return Ok(pi);
        }
    }
    Err(GraphError::NonConvergence {
        sweeps: RWR_MAX_SWEEPS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphrep::{build_tripartite, Layer};
    use crate::instance::fixtures::t3;
    use crate::solver::test_support::small;
    use nalgebra::{DMatrix, DVector};

    /// Solves `(I - P^T) pi = 0`, `sum(pi) = 1` directly.
    fn dense_oracle(graph: &ScpGraph, p: f64) -> Vec<f64> {
        let n = graph.node_count();
        let mut trans = DMatrix::<f64>::zeros(n, n);
        for u in 0..n {
            let out = graph.out_neighbors(u);
            if out.is_empty() {
                trans[(u, 0)] += 1.0;
            } else {
                trans[(u, 0)] += p;
                for &v in out {
                    trans[(u, v)] += (1.0 - p) / out.len() as f64;
                }
            }
        }
        let mut a = DMatrix::<f64>::identity(n, n) - trans.transpose();
        let mut b = DVector::<f64>::zeros(n);
        for j in 0..n {
            a[(n - 1, j)] = 1.0;
        }
        b[n - 1] = 1.0;
        a.lu().solve(&b).unwrap().iter().copied().collect()
    }

    #[test]
    fn full_restart_stays_home() {
        let s = rwr_scores(&build_tripartite(&t3()), 1.0).unwrap();
        assert_eq!(s[0], 1.0);
        assert!(s[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn two_node_chain() {
        let g = ScpGraph::from_edges(vec![Layer::Universe, Layer::Element], &[(0, 1)]).unwrap();
        let s = rwr_scores(&g, 0.5).unwrap();
        assert!((s[0] - 2.0 / 3.0).abs() < 1e-10);
        assert!((s[1] - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn t3_matches_linear_solve() {
        let g = build_tripartite(&t3());
        let s = rwr_scores(&g, DEFAULT_RESTART_P).unwrap();
        let o = dense_oracle(&g, DEFAULT_RESTART_P);
        let l1: f64 = s.iter().zip(&o).map(|(a, b)| (a - b).abs()).sum();
        assert!(l1 < 1e-8, "{s:?} vs {o:?}");
    }

    #[test]
    fn random_instances_match_linear_solve() {
        let mut checked = 0;
        for seed in 0..200 {
            let inst = small(seed, 25, 34);
            if inst.m() + inst.n() > 60 {
                continue;
            }
            let g = build_tripartite(&inst);
            let s = rwr_scores(&g, DEFAULT_RESTART_P).unwrap();
            let o = dense_oracle(&g, DEFAULT_RESTART_P);
            let l1: f64 = s.iter().zip(&o).map(|(a, b)| (a - b).abs()).sum();
            assert!(l1 < 1e-8, "seed {seed}: {l1}");
            assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            assert!(s.iter().all(|&x| x >= 0.0));
            checked += 1;
            if checked == 50 {
                break;
            }
        }
        assert_eq!(checked, 50);
    }

    #[test]
    fn rejects_bad_restart() {
        let g = build_tripartite(&t3());
        for p in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(rwr_scores(&g, p), Err(GraphError::InvalidRestart(_))));
        }
    }
}
