use std::time::Instant;

use super::{elapsed_ms, SolveResult, SolveStatus, SolverError, TracePoint};
use crate::instance::{Cost, ScpInstance, Selection};

pub const BRUTE_FORCE_MAX_N: usize = 24;

/// Exhaustive enumeration of all `2^n` selections (Gray-code order, one
/// column toggled per step). Among optimal covers the lexicographically
/// smallest sorted index list is returned.
pub fn brute_force(inst: &ScpInstance) -> Result<SolveResult, SolverError> {
    let n = inst.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(SolverError::TooLarge {
            n,
            max: BRUTE_FORCE_MAX_N,
        });
    }
    let start = Instant::now();
    let mut cover = vec![0u32; inst.m()];
    let mut uncovered = inst.m();
    let mut on = vec![false; n];
    let mut cost = Cost::ZERO;
    let mut best: Option<(Cost, Vec<usize>)> = None;

    let total: u64 = 1 << n;
    for step in 1..total {
        // Gray code: flip the lowest set bit position of `step`
        let j = step.trailing_zeros() as usize;
        on[j] = !on[j];
        if on[j] {
            cost += inst.cost(j);
            for &i in inst.col(j) {
                if cover[i] == 0 {
                    uncovered -= 1;
                }
                cover[i] += 1;
            }
        } else {
            cost = cost - inst.cost(j);
            for &i in inst.col(j) {
                cover[i] -= 1;
                if cover[i] == 0 {
                    uncovered += 1;
                }
            }
        }
        if uncovered > 0 {
            continue;
        }
        let better = match &best {
            None => true,
            Some((c, _)) if cost < *c => true,
            Some((c, sel)) if cost == *c => {
                let cand: Vec<usize> = (0..n).filter(|&k| on[k]).collect();
                cand < *sel
            }
            _ => false,
        };
        if better {
            best = Some((cost, (0..n).filter(|&k| on[k]).collect()));
        }
    }

    let wall_ms = elapsed_ms(start);
    let (objective, sel) = best.expect("feasible instance has a cover");
    Ok(SolveResult {
        selection: Selection::new(sel),
        objective,
        status: SolveStatus::Optimal,
        nodes_explored: total,
        lower_bound: objective.as_f64(),
        incumbent_trace: vec![TracePoint {
            elapsed_ms: wall_ms,
            objective,
        }],
        wall_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::t3;
    use crate::instance::{evaluate, CostModel, GeneratorConfig};
    use crate::solver::test_support::t3w;

    #[test]
    fn t3_optimum() {
        let r = brute_force(&t3()).unwrap();
        assert_eq!(r.objective, Cost::from_int(2));
        assert_eq!(r.selection, Selection::new([0, 1]));
    }

    #[test]
    fn t3w_optimum() {
        let r = brute_force(&t3w()).unwrap();
        assert_eq!(r.objective, Cost::from_int(2));
        assert_eq!(r.selection, Selection::new([0, 2]));
    }

    #[test]
    fn enumeration_matches_naive_mask_loop() {
        for seed in 0..20 {
            let inst = crate::solver::test_support::small(seed, 8, 10);
            let mut best = None::<Cost>;
            for mask in 0u32..(1 << inst.n()) {
                let sel = Selection::new((0..inst.n()).filter(|&j| mask >> j & 1 == 1));
                let e = evaluate(&inst, &sel).unwrap();
                if e.feasible && best.is_none_or(|b| e.cost < b) {
                    best = Some(e.cost);
                }
            }
            assert_eq!(brute_force(&inst).unwrap().objective, best.unwrap());
        }
    }

    #[test]
    fn too_large() {
        let cfg = GeneratorConfig::custom((5, 5), (25, 25), (0.5, 0.5), CostModel::Equal(Cost::from_int(1)), 0);
        let inst = crate::instance::generate(&cfg).unwrap();
        assert!(matches!(brute_force(&inst), Err(SolverError::TooLarge { n: 25, .. })));
    }
}
