use std::time::Instant;

use super::{elapsed_ms, SolveResult, SolveStatus, TracePoint};
use crate::instance::{ScpInstance, Selection};

/// Count greedy: repeatedly take the column covering the most uncovered
/// rows. Ties go to the cheaper column, then to the lower index.
pub fn greedy(inst: &ScpInstance) -> SolveResult {
    let start = Instant::now();
    let mut gain: Vec<usize> = inst.cols().iter().map(Vec::len).collect();
    let mut covered = vec![false; inst.m()];
    let mut taken = vec![false; inst.n()];
    let mut remaining = inst.m();

    while remaining > 0 {
        let best = (0..inst.n())
            .filter(|&j| !taken[j] && gain[j] > 0)
            .min_by(|&a, &b| {
                gain[b]
                    .cmp(&gain[a])
                    .then(inst.cost(a).cmp(&inst.cost(b)))
                    .then(a.cmp(&b))
            })
            .expect("every row has a covering column");
        taken[best] = true;
        for &i in inst.col(best) {
            if !covered[i] {
                covered[i] = true;
                remaining -= 1;
                for &j in inst.row(i) {
                    gain[j] -= 1;
                }
            }
        }
    }

    let selection = Selection::from_mask(&taken);
    let objective = inst.total_cost(selection.iter());
    let wall_ms = elapsed_ms(start);
    SolveResult {
        selection,
        objective,
        status: SolveStatus::Feasible,
        nodes_explored: 0,
        lower_bound: 0.0,
        incumbent_trace: vec![TracePoint {
            elapsed_ms: wall_ms,
            objective,
        }],
        wall_ms,
    }
}
