//! Best-first branch and bound with Lagrangian bounds.
//!
//! Each node carries column fixings (in/out). Its bound comes from a short
//! subgradient run warm-started with the parent's multipliers; the reduced
//! costs at the best multipliers drive a repair heuristic and reduced-cost
//! fixing. Branching picks the open row with the fewest free covering
//! columns and creates one child per such column `j_t` (include `j_t`,
//! exclude `j_1..j_{t-1}`), so children partition the node.
//!
//! Every selection cost is a multiple of the instance's cost granularity
//! `g`, so a node is pruned once its bound exceeds `incumbent - g`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::Instant;

use super::lagrange::{repair, subgradient, ColState, Residual, SubgradientParams};
use super::{elapsed_ms, SolveOptions, SolveResult, SolveStatus, SolverError, TracePoint};
use crate::instance::{evaluate, Cost, ScpInstance, Selection, COST_SCALE};

const TIMEOUT_CHECK_EVERY: u64 = 256;

const ROOT_PARAMS: SubgradientParams = SubgradientParams {
    max_iters: 400,
    lambda0: 2.0,
    stall: 20,
    min_lambda: 1e-4,
};

const NODE_PARAMS: SubgradientParams = SubgradientParams {
    max_iters: 40,
    lambda0: 0.5,
    stall: 5,
    min_lambda: 1e-3,
};

#[derive(Clone)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }
    fn set(&mut self, j: usize) {
        self.0[j / 64] |= 1 << (j % 64);
    }
    fn get(&self, j: usize) -> bool {
        self.0[j / 64] >> (j % 64) & 1 == 1
    }
}

struct Node {
    key: f64,
    depth: u32,
    seq: u64,
    fixed_in: Bits,
    fixed_out: Bits,
    multipliers: Vec<f32>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: smallest bound first, then deepest, then oldest
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .total_cmp(&self.key)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

struct Search<'a> {
    inst: &'a ScpInstance,
    costs: Rc<[f64]>,
    granularity: f64,
    tol: f64,
    start: Instant,
    incumbent: Option<(Cost, Vec<usize>)>,
    trace: Vec<TracePoint>,
    seq: u64,
}

impl<'a> Search<'a> {
    fn upper(&self) -> f64 {
        self.incumbent
            .as_ref()
            .map_or(f64::INFINITY, |(c, _)| c.as_f64())
    }

    /// Bounds above this cannot lead to a strictly better cover.
    fn prune_limit(&self) -> f64 {
        let ub = self.upper();
        ub - self.granularity + self.tol * (1.0 + ub.abs())
    }

    /// Ordering key: the bound rounded up to the next attainable objective.
    fn key(&self, bound: f64) -> f64 {
        if self.granularity > 0.0 {
            let steps = ((bound - self.tol * (1.0 + bound.abs())) / self.granularity).ceil();
            steps * self.granularity
        } else {
            bound
        }
    }

    fn offer(&mut self, sel: Vec<usize>) {
        let cost = self.inst.total_cost(sel.iter().copied());
        if self.incumbent.as_ref().is_none_or(|(c, _)| cost < *c) {
            self.trace.push(TracePoint {
                elapsed_ms: elapsed_ms(self.start),
                objective: cost,
            });
            self.incumbent = Some((cost, sel));
        }
    }

    fn solved_to_zero(&self) -> bool {
        matches!(self.incumbent, Some((c, _)) if c == Cost::ZERO)
    }

    fn states(&self, node: &Node) -> Vec<ColState> {
        (0..self.inst.n())
            .map(|j| {
                if node.fixed_in.get(j) {
                    ColState::In
                } else if node.fixed_out.get(j) {
                    ColState::Out
                } else {
                    ColState::Free
                }
            })
            .collect()
    }

    fn process(&mut self, node: Node, root: bool) -> Vec<Node> {
        let inst = self.inst;
        let costs = Rc::clone(&self.costs);
        let mut state = self.states(&node);
        let res = Residual::new(inst, &costs, state.clone());
        if !res.has_active_rows() {
            self.offer((0..inst.n()).filter(|&j| state[j] == ColState::In).collect());
            return Vec::new();
        }
        if res.free_cover_counts().contains(&0) {
            return Vec::new();
        }

        let u0: Vec<f64> = if root {
            res.initial_multipliers()
        } else {
            node.multipliers.iter().map(|&v| v as f64).collect()
        };
        let dual = if root {
            let mut best = self.upper();
            let mut found: Vec<Vec<usize>> = Vec::new();
            let mut on_iterate = |reduced: &[f64]| -> Option<f64> {
                let sel = repair(&res, reduced)?;
                let c: f64 = sel.iter().map(|&j| costs[j]).sum();
                if c < best - 1e-9 {
                    best = c;
                    found.push(sel);
                }
                Some(best)
            };
            let d = subgradient(&res, u0, self.upper(), f64::INFINITY, ROOT_PARAMS, Some(&mut on_iterate), None);
            for sel in found {
                self.offer(sel);
            }
            d
        } else {
            subgradient(&res, u0, self.upper(), self.prune_limit(), NODE_PARAMS, None, None)
        };
        if dual.bound > self.prune_limit() {
            return Vec::new();
        }
        if let Some(sel) = repair(&res, &dual.reduced) {
            self.offer(sel);
        }
        if dual.tight || dual.bound > self.prune_limit() || self.solved_to_zero() {
            return Vec::new();
        }

        // reduced-cost fixing against the current incumbent
        let limit = self.prune_limit();
        let mut changed = false;
        for j in 0..inst.n() {
            if state[j] != ColState::Free {
                continue;
            }
            let r = dual.reduced[j];
            if r >= 0.0 && dual.bound + r > limit {
                state[j] = ColState::Out;
                changed = true;
            } else if r < 0.0 && dual.bound - r > limit {
                state[j] = ColState::In;
                changed = true;
            }
        }
        let res = if changed {
            Residual::new(inst, &costs, state.clone())
        } else {
            res
        };
        if !res.has_active_rows() {
            self.offer((0..inst.n()).filter(|&j| state[j] == ColState::In).collect());
            return Vec::new();
        }
        let counts = res.free_cover_counts();
        let Some(row) = (0..inst.m())
            .filter(|&i| res.active[i])
            .min_by_key(|&i| (counts[i], i))
        else {
            return Vec::new();
        };
        if counts[row] == 0 {
            return Vec::new();
        }

        let mut branch_cols: Vec<usize> = inst.row(row).iter().copied().filter(|&j| res.is_free(j)).collect();
        branch_cols.sort_by(|&a, &b| dual.reduced[a].total_cmp(&dual.reduced[b]).then(a.cmp(&b)));

        let mut fixed_in = Bits::new(inst.n());
        let mut fixed_out = Bits::new(inst.n());
        for (j, s) in state.iter().enumerate() {
            match s {
                ColState::In => fixed_in.set(j),
                ColState::Out => fixed_out.set(j),
                ColState::Free => {}
            }
        }
        let multipliers: Vec<f32> = dual.u.iter().map(|&v| v as f32).collect();
        let mut children = Vec::with_capacity(branch_cols.len());
        let mut excluded = fixed_out;
        for &j in &branch_cols {
            let estimate = dual.bound + dual.reduced[j].max(0.0);
            if estimate <= limit {
                let mut child_in = fixed_in.clone();
                child_in.set(j);
                self.seq += 1;
                children.push(Node {
                    key: self.key(estimate),
                    depth: node.depth + 1,
                    seq: self.seq,
                    fixed_in: child_in,
                    fixed_out: excluded.clone(),
                    multipliers: multipliers.clone(),
                });
            }
            excluded.set(j);
        }
        children
    }
}

/// Exact solve. Returns `Optimal` unless the timeout or node limit stops
/// the search first, in which case the best cover found is returned with
/// status `TimedOut`.
pub fn branch_and_bound(inst: &ScpInstance, options: &SolveOptions) -> Result<SolveResult, SolverError> {
    let start = Instant::now();
    let mut search = Search {
        inst,
        costs: inst.costs().iter().map(|c| c.as_f64()).collect::<Vec<_>>().into(),
        granularity: inst.cost_granularity() as f64 / COST_SCALE as f64,
        tol: 1e-9,
        start,
        incumbent: None,
        trace: Vec::new(),
        seq: 0,
    };

    if let Some(warm) = &options.warm_start {
        let eval = evaluate(inst, warm)?;
        if !eval.feasible {
            return Err(SolverError::InfeasibleWarmStart {
                uncovered: eval.uncovered,
            });
        }
        search.offer(warm.iter().collect());
    }

    let mut queue = BinaryHeap::new();
    let mut nodes: u64 = 0;
    let mut timed_out = false;
    let root = Node {
        key: f64::NEG_INFINITY,
        depth: 0,
        seq: 0,
        fixed_in: Bits::new(inst.n()),
        fixed_out: Bits::new(inst.n()),
        multipliers: Vec::new(),
    };
    if !search.solved_to_zero() {
        nodes += 1;
        queue.extend(search.process(root, true));
    }

    while let Some(node) = queue.pop() {
        if node.key > search.prune_limit() || search.solved_to_zero() {
            queue.clear();
            break;
        }
        let over_nodes = options.node_limit > 0 && nodes >= options.node_limit;
        let over_time = options.timeout_ms > 0
            && nodes.is_multiple_of(TIMEOUT_CHECK_EVERY)
            && elapsed_ms(start) >= options.timeout_ms as f64;
        if over_time || over_nodes {
            queue.push(node);
            timed_out = true;
            break;
        }
        nodes += 1;
        let children = search.process(node, false);
        queue.extend(children);
    }

    let wall_ms = elapsed_ms(start);
    let Some((objective, sel)) = search.incumbent.take() else {
        let mut r = SolveResult::infeasible(wall_ms);
        r.nodes_explored = nodes;
        return Ok(r);
    };
    let (status, lower_bound) = if timed_out {
        let open = queue.iter().map(|n| n.key).fold(f64::INFINITY, f64::min);
        (SolveStatus::TimedOut, open.min(objective.as_f64()))
    } else {
        (SolveStatus::Optimal, objective.as_f64())
    };
    Ok(SolveResult {
        selection: Selection::new(sel),
        objective,
        status,
        nodes_explored: nodes,
        lower_bound,
        incumbent_trace: search.trace,
        wall_ms,
    })
}
