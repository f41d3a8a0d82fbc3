//! Lagrangian relaxation of the covering constraints.
//!
//! With multipliers `u >= 0` on the rows the relaxed problem separates by
//! column: `L(u) = sum_i u_i + sum_j min(0, c_j - sum_{i in j} u_i)`, a lower
//! bound on every cover. Multipliers are improved by projected subgradient
//! steps with a Polyak step length; feasible covers are recovered by a greedy
//! repair on reduced costs.

use std::time::Instant;

use super::{elapsed_ms, SolveResult, SolveStatus, TracePoint};
use crate::instance::{Cost, ScpInstance, Selection};

pub const DEFAULT_LAGRANGIAN_ITERS: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ColState {
    Free,
    In,
    Out,
}

/// The part of an instance still open at a search node: rows not yet covered
/// by fixed-in columns, and the columns not yet fixed either way.
pub(crate) struct Residual<'a> {
    pub inst: &'a ScpInstance,
    pub costs: &'a [f64],
    pub state: Vec<ColState>,
    pub active: Vec<bool>,
    pub fixed_cost: f64,
}

impl<'a> Residual<'a> {
    pub fn new(inst: &'a ScpInstance, costs: &'a [f64], state: Vec<ColState>) -> Self {
        let mut active = vec![true; inst.m()];
        let mut fixed_cost = 0.0;
        for (j, s) in state.iter().enumerate() {
            if *s == ColState::In {
                fixed_cost += costs[j];
                for &i in inst.col(j) {
                    active[i] = false;
                }
            }
        }
        Residual {
            inst,
            costs,
            state,
            active,
            fixed_cost,
        }
    }

    pub fn root(inst: &'a ScpInstance, costs: &'a [f64]) -> Self {
        Self::new(inst, costs, vec![ColState::Free; inst.n()])
    }

    pub fn is_free(&self, j: usize) -> bool {
        self.state[j] == ColState::Free
    }

    /// Number of free columns covering each active row (`usize::MAX` for
    /// inactive rows).
    pub fn free_cover_counts(&self) -> Vec<usize> {
        (0..self.inst.m())
            .map(|i| {
                if self.active[i] {
                    self.inst.row(i).iter().filter(|&&j| self.is_free(j)).count()
                } else {
                    usize::MAX
                }
            })
            .collect()
    }

    pub fn has_active_rows(&self) -> bool {
        self.active.iter().any(|&a| a)
    }

    /// Standard starting multipliers: the cheapest per-row share of any
    /// covering column.
    pub fn initial_multipliers(&self) -> Vec<f64> {
        let width: Vec<usize> = (0..self.inst.n())
            .map(|j| self.inst.col(j).iter().filter(|&&i| self.active[i]).count())
            .collect();
        (0..self.inst.m())
            .map(|i| {
                if !self.active[i] {
                    return 0.0;
                }
                self.inst
                    .row(i)
                    .iter()
                    .filter(|&&j| self.is_free(j))
                    .map(|&j| self.costs[j] / width[j] as f64)
                    .fold(f64::INFINITY, f64::min)
            })
            .map(|v| if v.is_finite() { v } else { 0.0 })
            .collect()
    }
}

pub(crate) struct DualEval {
    pub bound: f64,
    /// Reduced costs of free columns; 0 for fixed ones.
    pub reduced: Vec<f64>,
    pub subgradient: Vec<f64>,
}

pub(crate) fn evaluate_dual(res: &Residual, u: &[f64]) -> DualEval {
    let inst = res.inst;
    let mut bound = res.fixed_cost;
    for i in 0..inst.m() {
        if res.active[i] {
            bound += u[i];
        }
    }
    let mut reduced = vec![0.0; inst.n()];
    let mut subgradient: Vec<f64> = res.active.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect();
    for j in 0..inst.n() {
        if !res.is_free(j) {
            continue;
        }
        let mut r = res.costs[j];
        for &i in inst.col(j) {
            if res.active[i] {
                r -= u[i];
            }
        }
        reduced[j] = r;
        if r < 0.0 {
            bound += r;
            for &i in inst.col(j) {
                if res.active[i] {
                    subgradient[i] -= 1.0;
                }
            }
        }
    }
    DualEval {
        bound,
        reduced,
        subgradient,
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SubgradientParams {
    pub max_iters: usize,
    pub lambda0: f64,
    /// Iterations without improvement before the step factor is halved.
    pub stall: usize,
    pub min_lambda: f64,
}

pub(crate) struct DualPoint {
    pub u: Vec<f64>,
    pub bound: f64,
    pub reduced: Vec<f64>,
    /// The relaxed solution at `u` covers every active row exactly once, so
    /// the bound is attained by a feasible cover.
    pub tight: bool,
    pub iterations: usize,
}

/// Per-iterate hook: reduced costs in, optional better upper bound out.
pub(crate) type IterateHook<'a> = &'a mut dyn FnMut(&[f64]) -> Option<f64>;

/// Projected subgradient ascent. Stops early once the best bound exceeds
/// `stop_above`. `on_iterate` receives every iterate's reduced costs and may
/// return a better upper bound to aim the step length at.
pub(crate) fn subgradient(
    res: &Residual,
    mut u: Vec<f64>,
    mut upper: f64,
    stop_above: f64,
    params: SubgradientParams,
    mut on_iterate: Option<IterateHook<'_>>,
    mut history: Option<&mut Vec<f64>>,
) -> DualPoint {
    for (i, ui) in u.iter_mut().enumerate() {
        if !res.active[i] {
            *ui = 0.0;
        }
    }
    let mut best: Option<DualPoint> = None;
    let mut lambda = params.lambda0;
    let mut since_improve = 0;
    let mut iterations = 0;

    for _ in 0..params.max_iters.max(1) {
        iterations += 1;
        let eval = evaluate_dual(res, &u);
        if let Some(cb) = on_iterate.as_mut() {
            if let Some(ub) = cb(&eval.reduced) {
                upper = upper.min(ub);
            }
        }
        let norm: f64 = eval.subgradient.iter().map(|s| s * s).sum();
        let improved = best.as_ref().is_none_or(|b| eval.bound > b.bound + 1e-12);
        if improved {
            best = Some(DualPoint {
                u: u.clone(),
                bound: eval.bound,
                reduced: eval.reduced,
                tight: norm == 0.0,
                iterations,
            });
            since_improve = 0;
        } else {
            since_improve += 1;
        }
        let best_bound = best.as_ref().map_or(f64::NEG_INFINITY, |b| b.bound);
        if let Some(h) = history.as_mut() {
            h.push(best_bound);
        }
        if norm == 0.0 || best_bound > stop_above {
            break;
        }
        if since_improve >= params.stall {
            lambda *= 0.5;
            since_improve = 0;
            if lambda < params.min_lambda {
                break;
            }
        }
        let gap = if upper.is_finite() {
            (upper - eval.bound).max(1e-6 * (1.0 + upper.abs()))
        } else {
            0.1 * eval.bound.abs() + 1.0
        };
        let step = lambda * gap / norm;
        for i in 0..u.len() {
            if res.active[i] {
                u[i] = (u[i] + step * eval.subgradient[i]).max(0.0);
            }
        }
    }
    let mut best = best.expect("at least one iteration");
    best.iterations = iterations;
    best
}

/// Greedy repair: starts from the fixed-in columns plus every free column
/// with negative reduced cost, covers the remaining rows by smallest
/// reduced cost per newly covered row, then drops redundant columns
/// (most expensive first). Returns a sorted full selection, or `None` when
/// some active row has no free column.
pub(crate) fn repair(res: &Residual, reduced: &[f64]) -> Option<Vec<usize>> {
    let inst = res.inst;
    let n = inst.n();
    let mut chosen = vec![false; n];
    let mut cover = vec![0u32; inst.m()];
    let take = |j: usize, chosen: &mut Vec<bool>, cover: &mut Vec<u32>| {
        chosen[j] = true;
        for &i in inst.col(j) {
            cover[i] += 1;
        }
    };
    for j in 0..n {
        match res.state[j] {
            ColState::In => take(j, &mut chosen, &mut cover),
            ColState::Free if reduced[j] < 0.0 => take(j, &mut chosen, &mut cover),
            _ => {}
        }
    }
    // gain[j] = uncovered active rows covered by free column j
    let mut gain = vec![0usize; n];
    let mut uncovered = 0;
    for i in 0..inst.m() {
        if cover[i] == 0 {
            uncovered += 1;
            for &j in inst.row(i) {
                gain[j] += 1;
            }
        }
    }
    while uncovered > 0 {
        let mut best: Option<(f64, f64, usize)> = None;
        for j in 0..n {
            if chosen[j] || !res.is_free(j) || gain[j] == 0 {
                continue;
            }
            let k = gain[j] as f64;
            let key = (reduced[j].max(0.0) / k, res.costs[j] / k, j);
            if best.is_none_or(|b| key.0 < b.0 || (key.0 == b.0 && key.1 < b.1)) {
                best = Some(key);
            }
        }
        let (_, _, j) = best?;
        chosen[j] = true;
        for &i in inst.col(j) {
            if cover[i] == 0 {
                uncovered -= 1;
                for &jj in inst.row(i) {
                    gain[jj] -= 1;
                }
            }
            cover[i] += 1;
        }
    }
    let mut removable: Vec<usize> = (0..n)
        .filter(|&j| chosen[j] && res.state[j] != ColState::In)
        .collect();
    removable.sort_by(|&a, &b| inst.cost(b).cmp(&inst.cost(a)).then(b.cmp(&a)));
    for j in removable {
        if inst.col(j).iter().all(|&i| cover[i] >= 2) {
            chosen[j] = false;
            for &i in inst.col(j) {
                cover[i] -= 1;
            }
        }
    }
    Some((0..n).filter(|&j| chosen[j]).collect())
}

/// Lagrangian lower bound `L(u)` of the full instance for multipliers `u`.
pub fn lagrangian_bound(inst: &ScpInstance, u: &[f64]) -> f64 {
    let costs: Vec<f64> = inst.costs().iter().map(|c| c.as_f64()).collect();
    let res = Residual::root(inst, &costs);
    let clipped: Vec<f64> = u.iter().map(|&v| v.max(0.0)).collect();
    evaluate_dual(&res, &clipped).bound
}

#[derive(Debug, Clone)]
pub struct LagrangianResult {
    pub lower_bound: f64,
    pub heuristic: SolveResult,
    /// Best bound after each subgradient iteration.
    pub bound_history: Vec<f64>,
}

/// Subgradient optimization of the Lagrangian dual with a greedy repair at
/// every iterate; returns the best bound and the best cover found.
pub fn lagrangian(inst: &ScpInstance, max_iters: usize) -> LagrangianResult {
    let start = Instant::now();
    let costs: Vec<f64> = inst.costs().iter().map(|c| c.as_f64()).collect();
    let res = Residual::root(inst, &costs);

    let mut best_sel: Vec<usize> = repair(&res, &costs).expect("instance is feasible");
    let mut best_cost = inst.total_cost(best_sel.iter().copied());
    let mut trace = vec![TracePoint {
        elapsed_ms: elapsed_ms(start),
        objective: best_cost,
    }];

    let upper = best_cost.as_f64();
    let mut on_iterate = |reduced: &[f64]| -> Option<f64> {
        let sel = repair(&res, reduced)?;
        let cost: Cost = inst.total_cost(sel.iter().copied());
        if cost < best_cost {
            best_cost = cost;
            best_sel = sel;
            trace.push(TracePoint {
                elapsed_ms: elapsed_ms(start),
                objective: cost,
            });
        }
        Some(best_cost.as_f64())
    };
    let params = SubgradientParams {
        max_iters,
        lambda0: 2.0,
        stall: 20,
        min_lambda: 1e-4,
    };
    let mut history = Vec::with_capacity(max_iters);
    let u0 = res.initial_multipliers();
    let dual = subgradient(
        &res,
        u0,
        upper,
        f64::INFINITY,
        params,
        Some(&mut on_iterate),
        Some(&mut history),
    );
    let lower_bound = dual.bound.min(best_cost.as_f64());
    let wall_ms = elapsed_ms(start);
    LagrangianResult {
        lower_bound,
        heuristic: SolveResult {
            selection: Selection::new(best_sel),
            objective: best_cost,
            status: SolveStatus::Feasible,
            nodes_explored: 0,
            lower_bound,
            incumbent_trace: trace,
            wall_ms,
        },
        bound_history: history,
    }
}
