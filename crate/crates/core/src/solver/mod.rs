//! Exact and heuristic set cover solvers.
//!
//! [`branch_and_bound`] is the exact back end used for labeling, for the
//! reduced sub-instances and for the full-instance baseline. [`greedy`],
//! [`lagrangian`] and [`random_restrict`] are the comparison heuristics, and
//! [`brute_force`] is the enumeration oracle for small instances.

mod bnb;
mod brute;
mod greedy;
mod lagrange;
mod lp;
mod restrict;

pub use bnb::branch_and_bound;
pub use brute::{brute_force, BRUTE_FORCE_MAX_N};
pub use greedy::greedy;
pub use lagrange::{lagrangian, lagrangian_bound, LagrangianResult, DEFAULT_LAGRANGIAN_ITERS};
pub use lp::{export_lp, lp_string};
pub use restrict::{lift, random_restrict, restrict, Restriction};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::instance::{Cost, InstanceError, Selection};

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("warm start leaves rows {uncovered:?} uncovered")]
    InfeasibleWarmStart { uncovered: Vec<usize> },
    #[error("brute force supports at most {max} columns, instance has {n}")]
    TooLarge { n: usize, max: usize },
    #[error("restriction must keep at least one column")]
    EmptyRestriction,
    #[error("subset percentage {0} outside (0, 100]")]
    InvalidPercent(f64),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    TimedOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub elapsed_ms: f64,
    pub objective: Cost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub selection: Selection,
    pub objective: Cost,
    pub status: SolveStatus,
    pub nodes_explored: u64,
    pub lower_bound: f64,
    /// Strictly improving incumbents, stamped with a monotonic clock.
    pub incumbent_trace: Vec<TracePoint>,
    pub wall_ms: f64,
}

impl SolveResult {
    pub(crate) fn infeasible(wall_ms: f64) -> Self {
        SolveResult {
            selection: Selection::default(),
            objective: Cost::ZERO,
            status: SolveStatus::Infeasible,
            nodes_explored: 0,
            lower_bound: f64::INFINITY,
            incumbent_trace: Vec::new(),
            wall_ms,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Options for [`branch_and_bound`]. Ties between equal-cost solutions are
/// resolved by the fixed search order, so results are reproducible.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Wall-clock budget in milliseconds; 0 disables it.
    pub timeout_ms: u64,
    pub warm_start: Option<Selection>,
    /// Maximum number of explored nodes; 0 disables it.
    pub node_limit: u64,
}

impl SolveOptions {
    pub fn with_warm_start(mut self, warm: Selection) -> Self {
        self.warm_start = Some(warm);
        self
    }

    pub fn with_timeout_ms(mut self, ms: u64) -> Self {
        self.timeout_ms = ms;
        self
    }
}

pub(crate) fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}
