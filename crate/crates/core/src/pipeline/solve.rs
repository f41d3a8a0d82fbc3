use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{PipelineError, Result};
use crate::graphrep::assemble_features;
use crate::instance::{Cost, ScpInstance, Selection};
use crate::neural::{forward, GnnModel, Mode};
use crate::solver::{branch_and_bound, lift, restrict, Restriction, SolveOptions, SolveStatus, TracePoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StopMode {
    /// Stop once a solver round reaches this objective or better.
    Target(Cost),
    /// Stop after two consecutive solver rounds with the same objective.
    Stabilize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    /// Percentile of the column scores used as the first cutoff, in [0, 100].
    pub initial_threshold: f64,
    pub decrement: f64,
    pub stop_mode: StopMode,
    pub solver_options: SolveOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            initial_threshold: 90.0,
            decrement: 10.0,
            stop_mode: StopMode::Stabilize,
            solver_options: SolveOptions::default(),
        }
    }
}

impl PipelineOptions {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=100.0).contains(&self.initial_threshold) {
            return Err(PipelineError::InvalidOptions(format!(
                "initial threshold {} outside [0, 100]",
                self.initial_threshold
            )));
        }
        if !(self.decrement > 0.0 && self.decrement.is_finite()) {
            return Err(PipelineError::InvalidOptions(format!("decrement {} must be positive", self.decrement)));
        }
        if self.solver_options.warm_start.is_some() {
            return Err(PipelineError::InvalidOptions("the pipeline manages warm starts itself".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub threshold: f64,
    pub n_selected: usize,
    pub coverage_ok: bool,
    pub solver_called: bool,
    pub objective: Option<Cost>,
    pub status: Option<SolveStatus>,
    pub nodes_explored: Option<u64>,
    pub round_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub instance: String,
    pub m: usize,
    pub n: usize,
    /// Feature extraction plus the forward pass.
    pub gnn_ms: f64,
    pub rounds: Vec<RoundTrace>,
    /// Best objective over all solver rounds.
    pub objective: Cost,
    pub selection: Selection,
    /// `1 - (columns passed to the last solver call) / n`.
    pub size_reduction: f64,
    pub total_ms: f64,
    pub forward_count: usize,
    /// Improving incumbents across rounds, in milliseconds since the start.
    pub incumbent_trace: Vec<TracePoint>,
}

impl PipelineReport {
    pub fn solver_rounds(&self) -> impl Iterator<Item = &RoundTrace> {
        self.rounds.iter().filter(|r| r.solver_called)
    }

    pub fn last_solver_round(&self) -> Option<&RoundTrace> {
        self.solver_rounds().last()
    }
}

/// Nearest-rank percentile: the `ceil(p / 100 * N)`-th smallest score, with
/// rank 1 for `p = 0`.
pub fn nearest_rank_cutoff(scores: &[f32], percentile: f64) -> f32 {
    assert!(!scores.is_empty());
    let mut sorted = scores.to_vec();
    sorted.sort_by(f32::total_cmp);
    let rank = ((percentile / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Columns scoring at least the percentile cutoff; all columns when the
/// threshold is not positive.
pub fn select_columns(scores: &[f32], threshold: f64) -> Vec<usize> {
    if threshold <= 0.0 {
        return (0..scores.len()).collect();
    }
    let cut = nearest_rank_cutoff(scores, threshold);
    (0..scores.len()).filter(|&j| scores[j] >= cut).collect()
}

/// Column scores from one eval-mode forward pass, with the time spent on
/// features and inference.
pub fn column_scores(model: &GnnModel<f32>, inst: &ScpInstance) -> Result<(Vec<f32>, f64)> {
    let start = Instant::now();
    let (graph, features) = assemble_features(inst)?;
    let scores = if model.mode == Mode::Eval {
        forward(model, &graph, &features, None)?.0
    } else {
        let mut m = model.clone();
        m.set_mode(Mode::Eval);
        forward(&m, &graph, &features, None)?.0
    };
    Ok((scores, start.elapsed().as_secs_f64() * 1e3))
}

/// One forward pass, then the threshold loop.
pub fn solve_pipeline(model: &GnnModel<f32>, inst: &ScpInstance, options: &PipelineOptions) -> Result<PipelineReport> {
    options.validate()?;
    let start = Instant::now();
    let (scores, gnn_ms) = column_scores(model, inst)?;
    let mut report = threshold_loop(inst, &scores, options, start)?;
    report.gnn_ms = gnn_ms;
    report.forward_count = 1;
    Ok(report)
}

/// The threshold loop on precomputed scores. The report's `forward_count` and
/// `gnn_ms` are zero.
pub fn solve_with_scores(inst: &ScpInstance, scores: &[f32], options: &PipelineOptions) -> Result<PipelineReport> {
    options.validate()?;
    threshold_loop(inst, scores, options, Instant::now())
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn threshold_loop(inst: &ScpInstance, scores: &[f32], options: &PipelineOptions, start: Instant) -> Result<PipelineReport> {
    if scores.len() != inst.n() {
        return Err(PipelineError::InvalidOptions(format!(
            "{} scores for {} columns",
            scores.len(),
            inst.n()
        )));
    }
    let mut rounds = Vec::new();
    let mut best: Option<(Cost, Selection)> = None;
    let mut trace: Vec<TracePoint> = Vec::new();
    let mut last_objective: Option<Cost> = None;
    let mut last_selected = inst.n();
    let mut threshold = options.initial_threshold;
    loop {
        let round_start = Instant::now();
        let offset = ms_since(start);
        let columns = select_columns(scores, threshold);
        let mut round = RoundTrace {
            threshold,
            n_selected: columns.len(),
            coverage_ok: false,
            solver_called: false,
            objective: None,
            status: None,
            nodes_explored: None,
            round_ms: 0.0,
        };
        let mut stop = threshold <= 0.0;
        if let Restriction::Covered { sub, index_map } = restrict(inst, &columns)? {
            round.coverage_ok = true;
            let mut solver_options = options.solver_options.clone();
            if let Some((_, sel)) = &best {
                // selections only grow as the threshold drops, so the previous
                // best maps into this restriction
                let local: Option<Vec<usize>> = sel.iter().map(|j| index_map.binary_search(&j).ok()).collect();
                solver_options.warm_start = local.map(Selection::new);
            }
            let result = branch_and_bound(&sub, &solver_options)?;
            round.solver_called = true;
            last_selected = columns.len();
            if result.status != SolveStatus::Infeasible {
                round.objective = Some(result.objective);
                let lifted = lift(&result.selection, &index_map);
                if best.as_ref().is_none_or(|(c, _)| result.objective < *c) {
                    best = Some((result.objective, lifted));
                }
                for p in &result.incumbent_trace {
                    if trace.last().is_none_or(|q| p.objective < q.objective) {
                        trace.push(TracePoint {
                            elapsed_ms: offset + p.elapsed_ms,
                            objective: p.objective,
                        });
                    }
                }
                stop |= match options.stop_mode {
                    StopMode::Target(goal) => result.objective <= goal,
                    StopMode::Stabilize => last_objective == Some(result.objective),
                };
                last_objective = Some(result.objective);
            }
            round.status = Some(result.status);
            round.nodes_explored = Some(result.nodes_explored);
        }
        round.round_ms = ms_since(round_start);
        log::debug!(
            "{}: threshold {} selected {} objective {:?}",
            inst.name(),
            round.threshold,
            round.n_selected,
            round.objective
        );
        rounds.push(round);
        if stop {
            break;
        }
        threshold = (threshold - options.decrement).max(0.0);
    }
    let (objective, selection) = best.expect("the full problem is always solved when nothing else was");
    Ok(PipelineReport {
        instance: inst.name().to_string(),
        m: inst.m(),
        n: inst.n(),
        gnn_ms: 0.0,
        rounds,
        objective,
        selection,
        size_reduction: 1.0 - last_selected as f64 / inst.n() as f64,
        total_ms: ms_since(start),
        forward_count: 0,
        incumbent_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::evaluate;
    use crate::instance::fixtures::t3;
    use crate::neural::{init_model, ModelConfig};
    use crate::solver::{brute_force, test_support::small};
    use proptest::prelude::*;

    fn target(v: i64) -> PipelineOptions {
        PipelineOptions {
            stop_mode: StopMode::Target(Cost::from_int(v)),
            ..PipelineOptions::default()
        }
    }

    #[test]
    fn nearest_rank_values() {
        let s = [0.9, 0.5, 0.1];
        assert_eq!(nearest_rank_cutoff(&s, 90.0), 0.9);
        assert_eq!(nearest_rank_cutoff(&s, 50.0), 0.5);
        assert_eq!(nearest_rank_cutoff(&s, 0.0), 0.1);
        assert_eq!(nearest_rank_cutoff(&s, 100.0), 0.9);
        assert_eq!(select_columns(&s, 90.0), vec![0]);
        assert_eq!(select_columns(&s, 50.0), vec![0, 1]);
    }

    #[test]
    fn t3_threshold_90_decrements_without_solving() {
        let r = solve_with_scores(&t3(), &[0.9, 0.5, 0.1], &target(2)).unwrap();
        let first = &r.rounds[0];
        assert_eq!((first.threshold, first.n_selected), (90.0, 1));
        assert!(!first.coverage_ok && !first.solver_called);
        // 80 and 70 still rank col0 alone (rank 3 of 3); at 60 the rank is 2
        let called: Vec<f64> = r.solver_rounds().map(|x| x.threshold).collect();
        assert_eq!(called, vec![60.0]);
        assert_eq!(r.rounds.len(), 4);
        assert_eq!(r.objective, Cost::from_int(2));
        assert_eq!(r.selection, Selection::new([0, 1]));
        assert!((r.size_reduction - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn t3_threshold_50_stops_at_once() {
        let opts = PipelineOptions { initial_threshold: 50.0, ..target(2) };
        let r = solve_with_scores(&t3(), &[0.9, 0.5, 0.1], &opts).unwrap();
        assert_eq!(r.rounds.len(), 1);
        assert_eq!(r.rounds[0].objective, Some(Cost::from_int(2)));
    }

    #[test]
    fn unreachable_target_ends_on_full_problem() {
        let r = solve_with_scores(&t3(), &[0.9, 0.5, 0.1], &target(1)).unwrap();
        let thresholds: Vec<f64> = r.rounds.iter().map(|x| x.threshold).collect();
        assert_eq!(thresholds, (0..=9).rev().map(|k| k as f64 * 10.0).collect::<Vec<_>>());
        assert_eq!(r.size_reduction, 0.0);
        assert_eq!(r.objective, Cost::from_int(2));
    }

    #[test]
    fn stabilize_needs_two_equal_rounds() {
        let opts = PipelineOptions { initial_threshold: 50.0, ..PipelineOptions::default() };
        let r = solve_with_scores(&t3(), &[0.9, 0.5, 0.1], &opts).unwrap();
        let objs: Vec<_> = r.solver_rounds().map(|x| x.objective).collect();
        assert_eq!(objs, vec![Some(Cost::from_int(2)); 2]);
    }

    #[test]
    fn forward_count_is_one() {
        let model = init_model::<f32>(&ModelConfig { hidden_dim: 8, ..ModelConfig::default() }).unwrap();
        let r = solve_pipeline(&model, &t3(), &target(2)).unwrap();
        assert_eq!(r.forward_count, 1);
        assert_eq!(r.objective, Cost::from_int(2));
        assert!(r.gnn_ms >= 0.0 && r.total_ms >= r.gnn_ms);
    }

    #[test]
    fn rejects_bad_options() {
        let mut o = PipelineOptions { decrement: 0.0, ..PipelineOptions::default() };
        assert!(solve_with_scores(&t3(), &[0.1; 3], &o).is_err());
        o.decrement = 10.0;
        o.initial_threshold = 120.0;
        assert!(solve_with_scores(&t3(), &[0.1; 3], &o).is_err());
        assert!(solve_with_scores(&t3(), &[0.1; 2], &PipelineOptions::default()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn loop_invariants(seed in any::<u64>(), init in 0u32..=100, dec in 1u32..40, raw in prop::collection::vec(0u8..20, 24)) {
            let inst = small(seed, 10, 16);
            let scores: Vec<f32> = (0..inst.n()).map(|j| f32::from(raw[j % raw.len()]) / 20.0).collect();
            let opt = brute_force(&inst).unwrap().objective;
            let options = PipelineOptions {
                initial_threshold: f64::from(init),
                decrement: f64::from(dec),
                stop_mode: StopMode::Target(opt),
                ..PipelineOptions::default()
            };
            let r = solve_with_scores(&inst, &scores, &options).unwrap();
            prop_assert_eq!(r.objective, opt);
            prop_assert!(evaluate(&inst, &r.selection).unwrap().feasible);
            prop_assert!(r.rounds.len() <= (f64::from(init) / f64::from(dec)).ceil() as usize + 1);
            for w in r.rounds.windows(2) {
                prop_assert!(w[1].threshold < w[0].threshold);
                prop_assert!(w[1].threshold == 0.0 || (w[0].threshold - w[1].threshold - f64::from(dec)).abs() < 1e-9);
                prop_assert!(w[1].n_selected >= w[0].n_selected);
            }
            let objs: Vec<Cost> = r.solver_rounds().filter_map(|x| x.objective).collect();
            // warm starts carry the incumbent forward
            for w in objs.windows(2) {
                prop_assert!(w[1] <= w[0]);
            }
            let last = r.last_solver_round().unwrap();
            prop_assert_eq!(r.size_reduction, 1.0 - last.n_selected as f64 / inst.n() as f64);
            for w in r.incumbent_trace.windows(2) {
                prop_assert!(w[1].objective < w[0].objective && w[1].elapsed_ms >= w[0].elapsed_ms);
            }
        }
    }
}
