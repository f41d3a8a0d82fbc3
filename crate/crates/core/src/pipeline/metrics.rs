use serde::{Deserialize, Serialize};

use super::solve::PipelineReport;
use crate::solver::SolveResult;

/// Timings below this are clamped before dividing.
pub const MIN_TIMING_MS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Baseline wall time over pipeline wall time, both on the in-repo solver.
    pub speedup_factor: f64,
    pub size_reduction: f64,
    pub auc: Option<f64>,
}

/// Probability that a random positive outranks a random negative, ties
/// counting one half (Mann-Whitney U over average ranks). `None` when either
/// class is empty.
pub fn auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), labels.len());
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 share their average
        let avg = (i + j + 2) as f64 / 2.0;
        rank_sum += order[i..=j].iter().filter(|&&k| labels[k]).count() as f64 * avg;
        i = j + 1;
    }
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Some(u / (pos * neg) as f64)
}

/// `scored` carries the column scores and optimal-cover labels when the AUC
/// is wanted.
pub fn compute_metrics(report: &PipelineReport, baseline: &SolveResult, scored: Option<(&[f32], &[bool])>) -> Metrics {
    let speedup_factor = baseline.wall_ms.max(MIN_TIMING_MS) / report.total_ms.max(MIN_TIMING_MS);
    let auc = scored.and_then(|(s, l)| {
        let s: Vec<f64> = s.iter().map(|&x| f64::from(x)).collect();
        auc(&s, l)
    });
    Metrics {
        speedup_factor,
        size_reduction: report.size_reduction,
        auc,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Cost, Selection};
    use crate::solver::SolveStatus;
    use proptest::prelude::*;

    fn brute_auc(s: &[f64], l: &[bool]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (a, &la) in s.iter().zip(l) {
            for (b, &lb) in s.iter().zip(l) {
                if la && !lb {
                    pairs += 1.0;
                    wins += if a > b { 1.0 } else if a == b { 0.5 } else { 0.0 };
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn perfect_and_reversed() {
        assert_eq!(auc(&[0.9, 0.8, 0.1, 0.2], &[true, true, false, false]), Some(1.0));
        assert_eq!(auc(&[0.1, 0.2, 0.9, 0.8], &[true, true, false, false]), Some(0.0));
        assert_eq!(auc(&[0.5, 0.5, 0.5], &[true, false, false]), Some(0.5));
        assert_eq!(auc(&[0.5, 0.4], &[true, true]), None);
    }

    fn report(total_ms: f64, size_reduction: f64) -> PipelineReport {
        PipelineReport {
            instance: "x".into(),
            m: 1,
            n: 1000,
            gnn_ms: 0.0,
            rounds: vec![],
            objective: Cost::ZERO,
            selection: Selection::default(),
            size_reduction,
            total_ms,
            forward_count: 1,
            incumbent_trace: vec![],
        }
    }

    fn baseline(wall_ms: f64) -> SolveResult {
        SolveResult {
            selection: Selection::default(),
            objective: Cost::ZERO,
            status: SolveStatus::Optimal,
            nodes_explored: 1,
            lower_bound: 0.0,
            incumbent_trace: vec![],
            wall_ms,
        }
    }

    #[test]
    fn speedup_and_clamp() {
        let m = compute_metrics(&report(2000.0, 0.75), &baseline(10_000.0), None);
        assert_eq!(m.speedup_factor, 5.0);
        assert_eq!(m.size_reduction, 0.75);
        let m = compute_metrics(&report(0.0, 0.0), &baseline(0.0), None);
        assert_eq!(m.speedup_factor, 1.0);
        let m = compute_metrics(&report(0.2, 0.0), &baseline(5.0), Some((&[0.9, 0.1], &[true, false])));
        assert_eq!((m.speedup_factor, m.auc), (5.0, Some(1.0)));
    }

    proptest! {
        #[test]
        fn matches_pairwise_count(v in prop::collection::vec((0u8..6, any::<bool>()), 2..40)) {
            let s: Vec<f64> = v.iter().map(|p| f64::from(p.0) / 5.0).collect();
            let l: Vec<bool> = v.iter().map(|p| p.1).collect();
            match auc(&s, &l) {
                Some(a) => prop_assert!((a - brute_auc(&s, &l)).abs() < 1e-12),
                None => prop_assert!(l.iter().all(|&x| x) || l.iter().all(|&x| !x)),
            }
        }
    }
}
