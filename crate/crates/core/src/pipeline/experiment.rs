//! Experiment suites writing CSV reports. Every report is a pure function of
//! the inputs except for the timing columns.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::derive_seed;
use super::metrics::compute_metrics;
use super::solve::{column_scores, solve_pipeline, solve_with_scores, PipelineOptions, StopMode};
use super::{PipelineError, Result};
use crate::instance::{density, generate, Cost, CostModel, GeneratorConfig, ScpInstance};
use crate::neural::GnnModel;
use crate::solver::{branch_and_bound, SolveResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    /// Pipeline against the full-problem baseline, one row per instance.
    BenchSuite,
    /// Objective-versus-time pairs of both systems.
    IncumbentTrace,
    /// Several initial thresholds on one fixed score vector per instance.
    ThresholdSweep,
    /// How many rounds the loop needs from each initial threshold.
    ThresholdRunCount,
    /// Generated instances of fixed size across density buckets.
    DensitySweep,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::BenchSuite,
        ExperimentKind::IncumbentTrace,
        ExperimentKind::ThresholdSweep,
        ExperimentKind::ThresholdRunCount,
        ExperimentKind::DensitySweep,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            ExperimentKind::BenchSuite => "bench.csv",
            ExperimentKind::IncumbentTrace => "incumbent_trace.csv",
            ExperimentKind::ThresholdSweep => "threshold_sweep.csv",
            ExperimentKind::ThresholdRunCount => "threshold_run_count.csv",
            ExperimentKind::DensitySweep => "density_sweep.csv",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchInstance {
    pub instance: ScpInstance,
    pub instance_type: String,
}

/// Stop rule used by the suites that compare against the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BenchStop {
    /// Target the baseline's objective.
    BaselineTarget,
    Stabilize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentParams {
    /// Threshold schedule and solver settings; the stop mode comes from `stop`.
    pub pipeline: PipelineOptions,
    pub stop: BenchStop,
    pub thresholds: Vec<f64>,
    pub density_buckets: Vec<(f64, f64)>,
    pub density_m: usize,
    pub density_n: usize,
    pub density_count: usize,
    pub seed: u64,
    /// Worker threads; 0 lets rayon decide.
    pub workers: usize,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        ExperimentParams {
            pipeline: PipelineOptions::default(),
            stop: BenchStop::BaselineTarget,
            thresholds: vec![90.0, 70.0, 50.0, 30.0],
            density_buckets: vec![(0.02, 0.04), (0.04, 0.06), (0.06, 0.08), (0.08, 0.10)],
            density_m: 600,
            density_n: 1000,
            density_count: 2,
            seed: 0,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance: String,
    #[serde(rename = "type")]
    pub instance_type: String,
    pub m: usize,
    pub n: usize,
    pub density: f64,
    pub objective: Cost,
    /// Whether the pipeline matched a proven-optimal baseline.
    pub optimal: bool,
    pub size_reduction: f64,
    pub speedup: f64,
    pub pipeline_ms: f64,
    pub baseline_ms: f64,
    pub rounds: usize,
    pub forward_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncumbentRow {
    pub instance: String,
    pub system: String,
    pub elapsed_ms: f64,
    pub objective: Cost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SweepRow {
    instance: String,
    initial_threshold: f64,
    first_round_selected: usize,
    first_solver_selected: usize,
    final_selected: usize,
    solver_calls: usize,
    objective: Cost,
    pipeline_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RunCountRow {
    instance: String,
    #[serde(rename = "type")]
    instance_type: String,
    initial_threshold: f64,
    rounds: usize,
    solver_calls: usize,
    final_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DensityRow {
    instance: String,
    density_lo: f64,
    density_hi: f64,
    m: usize,
    n: usize,
    density: f64,
    objective: Cost,
    baseline_objective: Cost,
    optimal: bool,
    size_reduction: f64,
    speedup: f64,
    pipeline_ms: f64,
    baseline_ms: f64,
}

fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn stop_mode(stop: BenchStop, baseline: &SolveResult) -> StopMode {
    match stop {
        BenchStop::BaselineTarget => StopMode::Target(baseline.objective),
        BenchStop::Stabilize => StopMode::Stabilize,
    }
}

fn bench_one(model: &GnnModel<f32>, b: &BenchInstance, params: &ExperimentParams) -> Result<BenchRow> {
    let inst = &b.instance;
    let baseline = branch_and_bound(inst, &params.pipeline.solver_options)?;
    let options = PipelineOptions {
        stop_mode: stop_mode(params.stop, &baseline),
        ..params.pipeline.clone()
    };
    let report = solve_pipeline(model, inst, &options)?;
    let metrics = compute_metrics(&report, &baseline, None);
    log::info!(
        "{}: objective {} baseline {} reduction {:.3} speedup {:.2}",
        inst.name(),
        report.objective,
        baseline.objective,
        report.size_reduction,
        metrics.speedup_factor
    );
    Ok(BenchRow {
        instance: inst.name().to_string(),
        instance_type: b.instance_type.clone(),
        m: inst.m(),
        n: inst.n(),
        density: density(inst),
        objective: report.objective,
        optimal: baseline.is_optimal() && report.objective == baseline.objective,
        size_reduction: report.size_reduction,
        speedup: metrics.speedup_factor,
        pipeline_ms: report.total_ms,
        baseline_ms: baseline.wall_ms,
        rounds: report.rounds.len(),
        forward_count: report.forward_count,
    })
}

fn trace_one(model: &GnnModel<f32>, b: &BenchInstance, params: &ExperimentParams) -> Result<Vec<IncumbentRow>> {
    let inst = &b.instance;
    let baseline = branch_and_bound(inst, &params.pipeline.solver_options)?;
    let options = PipelineOptions {
        stop_mode: stop_mode(params.stop, &baseline),
        ..params.pipeline.clone()
    };
    let report = solve_pipeline(model, inst, &options)?;
    let row = |system: &str, p: &crate::solver::TracePoint| IncumbentRow {
        instance: inst.name().to_string(),
        system: system.to_string(),
        elapsed_ms: p.elapsed_ms,
        objective: p.objective,
    };
    Ok(report
        .incumbent_trace
        .iter()
        .map(|p| row("pipeline", p))
        .chain(baseline.incumbent_trace.iter().map(|p| row("baseline", p)))
        .collect())
}

fn sweep_one(model: &GnnModel<f32>, b: &BenchInstance, params: &ExperimentParams) -> Result<Vec<SweepRow>> {
    let inst = &b.instance;
    let (scores, gnn_ms) = column_scores(model, inst)?;
    let mut rows = Vec::new();
    for &t in &params.thresholds {
        let options = PipelineOptions {
            initial_threshold: t,
            stop_mode: StopMode::Stabilize,
            ..params.pipeline.clone()
        };
        let r = solve_with_scores(inst, &scores, &options)?;
        rows.push(SweepRow {
            instance: inst.name().to_string(),
            initial_threshold: t,
            first_round_selected: r.rounds[0].n_selected,
            first_solver_selected: r.solver_rounds().next().map_or(inst.n(), |x| x.n_selected),
            final_selected: r.last_solver_round().map_or(inst.n(), |x| x.n_selected),
            solver_calls: r.solver_rounds().count(),
            objective: r.objective,
            pipeline_ms: gnn_ms + r.total_ms,
        });
    }
    Ok(rows)
}

fn run_count_one(model: &GnnModel<f32>, b: &BenchInstance, params: &ExperimentParams) -> Result<Vec<RunCountRow>> {
    let inst = &b.instance;
    let (scores, _) = column_scores(model, inst)?;
    let baseline = branch_and_bound(inst, &params.pipeline.solver_options)?;
    let mut rows = Vec::new();
    for &t in &params.thresholds {
        let options = PipelineOptions {
            initial_threshold: t,
            stop_mode: stop_mode(params.stop, &baseline),
            ..params.pipeline.clone()
        };
        let r = solve_with_scores(inst, &scores, &options)?;
        rows.push(RunCountRow {
            instance: inst.name().to_string(),
            instance_type: b.instance_type.clone(),
            initial_threshold: t,
            rounds: r.rounds.len(),
            solver_calls: r.solver_rounds().count(),
            final_threshold: r.rounds.last().map_or(0.0, |x| x.threshold),
        });
    }
    Ok(rows)
}

fn density_one(model: &GnnModel<f32>, bucket: usize, k: usize, params: &ExperimentParams) -> Result<DensityRow> {
    let (lo, hi) = params.density_buckets[bucket];
    let cfg = GeneratorConfig::custom(
        (params.density_m, params.density_m),
        (params.density_n, params.density_n),
        (lo, hi),
        CostModel::UniformInt(1, 100),
        derive_seed(params.seed, bucket as u64, k as u64),
    );
    let inst = generate(&cfg)?;
    let baseline = branch_and_bound(&inst, &params.pipeline.solver_options)?;
    let options = PipelineOptions {
        stop_mode: stop_mode(params.stop, &baseline),
        ..params.pipeline.clone()
    };
    let report = solve_pipeline(model, &inst, &options)?;
    let metrics = compute_metrics(&report, &baseline, None);
    Ok(DensityRow {
        instance: inst.name().to_string(),
        density_lo: lo,
        density_hi: hi,
        m: inst.m(),
        n: inst.n(),
        density: density(&inst),
        objective: report.objective,
        baseline_objective: baseline.objective,
        optimal: baseline.is_optimal() && report.objective == baseline.objective,
        size_reduction: report.size_reduction,
        speedup: metrics.speedup_factor,
        pipeline_ms: report.total_ms,
        baseline_ms: baseline.wall_ms,
    })
}

fn flatten<T>(v: Result<Vec<Vec<T>>>) -> Result<Vec<T>> {
    Ok(v?.into_iter().flatten().collect())
}

/// Runs one suite over `suite` (ignored by `DensitySweep`, which generates
/// its own instances) and writes its CSV into `out_dir`. Returns the CSV path.
pub fn run_experiment(
    kind: ExperimentKind,
    model: &GnnModel<f32>,
    suite: &[BenchInstance],
    params: &ExperimentParams,
    out_dir: &Path,
) -> Result<PathBuf> {
    params.pipeline.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(params.workers)
        .build()
        .map_err(|e| PipelineError::InvalidOptions(e.to_string()))?;
    let path = out_dir.join(kind.file_name());
    let start = Instant::now();
    pool.install(|| -> Result<()> {
        match kind {
            ExperimentKind::BenchSuite => {
                let rows: Vec<BenchRow> = suite.par_iter().map(|b| bench_one(model, b, params)).collect::<Result<_>>()?;
                write_csv(&path, &rows)
            }
            ExperimentKind::IncumbentTrace => {
                let rows = flatten(suite.par_iter().map(|b| trace_one(model, b, params)).collect())?;
                write_csv(&path, &rows)
            }
            ExperimentKind::ThresholdSweep => {
                let rows = flatten(suite.par_iter().map(|b| sweep_one(model, b, params)).collect())?;
                write_csv(&path, &rows)
            }
            ExperimentKind::ThresholdRunCount => {
                let rows = flatten(suite.par_iter().map(|b| run_count_one(model, b, params)).collect())?;
                write_csv(&path, &rows)
            }
            ExperimentKind::DensitySweep => {
                let jobs: Vec<(usize, usize)> = (0..params.density_buckets.len())
                    .flat_map(|b| (0..params.density_count).map(move |k| (b, k)))
                    .collect();
                let rows: Vec<DensityRow> =
                    jobs.par_iter().map(|&(b, k)| density_one(model, b, k, params)).collect::<Result<_>>()?;
                write_csv(&path, &rows)
            }
        }
    })?;
    log::info!("{kind:?} finished in {:.0} ms", start.elapsed().as_secs_f64() * 1e3);
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::InstanceType;
    use crate::neural::{init_model, Mode, ModelConfig};
    use crate::solver::test_support::small;

    fn model() -> GnnModel<f32> {
        let mut m = init_model::<f32>(&ModelConfig { hidden_dim: 8, seed: 3, ..ModelConfig::default() }).unwrap();
        m.set_mode(Mode::Eval);
        m
    }

    fn suite() -> Vec<BenchInstance> {
        (0..6)
            .map(|s| BenchInstance {
                instance: small(s, 12, 18),
                instance_type: InstanceType::Custom.label().to_string(),
            })
            .collect()
    }

    fn read(path: &Path) -> Vec<Vec<String>> {
        let mut r = csv::Reader::from_path(path).unwrap();
        let mut rows = vec![r.headers().unwrap().iter().map(String::from).collect()];
        rows.extend(r.records().map(|x| x.unwrap().iter().map(String::from).collect()));
        rows
    }

    #[test]
    fn bench_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = run_experiment(ExperimentKind::BenchSuite, &model(), &suite(), &ExperimentParams::default(), dir.path()).unwrap();
        let rows = read(&p);
        assert_eq!(
            rows[0].join(","),
            "instance,type,m,n,density,objective,optimal,size_reduction,speedup,pipeline_ms,baseline_ms,rounds,forward_count"
        );
        assert_eq!(rows.len(), 7);
        for r in &rows[1..] {
            assert_eq!(r[6], "true");
            assert_eq!(r[12], "1");
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let timing = [8usize, 9, 10];
        let run = |workers| {
            let dir = tempfile::tempdir().unwrap();
            let params = ExperimentParams { workers, ..ExperimentParams::default() };
            let p = run_experiment(ExperimentKind::BenchSuite, &model(), &suite(), &params, dir.path()).unwrap();
            read(&p)
                .into_iter()
                .map(|r| r.into_iter().enumerate().filter(|(i, _)| !timing.contains(i)).map(|(_, x)| x).collect::<Vec<_>>())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn sweep_first_selection_shrinks_with_threshold() {
        let dir = tempfile::tempdir().unwrap();
        let p = run_experiment(ExperimentKind::ThresholdSweep, &model(), &suite(), &ExperimentParams::default(), dir.path()).unwrap();
        let rows = read(&p);
        assert_eq!(rows[0][..3], ["instance", "initial_threshold", "first_round_selected"]);
        // thresholds are listed 90, 70, 50, 30 for each instance
        for chunk in rows[1..].chunks(4) {
            let sel: Vec<usize> = chunk.iter().map(|r| r[2].parse().unwrap()).collect();
            assert!(sel.windows(2).all(|w| w[0] <= w[1]), "{sel:?}");
        }
    }

    #[test]
    fn trace_and_run_count_files() {
        let dir = tempfile::tempdir().unwrap();
        let params = ExperimentParams::default();
        let p = run_experiment(ExperimentKind::IncumbentTrace, &model(), &suite(), &params, dir.path()).unwrap();
        let rows = read(&p);
        assert_eq!(rows[0].join(","), "instance,system,elapsed_ms,objective");
        assert!(rows[1..].iter().any(|r| r[1] == "pipeline") && rows[1..].iter().any(|r| r[1] == "baseline"));
        let p = run_experiment(ExperimentKind::ThresholdRunCount, &model(), &suite(), &params, dir.path()).unwrap();
        assert_eq!(read(&p).len(), 1 + 6 * 4);
    }

    #[test]
    fn density_sweep_rows_per_bucket() {
        let dir = tempfile::tempdir().unwrap();
        let params = ExperimentParams {
            density_m: 15,
            density_n: 25,
            density_buckets: vec![(0.15, 0.2), (0.25, 0.3)],
            density_count: 2,
            ..ExperimentParams::default()
        };
        let p = run_experiment(ExperimentKind::DensitySweep, &model(), &[], &params, dir.path()).unwrap();
        let rows = read(&p);
        assert_eq!(rows.len(), 5);
        for r in &rows[1..] {
            let (lo, hi, d): (f64, f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap(), r[5].parse().unwrap());
            assert!(d >= lo - 0.011 && d <= hi + 0.011);
            assert_eq!(r[8], "true");
        }
    }
}
