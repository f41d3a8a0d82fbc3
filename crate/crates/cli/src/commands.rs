use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Serialize;

use gscp::graphrep::{assemble_features, features_csv, raw_features};
use gscp::instance::{
    from_native_str, generate, parse_orlib, write_native, write_orlib, Cost, GeneratorConfig, InstanceType,
    ScpInstance, Selection,
};
use gscp::neural::{load_model, save_model, LossConfig, ModelConfig, PenaltyForm};
use gscp::pipeline::{
    derive_seed, label_instance, make_dataset, run_experiment, solve_pipeline, train, BenchInstance, BenchStop,
    ExperimentKind, ExperimentParams, LabeledExample, PipelineOptions, StopMode, TrainConfig,
};
use gscp::solver::{
    branch_and_bound, export_lp, greedy, lagrangian, lift, random_restrict, restrict, Restriction, SolveOptions,
    SolveResult,
};

use crate::{
    Algo, BaselineArgs, BenchArgs, Command, Common, ConvertArgs, Experiment, ExportLpArgs, FeaturesArgs, Failure,
    Format, GenerateArgs, LabelArgs, Penalty, PipelineFlags, SizeOverride, SolveArgs, Stop, TrainArgs,
};

type Outcome = Result<PathBuf, Failure>;

const MANIFEST: &str = "run-manifest.json";

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    args: &'a Command,
    outputs: Vec<String>,
}

fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Generate(a) => &a.common,
        Command::Label(a) => &a.common,
        Command::Train(a) => &a.common,
        Command::Solve(a) => &a.common,
        Command::Baseline(a) => &a.common,
        Command::Bench(a) => &a.common,
        Command::Features(a) => &a.common,
        Command::ExportLp(a) => &a.common,
        Command::Convert(a) => &a.common,
    }
}

pub fn run(cmd: &Command) -> Outcome {
    let c = common(cmd);
    fs::create_dir_all(&c.out).with_context(|| format!("creating {}", c.out.display()))?;
    let (primary, outputs) = match cmd {
        Command::Generate(a) => run_generate(a)?,
        Command::Label(a) => run_label(a)?,
        Command::Train(a) => run_train(a)?,
        Command::Solve(a) => run_solve(a)?,
        Command::Baseline(a) => run_baseline(a)?,
        Command::Bench(a) => run_bench(a)?,
        Command::Features(a) => run_features(a)?,
        Command::ExportLp(a) => run_export_lp(a)?,
        Command::Convert(a) => run_convert(a)?,
    };
    let manifest = Manifest {
        tool: "gscp",
        version: env!("CARGO_PKG_VERSION"),
        command: cmd.name(),
        seed: c.seed,
        args: cmd,
        outputs: outputs.iter().map(|p| file_name(p)).collect(),
    };
    let path = c.out.join(MANIFEST);
    write_json(&path, &manifest)?;
    Ok(primary.unwrap_or(path))
}

type Written = (Option<PathBuf>, Vec<PathBuf>);

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Native files are JSON; anything else is read as OR-Library.
fn load_instance(path: &Path) -> anyhow::Result<ScpInstance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let inst = if text.trim_start().starts_with('{') {
        from_native_str(&text)
    } else {
        parse_orlib(&text, stem(path))
    };
    inst.with_context(|| format!("parsing {}", path.display()))
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "instance".into())
}

fn is_instance_file(p: &Path) -> bool {
    matches!(p.extension().and_then(|e| e.to_str()), Some("scp" | "txt"))
}

/// Files as given plus the `.scp`/`.txt` files of every directory, sorted.
fn expand_inputs(paths: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.is_file() && is_instance_file(f))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        bail!("no instance files found");
    }
    Ok(files)
}

fn type_of(name: &str) -> String {
    let prefix = name.split('-').next().unwrap_or("");
    let known = InstanceType::SYNTHETIC.iter().any(|t| t.label() == prefix);
    if known { prefix.to_string() } else { "external".to_string() }
}

fn apply_size(mut cfg: GeneratorConfig, s: &SizeOverride) -> GeneratorConfig {
    cfg.m_range = (s.m_min.unwrap_or(cfg.m_range.0), s.m_max.unwrap_or(cfg.m_range.1));
    cfg.n_range = (s.n_min.unwrap_or(cfg.n_range.0), s.n_max.unwrap_or(cfg.n_range.1));
    cfg
}

fn instance_type(k: u8) -> Result<InstanceType, Failure> {
    InstanceType::from_number(k).ok_or_else(|| Failure::Usage(format!("--type {k}: expected 1, 2, 3 or 4")))
}

fn run_generate(a: &GenerateArgs) -> Result<Written, Failure> {
    let t = instance_type(a.instance_type)?;
    let base = apply_size(GeneratorConfig::for_type(t, 0), &a.size);
    let mut outputs = Vec::with_capacity(a.count);
    for k in 0..a.count {
        let cfg = base.clone().with_seed(derive_seed(a.common.seed, u64::from(a.instance_type), k as u64));
        let inst = generate(&cfg).context("generating instance")?;
        let path = match a.format {
            Format::Native => {
                let p = a.common.out.join(format!("{}.scp", inst.name()));
                write_native(&inst, &p).context("writing instance")?;
                p
            }
            Format::Orlib => {
                let p = a.common.out.join(format!("{}.txt", inst.name()));
                fs::write(&p, write_orlib(&inst)).context("writing instance")?;
                p
            }
        };
        log::info!("wrote {} (m={}, n={})", path.display(), inst.m(), inst.n());
        outputs.push(path);
    }
    Ok((None, outputs))
}

#[derive(Serialize)]
struct LabelFile<'a> {
    instance: &'a str,
    optimal_objective: Cost,
    selection: Selection,
    labels: Vec<u8>,
}

fn run_label(a: &LabelArgs) -> Result<Written, Failure> {
    let mut outputs = Vec::new();
    for path in expand_inputs(&a.instances)? {
        let inst = load_instance(&path)?;
        let ex = label_instance(inst, InstanceType::Custom).with_context(|| format!("labeling {}", path.display()))?;
        let name = ex.instance.name().to_string();
        let out = a.common.out.join(format!("{name}.labels.json"));
        write_json(
            &out,
            &LabelFile {
                instance: &name,
                optimal_objective: ex.optimal_objective,
                selection: ex.optimal_selection(),
                labels: ex.labels.iter().map(|&l| u8::from(l)).collect(),
            },
        )?;
        log::info!("{name}: optimum {}", ex.optimal_objective);
        outputs.push(out);
    }
    Ok((None, outputs))
}

fn run_train(a: &TrainArgs) -> Result<Written, Failure> {
    let dataset: Vec<LabeledExample> = if a.instances.is_empty() {
        let configs = a
            .types
            .iter()
            .map(|&k| Ok(apply_size(GeneratorConfig::for_type(instance_type(k)?, 0), &a.size)))
            .collect::<Result<Vec<_>, Failure>>()?;
        log::info!("generating and labeling {} instances", configs.len() * a.count_per_type);
        make_dataset(&configs, a.count_per_type, a.common.seed).context("building dataset")?
    } else {
        expand_inputs(&a.instances)?
            .iter()
            .map(|p| {
                let inst = load_instance(p)?;
                label_instance(inst, InstanceType::Custom).with_context(|| format!("labeling {}", p.display()))
            })
            .collect::<anyhow::Result<_>>()?
    };
    let model_config = ModelConfig {
        hidden_dim: a.hidden,
        sage_layers: a.layers,
        dropout_rate: a.dropout,
        seed: a.common.seed,
        ..ModelConfig::default()
    };
    let loss_config = LossConfig {
        alpha: a.alpha,
        beta: a.beta,
        gamma: a.gamma,
        omega: a.omega,
        penalty_form: match a.penalty {
            Penalty::Literal => PenaltyForm::Literal,
            Penalty::Hinged => PenaltyForm::Hinged,
        },
        ..LossConfig::default()
    };
    let train_config = TrainConfig {
        epochs: a.epochs,
        holdout_fraction: a.holdout,
        learning_rate: a.lr,
        seed: a.common.seed,
    };
    let (model, history) = train(&dataset, &model_config, &loss_config, &train_config).context("training")?;
    let model_path = a.common.out.join("model.gscp");
    save_model(&model, &model_path).context("saving model")?;
    let history_path = a.common.out.join("history.json");
    write_json(&history_path, &history)?;
    log::info!("selected epoch {} of {}", history.selected_epoch, a.epochs);
    Ok((Some(model_path.clone()), vec![model_path, history_path]))
}

fn pipeline_options(p: &PipelineFlags, stop_mode: StopMode) -> PipelineOptions {
    PipelineOptions {
        initial_threshold: p.threshold,
        decrement: p.decrement,
        stop_mode,
        solver_options: SolveOptions::default().with_timeout_ms(p.timeout_ms),
    }
}

fn run_solve(a: &SolveArgs) -> Result<Written, Failure> {
    let stop = match &a.target_obj {
        Some(s) => StopMode::Target(Cost::parse(s).map_err(|e| Failure::Usage(format!("--target-obj {s}: {e}")))?),
        None => StopMode::Stabilize,
    };
    let model = load_model(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let inst = load_instance(&a.instance)?;
    let report = solve_pipeline(&model, &inst, &pipeline_options(&a.pipeline, stop)).context("pipeline")?;
    log::info!(
        "{}: objective {} after {} rounds, size reduction {:.3}, {:.1} ms",
        report.instance,
        report.objective,
        report.rounds.len(),
        report.size_reduction,
        report.total_ms
    );
    let path = a.common.out.join(format!("{}.report.json", report.instance));
    write_json(&path, &report)?;
    Ok((Some(path.clone()), vec![path]))
}

#[derive(Serialize)]
struct BaselineFile<'a> {
    instance: &'a str,
    algo: Algo,
    k_percent: Option<f64>,
    /// Columns handed to the exact solver by `--algo random`.
    kept_columns: Option<usize>,
    /// Rows the random subset cannot cover; no solve is attempted then.
    uncovered_rows: Option<Vec<usize>>,
    lower_bound: Option<f64>,
    result: Option<SolveResult>,
}

fn run_baseline(a: &BaselineArgs) -> Result<Written, Failure> {
    let inst = load_instance(&a.instance)?;
    let exact = SolveOptions::default().with_timeout_ms(a.timeout_ms);
    let mut file = BaselineFile {
        instance: inst.name(),
        algo: a.algo,
        k_percent: None,
        kept_columns: None,
        uncovered_rows: None,
        lower_bound: None,
        result: None,
    };
    match a.algo {
        Algo::Greedy => file.result = Some(greedy(&inst)),
        Algo::Lagrangian => {
            let r = lagrangian(&inst, a.iters);
            file.lower_bound = Some(r.lower_bound);
            file.result = Some(r.heuristic);
        }
        Algo::Exact => file.result = Some(branch_and_bound(&inst, &exact).context("exact solve")?),
        Algo::Random => {
            let k = a.k.ok_or_else(|| Failure::Usage("--k is required with --algo random".into()))?;
            let cols = random_restrict(&inst, k, a.common.seed).map_err(|e| Failure::Usage(format!("--k {k}: {e}")))?;
            file.k_percent = Some(k);
            file.kept_columns = Some(cols.len());
            match restrict(&inst, &cols).context("restricting")? {
                Restriction::Covered { sub, index_map } => {
                    let mut r = branch_and_bound(&sub, &exact).context("exact solve")?;
                    r.selection = lift(&r.selection, &index_map);
                    file.result = Some(r);
                }
                Restriction::UncoveredRows(rows) => {
                    log::warn!("random {k}% subset leaves {} rows uncovered", rows.len());
                    file.uncovered_rows = Some(rows);
                }
            }
        }
    }
    if let Some(r) = &file.result {
        log::info!("{}: {:?} objective {} ({:?})", inst.name(), a.algo, r.objective, r.status);
    }
    let algo = match a.algo {
        Algo::Greedy => "greedy",
        Algo::Lagrangian => "lagrangian",
        Algo::Random => "random",
        Algo::Exact => "exact",
    };
    let path = a.common.out.join(format!("{}.{algo}.json", inst.name()));
    write_json(&path, &file)?;
    Ok((Some(path.clone()), vec![path]))
}

fn run_bench(a: &BenchArgs) -> Result<Written, Failure> {
    let kinds: Vec<ExperimentKind> = match a.experiment {
        Experiment::Bench => vec![ExperimentKind::BenchSuite],
        Experiment::Trace => vec![ExperimentKind::IncumbentTrace],
        Experiment::Sweep => vec![ExperimentKind::ThresholdSweep],
        Experiment::RunCount => vec![ExperimentKind::ThresholdRunCount],
        Experiment::Density => vec![ExperimentKind::DensitySweep],
        Experiment::All => ExperimentKind::ALL.to_vec(),
    };
    let needs_suite = kinds.iter().any(|&k| k != ExperimentKind::DensitySweep);
    if needs_suite && a.instances.is_empty() {
        return Err(Failure::Usage("--instances is required for this experiment".into()));
    }
    if a.workers == 0 {
        return Err(Failure::Usage("--workers must be at least 1".into()));
    }
    let suite: Vec<BenchInstance> = if a.instances.is_empty() {
        Vec::new()
    } else {
        expand_inputs(&a.instances)?
            .iter()
            .map(|p| {
                let instance = load_instance(p)?;
                Ok(BenchInstance {
                    instance_type: type_of(instance.name()),
                    instance,
                })
            })
            .collect::<anyhow::Result<_>>()?
    };
    let model = load_model(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let params = ExperimentParams {
        pipeline: pipeline_options(&a.pipeline, StopMode::Stabilize),
        stop: match a.stop {
            Stop::BaselineTarget => BenchStop::BaselineTarget,
            Stop::Stabilize => BenchStop::Stabilize,
        },
        thresholds: a.thresholds.clone(),
        density_m: a.density_m,
        density_n: a.density_n,
        density_count: a.density_count,
        density_buckets: a.density_buckets.clone(),
        seed: a.common.seed,
        workers: a.workers,
    };
    let mut outputs = Vec::new();
    for kind in kinds {
        log::info!("running {kind:?}");
        outputs.push(run_experiment(kind, &model, &suite, &params, &a.common.out).with_context(|| format!("{kind:?}"))?);
    }
    let primary = (outputs.len() == 1).then(|| outputs[0].clone());
    Ok((primary, outputs))
}

fn run_features(a: &FeaturesArgs) -> Result<Written, Failure> {
    let inst = load_instance(&a.instance)?;
    let (graph, features) = if a.raw { raw_features(&inst) } else { assemble_features(&inst) }.context("features")?;
    let path = a.common.out.join(format!("{}.features.csv", inst.name()));
    fs::write(&path, features_csv(&graph, &features)).with_context(|| format!("writing {}", path.display()))?;
    Ok((Some(path.clone()), vec![path]))
}

fn run_export_lp(a: &ExportLpArgs) -> Result<Written, Failure> {
    let inst = load_instance(&a.instance)?;
    let path = a.common.out.join(format!("{}.lp", inst.name()));
    export_lp(&inst, &path).context("writing LP file")?;
    Ok((Some(path.clone()), vec![path]))
}

fn run_convert(a: &ConvertArgs) -> Result<Written, Failure> {
    let text = fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let inst = match a.from {
        Format::Native => from_native_str(&text),
        Format::Orlib => parse_orlib(&text, stem(&a.input)),
    }
    .with_context(|| format!("parsing {}", a.input.display()))?;
    let ext = match a.to {
        Format::Native => "scp",
        Format::Orlib => "txt",
    };
    let path = a.common.out.join(format!("{}.{ext}", stem(&a.input)));
    if path.canonicalize().ok().is_some_and(|p| a.input.canonicalize().ok() == Some(p)) {
        return Err(Failure::Usage(format!("--out would overwrite the input {}", a.input.display())));
    }
    match a.to {
        Format::Native => write_native(&inst, &path).context("writing instance")?,
        Format::Orlib => fs::write(&path, write_orlib(&inst)).with_context(|| format!("writing {}", path.display()))?,
    }
    log::info!("{} -> {} (m={}, n={})", a.input.display(), path.display(), inst.m(), inst.n());
    Ok((Some(path.clone()), vec![path]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn types_from_names() {
        assert_eq!(type_of("type2-17"), "type2");
        assert_eq!(type_of("scp41"), "external");
        assert_eq!(type_of("custom-3"), "external");
    }
}
