use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{PipelineError, Result};
use crate::graphrep::{assemble_features, FeatureMatrix, ScpGraph};
use crate::instance::{generate, Cost, GeneratorConfig, InstanceType, ScpInstance, Selection};
use crate::solver::{branch_and_bound, SolveOptions};

/// An instance with its graph, features and one optimal cover as labels.
#[derive(Debug, Clone)]
pub struct LabeledExample {
    pub instance: ScpInstance,
    pub instance_type: InstanceType,
    pub graph: ScpGraph,
    pub features: FeatureMatrix,
    /// `labels[j]` is set when column `j` is in the optimal cover.
    pub labels: Vec<bool>,
    pub optimal_objective: Cost,
}

impl LabeledExample {
    pub fn optimal_selection(&self) -> Selection {
        Selection::from_mask(&self.labels)
    }

    pub fn label_values(&self) -> Vec<f32> {
        self.labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect()
    }
}

/// Independent 64-bit seed for item `index` of stream `stream`.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64()
}

/// Solves `inst` exactly and featurizes it.
pub fn label_instance(inst: ScpInstance, instance_type: InstanceType) -> Result<LabeledExample> {
    let result = branch_and_bound(&inst, &SolveOptions::default())?;
    if !result.is_optimal() {
        return Err(PipelineError::NotOptimal(inst.name().to_string()));
    }
    let (graph, features) = assemble_features(&inst)?;
    Ok(LabeledExample {
        labels: result.selection.to_mask(inst.n()),
        optimal_objective: result.objective,
        instance_type,
        graph,
        features,
        instance: inst,
    })
}

/// `count_per_type` labeled instances for every config, in config order.
/// Labeling runs on the current rayon pool; the output does not depend on its
/// size.
pub fn make_dataset(configs: &[GeneratorConfig], count_per_type: usize, seed: u64) -> Result<Vec<LabeledExample>> {
    if count_per_type == 0 || configs.is_empty() {
        return Err(PipelineError::EmptyDataset);
    }
    let jobs: Vec<(usize, u64)> = (0..configs.len())
        .flat_map(|t| (0..count_per_type as u64).map(move |k| (t, k)))
        .collect();
    jobs.par_iter()
        .map(|&(t, k)| {
            let cfg = configs[t].clone().with_seed(derive_seed(seed, t as u64, k));
            let inst = generate(&cfg)?;
            log::debug!("labeling {} (m={}, n={})", inst.name(), inst.m(), inst.n());
            label_instance(inst, cfg.instance_type)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::t3;
    use crate::instance::{evaluate, CostModel};
    use crate::solver::brute_force;

    fn small_configs() -> Vec<GeneratorConfig> {
        [CostModel::UniformInt(1, 9), CostModel::Equal(Cost::from_int(1)), CostModel::Poisson(5.0), CostModel::UniformInt(10, 20)]
            .into_iter()
            .map(|c| GeneratorConfig::custom((6, 12), (8, 16), (0.2, 0.4), c, 0))
            .collect()
    }

    #[test]
    fn t3_labels() {
        let ex = label_instance(t3(), InstanceType::Custom).unwrap();
        assert_eq!(ex.labels, vec![true, true, false]);
        assert_eq!(ex.optimal_objective, Cost::from_int(2));
    }

    #[test]
    fn labels_are_optimal_covers() {
        let data = make_dataset(&small_configs(), 5, 1).unwrap();
        assert_eq!(data.len(), 20);
        for ex in &data {
            let eval = evaluate(&ex.instance, &ex.optimal_selection()).unwrap();
            assert!(eval.feasible);
            assert_eq!(eval.cost, ex.optimal_objective);
            assert_eq!(brute_force(&ex.instance).unwrap().objective, ex.optimal_objective);
        }
    }

    #[test]
    fn same_seed_same_dataset() {
        let a = make_dataset(&small_configs(), 3, 9).unwrap();
        let b = make_dataset(&small_configs(), 3, 9).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.instance, y.instance);
            assert_eq!(x.labels, y.labels);
            assert_eq!(x.features, y.features);
        }
        let c = make_dataset(&small_configs(), 3, 10).unwrap();
        assert!(a.iter().zip(&c).any(|(x, y)| x.instance != y.instance));
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: std::collections::HashSet<u64> =
            (0..4).flat_map(|s| (0..50).map(move |i| derive_seed(7, s, i))).collect();
        assert_eq!(seeds.len(), 200);
    }
}
