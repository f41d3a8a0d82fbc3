use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::LabeledExample;
use super::metrics::auc;
use super::{PipelineError, Result};
use crate::neural::{
    forward, init_model, train_step, GnnModel, LossConfig, Mode, ModelConfig, OptimizerState, TrainingFingerprint,
    DEFAULT_LEARNING_RATE,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Share of the dataset held out for model selection.
    pub holdout_fraction: f64,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 60,
            holdout_fraction: 0.2,
            learning_rate: DEFAULT_LEARNING_RATE,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Pooled AUC of column scores on the held-out examples.
    pub heldout_auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose weights were returned.
    pub selected_epoch: usize,
    pub train_indices: Vec<usize>,
    pub heldout_indices: Vec<usize>,
}

/// Seeded shuffle of `0..len` split into (train, held out). At least one
/// example always stays in the training part.
pub fn split_indices(len: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..len).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let held = ((fraction * len as f64).round() as usize).min(len.saturating_sub(1));
    let heldout = idx.split_off(len - held);
    (idx, heldout)
}

fn heldout_auc(model: &GnnModel<f32>, data: &[LabeledExample], heldout: &[usize]) -> Result<Option<f64>> {
    if heldout.is_empty() {
        return Ok(None);
    }
    let mut eval = model.clone();
    eval.set_mode(Mode::Eval);
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for &k in heldout {
        let ex = &data[k];
        let (s, _) = forward(&eval, &ex.graph, &ex.features, None)?;
        scores.extend(s.iter().map(|&x| f64::from(x)));
        labels.extend_from_slice(&ex.labels);
    }
    Ok(auc(&scores, &labels))
}

/// Shuffled passes with one optimizer step per example. Returns the weights
/// of the epoch with the best held-out AUC (the last epoch when no AUC is
/// available), in eval mode.
pub fn train(
    dataset: &[LabeledExample],
    model_config: &ModelConfig,
    loss_config: &LossConfig,
    config: &TrainConfig,
) -> Result<(GnnModel<f32>, TrainingHistory)> {
    if dataset.is_empty() {
        return Err(PipelineError::EmptyDataset);
    }
    if config.epochs == 0 {
        return Err(PipelineError::InvalidOptions("epochs must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&config.holdout_fraction) {
        return Err(PipelineError::InvalidOptions(format!(
            "holdout fraction {} outside [0, 1)",
            config.holdout_fraction
        )));
    }
    loss_config.validate()?;
    let mut model = init_model::<f32>(&ModelConfig {
        seed: config.seed,
        ..model_config.clone()
    })?;
    let mut optimizer = OptimizerState::for_params(&model.params, config.learning_rate);
    let (mut train_idx, heldout) = split_indices(dataset.len(), config.holdout_fraction, config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let labels: Vec<Vec<f32>> = dataset.iter().map(LabeledExample::label_values).collect();

    let mut epochs = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, GnnModel<f32>)> = None;
    for epoch in 0..config.epochs {
        train_idx.shuffle(&mut rng);
        let mut total = 0.0;
        for &k in &train_idx {
            let ex = &dataset[k];
            let l = train_step(
                &mut model,
                &mut optimizer,
                &ex.graph,
                &ex.features,
                &labels[k],
                &ex.instance,
                loss_config,
                &mut rng,
            )?;
            total += f64::from(l);
        }
        let mean_loss = total / train_idx.len() as f64;
        let heldout_auc = heldout_auc(&model, dataset, &heldout)?;
        match heldout_auc {
            Some(a) => log::info!("epoch {epoch}: loss {mean_loss:.5}, held-out auc {a:.4}"),
            None => log::info!("epoch {epoch}: loss {mean_loss:.5}"),
        }
        if let Some(a) = heldout_auc {
            if best.as_ref().is_none_or(|(b, _, _)| a > *b) {
                best = Some((a, epoch, model.clone()));
            }
        }
        epochs.push(EpochRecord {
            epoch,
            mean_loss,
            heldout_auc,
        });
    }
    let (mut chosen, selected_epoch) = match best {
        Some((_, e, m)) => (m, e),
        None => (model, config.epochs - 1),
    };
    chosen.set_mode(Mode::Eval);
    chosen.fingerprint = Some(TrainingFingerprint {
        seed: config.seed,
        epochs: config.epochs,
        loss_config: *loss_config,
    });
    Ok((
        chosen,
        TrainingHistory {
            epochs,
            selected_epoch,
            train_indices: train_idx,
            heldout_indices: heldout,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::t3;
    use crate::instance::InstanceType;
    use crate::neural::bce;
    use crate::pipeline::label_instance;
    use crate::solver::test_support::small;

    #[test]
    fn split_sizes() {
        let (a, b) = split_indices(100, 0.2, 3);
        assert_eq!((a.len(), b.len()), (80, 20));
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(split_indices(1, 0.5, 0), (vec![0], vec![]));
    }

    #[test]
    fn one_example_overfits() {
        let ex = label_instance(small(5, 10, 20), InstanceType::Custom).unwrap();
        let cfg = TrainConfig {
            epochs: 200,
            holdout_fraction: 0.0,
            learning_rate: 1e-2,
            seed: 1,
        };
        let mc = ModelConfig { hidden_dim: 32, dropout_rate: 0.0, ..ModelConfig::default() };
        let (model, hist) = train(std::slice::from_ref(&ex), &mc, &LossConfig::default(), &cfg).unwrap();
        assert_eq!(hist.epochs.len(), 200);
        assert_eq!(hist.selected_epoch, 199);
        assert_eq!(model.mode, Mode::Eval);
        let (s, _) = forward(&model, &ex.graph, &ex.features, None).unwrap();
        let (b, _) = bce(&s, &ex.label_values());
        assert!(b < 0.05, "{b}");
    }

    #[test]
    fn reruns_match() {
        let data: Vec<LabeledExample> =
            (0..5).map(|s| label_instance(small(s, 8, 12), InstanceType::Custom).unwrap()).collect();
        let cfg = TrainConfig { epochs: 3, holdout_fraction: 0.4, learning_rate: 1e-3, seed: 4 };
        let mc = ModelConfig { hidden_dim: 8, ..ModelConfig::default() };
        let (m1, h1) = train(&data, &mc, &LossConfig::default(), &cfg).unwrap();
        let (m2, h2) = train(&data, &mc, &LossConfig::default(), &cfg).unwrap();
        assert_eq!(h1, h2);
        assert_eq!(m1, m2);
        assert_eq!(h1.heldout_indices.len(), 2);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let r = train(&[], &ModelConfig::default(), &LossConfig::default(), &TrainConfig::default());
        assert!(matches!(r, Err(PipelineError::EmptyDataset)));
        let ex = label_instance(t3(), InstanceType::Custom).unwrap();
        let r = train(&[ex], &ModelConfig::default(), &LossConfig::default(), &TrainConfig { epochs: 0, ..TrainConfig::default() });
        assert!(r.is_err());
    }
}
