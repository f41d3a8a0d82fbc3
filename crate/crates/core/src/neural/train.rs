use rand_chacha::ChaCha8Rng;

use super::loss::{loss, LossConfig};
use super::model::{backward, forward, update_running_stats, GnnModel, Mode, Params};
use super::optim::OptimizerState;
use super::tensor::Scalar;
use super::NeuralError;
use crate::graphrep::{FeatureMatrix, ScpGraph};
use crate::instance::ScpInstance;

pub const GRAD_CHECK_STEP: f64 = 1e-5;

/// Forward, loss, backward and one Adam update on a whole graph. Also folds
/// the batch-norm statistics into the running ones.
#[allow(clippy::too_many_arguments)]
pub fn train_step<T: Scalar>(
    model: &mut GnnModel<T>,
    optimizer: &mut OptimizerState<T>,
    graph: &ScpGraph,
    features: &FeatureMatrix,
    labels: &[T],
    inst: &ScpInstance,
    loss_config: &LossConfig,
    rng: &mut ChaCha8Rng,
) -> Result<T, NeuralError> {
    if model.mode != Mode::Train {
        return Err(NeuralError::InvalidConfig("train_step needs a model in train mode".into()));
    }
    let (scores, cache) = forward(model, graph, features, Some(rng))?;
    let (value, d_scores) = loss(&scores, labels, inst, loss_config)?;
    if !value.is_finite() {
        return Err(NeuralError::NonFiniteLoss);
    }
    let grads = backward(model, graph, &cache, &d_scores);
    optimizer.apply(model.params.slices_mut(), grads.slices());
    update_running_stats(model, &cache);
    Ok(value)
}

fn train_mode_copy(model: &GnnModel<f64>) -> GnnModel<f64> {
    let mut m = model.clone();
    m.set_mode(Mode::Train);
    m
}

/// Loss and parameter gradients with batch statistics and no dropout.
pub fn analytic_gradient(
    model: &GnnModel<f64>,
    graph: &ScpGraph,
    features: &FeatureMatrix,
    labels: &[f64],
    inst: &ScpInstance,
    loss_config: &LossConfig,
) -> Result<(f64, Params<f64>), NeuralError> {
    let m = train_mode_copy(model);
    let (scores, cache) = forward(&m, graph, features, None)?;
    let (value, d_scores) = loss(&scores, labels, inst, loss_config)?;
    Ok((value, backward(&m, graph, &cache, &d_scores)))
}

/// Central differences with step `h` for every parameter.
pub fn numeric_gradient(
    model: &GnnModel<f64>,
    graph: &ScpGraph,
    features: &FeatureMatrix,
    labels: &[f64],
    inst: &ScpInstance,
    loss_config: &LossConfig,
    h: f64,
) -> Result<Params<f64>, NeuralError> {
    let mut m = train_mode_copy(model);
    let mut out = m.params.zeros_like();
    let eval = |m: &GnnModel<f64>| -> Result<f64, NeuralError> {
        let (scores, _) = forward(m, graph, features, None)?;
        Ok(loss(&scores, labels, inst, loss_config)?.0)
    };
    let tensors = m.params.slices().len();
    for t in 0..tensors {
        let len = m.params.slices()[t].len();
        for i in 0..len {
            let orig = m.params.slices()[t][i];
            m.params.slices_mut()[t][i] = orig + h;
            let up = eval(&m)?;
            m.params.slices_mut()[t][i] = orig - h;
            let down = eval(&m)?;
            m.params.slices_mut()[t][i] = orig;
            out.slices_mut()[t][i] = (up - down) / (2.0 * h);
        }
    }
    Ok(out)
}

/// Largest `|a - b| / max(|a| + |b|, 1e-6)` over all parameters.
pub fn max_relative_error(analytic: &Params<f64>, numeric: &Params<f64>) -> f64 {
    analytic
        .slices()
        .iter()
        .zip(numeric.slices())
        .flat_map(|(a, b)| a.iter().zip(b.iter()))
        .map(|(a, b)| (a - b).abs() / (a.abs() + b.abs()).max(1e-6))
        .fold(0.0, f64::max)
}

/// Compares backpropagation against finite differences in 64-bit floats.
pub fn grad_check(
    model: &GnnModel<f64>,
    graph: &ScpGraph,
    features: &FeatureMatrix,
    labels: &[f64],
    inst: &ScpInstance,
    loss_config: &LossConfig,
) -> Result<f64, NeuralError> {
    let (_, analytic) = analytic_gradient(model, graph, features, labels, inst, loss_config)?;
    let numeric = numeric_gradient(model, graph, features, labels, inst, loss_config, GRAD_CHECK_STEP)?;
    Ok(max_relative_error(&analytic, &numeric))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphrep::assemble_features;
    use crate::instance::fixtures::t3;
    use crate::neural::{init_model, ModelConfig, PenaltyForm};
    use rand::SeedableRng;

    /// Fresh model with small random biases, so no pre-activation sits
    /// exactly on a ReLU kink (zero biases put dead rows at exactly 0).
    fn tiny(hidden: usize, seed: u64) -> GnnModel<f64> {
        use rand::Rng;
        let mut m: GnnModel<f64> = init_model(&ModelConfig {
            hidden_dim: hidden,
            dropout_rate: 0.0,
            seed,
            ..ModelConfig::default()
        })
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in &mut m.params.sage {
            s.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.1..0.1));
        }
        m.params.fc_bias.iter_mut().for_each(|b| *b = rng.random_range(0.05..0.2));
        m
    }

    #[test]
    fn t3_literal_and_hinged() {
        let inst = t3();
        let (g, f) = assemble_features(&inst).unwrap();
        let labels = [1.0, 1.0, 0.0];
        for form in [PenaltyForm::Literal, PenaltyForm::Hinged] {
            let cfg = LossConfig { beta: 0.1, penalty_form: form, ..LossConfig::default() };
            let err = grad_check(&tiny(4, 3), &g, &f, &labels, &inst, &cfg).unwrap();
            assert!(err <= 1e-4, "{form:?}: {err}");
        }
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let inst = t3();
        let (g, f) = assemble_features(&inst).unwrap();
        let labels = [1.0, 1.0, 0.0];
        let cfg = LossConfig::default();
        let model = tiny(4, 3);
        let (_, mut analytic) = analytic_gradient(&model, &g, &f, &labels, &inst, &cfg).unwrap();
        let numeric = numeric_gradient(&model, &g, &f, &labels, &inst, &cfg, GRAD_CHECK_STEP).unwrap();
        assert!(max_relative_error(&analytic, &numeric) <= 1e-4);
        analytic.fc_weight.as_mut_slice().iter_mut().for_each(|x| *x *= 1.1);
        assert!(max_relative_error(&analytic, &numeric) >= 1e-2);
    }

    #[test]
    fn same_seed_same_trajectory() {
        let inst = crate::solver::test_support::small(2, 10, 16);
        let (g, f) = assemble_features(&inst).unwrap();
        let labels: Vec<f32> = (0..inst.n()).map(|j| (j % 2) as f32).collect();
        let run = || {
            let mut m = init_model::<f32>(&ModelConfig { hidden_dim: 16, seed: 1, ..ModelConfig::default() }).unwrap();
            let mut opt = OptimizerState::for_params(&m.params, 1e-3);
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            for _ in 0..10 {
                train_step(&mut m, &mut opt, &g, &f, &labels, &inst, &LossConfig::default(), &mut rng).unwrap();
            }
            m
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn eval_model_refuses_training() {
        let inst = t3();
        let (g, f) = assemble_features(&inst).unwrap();
        let mut m = init_model::<f32>(&ModelConfig { hidden_dim: 4, ..ModelConfig::default() }).unwrap();
        m.set_mode(Mode::Eval);
        let mut opt = OptimizerState::for_params(&m.params, 1e-3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = train_step(&mut m, &mut opt, &g, &f, &[1.0, 1.0, 0.0], &inst, &LossConfig::default(), &mut rng);
        assert!(r.is_err());
    }
}
