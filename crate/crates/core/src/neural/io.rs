//! JSON model files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{GnnModel, Mode, ModelConfig, Params, RunningStats, SageParams};
use super::tensor::Matrix;
use super::{NeuralError, TrainingFingerprint};

pub const MODEL_FORMAT_VERSION: &str = "gscp-model-1";

#[derive(Serialize, Deserialize)]
struct SageFile {
    weight: Vec<Vec<f32>>,
    bias: Vec<f32>,
    bn_scale: Vec<f32>,
    bn_shift: Vec<f32>,
}

#[derive(Serialize, Deserialize)]
struct ParamFile {
    sage: Vec<SageFile>,
    fc_weight: Vec<Vec<f32>>,
    fc_bias: Vec<f32>,
    out_weight: Vec<Vec<f32>>,
    out_bias: Vec<f32>,
}

#[derive(Serialize, Deserialize)]
struct StatsFile {
    mean: Vec<f32>,
    var: Vec<f32>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: String,
    config: ModelConfig,
    feature_schema: Vec<String>,
    parameters: ParamFile,
    batchnorm_running_stats: Vec<StatsFile>,
    training_fingerprint: Option<TrainingFingerprint>,
}

fn matrix(rows: Vec<Vec<f32>>, shape: (usize, usize), what: &str) -> Result<Matrix<f32>, NeuralError> {
    if rows.len() != shape.0 || rows.iter().any(|r| r.len() != shape.1) {
        return Err(NeuralError::MalformedFile(format!("{what} is not {}x{}", shape.0, shape.1)));
    }
    Ok(Matrix::from_vec(shape.0, shape.1, rows.into_iter().flatten().collect()))
}

fn vector(v: Vec<f32>, len: usize, what: &str) -> Result<Vec<f32>, NeuralError> {
    if v.len() != len {
        return Err(NeuralError::MalformedFile(format!("{what} has {} entries, expected {len}", v.len())));
    }
    Ok(v)
}

pub fn model_to_json(model: &GnnModel<f32>) -> String {
    let p = &model.params;
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION.to_string(),
        config: model.config.clone(),
        feature_schema: model.feature_schema.clone(),
        parameters: ParamFile {
            sage: p
                .sage
                .iter()
                .map(|s| SageFile {
                    weight: s.weight.to_rows(),
                    bias: s.bias.clone(),
                    bn_scale: s.bn_scale.clone(),
                    bn_shift: s.bn_shift.clone(),
                })
                .collect(),
            fc_weight: p.fc_weight.to_rows(),
            fc_bias: p.fc_bias.clone(),
            out_weight: p.out_weight.iter().map(|&w| vec![w]).collect(),
            out_bias: p.out_bias.clone(),
        },
        batchnorm_running_stats: model
            .running
            .iter()
            .map(|r| StatsFile {
                mean: r.mean.clone(),
                var: r.var.clone(),
            })
            .collect(),
        training_fingerprint: model.fingerprint.clone(),
    };
    serde_json::to_string_pretty(&file).expect("model serializes")
}

/// Parses a model file; the result is in eval mode.
pub fn model_from_json(text: &str) -> Result<GnnModel<f32>, NeuralError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| NeuralError::MalformedFile(e.to_string()))?;
    match value.get("format_version").and_then(|v| v.as_str()) {
        Some(MODEL_FORMAT_VERSION) => {}
        Some(other) => {
            return Err(NeuralError::VersionMismatch {
                found: other.to_string(),
                expected: MODEL_FORMAT_VERSION,
            })
        }
        None => return Err(NeuralError::MalformedFile("missing format_version".into())),
    }
    let file: ModelFile = serde_json::from_value(value).map_err(|e| NeuralError::MalformedFile(e.to_string()))?;
    let cfg = file.config;
    cfg.validate().map_err(|e| NeuralError::MalformedFile(e.to_string()))?;
    if file.feature_schema.len() != cfg.in_dim {
        return Err(NeuralError::MalformedFile(format!(
            "{} schema names for in_dim {}",
            file.feature_schema.len(),
            cfg.in_dim
        )));
    }
    let h = cfg.hidden_dim;
    let pf = file.parameters;
    if pf.sage.len() != cfg.sage_layers || file.batchnorm_running_stats.len() != cfg.sage_layers {
        return Err(NeuralError::MalformedFile("layer count differs from config".into()));
    }
    let mut sage = Vec::with_capacity(cfg.sage_layers);
    let mut width = cfg.in_dim;
    for (k, s) in pf.sage.into_iter().enumerate() {
        sage.push(SageParams {
            weight: matrix(s.weight, (2 * width, h), &format!("sage[{k}].weight"))?,
            bias: vector(s.bias, h, "bias")?,
            bn_scale: vector(s.bn_scale, h, "bn_scale")?,
            bn_shift: vector(s.bn_shift, h, "bn_shift")?,
        });
        width = h;
    }
    let mut running = Vec::with_capacity(cfg.sage_layers);
    for r in file.batchnorm_running_stats {
        let var = vector(r.var, h, "running var")?;
        if var.iter().any(|&v| v.is_nan() || v <= 0.0) {
            return Err(NeuralError::MalformedFile("running variance must be positive".into()));
        }
        running.push(RunningStats {
            mean: vector(r.mean, h, "running mean")?,
            var,
        });
    }
    let out_weight = matrix(pf.out_weight, (h, 1), "out_weight")?.as_slice().to_vec();
    let params = Params {
        sage,
        fc_weight: matrix(pf.fc_weight, (h, h), "fc_weight")?,
        fc_bias: vector(pf.fc_bias, h, "fc_bias")?,
        out_weight,
        out_bias: vector(pf.out_bias, 1, "out_bias")?,
    };
    if params.slices().iter().flat_map(|s| s.iter()).any(|x| !x.is_finite()) {
        return Err(NeuralError::MalformedFile("non-finite parameter".into()));
    }
    Ok(GnnModel {
        config: cfg,
        feature_schema: file.feature_schema,
        params,
        running,
        mode: Mode::Eval,
        fingerprint: file.training_fingerprint,
    })
}

pub fn save_model(model: &GnnModel<f32>, path: &Path) -> Result<(), NeuralError> {
    std::fs::write(path, model_to_json(model))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<GnnModel<f32>, NeuralError> {
    model_from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphrep::assemble_features;
    use crate::instance::fixtures::t3;
    use crate::neural::{forward, init_model};

    fn model() -> GnnModel<f32> {
        let mut m = init_model::<f32>(&ModelConfig { hidden_dim: 8, seed: 4, ..ModelConfig::default() }).unwrap();
        m.set_mode(Mode::Eval);
        m
    }

    #[test]
    fn roundtrip_preserves_scores_bitwise() {
        let (g, f) = assemble_features(&t3()).unwrap();
        let m = model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_model(&m, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, m);
        let (a, _) = forward(&m, &g, &f, None).unwrap();
        let (b, _) = forward(&back, &g, &f, None).unwrap();
        assert_eq!(a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn six_feature_model_fails_at_forward() {
        let cfg = ModelConfig { in_dim: 6, hidden_dim: 4, ..ModelConfig::default() };
        let mut m = init_model::<f32>(&cfg).unwrap();
        m.feature_schema.pop();
        let back = model_from_json(&model_to_json(&m)).unwrap();
        let (g, f) = assemble_features(&t3()).unwrap();
        assert!(matches!(forward(&back, &g, &f, None), Err(NeuralError::SchemaMismatch { .. })));
    }

    #[test]
    fn truncated_and_wrong_version() {
        let text = model_to_json(&model());
        assert!(matches!(model_from_json(&text[..text.len() / 2]), Err(NeuralError::MalformedFile(_))));
        let other = text.replace(MODEL_FORMAT_VERSION, "gscp-model-0");
        assert!(matches!(model_from_json(&other), Err(NeuralError::VersionMismatch { .. })));
        let bad_shape = text.replacen("\"fc_bias\": [", "\"fc_bias\": [1.0, ", 1);
        assert!(matches!(model_from_json(&bad_shape), Err(NeuralError::MalformedFile(_))));
    }
}
