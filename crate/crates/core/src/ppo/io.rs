use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::network::{Dense, PolicyParams};
use crate::mdp::EncodingSpec;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot access model file: {0}")]
    Io(#[from] io::Error),
    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("model shape mismatch: {0}")]
    Shape(String),
    #[error("model contains a non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("unsupported activation `{0}`")]
    Activation(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Arch {
    input: usize,
    hidden: [usize; 2],
    policy_out: usize,
    value_out: usize,
    /// `(inputs, outputs)` of hidden1, hidden2, policy head, value head.
    layers: [[usize; 2]; 4],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerWeights {
    w: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Weights {
    hidden1: LayerWeights,
    hidden2: LayerWeights,
    policy_head: LayerWeights,
    value_head: LayerWeights,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    arch: Arch,
    activation: String,
    encoding: EncodingSpec,
    weights: Weights,
}

/// A policy network plus the encoding it was trained against.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub params: PolicyParams,
    pub encoding: EncodingSpec,
}

fn layer_weights(d: &Dense) -> LayerWeights {
    LayerWeights {
        w: d.weights.clone(),
        b: d.bias.clone(),
    }
}

fn dense([inputs, outputs]: [usize; 2], lw: LayerWeights) -> Dense {
    Dense {
        inputs,
        outputs,
        weights: lw.w,
        bias: lw.b,
    }
}

pub fn model_to_json(params: &PolicyParams, encoding: &EncodingSpec) -> String {
    let shapes = params.shapes().map(|(i, o)| [i, o]);
    let file = ModelFile {
        arch: Arch {
            input: params.input_len(),
            hidden: [params.hidden1.outputs, params.hidden2.outputs],
            policy_out: params.action_len(),
            value_out: params.value_head.outputs,
            layers: shapes,
        },
        activation: "tanh".into(),
        encoding: *encoding,
        weights: Weights {
            hidden1: layer_weights(&params.hidden1),
            hidden2: layer_weights(&params.hidden2),
            policy_head: layer_weights(&params.policy_head),
            value_head: layer_weights(&params.value_head),
        },
    };
    serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
}

pub fn model_from_json(text: &str) -> Result<SavedModel, ModelError> {
    let file: ModelFile = serde_json::from_str(text)?;
    if file.activation != "tanh" {
        return Err(ModelError::Activation(file.activation));
    }
    let arch = &file.arch;
    let [l1, l2, lp, lv] = arch.layers;
    if l1[0] != arch.input
        || l1[1] != arch.hidden[0]
        || l2[1] != arch.hidden[1]
        || lp[1] != arch.policy_out
        || lv[1] != arch.value_out
    {
        return Err(ModelError::Shape("arch summary disagrees with layer list".into()));
    }
    let enc = file.encoding;
    if arch.input != enc.observation_len() || arch.policy_out != enc.pairs() {
        return Err(ModelError::Shape(format!(
            "network {}->{} does not match encoding {}x{}",
            arch.input, arch.policy_out, enc.m_max, enc.n_max
        )));
    }
    let w = file.weights;
    let params = PolicyParams {
        hidden1: dense(l1, w.hidden1),
        hidden2: dense(l2, w.hidden2),
        policy_head: dense(lp, w.policy_head),
        value_head: dense(lv, w.value_head),
    };
    params.check_shapes().map_err(ModelError::Shape)?;
    for (name, layer) in params.named_layers() {
        if !layer.weights.iter().chain(&layer.bias).all(|v| v.is_finite()) {
            return Err(ModelError::NonFinite(name));
        }
    }
    Ok(SavedModel {
        params,
        encoding: enc,
    })
}

pub fn save_model(
    params: &PolicyParams,
    encoding: &EncodingSpec,
    path: &Path,
) -> Result<(), ModelError> {
    fs::write(path, model_to_json(params, encoding))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<SavedModel, ModelError> {
    model_from_json(&fs::read_to_string(path)?)
}
