use rand::Rng;
use serde::{Deserialize, Serialize};

/// Fully connected layer; `weights` is row-major `[outputs][inputs]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Glorot-uniform weights scaled by `gain`, zero bias.
    fn glorot(inputs: usize, outputs: usize, gain: f64, rng: &mut impl Rng) -> Self {
        let limit = gain * (6.0 / (inputs + outputs) as f64).sqrt();
        let weights = (0..inputs * outputs)
            .map(|_| (2.0 * rng.random::<f64>() - 1.0) * limit)
            .collect();
        Self {
            inputs,
            outputs,
            weights,
            bias: vec![0.0; outputs],
        }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (o, (row, b)) in out
            .iter_mut()
            .zip(self.weights.chunks_exact(self.inputs).zip(&self.bias))
        {
            *o = b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    /// Accumulates `d_out (x) x` into this layer's gradient.
    fn accumulate(&mut self, x: &[f64], d_out: &[f64]) {
        for (row, (b, &d)) in self
            .weights
            .chunks_exact_mut(self.inputs)
            .zip(self.bias.iter_mut().zip(d_out))
        {
            if d == 0.0 {
                continue;
            }
            *b += d;
            for (w, v) in row.iter_mut().zip(x) {
                *w += d * v;
            }
        }
    }

    /// `W^T d_out`, added into `d_in`.
    fn backprop(&self, d_out: &[f64], d_in: &mut [f64]) {
        for (row, &d) in self.weights.chunks_exact(self.inputs).zip(d_out) {
            if d == 0.0 {
                continue;
            }
            for (g, w) in d_in.iter_mut().zip(row) {
                *g += d * w;
            }
        }
    }

    fn shape(&self) -> (usize, usize) {
        (self.inputs, self.outputs)
    }
}

/// Two tanh hidden layers feeding a logit head and a scalar value head.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub hidden1: Dense,
    pub hidden2: Dense,
    pub policy_head: Dense,
    pub value_head: Dense,
}

pub const DEFAULT_HIDDEN: usize = 64;

/// Per-sample activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub logits: Vec<f64>,
    pub value: f64,
}

impl PolicyParams {
    pub fn zeros(inputs: usize, hidden: usize, actions: usize) -> Self {
        Self {
            hidden1: Dense::zeros(inputs, hidden),
            hidden2: Dense::zeros(hidden, hidden),
            policy_head: Dense::zeros(hidden, actions),
            value_head: Dense::zeros(hidden, 1),
        }
    }

    /// Random init; the policy head starts near-uniform (small logits).
    pub fn init(inputs: usize, hidden: usize, actions: usize, rng: &mut impl Rng) -> Self {
        Self {
            hidden1: Dense::glorot(inputs, hidden, 1.0, rng),
            hidden2: Dense::glorot(hidden, hidden, 1.0, rng),
            policy_head: Dense::glorot(hidden, actions, 0.01, rng),
            value_head: Dense::glorot(hidden, 1, 1.0, rng),
        }
    }

    pub fn input_len(&self) -> usize {
        self.hidden1.inputs
    }

    pub fn action_len(&self) -> usize {
        self.policy_head.outputs
    }

    pub fn hidden_len(&self) -> usize {
        self.hidden1.outputs
    }

    pub fn shapes(&self) -> [(usize, usize); 4] {
        [
            self.hidden1.shape(),
            self.hidden2.shape(),
            self.policy_head.shape(),
            self.value_head.shape(),
        ]
    }

    /// Checks layer chaining and array lengths.
    pub fn check_shapes(&self) -> Result<(), String> {
        let [(i1, o1), (i2, o2), (ip, _), (iv, ov)] = self.shapes();
        if i2 != o1 || ip != o2 || iv != o2 || ov != 1 {
            return Err(format!("inconsistent layer shapes {:?}", self.shapes()));
        }
        for (name, layer) in self.named_layers() {
            if layer.weights.len() != layer.inputs * layer.outputs
                || layer.bias.len() != layer.outputs
            {
                return Err(format!("layer {name} arrays do not match its shape"));
            }
        }
        if i1 == 0 {
            return Err("zero-width input".into());
        }
        Ok(())
    }

    pub fn named_layers(&self) -> [(&'static str, &Dense); 4] {
        [
            ("hidden1", &self.hidden1),
            ("hidden2", &self.hidden2),
            ("policy_head", &self.policy_head),
            ("value_head", &self.value_head),
        ]
    }

    pub fn tensors(&self) -> [&[f64]; 8] {
        [
            &self.hidden1.weights,
            &self.hidden1.bias,
            &self.hidden2.weights,
            &self.hidden2.bias,
            &self.policy_head.weights,
            &self.policy_head.bias,
            &self.value_head.weights,
            &self.value_head.bias,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 8] {
        [
            &mut self.hidden1.weights,
            &mut self.hidden1.bias,
            &mut self.hidden2.weights,
            &mut self.hidden2.bias,
            &mut self.policy_head.weights,
            &mut self.policy_head.bias,
            &mut self.value_head.weights,
            &mut self.value_head.bias,
        ]
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// Flattened copy in `tensors()` order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_len(), self.hidden_len(), self.action_len())
    }

    pub fn forward_cached(&self, obs: &[f64]) -> ForwardCache {
        let hidden = self.hidden_len();
        let mut h1 = vec![0.0; hidden];
        self.hidden1.apply(obs, &mut h1);
        h1.iter_mut().for_each(|v| *v = v.tanh());
        let mut h2 = vec![0.0; hidden];
        self.hidden2.apply(&h1, &mut h2);
        h2.iter_mut().for_each(|v| *v = v.tanh());
        let mut logits = vec![0.0; self.action_len()];
        self.policy_head.apply(&h2, &mut logits);
        let mut value = [0.0];
        self.value_head.apply(&h2, &mut value);
        ForwardCache {
            h1,
            h2,
            logits,
            value: value[0],
        }
    }

    /// Accumulates parameter gradients for one sample into `grad`, given
    /// the loss derivatives w.r.t. the logits and the value output.
    pub fn backward(
        &self,
        obs: &[f64],
        cache: &ForwardCache,
        d_logits: &[f64],
        d_value: f64,
        grad: &mut PolicyParams,
    ) {
        let hidden = self.hidden_len();
        grad.policy_head.accumulate(&cache.h2, d_logits);
        grad.value_head.accumulate(&cache.h2, &[d_value]);

        let mut d_h2 = vec![0.0; hidden];
        self.policy_head.backprop(d_logits, &mut d_h2);
        self.value_head.backprop(&[d_value], &mut d_h2);
        for (d, h) in d_h2.iter_mut().zip(&cache.h2) {
            *d *= 1.0 - h * h;
        }
        grad.hidden2.accumulate(&cache.h1, &d_h2);

        let mut d_h1 = vec![0.0; hidden];
        self.hidden2.backprop(&d_h2, &mut d_h1);
        for (d, h) in d_h1.iter_mut().zip(&cache.h1) {
            *d *= 1.0 - h * h;
        }
        grad.hidden1.accumulate(obs, &d_h1);
    }
}
