//! Fully connected regression network: rectified dense layers followed by a
//! linear output, trained on mean squared error with minibatch Adam.
//!
//! The default topology mirrors a sequential model with a rectified input
//! layer as wide as the feature vector, one rectified hidden layer and a
//! single linear output: sizes `[d, d, hidden, 1]`.

use log::debug;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::linear::check_design;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Upper bound on hidden neurons from sample count:
/// `floor(samples / (alpha (inputs + outputs)))`, alpha in `[2, 10]`.
pub fn hidden_neurons_rule(samples: usize, inputs: usize, outputs: usize, alpha: f64) -> Result<usize> {
    if !(2.0..=10.0).contains(&alpha) {
        return Err(Error::param(format!(
            "scaling factor alpha must lie in [2, 10], got {alpha}"
        )));
    }
    if samples == 0 || inputs == 0 || outputs == 0 {
        return Err(Error::param("sample, input and output counts must be positive"));
    }
    Ok((samples as f64 / (alpha * (inputs + outputs) as f64)).floor() as usize)
}

/// Largest hidden width the rule allows for `training_rows` samples with
/// `inputs` features and one output, i.e. the rule at its smallest scaling
/// factor of 2. Wider layers are considered over-fitted.
pub fn max_hidden_neurons(training_rows: usize, inputs: usize) -> Result<usize> {
    hidden_neurons_rule(training_rows, inputs, 1, 2.0)
}

pub fn check_hidden_bound(hidden: usize, training_rows: usize, inputs: usize) -> Result<()> {
    let bound = max_hidden_neurons(training_rows, inputs)?;
    if hidden > bound {
        return Err(Error::param(format!(
            "{hidden} hidden neurons exceed the over-fitting bound of {bound} for {training_rows} \
             training rows and {inputs} inputs (floor(rows / (2 * (inputs + 1))))"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnConfig {
    pub hidden: usize,
    /// Include the rectified input layer of width `d` before the hidden layer.
    pub input_layer: bool,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Standard deviation of the zero-mean Gaussian weight initialiser.
    pub init_std: f64,
}

impl Default for AnnConfig {
    fn default() -> Self {
        Self {
            hidden: 23,
            input_layer: true,
            epochs: 50,
            batch_size: 5,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            init_std: 0.05,
        }
    }
}

impl AnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::param("hidden size, epochs and batch size must be positive"));
        }
        if !(self.learning_rate > 0.0) || !(self.init_std >= 0.0) {
            return Err(Error::param("learning rate must be > 0 and init_std >= 0"));
        }
        Ok(())
    }

    pub fn layer_sizes(&self, inputs: usize) -> Vec<usize> {
        if self.input_layer {
            vec![inputs, inputs, self.hidden, 1]
        } else {
            vec![inputs, self.hidden, 1]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend((0..self.outputs).map(|o| {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias[o]
        }));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnModel {
    pub layer_sizes: Vec<usize>,
    pub layers: Vec<Layer>,
}

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

impl AnnModel {
    pub fn zeros(layer_sizes: &[usize]) -> Self {
        Self {
            layer_sizes: layer_sizes.to_vec(),
            layers: layer_sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Pre-activations of every layer for one input.
    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut act = x.to_vec();
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::new();
            layer.affine(&act, &mut z);
            act = if li == last { z.clone() } else { z.iter().map(|&v| relu(v)).collect() };
            pre.push(z);
        }
        pre
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::param(format!(
                "network expects {} features, got {}",
                self.dim(),
                x.len()
            )));
        }
        Ok(self.forward(x).last().expect("at least one layer")[0])
    }

    /// Mean squared error over `(x, y)` and its gradient, flattened layer by
    /// layer (weights then bias).
    pub fn loss_and_gradient(&self, x: &[&[f64]], y: &[f64]) -> (f64, Vec<f64>) {
        let mut grads: Vec<Layer> = self
            .layers
            .iter()
            .map(|l| Layer::zeros(l.inputs, l.outputs))
            .collect();
        let scale = 1.0 / x.len() as f64;
        let mut loss = 0.0;
        let last = self.layers.len() - 1;
        for (xi, &yi) in x.iter().zip(y) {
            let pre = self.forward(xi);
            let out = pre[last][0];
            loss += (out - yi) * (out - yi) * scale;
            let mut delta = vec![2.0 * (out - yi) * scale];
            for li in (0..=last).rev() {
                let layer = &self.layers[li];
                let input: Vec<f64> = if li == 0 {
                    xi.to_vec()
                } else {
                    pre[li - 1].iter().map(|&v| relu(v)).collect()
                };
                let g = &mut grads[li];
                for o in 0..layer.outputs {
                    g.bias[o] += delta[o];
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (gw, v) in row.iter_mut().zip(&input) {
                        *gw += delta[o] * v;
                    }
                }
                if li > 0 {
                    delta = (0..layer.inputs)
                        .map(|k| {
                            // rectifier derivative taken as 0 at the kink
                            if pre[li - 1][k] <= 0.0 {
                                return 0.0;
                            }
                            (0..layer.outputs)
                                .map(|o| delta[o] * layer.weights[o * layer.inputs + k])
                                .sum()
                        })
                        .collect();
                }
            }
        }
        let flat = grads
            .into_iter()
            .flat_map(|l| l.weights.into_iter().chain(l.bias))
            .collect();
        (loss, flat)
    }

    pub fn params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count());
        let mut pos = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&flat[pos..pos + nw]);
            pos += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&flat[pos..pos + nb]);
            pos += nb;
        }
    }

    pub fn mse(&self, x: &[Vec<f64>], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .map(|(xi, yi)| {
                let d = self.forward(xi).last().expect("layers")[0] - yi;
                d * d
            })
            .sum::<f64>()
            / x.len() as f64
    }
}

pub fn predict_ann(model: &AnnModel, x: &[f64]) -> Result<f64> {
    model.predict(x)
}

#[derive(Debug, Clone)]
pub struct AnnFit {
    pub model: AnnModel,
    /// Training MSE over the full training set after each epoch.
    pub epoch_mse: Vec<f64>,
}

pub fn train_ann(x: &[Vec<f64>], y: &[f64], config: &AnnConfig, seed: u64) -> Result<AnnFit> {
    config.validate()?;
    let dim = check_design(x, y)?;
    if x.is_empty() {
        return Err(Error::param("no training rows"));
    }
    let mut rng = rng_from_seed(seed);
    let mut model = AnnModel::zeros(&config.layer_sizes(dim));
    if config.init_std > 0.0 {
        let normal = Normal::new(0.0, config.init_std).map_err(|e| Error::param(e.to_string()))?;
        for l in &mut model.layers {
            for w in &mut l.weights {
                *w = normal.sample(&mut rng);
            }
        }
    }

    let np = model.param_count();
    let mut params = model.params();
    let (mut m1, mut m2) = (vec![0.0; np], vec![0.0; np]);
    let mut t = 0i32;
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut epoch_mse = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let bx: Vec<&[f64]> = batch.iter().map(|&i| x[i].as_slice()).collect();
            let by: Vec<f64> = batch.iter().map(|&i| y[i]).collect();
            let (loss, grad) = model.loss_and_gradient(&bx, &by);
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            t += 1;
            let c1 = 1.0 - config.beta1.powi(t);
            let c2 = 1.0 - config.beta2.powi(t);
            for k in 0..np {
                m1[k] = config.beta1 * m1[k] + (1.0 - config.beta1) * grad[k];
                m2[k] = config.beta2 * m2[k] + (1.0 - config.beta2) * grad[k] * grad[k];
                params[k] -= config.learning_rate * (m1[k] / c1) / ((m2[k] / c2).sqrt() + config.adam_eps);
            }
            model.set_params(&params);
        }
        let mse = model.mse(x, y);
        if !mse.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        debug!("epoch {epoch}: training mse {mse:.6}");
        epoch_mse.push(mse);
    }
    Ok(AnnFit { model, epoch_mse })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hidden_rule_examples() {
        assert_eq!(hidden_neurons_rule(2552, 6, 1, 10.0).unwrap(), 36);
        assert_eq!(hidden_neurons_rule(2552, 6, 1, 2.0).unwrap(), 182);
        assert_eq!(hidden_neurons_rule(70, 6, 1, 10.0).unwrap(), 1);
        assert!(hidden_neurons_rule(70, 6, 1, 1.5).is_err());
        assert!(hidden_neurons_rule(70, 6, 1, 11.0).is_err());
    }

    #[test]
    fn hidden_bound() {
        assert_eq!(max_hidden_neurons(180, 6).unwrap(), 12);
        assert!(check_hidden_bound(12, 180, 6).is_ok());
        assert!(check_hidden_bound(23, 180, 6).is_err());
        assert!(check_hidden_bound(23, 2296, 6).is_ok());
    }

    #[test]
    fn zero_weights_output_bias() {
        let mut m = AnnModel::zeros(&[3, 3, 4, 1]);
        m.layers[2].bias[0] = 1.75;
        m.layers[0].bias = vec![0.5, 0.5, 0.5];
        assert_eq!(predict_ann(&m, &[1.0, -2.0, 3.0]).unwrap(), 1.75);
        assert!(predict_ann(&m, &[1.0]).is_err());
    }

    #[test]
    fn unit_chain_passes_positive_input() {
        let mut m = AnnModel::zeros(&[1, 1, 1, 1]);
        for l in &mut m.layers {
            l.weights[0] = 1.0;
        }
        assert_eq!(m.predict(&[2.0]).unwrap(), 2.0);
        assert_eq!(m.predict(&[-2.0]).unwrap(), 0.0);
    }

    #[test]
    fn negative_preactivation_is_silenced() {
        let mut m = AnnModel::zeros(&[1, 2, 1]);
        m.layers[0].weights = vec![1.0, -1.0];
        m.layers[1].weights = vec![1.0, 10.0];
        // second hidden unit sees -3 and contributes nothing
        assert_eq!(m.predict(&[3.0]).unwrap(), 3.0);
    }

    #[test]
    fn zero_init_on_zero_target_stays_put() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 1.0]).collect();
        let y = vec![0.0; 10];
        let cfg = AnnConfig {
            init_std: 0.0,
            epochs: 3,
            ..Default::default()
        };
        let fit = train_ann(&x, &y, &cfg, 1).unwrap();
        assert!(fit.epoch_mse.iter().all(|&l| l == 0.0));
        assert!(fit.model.params().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn divergence_is_reported() {
        let x = vec![vec![1e300, 1e300], vec![-1e300, 1e300]];
        let y = vec![1e300, -1e300];
        let cfg = AnnConfig {
            init_std: 1.0,
            ..Default::default()
        };
        assert!(matches!(train_ann(&x, &y, &cfg, 0), Err(Error::Divergence { epoch: 1 })));
    }

    #[test]
    fn training_is_deterministic() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 10.0, 1.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] * 2.0).collect();
        let cfg = AnnConfig { hidden: 4, epochs: 5, ..Default::default() };
        let a = train_ann(&x, &y, &cfg, 7).unwrap();
        let b = train_ann(&x, &y, &cfg, 7).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.epoch_mse, b.epoch_mse);
    }
}
