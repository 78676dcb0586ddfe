//! One-hidden-layer perceptron: ReLU hidden units, sigmoid output, trained
//! on log loss with full-batch Adam steps and validation early stopping.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_finite, sigmoid};
use crate::error::{Error, Result};
use crate::evaluation::split::stratified_indices;
use crate::features::FeatureMatrix;
use crate::rng;

pub const MIN_TRAINING_ROWS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    pub hidden_units: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Epochs without a validation-loss improvement before stopping.
    pub patience: usize,
    pub validation_fraction: f64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden_units: 16,
            learning_rate: 0.01,
            max_epochs: 500,
            patience: 10,
            validation_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub inputs: usize,
    pub hidden_units: usize,
    /// Row-major `hidden_units x inputs`.
    pub hidden_weights: Vec<f64>,
    pub hidden_bias: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
}

/// Gradient laid out like [`MlpModel::parameters`].
pub type Gradient = Vec<f64>;

impl MlpModel {
    /// Glorot-uniform initialization from the `mlp-init` stream.
    pub fn init(inputs: usize, hidden_units: usize, seed: u64) -> Self {
        let mut rng = rng::stream(seed, "mlp-init", 0);
        let hidden_limit = (6.0 / (inputs + hidden_units) as f64).sqrt();
        let output_limit = (6.0 / (hidden_units + 1) as f64).sqrt();
        let mut draw = |limit: f64, count: usize| -> Vec<f64> {
            (0..count).map(|_| rng.random_range(-limit..limit)).collect()
        };
        let hidden_weights = draw(hidden_limit, hidden_units * inputs);
        let hidden_bias = draw(hidden_limit, hidden_units);
        let output_weights = draw(output_limit, hidden_units);
        let output_bias = draw(output_limit, 1)[0];
        MlpModel {
            inputs,
            hidden_units,
            hidden_weights,
            hidden_bias,
            output_weights,
            output_bias,
            best_epoch: 0,
            epochs_run: 0,
        }
    }

    pub fn n_parameters(&self) -> usize {
        self.hidden_units * (self.inputs + 2) + 1
    }

    /// Flat parameter vector: hidden weights, hidden bias, output weights, output bias.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_parameters());
        p.extend_from_slice(&self.hidden_weights);
        p.extend_from_slice(&self.hidden_bias);
        p.extend_from_slice(&self.output_weights);
        p.push(self.output_bias);
        p
    }

    pub fn set_parameters(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.n_parameters());
        let (hw, rest) = p.split_at(self.hidden_weights.len());
        let (hb, rest) = rest.split_at(self.hidden_units);
        let (ow, ob) = rest.split_at(self.hidden_units);
        self.hidden_weights.copy_from_slice(hw);
        self.hidden_bias.copy_from_slice(hb);
        self.output_weights.copy_from_slice(ow);
        self.output_bias = ob[0];
    }

    fn hidden(&self, row: &[f64], out: &mut [f64]) {
        for (u, h) in out.iter_mut().enumerate() {
            let w = &self.hidden_weights[u * self.inputs..(u + 1) * self.inputs];
            let z = w.iter().zip(row).fold(self.hidden_bias[u], |a, (w, x)| a + w * x);
            *h = z.max(0.0);
        }
    }

    pub fn probability(&self, row: &[f64]) -> f64 {
        let mut h = vec![0.0; self.hidden_units];
        self.hidden(row, &mut h);
        let z = self
            .output_weights
            .iter()
            .zip(&h)
            .fold(self.output_bias, |a, (w, h)| a + w * h);
        sigmoid(z)
    }

    /// Mean log loss over `rows` of `x`.
    pub fn loss(&self, x: &FeatureMatrix, rows: &[usize]) -> f64 {
        let eps = 1e-15;
        rows.iter()
            .map(|&i| {
                let p = self.probability(x.row(i)).clamp(eps, 1.0 - eps);
                if x.labels()[i] == 1 {
                    -p.ln()
                } else {
                    -(1.0 - p).ln()
                }
            })
            .sum::<f64>()
            / rows.len() as f64
    }

    /// Mean log loss over `rows` and its analytic gradient.
    pub fn loss_and_gradient(&self, x: &FeatureMatrix, rows: &[usize]) -> (f64, Gradient) {
        let n = rows.len() as f64;
        let hu = self.hidden_units;
        let p_in = self.inputs;
        let mut grad = vec![0.0; self.n_parameters()];
        let (g_hw, rest) = grad.split_at_mut(hu * p_in);
        let (g_hb, rest) = rest.split_at_mut(hu);
        let (g_ow, g_ob) = rest.split_at_mut(hu);
        let mut h = vec![0.0; hu];
        let mut loss = 0.0;
        for &i in rows {
            let row = x.row(i);
            self.hidden(row, &mut h);
            let z = self
                .output_weights
                .iter()
                .zip(&h)
                .fold(self.output_bias, |a, (w, h)| a + w * h);
            let y = f64::from(x.labels()[i]);
            // log(1 + e^z) - y z, computed stably
            loss += z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z;
            let delta = sigmoid(z) - y;
            g_ob[0] += delta;
            for u in 0..hu {
                g_ow[u] += delta * h[u];
                if h[u] > 0.0 {
                    let back = delta * self.output_weights[u];
                    g_hb[u] += back;
                    let g = &mut g_hw[u * p_in..(u + 1) * p_in];
                    for (gj, xj) in g.iter_mut().zip(row) {
                        *gj += back * xj;
                    }
                }
            }
        }
        grad.iter_mut().for_each(|g| *g /= n);
        (loss / n, grad)
    }

    pub fn fit(x: &FeatureMatrix, config: &MlpConfig, seed: u64) -> Result<Self> {
        if x.n_rows() < MIN_TRAINING_ROWS {
            return Err(Error::Training(format!(
                "neural network needs at least {MIN_TRAINING_ROWS} training rows for a validation split, got {}",
                x.n_rows()
            )));
        }
        if x.n_features() == 0 {
            return Err(Error::Training("no features".into()));
        }
        check_finite(x)?;
        if config.hidden_units == 0 {
            return Err(Error::Config("hidden layer needs at least one unit".into()));
        }
        let mut split_rng = rng::stream(seed, "mlp-split", 0);
        let (train, valid) =
            stratified_indices(x.labels(), 1.0 - config.validation_fraction, &mut split_rng, false)?;
        if train.is_empty() || valid.is_empty() {
            return Err(Error::Training("validation split left an empty side".into()));
        }

        let mut model = MlpModel::init(x.n_features(), config.hidden_units, seed);
        let mut params = model.parameters();
        let (beta1, beta2, eps) = (0.9f64, 0.999f64, 1e-8);
        let mut m = vec![0.0; params.len()];
        let mut v = vec![0.0; params.len()];

        let mut best = (model.loss(x, &valid), params.clone(), 0usize);
        let mut stale = 0;
        let mut epochs_run = 0;
        for epoch in 1..=config.max_epochs {
            let (_, grad) = model.loss_and_gradient(x, &train);
            let t = epoch as i32;
            let (c1, c2) = (1.0 - beta1.powi(t), 1.0 - beta2.powi(t));
            for k in 0..params.len() {
                m[k] = beta1 * m[k] + (1.0 - beta1) * grad[k];
                v[k] = beta2 * v[k] + (1.0 - beta2) * grad[k] * grad[k];
                params[k] -= config.learning_rate * (m[k] / c1) / ((v[k] / c2).sqrt() + eps);
            }
            model.set_parameters(&params);
            epochs_run = epoch;
            let val = model.loss(x, &valid);
            if val < best.0 {
                best = (val, params.clone(), epoch);
                stale = 0;
            } else {
                stale += 1;
                if stale >= config.patience {
                    break;
                }
            }
        }
        model.set_parameters(&best.1);
        model.best_epoch = best.2;
        model.epochs_run = epochs_run;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_matrix(n: usize, p: usize, seed: u64) -> FeatureMatrix {
        let mut rng = rng::stream(seed, "test", 0);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let labels = rows.iter().map(|r| u8::from(r[0] + 0.5 * r[1] > 0.0)).collect();
        FeatureMatrix::from_rows(&rows, (0..p).map(|j| format!("f{j}")).collect(), labels).unwrap()
    }

    #[test]
    fn all_negative_labels_push_probabilities_down() {
        let x = random_matrix(60, 3, 1);
        let zeros = FeatureMatrix::from_rows(
            &x.rows().map(<[f64]>::to_vec).collect::<Vec<_>>(),
            x.feature_names().to_vec(),
            vec![0; 60],
        )
        .unwrap();
        let m = MlpModel::fit(&zeros, &MlpConfig::default(), 4).unwrap();
        for row in zeros.rows() {
            assert!(m.probability(row) < 0.1, "p = {}", m.probability(row));
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let x = random_matrix(25, 4, 2);
        let rows: Vec<usize> = (0..25).collect();
        let model = MlpModel::init(4, 16, 5);
        let (_, grad) = model.loss_and_gradient(&x, &rows);
        let base = model.parameters();
        let h = 1e-6;
        for k in 0..base.len() {
            let mut probe = model.clone();
            let mut p = base.clone();
            p[k] += h;
            probe.set_parameters(&p);
            let up = probe.loss(&x, &rows);
            p[k] -= 2.0 * h;
            probe.set_parameters(&p);
            let down = probe.loss(&x, &rows);
            let numeric = (up - down) / (2.0 * h);
            let denom = grad[k].abs().max(numeric.abs()).max(1e-7);
            assert!((grad[k] - numeric).abs() / denom < 1e-4, "param {k}: {} vs {numeric}", grad[k]);
        }
    }

    #[test]
    fn training_is_bit_reproducible() {
        let x = random_matrix(80, 3, 3);
        let a = MlpModel::fit(&x, &MlpConfig::default(), 11).unwrap();
        let b = MlpModel::fit(&x, &MlpConfig::default(), 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hidden_bias.len(), 16);
    }

    #[test]
    fn learns_a_linear_boundary() {
        let x = random_matrix(300, 2, 6);
        let m = MlpModel::fit(&x, &MlpConfig::default(), 1).unwrap();
        let correct = x
            .rows()
            .zip(x.labels())
            .filter(|(r, &y)| u8::from(m.probability(r) >= 0.5) == y)
            .count();
        assert!(correct as f64 / 300.0 > 0.9, "{correct}");
    }

    #[test]
    fn too_few_rows_errors() {
        let x = random_matrix(9, 2, 1);
        assert!(MlpModel::fit(&x, &MlpConfig::default(), 1).is_err());
    }
}
