//! L2-regularized logistic regression fit by full-batch gradient descent.

use serde::{Deserialize, Serialize};

use super::{check_finite, check_trainable, sigmoid};
use crate::error::Result;
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticConfig {
    /// Penalty on the weights (not the intercept), scaled by 1/n like the loss.
    pub l2_strength: f64,
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Stop once the gradient's max-norm drops below this.
    pub tolerance: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            l2_strength: 1.0,
            learning_rate: 0.1,
            max_iters: 1000,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub config: LogisticConfig,
    pub iterations: usize,
}

impl LogisticModel {
    pub fn zeros(width: usize, config: LogisticConfig) -> Self {
        LogisticModel {
            weights: vec![0.0; width],
            intercept: 0.0,
            config,
            iterations: 0,
        }
    }

    pub fn fit(x: &FeatureMatrix, config: &LogisticConfig) -> Result<Self> {
        check_trainable(x)?;
        check_finite(x)?;
        let n = x.n_rows() as f64;
        let p = x.n_features();
        let mut model = LogisticModel::zeros(p, config.clone());
        let mut grad_w = vec![0.0; p];
        let labels = x.labels();
        for iter in 0..config.max_iters {
            grad_w.iter_mut().for_each(|g| *g = 0.0);
            let mut grad_b = 0.0;
            for (row, &y) in x.rows().zip(labels) {
                let err = model.probability(row) - f64::from(y);
                grad_b += err;
                for (g, v) in grad_w.iter_mut().zip(row) {
                    *g += err * v;
                }
            }
            grad_b /= n;
            for (g, w) in grad_w.iter_mut().zip(&model.weights) {
                *g = *g / n + config.l2_strength / n * w;
            }
            let norm = grad_w.iter().fold(grad_b.abs(), |m, g| m.max(g.abs()));
            if norm < config.tolerance {
                break;
            }
            for (w, g) in model.weights.iter_mut().zip(&grad_w) {
                *w -= config.learning_rate * g;
            }
            model.intercept -= config.learning_rate * grad_b;
            model.iterations = iter + 1;
        }
        Ok(model)
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(row)
            .fold(self.intercept, |acc, (w, v)| acc + w * v)
    }

    pub fn probability(&self, row: &[f64]) -> f64 {
        sigmoid(self.decision(row))
    }
}
