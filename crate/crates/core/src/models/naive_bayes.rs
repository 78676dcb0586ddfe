//! Gaussian naive Bayes with log-space posteriors.

use serde::{Deserialize, Serialize};

use super::{check_finite, check_trainable};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NaiveBayesConfig {
    /// Variance floor as a fraction of the largest feature variance.
    pub var_smoothing: f64,
}

impl Default for NaiveBayesConfig {
    fn default() -> Self {
        NaiveBayesConfig { var_smoothing: 1e-9 }
    }
}

/// Class index 0 is label 0, index 1 is label 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNbModel {
    pub priors: [f64; 2],
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
    pub variance_floor: f64,
}

fn mean_var(x: &FeatureMatrix, rows: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let p = x.n_features();
    let n = rows.len() as f64;
    let mut mean = vec![0.0; p];
    for &i in rows {
        for (m, v) in mean.iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; p];
    for &i in rows {
        for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    var.iter_mut().for_each(|s| *s /= n);
    (mean, var)
}

impl GaussianNbModel {
    pub fn fit(x: &FeatureMatrix, config: &NaiveBayesConfig) -> Result<Self> {
        check_trainable(x)?;
        check_finite(x)?;
        let by_class: [Vec<usize>; 2] = [0u8, 1].map(|c| {
            (0..x.n_rows()).filter(|&i| x.labels()[i] == c).collect()
        });
        if by_class.iter().any(Vec::is_empty) {
            return Err(Error::Training("naive Bayes needs both classes in the training set".into()));
        }
        let all: Vec<usize> = (0..x.n_rows()).collect();
        let (_, total_var) = mean_var(x, &all);
        let largest = total_var.iter().copied().fold(0.0, f64::max);
        let variance_floor = config.var_smoothing * if largest > 0.0 { largest } else { 1.0 };

        let n = x.n_rows() as f64;
        let [(m0, v0), (m1, v1)] = [&by_class[0], &by_class[1]].map(|rows| mean_var(x, rows));
        let floor = |v: Vec<f64>| v.into_iter().map(|s| s.max(variance_floor)).collect();
        Ok(GaussianNbModel {
            priors: [by_class[0].len() as f64 / n, by_class[1].len() as f64 / n],
            means: [m0, m1],
            variances: [floor(v0), floor(v1)],
            variance_floor,
        })
    }

    /// Log of prior times class-conditional density.
    pub fn joint_log_likelihood(&self, row: &[f64]) -> [f64; 2] {
        [0, 1].map(|c| {
            let mut acc = self.priors[c].ln();
            for ((x, m), v) in row.iter().zip(&self.means[c]).zip(&self.variances[c]) {
                acc -= 0.5 * (2.0 * std::f64::consts::PI * v).ln() + (x - m) * (x - m) / (2.0 * v);
            }
            acc
        })
    }

    /// Posterior probability of class 1.
    pub fn probability(&self, row: &[f64]) -> f64 {
        let [a, b] = self.joint_log_likelihood(row);
        let top = a.max(b);
        let log_norm = top + ((a - top).exp() + (b - top).exp()).ln();
        (b - log_norm).exp()
    }
}
