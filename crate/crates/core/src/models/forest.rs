//! Random forest of Gini-split decision trees on bootstrap samples.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_finite, check_trainable};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Candidate features per split; `None` means ceil(sqrt(p)).
    pub features_per_split: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: 5,
            features_per_split: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        /// Fraction of positive training rows reaching the leaf.
        probability: f64,
        samples: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn probability(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { probability, .. } => return *probability,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub config: ForestConfig,
    pub features_per_split: usize,
    pub trees: Vec<DecisionTree>,
}

impl ForestModel {
    pub fn fit(x: &FeatureMatrix, config: &ForestConfig, seed: u64) -> Result<Self> {
        check_trainable(x)?;
        check_finite(x)?;
        if config.n_trees == 0 {
            return Err(Error::Config("forest needs at least one tree".into()));
        }
        let p = x.n_features();
        let k = config
            .features_per_split
            .unwrap_or_else(|| (p as f64).sqrt().ceil() as usize)
            .clamp(1, p.max(1));
        let n = x.n_rows();
        let trees = (0..config.n_trees)
            .map(|t| {
                let mut rng = rng::stream(seed, "forest-tree", t as u64);
                let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let mut builder = TreeBuilder {
                    x,
                    config,
                    k,
                    rng: &mut rng,
                    nodes: Vec::new(),
                };
                builder.build(sample, 0);
                DecisionTree {
                    nodes: builder.nodes,
                }
            })
            .collect();
        Ok(ForestModel {
            config: config.clone(),
            features_per_split: k,
            trees,
        })
    }

    pub fn probability(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.probability(row)).sum::<f64>() / self.trees.len() as f64
    }
}

struct TreeBuilder<'a> {
    x: &'a FeatureMatrix,
    config: &'a ForestConfig,
    k: usize,
    rng: &'a mut rng::Rng,
    nodes: Vec<Node>,
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

struct Candidate {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl TreeBuilder<'_> {
    fn leaf(&mut self, rows: &[usize]) -> usize {
        let pos = rows.iter().filter(|&&i| self.x.labels()[i] == 1).count();
        self.nodes.push(Node::Leaf {
            probability: pos as f64 / rows.len() as f64,
            samples: rows.len(),
        });
        self.nodes.len() - 1
    }

    fn best_split_on(&self, rows: &[usize], feature: usize, total_pos: usize) -> Option<Candidate> {
        let mut pairs: Vec<(f64, u8)> = rows
            .iter()
            .map(|&i| (self.x.get(i, feature), self.x.labels()[i]))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = pairs.len();
        let mut best: Option<Candidate> = None;
        let mut left_pos = 0;
        for s in 1..n {
            left_pos += usize::from(pairs[s - 1].1);
            let (lo, hi) = (pairs[s - 1].0, pairs[s].0);
            if lo == hi {
                continue;
            }
            let right_pos = total_pos - left_pos;
            let impurity = (s as f64 * gini(left_pos, s) + (n - s) as f64 * gini(right_pos, n - s)) / n as f64;
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                let mid = lo + (hi - lo) / 2.0;
                best = Some(Candidate {
                    feature,
                    threshold: if mid < hi { mid } else { lo },
                    impurity,
                });
            }
        }
        best
    }

    /// Returns the index of the subtree root.
    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let pos = rows.iter().filter(|&&i| self.x.labels()[i] == 1).count();
        if depth >= self.config.max_depth
            || pos == 0
            || pos == rows.len()
            || rows.len() < self.config.min_samples_split
        {
            return self.leaf(&rows);
        }

        // Draw features in random order; look at k of them, continuing past k
        // only while none of the drawn features can split the node.
        let mut order: Vec<usize> = (0..self.x.n_features()).collect();
        order.shuffle(self.rng);
        let mut best: Option<Candidate> = None;
        for (tried, &f) in order.iter().enumerate() {
            if tried >= self.k && best.is_some() {
                break;
            }
            if let Some(c) = self.best_split_on(&rows, f, pos) {
                if best.as_ref().is_none_or(|b| c.impurity < b.impurity) {
                    best = Some(c);
                }
            }
        }
        let Some(split) = best else {
            return self.leaf(&rows);
        };

        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&i| self.x.get(i, split.feature) <= split.threshold);
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf {
            probability: 0.0,
            samples: 0,
        });
        let left = self.build(left_rows, depth + 1);
        let right = self.build(right_rows, depth + 1);
        self.nodes[at] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        at
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor(copies: usize) -> FeatureMatrix {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..copies {
            for (a, b) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
                rows.push(vec![a, b]);
                labels.push(u8::from((a == 1.0) != (b == 1.0)));
            }
        }
        FeatureMatrix::from_rows(&rows, vec!["a".into(), "b".into()], labels).unwrap()
    }

    #[test]
    fn pure_training_data_gives_pure_predictions() {
        let x = FeatureMatrix::from_rows(
            &[vec![1.0, 2.0], vec![3.0, 1.0], vec![0.0, 0.0]],
            vec!["a".into(), "b".into()],
            vec![1, 1, 1],
        )
        .unwrap();
        let m = ForestModel::fit(&x, &ForestConfig::default(), 1).unwrap();
        for row in x.rows() {
            assert_eq!(m.probability(row), 1.0);
        }
    }

    #[test]
    fn xor_is_learned() {
        let x = xor(100);
        let m = ForestModel::fit(&x, &ForestConfig::default(), 3).unwrap();
        for (row, &y) in x.rows().zip(x.labels()) {
            assert_eq!(u8::from(m.probability(row) >= 0.5), y);
        }
    }

    #[test]
    fn structure_respects_config() {
        let x = xor(10);
        let m = ForestModel::fit(&x, &ForestConfig::default(), 3).unwrap();
        assert_eq!(m.trees.len(), 100);
        assert!(m.trees.iter().all(|t| t.depth() <= 5));
        assert_eq!(m.features_per_split, 2);
    }

    #[test]
    fn seeds_control_the_trees() {
        let x = xor(5);
        let a = ForestModel::fit(&x, &ForestConfig::default(), 9).unwrap();
        let b = ForestModel::fit(&x, &ForestConfig::default(), 9).unwrap();
        let c = ForestModel::fit(&x, &ForestConfig::default(), 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn empty_matrix_errors() {
        let x = FeatureMatrix::from_rows(&[], vec!["a".into()], vec![]).unwrap();
        assert!(ForestModel::fit(&x, &ForestConfig::default(), 1).is_err());
    }
}
