//! Random forest of CART classification trees.
//!
//! Trees are grown on bootstrap samples; at each node `max_features`
//! feature indices are drawn without replacement and the split minimizing
//! weighted Gini impurity is taken. Candidate thresholds are midpoints
//! between consecutive distinct sorted values, and a sample goes left when
//! `value <= threshold`. Split quality is compared in exact integer
//! arithmetic, so ties always resolve to the lowest feature index and then
//! the lowest threshold.
//!
//! Tree `t` draws from its own ChaCha8 stream: the bootstrap sample
//! first, then one feature subset per node in depth-first (left before
//! right) order.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::landmark::SentenceClass;
use crate::rng::{self, Stage};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForestError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("expected {expected} values, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("feature row {0} contains a non-finite value")]
    NonFinite(usize),
    #[error("invalid forest config: {0}")]
    InvalidConfig(String),
    #[error("invalid forest model: {0}")]
    InvalidModel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows until purity.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features tried per node; `None` means `ceil(sqrt(k))`.
    pub max_features: Option<usize>,
    pub seed: u64,
    /// Disables bootstrapping and feature subsampling. Exists for oracle
    /// testing; off in normal training.
    #[serde(default)]
    pub test_mode: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            max_features: None,
            seed: 0,
            test_mode: false,
        }
    }
}

impl ForestConfig {
    /// Features examined per node for `k` inputs.
    pub fn features_per_node(&self, k: usize) -> usize {
        if self.test_mode {
            return k;
        }
        self.max_features
            .unwrap_or_else(|| (k as f64).sqrt().ceil() as usize)
    }

    pub fn validate(&self, k: usize) -> Result<(), ForestError> {
        let bad = |msg: &str| Err(ForestError::InvalidConfig(msg.to_string()));
        if self.n_trees == 0 {
            return bad("n_trees must be positive");
        }
        if self.max_depth == Some(0) {
            return bad("max_depth must be positive");
        }
        if self.min_samples_split < 2 {
            return bad("min_samples_split must be at least 2");
        }
        if !(1..=k).contains(&self.features_per_node(k)) {
            return bad("max_features must be in 1..=k");
        }
        Ok(())
    }
}

/// `1 - sum_c (count_c / total)^2`; requires a positive total.
pub fn gini(class_counts: &[u64]) -> f64 {
    let total: u64 = class_counts.iter().sum();
    assert!(total > 0, "gini of an empty node");
    let total = total as f64;
    1.0 - class_counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            p * p
        })
        .sum::<f64>()
}

/// Majority class of `counts`, ties to the lower class.
fn majority(counts: [u64; 2]) -> SentenceClass {
    if counts[1] > counts[0] {
        SentenceClass::ST
    } else {
        SentenceClass::AS
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        /// Training samples per class, indexed by [`SentenceClass::index`].
        class_counts: [u64; 2],
    },
}

/// A tree stored in pre-order; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_for(&self, features: &[f64]) -> [u64; 2] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if features[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
                Node::Leaf { class_counts } => return *class_counts,
            }
        }
    }

    pub fn vote(&self, features: &[f64]) -> SentenceClass {
        majority(self.leaf_for(features))
    }

    pub fn depth(&self) -> usize {
        let mut deepest = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((at, depth)) = stack.pop() {
            deepest = deepest.max(depth);
            if let Node::Split { left, right, .. } = self.nodes[at] {
                stack.push((left, depth + 1));
                stack.push((right, depth + 1));
            }
        }
        deepest
    }

    fn check(&self, n_features: usize, max_depth: Option<usize>) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("empty tree".into());
        }
        let mut reached = vec![false; self.nodes.len()];
        let mut stack = vec![(0usize, 0usize)];
        while let Some((at, depth)) = stack.pop() {
            if std::mem::replace(&mut reached[at], true) {
                return Err(format!("node {at} reached twice"));
            }
            if max_depth.is_some_and(|m| depth > m) {
                return Err("tree deeper than max_depth".into());
            }
            match self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if feature >= n_features || !threshold.is_finite() {
                        return Err(format!("node {at} has an invalid split"));
                    }
                    if left <= at
                        || right <= at
                        || left >= self.nodes.len()
                        || right >= self.nodes.len()
                    {
                        return Err(format!("node {at} has invalid children"));
                    }
                    stack.push((left, depth + 1));
                    stack.push((right, depth + 1));
                }
                Node::Leaf { class_counts } => {
                    if class_counts.iter().sum::<u64>() == 0 {
                        return Err(format!("leaf {at} is empty"));
                    }
                }
            }
        }
        if reached.iter().any(|r| !r) {
            return Err("unreachable nodes".into());
        }
        Ok(())
    }
}

/// Exact split score `sum_side (a^2 + b^2) / n_side` as a fraction;
/// larger means lower weighted Gini.
#[derive(Debug, Clone, Copy)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn new(left: [u64; 2], right: [u64; 2]) -> Self {
        let sq = |c: [u64; 2]| (c[0] as u128).pow(2) + (c[1] as u128).pow(2);
        let (nl, nr) = ((left[0] + left[1]) as u128, (right[0] + right[1]) as u128);
        Self {
            num: sq(left) * nr + sq(right) * nl,
            den: nl * nr,
        }
    }

    fn cmp(&self, other: &Score) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

/// Work item of the grower: (parent link, samples, depth).
type Pending = (Option<(usize, bool)>, Vec<usize>, usize);

struct Grower<'a, R> {
    features: &'a [Vec<f64>],
    labels: &'a [SentenceClass],
    config: &'a ForestConfig,
    k: usize,
    rng: R,
}

impl<R: Rng> Grower<'_, R> {
    fn counts(&self, idx: &[usize]) -> [u64; 2] {
        let mut counts = [0; 2];
        idx.iter()
            .for_each(|&i| counts[self.labels[i].index()] += 1);
        counts
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let m = self.config.features_per_node(self.k);
        let mut all: Vec<usize> = (0..self.k).collect();
        if m < self.k {
            for i in 0..m {
                let j = self.rng.gen_range(i..self.k);
                all.swap(i, j);
            }
            all.truncate(m);
            all.sort_unstable();
        }
        all
    }

    /// Best `(feature, threshold)` over the candidate features, if any split exists.
    fn best_split(&mut self, idx: &mut [usize], total: [u64; 2]) -> Option<(usize, f64)> {
        let mut best: Option<(Score, usize, f64)> = None;
        for feature in self.candidate_features() {
            let values = |i: usize| self.features[i][feature];
            idx.sort_by(|&a, &b| values(a).total_cmp(&values(b)));
            let mut left = [0u64; 2];
            for w in 0..idx.len() - 1 {
                left[self.labels[idx[w]].index()] += 1;
                let (lo, hi) = (values(idx[w]), values(idx[w + 1]));
                if lo == hi {
                    continue;
                }
                let right = [total[0] - left[0], total[1] - left[1]];
                let score = Score::new(left, right);
                if best
                    .as_ref()
                    .is_none_or(|(b, _, _)| score.cmp(b) == Ordering::Greater)
                {
                    best = Some((score, feature, midpoint(lo, hi)));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn grow(mut self, sample: Vec<usize>) -> Tree {
        let mut nodes: Vec<Node> = Vec::new();
        // Right is pushed first so the left subtree is finished first and
        // indices come out in pre-order.
        let mut work: Vec<Pending> = vec![(None, sample, 0)];
        while let Some((parent, mut idx, depth)) = work.pop() {
            let at = nodes.len();
            if let Some((p, is_left)) = parent {
                if let Node::Split { left, right, .. } = &mut nodes[p] {
                    *if is_left { left } else { right } = at;
                }
            }
            let counts = self.counts(&idx);
            let stop = counts[0] == 0
                || counts[1] == 0
                || idx.len() < self.config.min_samples_split
                || self.config.max_depth.is_some_and(|m| depth >= m);
            let split = if stop {
                None
            } else {
                self.best_split(&mut idx, counts)
            };
            match split {
                None => nodes.push(Node::Leaf {
                    class_counts: counts,
                }),
                Some((feature, threshold)) => {
                    let (l, r): (Vec<usize>, Vec<usize>) = idx
                        .iter()
                        .partition(|&&i| self.features[i][feature] <= threshold);
                    nodes.push(Node::Split {
                        feature,
                        threshold,
                        left: 0,
                        right: 0,
                    });
                    work.push((Some((at, false)), r, depth + 1));
                    work.push((Some((at, true)), l, depth + 1));
                }
            }
        }
        Tree { nodes }
    }
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = (lo + hi) / 2.0;
    if m < hi {
        m
    } else {
        lo
    }
}

/// Grows one tree over the given sample (row indices, repeats allowed).
fn grow_tree(
    features: &[Vec<f64>],
    labels: &[SentenceClass],
    config: &ForestConfig,
    tree_index: usize,
) -> Tree {
    let n = features.len();
    let mut rng = rng::stream(config.seed, Stage::Forest, tree_index as u64);
    let sample: Vec<usize> = if config.test_mode {
        (0..n).collect()
    } else {
        (0..n).map(|_| rng.gen_range(0..n)).collect()
    };
    Grower {
        features,
        labels,
        config,
        k: features[0].len(),
        rng,
    }
    .grow(sample)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub config: ForestConfig,
    pub n_features: usize,
    pub class_order: [SentenceClass; 2],
    pub trees: Vec<Tree>,
}

/// Trains a forest; deterministic in `(features, labels, config)`.
pub fn train_forest(
    features: &[Vec<f64>],
    labels: &[SentenceClass],
    config: &ForestConfig,
) -> Result<ForestModel, ForestError> {
    if features.is_empty() {
        return Err(ForestError::EmptyTrainingSet);
    }
    if labels.len() != features.len() {
        return Err(ForestError::DimensionMismatch {
            expected: features.len(),
            found: labels.len(),
        });
    }
    let k = features[0].len();
    for (i, row) in features.iter().enumerate() {
        if row.len() != k {
            return Err(ForestError::DimensionMismatch {
                expected: k,
                found: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(ForestError::NonFinite(i));
        }
    }
    config.validate(k)?;
    let grow = |t: usize| grow_tree(features, labels, config, t);
    #[cfg(feature = "parallel")]
    let trees = (0..config.n_trees).into_par_iter().map(grow).collect();
    #[cfg(not(feature = "parallel"))]
    let trees = (0..config.n_trees).map(grow).collect();
    Ok(ForestModel {
        config: *config,
        n_features: k,
        class_order: SentenceClass::ALL,
        trees,
    })
}

impl ForestModel {
    fn check_len(&self, features: &[f64]) -> Result<(), ForestError> {
        if features.len() == self.n_features {
            Ok(())
        } else {
            Err(ForestError::DimensionMismatch {
                expected: self.n_features,
                found: features.len(),
            })
        }
    }

    /// Number of trees voting for each class.
    pub fn votes(&self, features: &[f64]) -> Result<[usize; 2], ForestError> {
        self.check_len(features)?;
        let mut votes = [0; 2];
        for tree in &self.trees {
            votes[tree.vote(features).index()] += 1;
        }
        Ok(votes)
    }

    /// Majority vote across trees; exact ties go to AS.
    pub fn predict(&self, features: &[f64]) -> Result<SentenceClass, ForestError> {
        let votes = self.votes(features)?;
        Ok(majority([votes[0] as u64, votes[1] as u64]))
    }

    /// Fraction of trees voting for each class, in `class_order`.
    pub fn predict_proba(&self, features: &[f64]) -> Result<[f64; 2], ForestError> {
        let votes = self.votes(features)?;
        let n = self.trees.len() as f64;
        Ok([votes[0] as f64 / n, votes[1] as f64 / n])
    }

    /// Structural checks for a deserialized model.
    pub fn check(&self) -> Result<(), ForestError> {
        let invalid = |m: String| Err(ForestError::InvalidModel(m));
        if self.class_order != SentenceClass::ALL {
            return invalid("class order must be [AS, ST]".into());
        }
        if self.trees.len() != self.config.n_trees {
            return invalid(format!(
                "{} trees stored, config says {}",
                self.trees.len(),
                self.config.n_trees
            ));
        }
        if let Err(e) = self.config.validate(self.n_features) {
            return invalid(e.to_string());
        }
        for (t, tree) in self.trees.iter().enumerate() {
            if let Err(m) = tree.check(self.n_features, self.config.max_depth) {
                return invalid(format!("tree {t}: {m}"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use SentenceClass::{AS, ST};

    fn test_mode(n_trees: usize) -> ForestConfig {
        ForestConfig {
            n_trees,
            test_mode: true,
            ..ForestConfig::default()
        }
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[4, 0]), 0.0);
        assert_eq!(gini(&[2, 2]), 0.5);
        assert_eq!(gini(&[3, 1]), 0.375);
    }

    #[test]
    fn separable_pair_splits_at_half() {
        let model = train_forest(&[vec![0.0], vec![1.0]], &[AS, ST], &test_mode(1)).unwrap();
        let tree = &model.trees[0];
        assert_eq!(tree.nodes.len(), 3);
        assert!(
            matches!(tree.nodes[0], Node::Split { feature: 0, threshold, left: 1, right: 2 } if threshold == 0.5)
        );
        assert_eq!(model.predict(&[0.2]).unwrap(), AS);
        assert_eq!(model.predict(&[0.9]).unwrap(), ST);
        assert_eq!(model.predict(&[0.5]).unwrap(), AS);
    }

    #[test]
    fn single_class_is_constant() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let model = train_forest(
            &x,
            &[AS; 10],
            &ForestConfig {
                n_trees: 7,
                ..Default::default()
            },
        )
        .unwrap();
        for tree in &model.trees {
            assert_eq!(tree.nodes.len(), 1);
        }
        assert_eq!(model.predict(&[100.0, -3.0]).unwrap(), AS);
        assert_eq!(model.predict_proba(&[0.0, 0.0]).unwrap(), [1.0, 0.0]);
    }

    fn leaf(class: SentenceClass) -> Tree {
        let mut class_counts = [0; 2];
        class_counts[class.index()] = 1;
        Tree {
            nodes: vec![Node::Leaf { class_counts }],
        }
    }

    fn hand_forest(votes: &[SentenceClass]) -> ForestModel {
        ForestModel {
            config: ForestConfig {
                n_trees: votes.len(),
                ..ForestConfig::default()
            },
            n_features: 1,
            class_order: SentenceClass::ALL,
            trees: votes.iter().map(|&c| leaf(c)).collect(),
        }
    }

    #[test]
    fn majority_and_fractions() {
        let model = hand_forest(&[AS, AS, ST, ST, ST]);
        model.check().unwrap();
        assert_eq!(model.predict(&[0.0]).unwrap(), ST);
        assert_eq!(model.predict_proba(&[0.0]).unwrap(), [0.4, 0.6]);
    }

    #[test]
    fn vote_tie_goes_to_as() {
        let model = hand_forest(&[ST, AS]);
        assert_eq!(model.predict(&[0.0]).unwrap(), AS);
        let tied_leaf = Tree {
            nodes: vec![Node::Leaf {
                class_counts: [2, 2],
            }],
        };
        assert_eq!(tied_leaf.vote(&[0.0]), AS);
    }

    #[test]
    fn errors() {
        assert_eq!(
            train_forest(&[], &[], &ForestConfig::default()),
            Err(ForestError::EmptyTrainingSet)
        );
        assert!(matches!(
            train_forest(&[vec![0.0]], &[AS, ST], &ForestConfig::default()),
            Err(ForestError::DimensionMismatch { .. })
        ));
        let model = hand_forest(&[AS]);
        assert!(matches!(
            model.predict(&[0.0, 1.0]),
            Err(ForestError::DimensionMismatch { .. })
        ));
        let bad = ForestConfig {
            min_samples_split: 1,
            ..ForestConfig::default()
        };
        assert!(matches!(
            train_forest(&[vec![0.0]], &[AS], &bad),
            Err(ForestError::InvalidConfig(_))
        ));
    }

    #[test]
    fn default_max_features_is_ceil_sqrt() {
        let config = ForestConfig::default();
        assert_eq!(config.features_per_node(4), 2);
        assert_eq!(config.features_per_node(5), 3);
        assert_eq!(test_mode(1).features_per_node(4), 4);
    }

    #[test]
    fn max_depth_is_respected() {
        let x: Vec<Vec<f64>> = (0..32).map(|i| vec![i as f64]).collect();
        let y: Vec<_> = (0..32).map(|i| if i % 2 == 0 { AS } else { ST }).collect();
        let config = ForestConfig {
            max_depth: Some(3),
            ..test_mode(1)
        };
        let model = train_forest(&x, &y, &config).unwrap();
        assert!(model.trees[0].depth() <= 3);
        model.check().unwrap();
    }

    #[test]
    fn check_rejects_corrupt_trees() {
        let mut model = train_forest(&[vec![0.0], vec![1.0]], &[AS, ST], &test_mode(1)).unwrap();
        model.trees[0].nodes[0] = Node::Split {
            feature: 0,
            threshold: 0.5,
            left: 0,
            right: 2,
        };
        assert!(model.check().is_err());
    }
}
