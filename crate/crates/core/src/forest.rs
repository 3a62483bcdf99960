//! Random-forest readout: an ensemble of CART decision trees with Gini
//! splits, bootstrap resampling, and random feature subsets per node.
//!
//! Each tree trains on a bootstrap resample of the data; at every node a
//! random subset of features (square root of the feature count by default)
//! is scanned for the threshold minimizing the weighted Gini impurity of the
//! children. Trees grow until leaves are pure or too small to split.
//! Prediction is a majority vote with the lowest class index on ties, and
//! samples left out of a tree's bootstrap provide the out-of-bag accuracy
//! estimate reported after training.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ridge::argmax_lowest;
use crate::rng::{derive_seed, RngStream};

/// How many features each split considers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaxFeatures {
    /// `max(1, ⌊√F⌋)` random features per node.
    #[default]
    Sqrt,
    /// Every feature at every node (classic single-tree CART).
    All,
    /// An explicit count, clamped to the feature dimension.
    Fixed(usize),
}

impl MaxFeatures {
    fn resolve(&self, dim: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((dim as f64).sqrt().floor() as usize).max(1),
            MaxFeatures::All => dim,
            MaxFeatures::Fixed(k) => (*k).clamp(1, dim),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub trees: usize,
    pub max_features: MaxFeatures,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig { trees: 300, max_features: MaxFeatures::Sqrt, min_samples_leaf: 1, seed: 0 }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trees == 0 {
            return Err(Error::Parameter { name: "trees", detail: "must be ≥ 1".into() });
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::Parameter { name: "min_samples_leaf", detail: "must be ≥ 1".into() });
        }
        Ok(())
    }
}

/// One node of a decision tree, stored in a flat arena.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Node {
    Leaf { label: usize },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// A single CART tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, r: &[f64]) -> usize {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { label } => return *label,
                Node::Split { feature, threshold, left, right } => {
                    at = if r[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 1,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub n_classes: usize,
    pub feature_dim: usize,
    pub class_names: Vec<String>,
    /// Accuracy on out-of-bag votes, when at least one sample had any.
    pub oob_accuracy: Option<f64>,
}

/// Gini impurity of a class histogram.
fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t) * (c as f64 / t)).sum::<f64>()
}

fn majority(counts: &[usize]) -> usize {
    let as_f: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    argmax_lowest(&as_f)
}

struct TreeBuilder<'a> {
    features: &'a [Vec<f64>],
    labels: &'a [usize],
    n_classes: usize,
    dim: usize,
    per_split: usize,
    min_leaf: usize,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl<'a> TreeBuilder<'a> {
    /// Best Gini split for `indices` over `candidates`, if any candidate
    /// feature admits a threshold leaving ≥ `min_leaf` samples on each side.
    fn best_split(&self, indices: &[usize], candidates: &[usize]) -> Option<BestSplit> {
        let n = indices.len();
        let mut best: Option<BestSplit> = None;
        let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(n);
        for &feature in candidates {
            sorted.clear();
            sorted.extend(indices.iter().map(|&i| (self.features[i][feature], self.labels[i])));
            sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_counts = vec![0usize; self.n_classes];
            let mut right_counts = vec![0usize; self.n_classes];
            for &(_, l) in &sorted {
                right_counts[l] += 1;
            }
            for cut in 1..n {
                let (v_prev, l_prev) = sorted[cut - 1];
                left_counts[l_prev] += 1;
                right_counts[l_prev] -= 1;
                let v_next = sorted[cut].0;
                if v_next <= v_prev {
                    continue; // same value: not a realizable threshold
                }
                if cut < self.min_leaf || n - cut < self.min_leaf {
                    continue;
                }
                let weighted = (cut as f64 * gini(&left_counts, cut)
                    + (n - cut) as f64 * gini(&right_counts, n - cut))
                    / n as f64;
                if best.as_ref().is_none_or(|b| weighted < b.impurity) {
                    best = Some(BestSplit {
                        feature,
                        threshold: 0.5 * (v_prev + v_next),
                        impurity: weighted,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, indices: &[usize], stream: &mut RngStream) -> usize {
        let mut counts = vec![0usize; self.n_classes];
        for &i in indices {
            counts[self.labels[i]] += 1;
        }
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || indices.len() < 2 * self.min_leaf {
            self.nodes.push(Node::Leaf { label: majority(&counts) });
            return self.nodes.len() - 1;
        }

        // Random feature subset via partial Fisher–Yates over 0..dim.
        let mut order: Vec<usize> = (0..self.dim).collect();
        for k in 0..self.per_split.min(self.dim) {
            let pick = k + stream.index(self.dim - k);
            order.swap(k, pick);
        }
        let subset = &order[..self.per_split.min(self.dim)];

        let split = self.best_split(indices, subset).or_else(|| {
            // The sampled features were all constant on this node; fall back
            // to the full feature set before conceding a leaf.
            if self.per_split < self.dim {
                let all: Vec<usize> = (0..self.dim).collect();
                self.best_split(indices, &all)
            } else {
                None
            }
        });

        let Some(split) = split else {
            self.nodes.push(Node::Leaf { label: majority(&counts) });
            return self.nodes.len() - 1;
        };

        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .partition(|&&i| self.features[i][split.feature] <= split.threshold);
        let at = self.nodes.len();
        // Placeholder: children are grown after the node exists so the
        // arena index is stable.
        self.nodes.push(Node::Split { feature: split.feature, threshold: split.threshold, left: 0, right: 0 });
        let left = self.grow(&left_idx, stream);
        let right = self.grow(&right_idx, stream);
        let Node::Split { left: l, right: r, .. } = &mut self.nodes[at] else { unreachable!() };
        *l = left;
        *r = right;
        at
    }
}

/// Train a random forest.
pub fn forest_fit(
    features: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    cfg: &ForestConfig,
) -> Result<ForestModel> {
    cfg.validate()?;
    if features.is_empty() || features.len() != labels.len() {
        return Err(Error::Training(format!(
            "{} feature rows and {} labels",
            features.len(),
            labels.len()
        )));
    }
    let dim = features[0].len();
    if dim == 0 {
        return Err(Error::Training("feature vectors are empty".into()));
    }
    for (i, row) in features.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::Training(format!(
                "feature row {i} has dimension {}, expected {dim}",
                row.len()
            )));
        }
        if labels[i] >= n_classes {
            return Err(Error::Training(format!(
                "sample {i} carries label {}, but only {n_classes} classes are declared",
                labels[i]
            )));
        }
    }

    let n = features.len();
    let per_split = cfg.max_features.resolve(dim);
    let mut trees = Vec::with_capacity(cfg.trees);
    let mut oob_votes = vec![vec![0usize; n_classes]; n];

    for t in 0..cfg.trees {
        let mut stream = RngStream::new(derive_seed(cfg.seed, &format!("tree-{t}")));
        let mut in_bag = vec![false; n];
        let mut sample: Vec<usize> = Vec::with_capacity(n);
        for _ in 0..n {
            let pick = stream.index(n);
            in_bag[pick] = true;
            sample.push(pick);
        }
        let mut builder = TreeBuilder {
            features,
            labels,
            n_classes,
            dim,
            per_split,
            min_leaf: cfg.min_samples_leaf,
            nodes: Vec::new(),
        };
        let root = builder.grow(&sample, &mut stream);
        debug_assert_eq!(root, 0);
        let tree = Tree { nodes: builder.nodes };
        for (i, bagged) in in_bag.iter().enumerate() {
            if !bagged {
                oob_votes[i][tree.predict(&features[i])] += 1;
            }
        }
        trees.push(tree);
    }

    let mut covered = 0usize;
    let mut hits = 0usize;
    for (i, votes) in oob_votes.iter().enumerate() {
        if votes.iter().any(|&v| v > 0) {
            covered += 1;
            let as_f: Vec<f64> = votes.iter().map(|&v| v as f64).collect();
            if argmax_lowest(&as_f) == labels[i] {
                hits += 1;
            }
        }
    }
    let oob_accuracy = (covered > 0).then(|| hits as f64 / covered as f64);

    Ok(ForestModel {
        trees,
        n_classes,
        feature_dim: dim,
        class_names: (0..n_classes).map(|c| c.to_string()).collect(),
        oob_accuracy,
    })
}

impl ForestModel {
    /// Per-class vote counts across all trees.
    pub fn votes(&self, r: &[f64]) -> Result<Vec<usize>> {
        if r.len() != self.feature_dim {
            return Err(Error::Shape {
                op: "forest prediction",
                detail: format!("feature vector has {} components, model expects {}", r.len(), self.feature_dim),
            });
        }
        let mut votes = vec![0usize; self.n_classes];
        for tree in &self.trees {
            votes[tree.predict(r)] += 1;
        }
        Ok(votes)
    }

    /// Majority vote, lowest class index on ties.
    pub fn predict(&self, r: &[f64]) -> Result<usize> {
        let votes = self.votes(r)?;
        let as_f: Vec<f64> = votes.iter().map(|&v| v as f64).collect();
        Ok(argmax_lowest(&as_f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn blobs(seed: u64, per_class: usize, centers: &[(f64, f64)]) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut stream = RngStream::new(seed);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (cls, &(cx, cy)) in centers.iter().enumerate() {
            for _ in 0..per_class {
                features.push(vec![cx + 0.7 * stream.gaussian(), cy + 0.7 * stream.gaussian()]);
                labels.push(cls);
            }
        }
        (features, labels)
    }

    fn accuracy(model: &ForestModel, features: &[Vec<f64>], labels: &[usize]) -> f64 {
        let hits = features
            .iter()
            .zip(labels)
            .filter(|(f, &l)| model.predict(f).unwrap() == l)
            .count();
        hits as f64 / features.len() as f64
    }

    #[test]
    fn single_class_training_yields_single_leaf_trees() {
        let features = vec![vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, 5.0]];
        let labels = vec![1, 1, 1];
        let cfg = ForestConfig { trees: 10, ..ForestConfig::default() };
        let model = forest_fit(&features, &labels, 2, &cfg).unwrap();
        for tree in &model.trees {
            assert_eq!(tree.nodes, vec![Node::Leaf { label: 1 }]);
        }
        assert_eq!(model.predict(&[9.0, 9.0]).unwrap(), 1);
        assert_eq!(model.oob_accuracy, Some(1.0));
    }

    #[test]
    fn threshold_separable_line_is_learned_by_one_tree() {
        let features: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let labels: Vec<usize> = (0..20).map(|i| usize::from(i >= 10)).collect();
        let cfg = ForestConfig { trees: 1, max_features: MaxFeatures::All, ..ForestConfig::default() };
        let model = forest_fit(&features, &labels, 2, &cfg).unwrap();
        assert_eq!(accuracy(&model, &features, &labels), 1.0);
    }

    #[test]
    fn tree_count_matches_config_and_votes_total_it() {
        let (features, labels) = blobs(3, 25, &[(0.0, 0.0), (5.0, 5.0)]);
        let cfg = ForestConfig { trees: 37, ..ForestConfig::default() };
        let model = forest_fit(&features, &labels, 2, &cfg).unwrap();
        assert_eq!(model.trees.len(), 37);
        let votes = model.votes(&[2.5, 2.5]).unwrap();
        assert_eq!(votes.iter().sum::<usize>(), 37);
    }

    #[test]
    fn unanimous_trees_predict_their_label_and_ties_take_the_lower_index() {
        let unanimous = ForestModel {
            trees: vec![Tree { nodes: vec![Node::Leaf { label: 2 }] }; 3],
            n_classes: 3,
            feature_dim: 1,
            class_names: vec!["0".into(), "1".into(), "2".into()],
            oob_accuracy: None,
        };
        assert_eq!(unanimous.predict(&[0.0]).unwrap(), 2);
        let tied = ForestModel {
            trees: vec![
                Tree { nodes: vec![Node::Leaf { label: 1 }] },
                Tree { nodes: vec![Node::Leaf { label: 0 }] },
            ],
            n_classes: 2,
            feature_dim: 1,
            class_names: vec!["0".into(), "1".into()],
            oob_accuracy: None,
        };
        assert_eq!(tied.predict(&[0.0]).unwrap(), 0);
    }

    #[test]
    fn prediction_matches_a_manual_vote_recount() {
        let (features, labels) = blobs(5, 20, &[(0.0, 0.0), (4.0, 0.0), (2.0, 4.0)]);
        let cfg = ForestConfig { trees: 15, ..ForestConfig::default() };
        let model = forest_fit(&features, &labels, 3, &cfg).unwrap();
        let mut stream = RngStream::new(6);
        for _ in 0..25 {
            let probe = vec![stream.uniform(-2.0, 6.0), stream.uniform(-2.0, 6.0)];
            let mut recount = vec![0usize; 3];
            for tree in &model.trees {
                recount[tree.predict(&probe)] += 1;
            }
            assert_eq!(model.votes(&probe).unwrap(), recount);
            let as_f: Vec<f64> = recount.iter().map(|&v| v as f64).collect();
            assert_eq!(model.predict(&probe).unwrap(), argmax_lowest(&as_f));
        }
    }

    #[test]
    fn training_is_deterministic_in_the_seed() {
        let (features, labels) = blobs(7, 30, &[(0.0, 0.0), (5.0, 5.0)]);
        let cfg = ForestConfig { trees: 20, seed: 99, ..ForestConfig::default() };
        let a = forest_fit(&features, &labels, 2, &cfg).unwrap();
        let b = forest_fit(&features, &labels, 2, &cfg).unwrap();
        assert_eq!(a.trees, b.trees);
        assert_eq!(a.oob_accuracy, b.oob_accuracy);
        let other = ForestConfig { trees: 20, seed: 100, ..ForestConfig::default() };
        let c = forest_fit(&features, &labels, 2, &other).unwrap();
        assert_ne!(a.trees, c.trees);
    }

    #[test]
    fn distinct_singletons_are_interpolated() {
        let features: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let labels: Vec<usize> = (0..6).collect();
        let cfg = ForestConfig { trees: 60, ..ForestConfig::default() };
        let model = forest_fit(&features, &labels, 6, &cfg).unwrap();
        assert_eq!(accuracy(&model, &features, &labels), 1.0);
    }

    #[test]
    fn out_of_bag_accuracy_tracks_holdout_accuracy() {
        let (features, labels) = blobs(9, 120, &[(0.0, 0.0), (3.0, 0.0), (1.5, 2.5)]);
        // Interleave: even indices train, odd indices hold out.
        let train_f: Vec<Vec<f64>> = features.iter().step_by(2).cloned().collect();
        let train_l: Vec<usize> = labels.iter().step_by(2).copied().collect();
        let test_f: Vec<Vec<f64>> = features.iter().skip(1).step_by(2).cloned().collect();
        let test_l: Vec<usize> = labels.iter().skip(1).step_by(2).copied().collect();
        let cfg = ForestConfig { trees: 300, ..ForestConfig::default() };
        let model = forest_fit(&train_f, &train_l, 3, &cfg).unwrap();
        let oob = model.oob_accuracy.unwrap();
        let holdout = accuracy(&model, &test_f, &test_l);
        assert!((oob - holdout).abs() <= 0.05, "oob {oob} vs holdout {holdout}");
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert!(forest_fit(&[], &[], 2, &ForestConfig::default()).is_err());
        let features = vec![vec![1.0], vec![2.0]];
        assert!(forest_fit(&features, &[0, 5], 2, &ForestConfig::default()).is_err());
        assert!(forest_fit(&features, &[0], 2, &ForestConfig::default()).is_err());
        let cfg = ForestConfig { trees: 0, ..ForestConfig::default() };
        assert!(forest_fit(&features, &[0, 1], 2, &cfg).is_err());
    }

    #[test]
    fn constant_features_collapse_to_majority_leaves() {
        let features = vec![vec![1.0, 1.0]; 5];
        let labels = vec![0, 1, 1, 0, 1];
        let cfg = ForestConfig { trees: 9, ..ForestConfig::default() };
        let model = forest_fit(&features, &labels, 2, &cfg).unwrap();
        // No feature can split identical points: every tree must be a leaf
        // of its bootstrap majority, and prediction still works.
        for tree in &model.trees {
            assert_eq!(tree.nodes.len(), 1);
        }
        model.predict(&[1.0, 1.0]).unwrap();
    }
}
