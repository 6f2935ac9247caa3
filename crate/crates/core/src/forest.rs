//! Random forest over binary bag-of-words features.
//!
//! Every split is a presence test on one feature, so there is no threshold
//! search: a node partitions its samples into "token absent" and "token
//! present". Split quality is the Gini impurity decrease.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, SatisfactionLabel};
use crate::error::{Error, Result};
use crate::model::{Probabilities, TextClassifier};
use crate::rng;
use crate::vectorize::{tokenize, vectorize, FeatureVector, Vocabulary};

pub const MODEL_FORMAT: &str = "honeycomb-xai/random-forest";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// `None` means `ceil(sqrt(d))`.
    pub features_per_split: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 12,
            min_samples_leaf: 2,
            features_per_split: None,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::config("n_trees", "must be at least 1"));
        }
        if self.max_depth == 0 {
            return Err(Error::config("max_depth", "must be at least 1"));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::config("min_samples_leaf", "must be at least 1"));
        }
        if self.features_per_split == Some(0) {
            return Err(Error::config("features_per_split", "must be at least 1"));
        }
        Ok(())
    }

    pub fn resolved_features_per_split(&self, d: usize) -> Result<usize> {
        let k = self
            .features_per_split
            .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize);
        if k == 0 || k > d {
            return Err(Error::config(
                "features_per_split",
                format!("must lie in [1, {d}], got {k}"),
            ));
        }
        Ok(k)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        absent: usize,
        present: usize,
    },
    /// Training sample counts `[unsatisfied, satisfied]`.
    Leaf([u32; 2]),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    fn leaf_for(&self, x: &FeatureVector) -> [u32; 2] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(counts) => return *counts,
                Node::Split {
                    feature,
                    absent,
                    present,
                } => {
                    i = if x.contains(*feature) {
                        *present
                    } else {
                        *absent
                    }
                }
            }
        }
    }

    /// Edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split {
                    absent, present, ..
                } => 1 + go(nodes, *absent).max(go(nodes, *present)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = [u32; 2]> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf(c) => Some(*c),
            Node::Split { .. } => None,
        })
    }

    fn validate(&self, d: usize) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Model("tree has no nodes".into()));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if let Node::Split {
                feature,
                absent,
                present,
            } = n
            {
                // children always come after their parent, so traversal terminates
                if *feature >= d || *absent <= i || *present <= i {
                    return Err(Error::Model(format!("malformed split at node {i}")));
                }
                if *absent >= self.nodes.len() || *present >= self.nodes.len() {
                    return Err(Error::Model(format!("dangling child at node {i}")));
                }
            }
        }
        Ok(())
    }
}

fn gini(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p0 = counts[0] as f64 / n;
    let p1 = counts[1] as f64 / n;
    1.0 - p0 * p0 - p1 * p1
}

struct TreeBuilder<'a, R> {
    x: &'a [FeatureVector],
    y: &'a [SatisfactionLabel],
    d: usize,
    k: usize,
    cfg: &'a ForestConfig,
    rng: R,
    nodes: Vec<Node>,
}

impl<R: Rng> TreeBuilder<'_, R> {
    fn counts(&self, samples: &[usize]) -> [usize; 2] {
        let mut c = [0; 2];
        for &s in samples {
            c[self.y[s].as_index()] += 1;
        }
        c
    }

    fn best_split(&mut self, samples: &[usize], parent: [usize; 2]) -> Option<usize> {
        let n = samples.len();
        let parent_gini = gini(parent);
        let mut candidates = index::sample(&mut self.rng, self.d, self.k).into_vec();
        candidates.sort_unstable();
        let mut best: Option<(usize, f64)> = None;
        for f in candidates {
            let mut present = [0usize; 2];
            for &s in samples {
                if self.x[s].contains(f) {
                    present[self.y[s].as_index()] += 1;
                }
            }
            let absent = [parent[0] - present[0], parent[1] - present[1]];
            let n_present = present[0] + present[1];
            let n_absent = n - n_present;
            if n_present < self.cfg.min_samples_leaf || n_absent < self.cfg.min_samples_leaf {
                continue;
            }
            let gain = parent_gini
                - (n_present as f64 / n as f64) * gini(present)
                - (n_absent as f64 / n as f64) * gini(absent);
            // strict improvement keeps the lowest index on ties
            if gain > 1e-12 && best.is_none_or(|(_, g)| gain > g + 1e-12) {
                best = Some((f, gain));
            }
        }
        best.map(|(f, _)| f)
    }

    fn grow(&mut self, samples: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(&samples);
        let id = self.nodes.len();
        let leaf = Node::Leaf([counts[0] as u32, counts[1] as u32]);
        self.nodes.push(leaf.clone());
        let pure = counts[0] == 0 || counts[1] == 0;
        if pure || depth >= self.cfg.max_depth || samples.len() < 2 * self.cfg.min_samples_leaf {
            return id;
        }
        let Some(feature) = self.best_split(&samples, counts) else {
            return id;
        };
        let (present, absent): (Vec<usize>, Vec<usize>) = samples
            .into_iter()
            .partition(|&s| self.x[s].contains(feature));
        let absent_id = self.grow(absent, depth + 1);
        let present_id = self.grow(present, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            absent: absent_id,
            present: present_id,
        };
        id
    }
}

fn train_tree(
    x: &[FeatureVector],
    y: &[SatisfactionLabel],
    d: usize,
    k: usize,
    cfg: &ForestConfig,
    tree_index: usize,
) -> DecisionTree {
    let mut s = rng::stream(cfg.seed, &["forest", "tree", &tree_index.to_string()]);
    let n = x.len();
    let bootstrap: Vec<usize> = (0..n).map(|_| s.random_range(0..n)).collect();
    let mut builder = TreeBuilder {
        x,
        y,
        d,
        k,
        cfg,
        rng: s,
        nodes: Vec::new(),
    };
    builder.grow(bootstrap, 0);
    DecisionTree {
        nodes: builder.nodes,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetrics {
    pub n_samples: usize,
    /// `[unsatisfied, satisfied]`.
    pub class_counts: [usize; 2],
    pub train_accuracy: f64,
}

/// Trained ensemble. Immutable; shares its vocabulary with the explainers.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomForestModel {
    config: ForestConfig,
    vocabulary: Vocabulary,
    trees: Vec<DecisionTree>,
    metrics: TrainingMetrics,
}

pub fn train_forest(
    x: &[FeatureVector],
    y: &[SatisfactionLabel],
    vocabulary: Vocabulary,
    cfg: &ForestConfig,
) -> Result<RandomForestModel> {
    cfg.validate()?;
    if x.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(format!(
            "{} feature vectors but {} labels",
            x.len(),
            y.len()
        )));
    }
    let d = vocabulary.len();
    if let Some(bad) = x.iter().find(|v| v.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: bad.dim(),
        });
    }
    let mut class_counts = [0usize; 2];
    for label in y {
        class_counts[label.as_index()] += 1;
    }
    if class_counts.contains(&0) {
        return Err(Error::SingleClass);
    }
    let k = cfg.resolved_features_per_split(d)?;

    #[cfg(feature = "parallel")]
    let trees: Vec<DecisionTree> = {
        use rayon::prelude::*;
        (0..cfg.n_trees)
            .into_par_iter()
            .map(|t| train_tree(x, y, d, k, cfg, t))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let trees: Vec<DecisionTree> = (0..cfg.n_trees)
        .map(|t| train_tree(x, y, d, k, cfg, t))
        .collect();

    let mut model = RandomForestModel {
        config: cfg.clone(),
        vocabulary,
        trees,
        metrics: TrainingMetrics {
            n_samples: x.len(),
            class_counts,
            train_accuracy: 0.0,
        },
    };
    let correct = x
        .iter()
        .zip(y)
        .filter(|(xi, yi)| model.predict(xi).ok() == Some(**yi))
        .count();
    model.metrics.train_accuracy = correct as f64 / x.len() as f64;
    Ok(model)
}

/// Vectorize every record of `c` against `vocabulary`.
pub fn featurize(
    c: &Corpus,
    vocabulary: &Vocabulary,
) -> (Vec<FeatureVector>, Vec<SatisfactionLabel>) {
    c.iter()
        .map(|r| (vectorize(&tokenize(&r.text), vocabulary), r.label))
        .unzip()
}

impl RandomForestModel {
    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn metrics(&self) -> &TrainingMetrics {
        &self.metrics
    }

    /// Features tested by at least one split.
    pub fn used_features(&self) -> BTreeSet<usize> {
        self.trees
            .iter()
            .flat_map(|t| t.nodes.iter())
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf(_) => None,
            })
            .collect()
    }

    pub fn predict_text(&self, text: &str) -> Result<Probabilities> {
        self.predict_proba(&vectorize(&tokenize(text), &self.vocabulary))
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            config: self.config.clone(),
            vocabulary_hash: self.vocabulary.content_hash(),
            vocabulary: self.vocabulary.tokens().to_vec(),
            min_df: self.vocabulary.min_df(),
            metrics: self.metrics.clone(),
            trees: self.trees.clone(),
        };
        serde_json::to_string(&file).expect("model always serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(json)?;
        if file.format != MODEL_FORMAT {
            return Err(Error::Model(format!("unexpected format {:?}", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::Model(format!(
                "unsupported version {}",
                file.version
            )));
        }
        let vocabulary = Vocabulary::from_tokens(file.vocabulary, file.min_df)?;
        if vocabulary.content_hash() != file.vocabulary_hash {
            return Err(Error::Model("vocabulary hash mismatch".into()));
        }
        file.config.validate()?;
        if file.trees.is_empty() {
            return Err(Error::Model("no trees".into()));
        }
        for t in &file.trees {
            t.validate(vocabulary.len())?;
        }
        Ok(Self {
            config: file.config,
            vocabulary,
            trees: file.trees,
            metrics: file.metrics,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&json)
    }

    pub fn evaluate(&self, test: &Corpus) -> Result<EvaluationMetrics> {
        if test.is_empty() {
            return Err(Error::Empty("test corpus"));
        }
        let mut confusion = [[0usize; 2]; 2];
        for r in test {
            let predicted = self.predict(&vectorize(&tokenize(&r.text), &self.vocabulary))?;
            confusion[r.label.as_index()][predicted.as_index()] += 1;
        }
        Ok(EvaluationMetrics::from_confusion(confusion))
    }
}

impl TextClassifier for RandomForestModel {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    fn predict_proba(&self, x: &FeatureVector) -> Result<Probabilities> {
        self.check_dim(x)?;
        let mut p_sat = 0.0;
        for tree in &self.trees {
            let [u, s] = tree.leaf_for(x);
            p_sat += f64::from(s) / f64::from(u + s);
        }
        Ok(Probabilities::from_satisfied(
            p_sat / self.trees.len() as f64,
        ))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    config: ForestConfig,
    vocabulary_hash: String,
    vocabulary: Vec<String>,
    min_df: usize,
    metrics: TrainingMetrics,
    trees: Vec<DecisionTree>,
}

/// Test-set metrics. `confusion[actual][predicted]`, index 0 = unsatisfied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationMetrics {
    pub n: usize,
    pub accuracy: f64,
    /// Per class; 0 when the class is never predicted.
    pub precision: [f64; 2],
    /// Per class; 0 when the class never occurs.
    pub recall: [f64; 2],
    pub confusion: [[usize; 2]; 2],
}

impl EvaluationMetrics {
    pub fn from_confusion(confusion: [[usize; 2]; 2]) -> Self {
        let n: usize = confusion.iter().flatten().sum();
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = [0, 1].map(|c| ratio(confusion[c][c], confusion[0][c] + confusion[1][c]));
        let recall = [0, 1].map(|c| ratio(confusion[c][c], confusion[c][0] + confusion[c][1]));
        Self {
            n,
            accuracy: ratio(confusion[0][0] + confusion[1][1], n),
            precision,
            recall,
            confusion,
        }
    }
}
