//! Portable tree-ensemble classifiers.
//!
//! A model file is JSON:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "name": "FORMAT",
//!   "feature_names": ["nrows", "ncols", ..., "diagfill"],
//!   "classes": ["COO", "CSR", "DIA"],
//!   "trees": [
//!     [ {"nodes": [{"split": {"feature": 3, "threshold": 0.5, "left": 1, "right": 2}},
//!                  {"leaf": -0.25},
//!                  {"leaf": 0.75}]} ],
//!     ...
//!   ]
//! }
//! ```
//!
//! `trees[k]` holds the trees voting for `classes[k]`. Each tree is a flat
//! node list rooted at index 0; a split sends a sample left when
//! `features[feature] <= threshold`. Child indices must be greater than
//! their parent's. A class score is the sum of its trees' leaves; the
//! predicted class is the highest score, ties going to the lowest index.

use crate::features::{FeatureVector, FEATURE_COUNT, FEATURE_NAMES};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("expected {FEATURE_COUNT} features, model declares {found}")]
    FeatureCount { found: usize },
    #[error("{file}: {source}")]
    Io {
        file: String,
        #[source]
        source: std::io::Error,
    },
}

impl ModelError {
    fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        ModelError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(score: f64) -> Self {
        Tree {
            nodes: vec![Node::Leaf(score)],
        }
    }

    /// A depth-one tree.
    pub fn stump(feature: usize, threshold: f64, left: f64, right: f64) -> Self {
        Tree {
            nodes: vec![
                Node::Split {
                    feature,
                    threshold,
                    left: 1,
                    right: 2,
                },
                Node::Leaf(left),
                Node::Leaf(right),
            ],
        }
    }

    #[inline]
    pub fn evaluate(&self, x: &[f64; FEATURE_COUNT]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(score) => return score,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    fn validate(&self, path: &str) -> Result<(), ModelError> {
        if self.nodes.is_empty() {
            return Err(ModelError::schema(format!("{path}.nodes"), "tree has no nodes"));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            let at = format!("{path}.nodes[{i}]");
            match *node {
                Node::Leaf(score) if !score.is_finite() => {
                    return Err(ModelError::schema(at, "leaf score is not finite"));
                }
                Node::Leaf(_) => {}
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if feature >= FEATURE_COUNT {
                        return Err(ModelError::schema(
                            format!("{at}.feature"),
                            format!("feature index {feature} out of range"),
                        ));
                    }
                    if !threshold.is_finite() {
                        return Err(ModelError::schema(format!("{at}.threshold"), "not finite"));
                    }
                    for (name, child) in [("left", left), ("right", right)] {
                        if child <= i || child >= self.nodes.len() {
                            return Err(ModelError::schema(
                                format!("{at}.{name}"),
                                format!("child index {child} must be in {}..{}", i + 1, self.nodes.len()),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// On-disk layout of a model file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub feature_names: Vec<String>,
    pub classes: Vec<String>,
    pub trees: Vec<Vec<Tree>>,
}

/// Result of classifying one feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class_index: usize,
    pub label: String,
    /// Summed leaf scores, one per class.
    pub scores: Vec<f64>,
}

impl Prediction {
    /// Softmax of the raw scores, for display.
    pub fn probabilities(&self) -> Vec<f64> {
        let max = self.scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = self.scores.iter().map(|s| (s - max).exp()).collect();
        let total: f64 = exp.iter().sum();
        exp.into_iter().map(|e| e / total).collect()
    }
}

/// Anything that maps a feature vector to one of a fixed set of labels.
pub trait Classifier {
    fn classes(&self) -> &[String];
    fn predict(&self, features: &FeatureVector) -> Prediction;
}

/// A validated gradient-boosted tree ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeEnsembleModel {
    name: Option<String>,
    classes: Vec<String>,
    trees: Vec<Vec<Tree>>,
}

impl TreeEnsembleModel {
    pub fn new(
        name: Option<String>,
        classes: Vec<String>,
        trees: Vec<Vec<Tree>>,
    ) -> Result<Self, ModelError> {
        Self::from_file(ModelFile {
            schema_version: SCHEMA_VERSION,
            name,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            classes,
            trees,
        })
    }

    /// A model that always predicts `classes[winner]`.
    pub fn constant(name: &str, classes: &[&str], winner: usize) -> Result<Self, ModelError> {
        let trees = (0..classes.len())
            .map(|k| vec![Tree::leaf(if k == winner { 1.0 } else { 0.0 })])
            .collect();
        Self::new(
            Some(name.to_string()),
            classes.iter().map(|s| s.to_string()).collect(),
            trees,
        )
    }

    pub fn from_file(file: ModelFile) -> Result<Self, ModelError> {
        if file.schema_version != SCHEMA_VERSION {
            return Err(ModelError::schema(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", file.schema_version),
            ));
        }
        if file.feature_names.len() != FEATURE_COUNT {
            return Err(ModelError::FeatureCount {
                found: file.feature_names.len(),
            });
        }
        for (i, (got, want)) in file.feature_names.iter().zip(FEATURE_NAMES).enumerate() {
            if got != want {
                return Err(ModelError::schema(
                    format!("feature_names[{i}]"),
                    format!("expected `{want}`, found `{got}`"),
                ));
            }
        }
        if file.classes.is_empty() {
            return Err(ModelError::schema("classes", "no classes"));
        }
        for (i, c) in file.classes.iter().enumerate() {
            if file.classes[..i].contains(c) {
                return Err(ModelError::schema(format!("classes[{i}]"), format!("duplicate class `{c}`")));
            }
        }
        if file.trees.len() != file.classes.len() {
            return Err(ModelError::schema(
                "trees",
                format!("{} tree lists for {} classes", file.trees.len(), file.classes.len()),
            ));
        }
        for (k, class_trees) in file.trees.iter().enumerate() {
            if class_trees.is_empty() {
                return Err(ModelError::schema(format!("trees[{k}]"), "class has no trees"));
            }
            for (t, tree) in class_trees.iter().enumerate() {
                tree.validate(&format!("trees[{k}][{t}]"))?;
            }
        }
        Ok(Self {
            name: file.name,
            classes: file.classes,
            trees: file.trees,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ModelFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ModelError::schema(if path == "." { "<root>".into() } else { path }, e.into_inner().to_string())
        })?;
        Self::from_file(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            file: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            schema_version: SCHEMA_VERSION,
            name: self.name.clone(),
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            classes: self.classes.clone(),
            trees: self.trees.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("model serializes")
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn tree_count(&self) -> usize {
        self.trees.iter().map(Vec::len).sum()
    }

    pub fn scores(&self, x: &[f64; FEATURE_COUNT]) -> Vec<f64> {
        self.trees
            .iter()
            .map(|class_trees| class_trees.iter().fold(0.0, |acc, t| acc + t.evaluate(x)))
            .collect()
    }

    pub fn predict_array(&self, x: &[f64; FEATURE_COUNT]) -> Prediction {
        let scores = self.scores(x);
        let mut best = 0;
        for (k, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = k;
            }
        }
        Prediction {
            class_index: best,
            label: self.classes[best].clone(),
            scores,
        }
    }
}

impl Classifier for TreeEnsembleModel {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn predict(&self, features: &FeatureVector) -> Prediction {
        self.predict_array(&features.to_array())
    }
}

/// Free-function form of [`Classifier::predict`].
pub fn predict_class(model: &impl Classifier, features: &FeatureVector) -> Prediction {
    model.predict(features)
}
