//! Explainable classification of free-text user-experience survey responses.
//!
//! Responses annotated with one of six User Experience Honeycomb dimensions are
//! augmented, turned into binary bag-of-words vectors and classified by a
//! random forest. Individual predictions are then explained with three
//! model-agnostic methods that share one perturbation semantics (removing
//! tokens from the text):
//!
//! * [`lime`]: a weighted sparse linear surrogate fit around the instance,
//! * [`shap`]: Shapley-value attributions, exact or kernel-sampled,
//! * [`anchor`]: a minimal set of tokens that pins the prediction.
//!
//! [`report`] aggregates explanations into keyword rankings, word-cloud data
//! and per-word attribution distributions.
//!
//! ```
//! use honeycomb_xai::corpus::generate_synthetic;
//! use honeycomb_xai::forest::{featurize, train_forest, ForestConfig};
//! use honeycomb_xai::shap::{explain_shap, ShapConfig};
//! use honeycomb_xai::vectorize::build_vocabulary;
//!
//! let corpus = generate_synthetic(1, 100)?;
//! let vocab = build_vocabulary(&corpus, 2)?;
//! let (x, y) = featurize(&corpus, &vocab);
//! let model = train_forest(&x, &y, vocab, &ForestConfig::default())?;
//! let e = explain_shap(&model, &corpus.records()[0], &ShapConfig::default())?;
//! assert!(e.efficiency_gap().abs() < 1e-6);
//! # Ok::<(), honeycomb_xai::Error>(())
//! ```

pub mod anchor;
pub mod augment;
pub mod corpus;
pub mod error;
pub mod forest;
pub mod lime;
mod linalg;
pub mod model;
pub mod reference;
pub mod report;
pub mod rng;
pub mod shap;
pub mod vectorize;

pub use error::{Error, Result};
pub use model::{Instance, Probabilities, TextClassifier};
