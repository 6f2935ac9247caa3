//! Closed-form classifiers whose explanations are known in advance.

use crate::error::Result;
use crate::model::{Probabilities, TextClassifier};
use crate::vectorize::{FeatureVector, Vocabulary};

/// `p_satisfied = present` if `token` occurs, else `absent`.
#[derive(Debug, Clone)]
pub struct KeywordModel {
    vocabulary: Vocabulary,
    feature: usize,
    present: f64,
    absent: f64,
}

impl KeywordModel {
    /// Panics if `token` is not in `vocabulary`.
    pub fn new(vocabulary: Vocabulary, token: &str, present: f64, absent: f64) -> Self {
        let feature = vocabulary.index_of(token).expect("keyword in vocabulary");
        Self {
            vocabulary,
            feature,
            present,
            absent,
        }
    }
}

impl TextClassifier for KeywordModel {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    fn predict_proba(&self, x: &FeatureVector) -> Result<Probabilities> {
        self.check_dim(x)?;
        Ok(Probabilities::from_satisfied(if x.contains(self.feature) {
            self.present
        } else {
            self.absent
        }))
    }
}

/// `p_satisfied = bias + sum of coef[i]` over present features, clamped to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct LinearModel {
    vocabulary: Vocabulary,
    bias: f64,
    coef: Vec<f64>,
}

impl LinearModel {
    pub fn new(vocabulary: Vocabulary, bias: f64, coef: Vec<f64>) -> Self {
        assert_eq!(vocabulary.len(), coef.len());
        Self {
            vocabulary,
            bias,
            coef,
        }
    }
}

impl TextClassifier for LinearModel {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    fn predict_proba(&self, x: &FeatureVector) -> Result<Probabilities> {
        self.check_dim(x)?;
        let p = self.bias + x.active().iter().map(|&i| self.coef[i]).sum::<f64>();
        Ok(Probabilities::from_satisfied(p.clamp(0.0, 1.0)))
    }
}

/// Wraps a model and hides the given features from it, so they can never
/// influence its output.
pub struct Blinded<M> {
    inner: M,
    hidden: Vec<usize>,
}

impl<M: TextClassifier> Blinded<M> {
    pub fn new(inner: M, hidden: Vec<usize>) -> Self {
        Self { inner, hidden }
    }
}

impl<M: TextClassifier> TextClassifier for Blinded<M> {
    fn vocabulary(&self) -> &Vocabulary {
        self.inner.vocabulary()
    }

    fn predict_proba(&self, x: &FeatureVector) -> Result<Probabilities> {
        let kept = x
            .active()
            .iter()
            .copied()
            .filter(|i| !self.hidden.contains(i))
            .collect();
        self.inner
            .predict_proba(&FeatureVector::new(kept, x.dim())?)
    }
}

/// Arbitrary function of the feature vector.
pub struct FnModel<F> {
    vocabulary: Vocabulary,
    f: F,
}

impl<F: Fn(&FeatureVector) -> f64 + Sync> FnModel<F> {
    pub fn new(vocabulary: Vocabulary, f: F) -> Self {
        Self { vocabulary, f }
    }
}

impl<F: Fn(&FeatureVector) -> f64 + Sync> TextClassifier for FnModel<F> {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    fn predict_proba(&self, x: &FeatureVector) -> Result<Probabilities> {
        self.check_dim(x)?;
        Ok(Probabilities::from_satisfied((self.f)(x)))
    }
}
