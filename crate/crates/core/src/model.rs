//! The black-box interface the explainers interrogate.

use serde::{Deserialize, Serialize};

use crate::corpus::SatisfactionLabel;
use crate::error::{Error, Result};
use crate::vectorize::{
    distinct_in_vocab, tokenize, FeatureVector, InterpretableMask, TokenSequence, Vocabulary,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probabilities {
    pub unsatisfied: f64,
    pub satisfied: f64,
}

impl Probabilities {
    pub fn from_satisfied(p: f64) -> Self {
        Self {
            unsatisfied: 1.0 - p,
            satisfied: p,
        }
    }

    /// Argmax; an exact tie goes to `Unsatisfied`.
    pub fn label(&self) -> SatisfactionLabel {
        if self.satisfied > self.unsatisfied {
            SatisfactionLabel::Satisfied
        } else {
            SatisfactionLabel::Unsatisfied
        }
    }
}

/// A binary classifier over the binary bag-of-words of one vocabulary.
pub trait TextClassifier: Sync {
    fn vocabulary(&self) -> &Vocabulary;

    fn predict_proba(&self, x: &FeatureVector) -> Result<Probabilities>;

    fn predict(&self, x: &FeatureVector) -> Result<SatisfactionLabel> {
        Ok(self.predict_proba(x)?.label())
    }

    fn check_dim(&self, x: &FeatureVector) -> Result<()> {
        let expected = self.vocabulary().len();
        if x.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected,
                got: x.dim(),
            })
        }
    }
}

impl<T: TextClassifier + ?Sized> TextClassifier for &T {
    fn vocabulary(&self) -> &Vocabulary {
        (**self).vocabulary()
    }

    fn predict_proba(&self, x: &FeatureVector) -> Result<Probabilities> {
        (**self).predict_proba(x)
    }
}

/// One text prepared for explanation: its tokens plus the distinct
/// in-vocabulary tokens that span the mask space.
#[derive(Debug, Clone)]
pub struct Instance {
    tokens: TokenSequence,
    features: Vec<String>,
    indices: Vec<usize>,
    dim: usize,
}

impl Instance {
    pub fn new(text: &str, vocabulary: &Vocabulary) -> Self {
        Self::from_tokens(tokenize(text), vocabulary)
    }

    pub fn from_tokens(tokens: TokenSequence, vocabulary: &Vocabulary) -> Self {
        let features = distinct_in_vocab(&tokens, vocabulary);
        let indices = features
            .iter()
            .map(|t| {
                vocabulary
                    .index_of(t)
                    .expect("in-vocabulary by construction")
            })
            .collect();
        Self {
            tokens,
            features,
            indices,
            dim: vocabulary.len(),
        }
    }

    /// Like [`Instance::new`] but errors when there is nothing to mask.
    pub fn explainable(text: &str, vocabulary: &Vocabulary) -> Result<Self> {
        let inst = Self::new(text, vocabulary);
        if inst.is_empty() {
            Err(Error::NothingToExplain)
        } else {
            Ok(inst)
        }
    }

    pub fn tokens(&self) -> &TokenSequence {
        &self.tokens
    }

    /// Distinct in-vocabulary tokens, first-occurrence order.
    pub fn features(&self) -> &[String] {
        &self.features
    }

    /// Number of interpretable features `M`.
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Feature vector of the text with the masked-off tokens removed. Equal to
    /// vectorizing the output of [`crate::vectorize::apply_mask`].
    pub fn masked_features(&self, mask: &InterpretableMask) -> Result<FeatureVector> {
        if mask.len() != self.len() {
            return Err(Error::MaskLength {
                expected: self.len(),
                got: mask.len(),
            });
        }
        let active = self
            .indices
            .iter()
            .zip(mask.bits())
            .filter(|(_, &on)| on)
            .map(|(&i, _)| i)
            .collect();
        FeatureVector::new(active, self.dim)
    }

    pub fn full_features(&self) -> FeatureVector {
        FeatureVector::new(self.indices.clone(), self.dim).expect("indices below dim")
    }

    pub fn p_satisfied<M: TextClassifier + ?Sized>(
        &self,
        model: &M,
        mask: &InterpretableMask,
    ) -> Result<f64> {
        Ok(model.predict_proba(&self.masked_features(mask)?)?.satisfied)
    }

    pub fn predict_masked<M: TextClassifier + ?Sized>(
        &self,
        model: &M,
        mask: &InterpretableMask,
    ) -> Result<SatisfactionLabel> {
        model.predict(&self.masked_features(mask)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vectorize::{apply_mask, vectorize};

    #[test]
    fn tie_goes_to_unsatisfied() {
        assert_eq!(
            Probabilities::from_satisfied(0.5).label(),
            SatisfactionLabel::Unsatisfied
        );
        assert_eq!(
            Probabilities::from_satisfied(0.7).label(),
            SatisfactionLabel::Satisfied
        );
        assert_eq!(
            Probabilities::from_satisfied(0.3).label(),
            SatisfactionLabel::Unsatisfied
        );
    }

    #[test]
    fn masked_features_match_apply_mask_route() {
        let v = Vocabulary::from_tokens(
            ["wechat", "stark", "friendly", "app"]
                .map(String::from)
                .to_vec(),
            1,
        )
        .unwrap();
        let inst = Instance::new("Friendly app, stark stark wechat and more", &v);
        assert_eq!(inst.features(), ["friendly", "app", "stark", "wechat"]);
        for code in 0..16u64 {
            let m = InterpretableMask::from_code(code, 4);
            let direct = inst.masked_features(&m).unwrap();
            let via_text = vectorize(&apply_mask(inst.tokens(), &v, &m).unwrap(), &v);
            assert_eq!(direct, via_text, "mask {code:04b}");
        }
    }

    #[test]
    fn nothing_to_explain() {
        let v = Vocabulary::from_tokens(vec!["wechat".into()], 1).unwrap();
        assert!(matches!(
            Instance::explainable("only unknown words", &v),
            Err(Error::NothingToExplain)
        ));
    }
}
