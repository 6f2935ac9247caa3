//! Tokenization, vocabulary and binary bag-of-words features.
//!
//! An instance's interpretable representation is a mask over its distinct
//! in-vocabulary tokens, in first-occurrence order. Turning a bit off removes
//! every occurrence of that token from the text.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// Ordered lowercase tokens, none empty.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    /// Build from already-normalized tokens. Empty strings are dropped.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self(
            tokens
                .into_iter()
                .map(Into::into)
                .filter(|t: &String| !t.is_empty())
                .collect(),
        )
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    pub fn join(&self) -> String {
        self.0.join(" ")
    }
}

/// Lowercase, split on whitespace and trim non-alphanumeric characters from
/// both ends of each token.
pub fn tokenize(text: &str) -> TokenSequence {
    TokenSequence(
        text.split_whitespace()
            .filter_map(|raw| {
                let lower = raw.to_lowercase();
                let t = lower.trim_matches(|c: char| !c.is_alphanumeric());
                (!t.is_empty()).then(|| t.to_string())
            })
            .collect(),
    )
}

/// Dense bijection between tokens and feature indices `0..d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    min_df: usize,
}

impl Vocabulary {
    /// Tokens must be distinct and non-empty.
    pub fn from_tokens(tokens: Vec<String>, min_df: usize) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::EmptyVocabulary { min_df });
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() {
                return Err(Error::Model("vocabulary contains an empty token".into()));
            }
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Model(format!("vocabulary token {t:?} is repeated")));
            }
        }
        Ok(Self {
            tokens,
            index,
            min_df,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn min_df(&self) -> usize {
        self.min_df
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// JSON array of tokens in index order.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.tokens).expect("strings always serialize")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let tokens: Vec<String> = serde_json::from_str(json)?;
        Self::from_tokens(tokens, 1)
    }

    /// Hex SHA-256 of [`Vocabulary::to_json`].
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        format!("{digest:x}")
    }
}

/// Tokens with document frequency `>= min_df`, indexed by descending document
/// frequency, ties broken lexicographically.
pub fn build_vocabulary(c: &Corpus, min_df: usize) -> Result<Vocabulary> {
    if min_df == 0 {
        return Err(Error::config("min_df", "must be at least 1"));
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for r in c {
        let distinct: HashSet<String> = tokenize(&r.text).into_inner().into_iter().collect();
        for t in distinct {
            *df.entry(t).or_default() += 1;
        }
    }
    let mut kept: Vec<(String, usize)> = df.into_iter().filter(|(_, n)| *n >= min_df).collect();
    // BTreeMap order is lexicographic and the sort is stable
    kept.sort_by_key(|k| std::cmp::Reverse(k.1));
    Vocabulary::from_tokens(kept.into_iter().map(|(t, _)| t).collect(), min_df)
}

/// Binary presence vector: sorted, duplicate-free active indices below `dim`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureVector {
    active: Vec<usize>,
    dim: usize,
}

impl FeatureVector {
    pub fn new(mut active: Vec<usize>, dim: usize) -> Result<Self> {
        active.sort_unstable();
        active.dedup();
        if let Some(&max) = active.last() {
            if max >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: max + 1,
                });
            }
        }
        Ok(Self { active, dim })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            active: Vec::new(),
            dim,
        }
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contains(&self, feature: usize) -> bool {
        self.active.binary_search(&feature).is_ok()
    }
}

pub fn vectorize(t: &TokenSequence, v: &Vocabulary) -> FeatureVector {
    let mut active: Vec<usize> = t
        .tokens()
        .iter()
        .filter_map(|tok| v.index_of(tok))
        .collect();
    active.sort_unstable();
    active.dedup();
    FeatureVector {
        active,
        dim: v.len(),
    }
}

/// Presence bits over an instance's distinct in-vocabulary tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InterpretableMask(Vec<bool>);

impl InterpretableMask {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn ones(m: usize) -> Self {
        Self(vec![true; m])
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![false; m])
    }

    /// Bit `j` is set iff bit `j` of `code` is set.
    pub fn from_code(code: u64, m: usize) -> Self {
        Self((0..m).map(|j| code >> j & 1 == 1).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count_active(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn get(&self, j: usize) -> bool {
        self.0[j]
    }

    pub fn set(&mut self, j: usize, on: bool) {
        self.0[j] = on;
    }
}

/// Distinct in-vocabulary tokens of `t`, in first-occurrence order.
pub fn distinct_in_vocab(t: &TokenSequence, v: &Vocabulary) -> Vec<String> {
    let mut seen = HashSet::new();
    t.tokens()
        .iter()
        .filter(|tok| v.index_of(tok).is_some() && seen.insert(tok.as_str()))
        .cloned()
        .collect()
}

/// Remove every occurrence of each distinct in-vocabulary token whose bit is
/// off. Out-of-vocabulary tokens are kept.
pub fn apply_mask(
    t: &TokenSequence,
    v: &Vocabulary,
    m: &InterpretableMask,
) -> Result<TokenSequence> {
    let distinct = distinct_in_vocab(t, v);
    if distinct.len() != m.len() {
        return Err(Error::MaskLength {
            expected: distinct.len(),
            got: m.len(),
        });
    }
    let dropped: HashSet<&str> = distinct
        .iter()
        .zip(m.bits())
        .filter(|(_, &on)| !on)
        .map(|(tok, _)| tok.as_str())
        .collect();
    Ok(TokenSequence(
        t.tokens()
            .iter()
            .filter(|tok| !dropped.contains(tok.as_str()))
            .cloned()
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{HoneycombDimension, SatisfactionLabel, SurveyRecord};

    fn seq(words: &[&str]) -> TokenSequence {
        TokenSequence::from_tokens(words.iter().copied())
    }

    fn corpus(texts: &[&str]) -> Corpus {
        Corpus::from_records(
            texts
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    SurveyRecord::new(
                        format!("d{i}"),
                        *t,
                        HoneycombDimension::Usability,
                        SatisfactionLabel::Satisfied,
                    )
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn tokenize_rules() {
        assert_eq!(
            tokenize("Interface is friendly."),
            seq(&["interface", "is", "friendly"])
        );
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("WeChat, WeChat!"), seq(&["wechat", "wechat"]));
        assert_eq!(tokenize(" -- ... \t\n"), seq(&[]));
        assert_eq!(tokenize("don't (stop)"), seq(&["don't", "stop"]));
        assert_eq!(tokenize("广州 很好。"), seq(&["广州", "很好"]));
    }

    #[test]
    fn vocabulary_threshold_and_order() {
        let c = corpus(&["wechat aaa bbb", "wechat aaa bbb", "wechat lonely"]);
        let v = build_vocabulary(&c, 2).unwrap();
        assert_eq!(v.tokens(), ["wechat", "aaa", "bbb"]);
        assert!(v.index_of("lonely").is_none());
        assert_eq!(v.min_df(), 2);
    }

    #[test]
    fn vocabulary_tie_breaks_lexicographically() {
        let texts: Vec<&str> = std::iter::repeat_n("bbb aaa", 5).collect();
        let v = build_vocabulary(&corpus(&texts), 1).unwrap();
        assert_eq!(v.index_of("aaa"), Some(0));
        assert_eq!(v.index_of("bbb"), Some(1));
    }

    #[test]
    fn vocabulary_errors() {
        assert!(matches!(
            build_vocabulary(&corpus(&["one two"]), 2),
            Err(Error::EmptyVocabulary { min_df: 2 })
        ));
        assert!(build_vocabulary(&corpus(&["one"]), 0).is_err());
    }

    #[test]
    fn vocabulary_json_round_trip() {
        let v = build_vocabulary(&corpus(&["a b", "a b c"]), 1).unwrap();
        let back = Vocabulary::from_json(&v.to_json()).unwrap();
        assert_eq!(back.tokens(), v.tokens());
        assert_eq!(back.content_hash(), v.content_hash());
        assert_eq!(v.content_hash().len(), 64);
    }

    #[test]
    fn vectorize_binary_presence() {
        let v = build_vocabulary(&corpus(&["good bad ugly", "good bad ugly"]), 1).unwrap();
        assert!(vectorize(&seq(&["never", "seen"]), &v).active().is_empty());
        assert_eq!(
            vectorize(&seq(&["good", "good"]), &v),
            vectorize(&seq(&["good"]), &v)
        );
        assert_eq!(
            vectorize(&seq(&["ugly", "bad", "good", "x"]), &v)
                .active()
                .len(),
            3
        );
    }

    #[test]
    fn mask_application() {
        let v = build_vocabulary(&corpus(&["good bad", "good bad"]), 1).unwrap();
        let t = seq(&["good", "bad", "good"]);
        assert_eq!(apply_mask(&t, &v, &InterpretableMask::ones(2)).unwrap(), t);
        assert!(apply_mask(&t, &v, &InterpretableMask::zeros(2))
            .unwrap()
            .is_empty());
        let m = InterpretableMask::new(vec![false, true]);
        assert_eq!(apply_mask(&t, &v, &m).unwrap(), seq(&["bad"]));
        let oov = seq(&["meh", "good"]);
        assert_eq!(
            apply_mask(&oov, &v, &InterpretableMask::zeros(1)).unwrap(),
            seq(&["meh"])
        );
        assert!(matches!(
            apply_mask(&t, &v, &InterpretableMask::ones(3)),
            Err(Error::MaskLength {
                expected: 2,
                got: 3
            })
        ));
    }

    #[test]
    fn feature_vector_validates_dim() {
        assert!(FeatureVector::new(vec![3], 3).is_err());
        let fv = FeatureVector::new(vec![2, 0, 2], 3).unwrap();
        assert_eq!(fv.active(), [0, 2]);
    }
}
