#![allow(dead_code)]

use honeycomb_xai::corpus::{generate_synthetic, split_stratified, Corpus};
use honeycomb_xai::forest::{featurize, train_forest, ForestConfig, RandomForestModel};
use honeycomb_xai::vectorize::{build_vocabulary, Vocabulary};

pub struct Suite {
    pub train: Corpus,
    pub test: Corpus,
    pub model: RandomForestModel,
}

/// 600-record synthetic corpus, 80/20 split, one forest over all dimensions.
pub fn suite() -> Suite {
    let c = generate_synthetic(1, 100).unwrap();
    let (train, test) = split_stratified(&c, 0.2, 1).unwrap();
    let vocab = build_vocabulary(&train, 2).unwrap();
    let (x, y) = featurize(&train, &vocab);
    let cfg = ForestConfig {
        seed: 1,
        ..ForestConfig::default()
    };
    let model = train_forest(&x, &y, vocab, &cfg).unwrap();
    Suite { train, test, model }
}

pub fn vocab(words: &[&str]) -> Vocabulary {
    Vocabulary::from_tokens(words.iter().map(|w| w.to_string()).collect(), 1).unwrap()
}
