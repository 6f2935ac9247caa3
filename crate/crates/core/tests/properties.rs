use std::collections::BTreeMap;

use proptest::prelude::*;

use honeycomb_xai::augment::{
    random_deletion, random_insertion, random_swap, synonym_replacement, SynonymLexicon,
};
use honeycomb_xai::corpus::{
    split_stratified, Corpus, HoneycombDimension, SatisfactionLabel, SurveyRecord,
};
use honeycomb_xai::forest::{train_forest, ForestConfig};
use honeycomb_xai::rng;
use honeycomb_xai::vectorize::{
    apply_mask, distinct_in_vocab, tokenize, vectorize, FeatureVector, InterpretableMask,
    TokenSequence, Vocabulary,
};
use honeycomb_xai::TextClassifier;

fn token() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["a", "b", "c", "wechat", "stark", "friendly", "x"])
        .prop_map(String::from)
}

fn tokens() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(token(), 1..12)
}

fn counts(v: &[String]) -> BTreeMap<&str, usize> {
    let mut m = BTreeMap::new();
    for t in v {
        *m.entry(t.as_str()).or_default() += 1;
    }
    m
}

fn is_sub_multiset(small: &[String], big: &[String]) -> bool {
    let b = counts(big);
    counts(small)
        .iter()
        .all(|(t, n)| b.get(t).copied().unwrap_or(0) >= *n)
}

proptest! {
    #[test]
    fn swap_preserves_multiset(t in tokens(), n in 0usize..6, seed: u64) {
        let out = random_swap(&t, n, &mut rng::seeded(seed));
        prop_assert_eq!(counts(&out), counts(&t));
    }

    #[test]
    fn deletion_is_nonempty_sub_multiset(t in tokens(), p in 0.0f64..=1.0, seed: u64) {
        let out = random_deletion(&t, p, &mut rng::seeded(seed));
        prop_assert!(!out.is_empty());
        prop_assert!(is_sub_multiset(&out, &t));
    }

    #[test]
    fn insertion_grows_by_n(t in tokens(), n in 0usize..5, seed: u64) {
        let out = random_insertion(&t, n, &mut rng::seeded(seed));
        prop_assert_eq!(out.len(), t.len() + n);
        prop_assert!(is_sub_multiset(&t, &out));
        prop_assert!(out.iter().all(|w| t.contains(w)));
    }

    #[test]
    fn synonyms_touch_only_covered_tokens(t in tokens(), n in 0usize..5, seed: u64) {
        let lex = SynonymLexicon::from_tsv("stark\tbleak,harsh\nfriendly\tkind\n").unwrap();
        let out = synonym_replacement(&t, &lex, n, &mut rng::seeded(seed));
        prop_assert_eq!(out.len(), t.len());
        for (a, b) in t.iter().zip(&out) {
            if lex.synonyms(a).is_none() {
                prop_assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn tokenize_is_idempotent(text in "\\PC{0,40}") {
        let once = tokenize(&text);
        prop_assert_eq!(tokenize(&once.join()), once.clone());
        prop_assert!(once.tokens().iter().all(|t| !t.is_empty()));
    }

    #[test]
    fn mask_then_vectorize_is_bitwise_and(t in tokens(), bits in prop::collection::vec(any::<bool>(), 7)) {
        let vocab = Vocabulary::from_tokens(["a", "b", "c", "wechat", "stark", "friendly"].map(String::from).to_vec(), 1).unwrap();
        let seq = TokenSequence::from_tokens(t);
        let distinct = distinct_in_vocab(&seq, &vocab);
        let mask = InterpretableMask::new(bits[..distinct.len()].to_vec());
        let masked = vectorize(&apply_mask(&seq, &vocab, &mask).unwrap(), &vocab);
        let mut expected: Vec<usize> = distinct.iter().zip(mask.bits())
            .filter(|(_, &on)| on)
            .map(|(tok, _)| vocab.index_of(tok).unwrap())
            .collect();
        expected.sort_unstable();
        prop_assert_eq!(masked.active(), expected.as_slice());
    }

    #[test]
    fn corpus_jsonl_round_trips(
        texts in prop::collection::vec("[a-z\",\\\\ ]{0,12}[a-z]", 0..8),
        labels in prop::collection::vec(any::<bool>(), 8),
    ) {
        let records: Vec<SurveyRecord> = texts.iter().enumerate().map(|(i, t)| {
            let mut r = SurveyRecord::new(
                format!("id{i}"),
                t.clone(),
                HoneycombDimension::ALL[i % 6],
                if labels[i] { SatisfactionLabel::Satisfied } else { SatisfactionLabel::Unsatisfied },
            );
            if i % 2 == 0 {
                r.meta = Some(BTreeMap::from([("k".into(), t.clone())]));
            }
            r
        }).collect();
        let c = Corpus::from_records(records).unwrap();
        prop_assert_eq!(Corpus::from_jsonl(&c.to_jsonl()).unwrap(), c);
    }

    #[test]
    fn split_is_a_partition(n in 4usize..60, frac in 0.05f64..0.95, seed: u64) {
        let records = (0..n).map(|i| SurveyRecord::new(
            format!("r{i}"), "text", HoneycombDimension::Findability,
            SatisfactionLabel::from_index(i % 2).unwrap(),
        )).collect();
        let c = Corpus::from_records(records).unwrap();
        let (train, test) = split_stratified(&c, frac, seed).unwrap();
        prop_assert_eq!(train.len() + test.len(), n);
        for r in &c {
            prop_assert!(train.get(&r.id).is_some() != test.get(&r.id).is_some());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forest_probabilities_normalized(active in prop::collection::vec(0usize..12, 0..12)) {
        let vocab = Vocabulary::from_tokens((0..12).map(|i| format!("t{i}")).collect(), 1).unwrap();
        let mut s = rng::seeded(5);
        use rand::Rng;
        let x: Vec<FeatureVector> = (0..40)
            .map(|_| FeatureVector::new((0..12).filter(|_| s.random_bool(0.3)).collect(), 12).unwrap())
            .collect();
        let y: Vec<SatisfactionLabel> = x.iter()
            .map(|v| SatisfactionLabel::from_index(usize::from(v.contains(0) || v.contains(5))).unwrap())
            .collect();
        let model = train_forest(&x, &y, vocab, &ForestConfig { n_trees: 9, seed: 2, ..Default::default() }).unwrap();
        let p = model.predict_proba(&FeatureVector::new(active, 12).unwrap()).unwrap();
        prop_assert!((p.satisfied + p.unsatisfied - 1.0).abs() <= 1e-9);
        prop_assert!((0.0..=1.0).contains(&p.satisfied));
    }
}
