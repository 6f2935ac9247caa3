//! Text augmentation: synonym replacement, random insertion, random swap and
//! random deletion.
//!
//! The four operators are pure functions of their input, parameters and the
//! state of the supplied stream. [`augment_corpus`] derives one stream per
//! (record, method) so results do not depend on processing order.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::{index, IndexedRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, SurveyRecord};
use crate::error::{Error, Result};
use crate::rng;
use crate::vectorize::tokenize;

/// Head word to synonyms. Loaded from a TSV file: `word<TAB>syn1,syn2,...`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymLexicon {
    entries: BTreeMap<String, Vec<String>>,
}

impl SynonymLexicon {
    pub fn new(entries: BTreeMap<String, Vec<String>>) -> Result<Self> {
        for (head, syns) in &entries {
            if syns.is_empty() {
                return Err(Error::config(
                    "lexicon",
                    format!("{head:?} has no synonyms"),
                ));
            }
            if syns.len() == 1 && syns[0] == *head {
                return Err(Error::config(
                    "lexicon",
                    format!("{head:?} lists itself as its only synonym"),
                ));
            }
        }
        Ok(Self { entries })
    }

    pub fn from_tsv(content: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in content.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: i + 1,
                message,
            };
            let (head, rest) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected `word<TAB>syn1,syn2,...`".into()))?;
            let head = head.trim().to_lowercase();
            if head.is_empty() {
                return Err(parse_err("empty head word".into()));
            }
            let syns: Vec<String> = rest
                .split(',')
                .map(|s| s.trim().to_lowercase())
                .filter(|s| !s.is_empty())
                .collect();
            if syns.is_empty() {
                return Err(parse_err(format!("{head:?} has no synonyms")));
            }
            if syns.len() == 1 && syns[0] == head {
                return Err(parse_err(format!(
                    "{head:?} lists itself as its only synonym"
                )));
            }
            if entries.insert(head.clone(), syns).is_some() {
                return Err(parse_err(format!("{head:?} appears twice")));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(&content)
    }

    pub fn synonyms(&self, token: &str) -> Option<&[String]> {
        self.entries.get(token).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub n_synonym_ops: usize,
    pub n_insert_ops: usize,
    pub n_swap_ops: usize,
    pub p_delete: f64,
    pub variants_per_method: usize,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            n_synonym_ops: 1,
            n_insert_ops: 1,
            n_swap_ops: 1,
            p_delete: 0.1,
            variants_per_method: 1,
            seed: 0,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_delete) {
            return Err(Error::config(
                "p_delete",
                format!("must lie in [0, 1], got {}", self.p_delete),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    SynonymReplacement,
    RandomInsertion,
    RandomSwap,
    RandomDeletion,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::SynonymReplacement,
        Method::RandomInsertion,
        Method::RandomSwap,
        Method::RandomDeletion,
    ];

    /// Short tag used in variant ids and stream keys.
    pub fn tag(self) -> &'static str {
        match self {
            Method::SynonymReplacement => "sr",
            Method::RandomInsertion => "ri",
            Method::RandomSwap => "rs",
            Method::RandomDeletion => "rd",
        }
    }
}

/// Replace up to `n` lexicon-covered positions, chosen uniformly without
/// replacement, each with a uniformly chosen synonym.
pub fn synonym_replacement<R: Rng + ?Sized>(
    tokens: &[String],
    lexicon: &SynonymLexicon,
    n: usize,
    rng: &mut R,
) -> Vec<String> {
    let mut out = tokens.to_vec();
    let covered: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| lexicon.synonyms(t).is_some())
        .map(|(i, _)| i)
        .collect();
    let k = n.min(covered.len());
    if k == 0 {
        return out;
    }
    for pick in index::sample(rng, covered.len(), k) {
        let pos = covered[pick];
        let syns = lexicon.synonyms(&tokens[pos]).expect("covered position");
        out[pos] = syns.choose(rng).expect("non-empty synonym list").clone();
    }
    out
}

/// Insert `n` copies of uniformly chosen existing tokens at uniform positions.
pub fn random_insertion<R: Rng + ?Sized>(tokens: &[String], n: usize, rng: &mut R) -> Vec<String> {
    let mut out = tokens.to_vec();
    if out.is_empty() {
        return out;
    }
    for _ in 0..n {
        let word = out[rng.random_range(0..out.len())].clone();
        let at = rng.random_range(0..=out.len());
        out.insert(at, word);
    }
    out
}

/// Apply `n` swaps of two distinct uniformly chosen positions. No-op below two
/// tokens.
pub fn random_swap<R: Rng + ?Sized>(tokens: &[String], n: usize, rng: &mut R) -> Vec<String> {
    let mut out = tokens.to_vec();
    let len = out.len();
    if len < 2 {
        return out;
    }
    for _ in 0..n {
        let i = rng.random_range(0..len);
        let mut j = rng.random_range(0..len - 1);
        if j >= i {
            j += 1;
        }
        out.swap(i, j);
    }
    out
}

/// Drop each token independently with probability `p`. If every token would be
/// dropped, one uniformly chosen token survives.
pub fn random_deletion<R: Rng + ?Sized>(tokens: &[String], p: f64, rng: &mut R) -> Vec<String> {
    if tokens.is_empty() {
        return Vec::new();
    }
    let out: Vec<String> = tokens
        .iter()
        .filter(|_| rng.random::<f64>() >= p)
        .cloned()
        .collect();
    if out.is_empty() {
        vec![tokens[rng.random_range(0..tokens.len())].clone()]
    } else {
        out
    }
}

/// Originals plus `variants_per_method` variants per method and record. Each
/// original is followed by its variants; variant ids are
/// `<source id>#<method tag><k>`. Records whose text has no tokens get no
/// variants. Fails only if a variant id collides with an existing id.
pub fn augment_corpus(c: &Corpus, lexicon: &SynonymLexicon, cfg: &AugmentConfig) -> Result<Corpus> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(c.len() * (1 + 4 * cfg.variants_per_method));
    for record in c {
        out.push(record.clone());
        let tokens = tokenize(&record.text).into_inner();
        if tokens.is_empty() {
            continue;
        }
        for method in Method::ALL {
            let mut s = rng::stream(cfg.seed, &["augment", &record.id, method.tag()]);
            for k in 0..cfg.variants_per_method {
                let variant = match method {
                    Method::SynonymReplacement => {
                        synonym_replacement(&tokens, lexicon, cfg.n_synonym_ops, &mut s)
                    }
                    Method::RandomInsertion => random_insertion(&tokens, cfg.n_insert_ops, &mut s),
                    Method::RandomSwap => random_swap(&tokens, cfg.n_swap_ops, &mut s),
                    Method::RandomDeletion => random_deletion(&tokens, cfg.p_delete, &mut s),
                };
                out.push(SurveyRecord {
                    id: format!("{}#{}{}", record.id, method.tag(), k),
                    text: variant.join(" "),
                    dimension: record.dimension,
                    label: record.label,
                    meta: record.meta.clone(),
                });
            }
        }
    }
    Corpus::from_records(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{HoneycombDimension, SatisfactionLabel};

    fn words(ws: &[&str]) -> Vec<String> {
        ws.iter().map(|w| w.to_string()).collect()
    }

    fn sorted(mut v: Vec<String>) -> Vec<String> {
        v.sort();
        v
    }

    #[test]
    fn lexicon_tsv_parsing() {
        let lex =
            SynonymLexicon::from_tsv("# comment\n\nstark\tbleak, harsh\nFriendly\tkind\n").unwrap();
        assert_eq!(lex.synonyms("stark").unwrap(), ["bleak", "harsh"]);
        assert_eq!(lex.synonyms("friendly").unwrap(), ["kind"]);
        assert!(SynonymLexicon::from_tsv("stark\t\n").is_err());
        assert!(SynonymLexicon::from_tsv("stark bleak\n").is_err());
        match SynonymLexicon::from_tsv("a\tb\nx\tx\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(SynonymLexicon::new(BTreeMap::from([("a".into(), vec![])])).is_err());
    }

    #[test]
    fn synonym_single_candidate() {
        let lex = SynonymLexicon::from_tsv("stark\tbleak\n").unwrap();
        let mut s = rng::seeded(0);
        let out = synonym_replacement(&words(&["interface", "is", "stark"]), &lex, 1, &mut s);
        assert_eq!(out, words(&["interface", "is", "bleak"]));
    }

    #[test]
    fn synonym_noops() {
        let t = words(&["interface", "is", "stark"]);
        let mut s = rng::seeded(0);
        assert_eq!(
            synonym_replacement(&t, &SynonymLexicon::default(), 3, &mut s),
            t
        );
        let lex = SynonymLexicon::from_tsv("stark\tbleak\n").unwrap();
        assert_eq!(synonym_replacement(&t, &lex, 0, &mut s), t);
    }

    #[test]
    fn synonym_touches_at_most_n_covered_positions() {
        let lex = SynonymLexicon::from_tsv("a\tx,y\nb\tz\n").unwrap();
        let t = words(&["a", "q", "b", "a", "r"]);
        for seed in 0..50 {
            let out = synonym_replacement(&t, &lex, 2, &mut rng::seeded(seed));
            assert_eq!(out.len(), t.len());
            let changed: Vec<usize> = (0..t.len()).filter(|&i| out[i] != t[i]).collect();
            assert!(changed.len() <= 2);
            for i in changed {
                assert!(lex.synonyms(&t[i]).unwrap().contains(&out[i]));
            }
        }
    }

    #[test]
    fn insertion_cases() {
        let mut s = rng::seeded(0);
        assert_eq!(
            random_insertion(&words(&["friendly"]), 1, &mut s),
            words(&["friendly", "friendly"])
        );
        let t = words(&["a", "b", "c", "d", "e"]);
        assert_eq!(random_insertion(&t, 0, &mut s), t);
    }

    #[test]
    fn insertion_multiset_superset_seed_7() {
        let t = words(&["the", "interface", "is", "stark", "today"]);
        let out = random_insertion(&t, 3, &mut rng::seeded(7));
        assert_eq!(out.len(), 8);
        let mut remaining = out.clone();
        for w in &t {
            let pos = remaining
                .iter()
                .position(|x| x == w)
                .expect("input token kept");
            remaining.swap_remove(pos);
        }
        assert!(remaining.iter().all(|w| t.contains(w)));
    }

    #[test]
    fn swap_cases() {
        let mut s = rng::seeded(0);
        assert_eq!(
            random_swap(&words(&["a", "b"]), 1, &mut s),
            words(&["b", "a"])
        );
        assert_eq!(random_swap(&words(&["a"]), 5, &mut s), words(&["a"]));
        let t = words(&["x", "y", "z", "x"]);
        assert_eq!(sorted(random_swap(&t, 7, &mut s)), sorted(t));
    }

    #[test]
    fn deletion_extremes() {
        let t = words(&["a", "b", "c"]);
        let mut s = rng::seeded(4);
        assert_eq!(random_deletion(&t, 0.0, &mut s), t);
        for _ in 0..20 {
            let out = random_deletion(&t, 1.0, &mut s);
            assert_eq!(out.len(), 1);
            assert!(t.contains(&out[0]));
        }
    }

    #[test]
    fn deletion_mean_length() {
        let t: Vec<String> = (0..10).map(|i| format!("w{i}")).collect();
        let mut s = rng::seeded(2024);
        let trials = 10_000;
        let total: usize = (0..trials)
            .map(|_| random_deletion(&t, 0.3, &mut s).len())
            .sum();
        let mean = total as f64 / trials as f64;
        assert!((mean - 7.0).abs() <= 0.1, "mean {mean}");
    }

    fn small_corpus() -> Corpus {
        let recs = (0..10)
            .map(|i| {
                SurveyRecord::new(
                    format!("r{i}"),
                    "The interface is stark but friendly",
                    HoneycombDimension::Credibility,
                    SatisfactionLabel::from_index(i % 2).unwrap(),
                )
            })
            .collect();
        Corpus::from_records(recs).unwrap()
    }

    #[test]
    fn augment_counts_identity_and_determinism() {
        let c = small_corpus();
        let lex = SynonymLexicon::from_tsv("stark\tbleak\n").unwrap();
        let cfg = AugmentConfig {
            seed: 9,
            ..AugmentConfig::default()
        };
        let out = augment_corpus(&c, &lex, &cfg).unwrap();
        assert_eq!(out.len(), 50);
        assert_eq!(
            out.to_jsonl(),
            augment_corpus(&c, &lex, &cfg).unwrap().to_jsonl()
        );
        for r in &out {
            let src_id = r.id.split('#').next().unwrap();
            let src = c.get(src_id).unwrap();
            assert_eq!((r.dimension, r.label), (src.dimension, src.label));
        }
        assert_eq!(out.records()[1].id, "r0#sr0");
        assert!(out.records()[1].text.contains("bleak"));

        let none = AugmentConfig {
            variants_per_method: 0,
            ..cfg
        };
        assert_eq!(augment_corpus(&c, &lex, &none).unwrap(), c);
    }

    #[test]
    fn augment_rejects_bad_probability() {
        let cfg = AugmentConfig {
            p_delete: 1.5,
            ..AugmentConfig::default()
        };
        assert!(augment_corpus(&small_corpus(), &SynonymLexicon::default(), &cfg).is_err());
    }
}
