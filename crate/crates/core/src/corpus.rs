//! Annotated survey responses: data model, JSONL ingestion, stratified
//! splitting and a deterministic synthetic corpus.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rng;

/// The six User Experience Honeycomb facets used for annotation. The seventh
/// facet, Value, is deliberately not part of the scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HoneycombDimension {
    Usability,
    Usefulness,
    Desirability,
    Findability,
    Accessibility,
    Credibility,
}

impl HoneycombDimension {
    pub const ALL: [HoneycombDimension; 6] = [
        HoneycombDimension::Usability,
        HoneycombDimension::Usefulness,
        HoneycombDimension::Desirability,
        HoneycombDimension::Findability,
        HoneycombDimension::Accessibility,
        HoneycombDimension::Credibility,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HoneycombDimension::Usability => "Usability",
            HoneycombDimension::Usefulness => "Usefulness",
            HoneycombDimension::Desirability => "Desirability",
            HoneycombDimension::Findability => "Findability",
            HoneycombDimension::Accessibility => "Accessibility",
            HoneycombDimension::Credibility => "Credibility",
        }
    }
}

impl fmt::Display for HoneycombDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HoneycombDimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| Error::UnknownDimension(s.to_string()))
    }
}

impl Serialize for HoneycombDimension {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for HoneycombDimension {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Binary ground truth, encoded `1` (satisfied) / `0` (unsatisfied).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SatisfactionLabel {
    Unsatisfied,
    Satisfied,
}

impl SatisfactionLabel {
    pub fn as_index(self) -> usize {
        match self {
            SatisfactionLabel::Unsatisfied => 0,
            SatisfactionLabel::Satisfied => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(SatisfactionLabel::Unsatisfied),
            1 => Some(SatisfactionLabel::Satisfied),
            _ => None,
        }
    }
}

impl fmt::Display for SatisfactionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SatisfactionLabel::Unsatisfied => "Unsatisfied",
            SatisfactionLabel::Satisfied => "Satisfied",
        })
    }
}

impl Serialize for SatisfactionLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.as_index() as u8)
    }
}

impl<'de> Deserialize<'de> for SatisfactionLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = u64::deserialize(d)?;
        SatisfactionLabel::from_index(v as usize)
            .filter(|_| v <= 1)
            .ok_or_else(|| serde::de::Error::custom(format!("label must be 0 or 1, got {v}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyRecord {
    pub id: String,
    pub text: String,
    pub dimension: HoneycombDimension,
    pub label: SatisfactionLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<BTreeMap<String, String>>,
}

impl SurveyRecord {
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        dimension: HoneycombDimension,
        label: SatisfactionLabel,
    ) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            dimension,
            label,
            meta: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::InvalidRecord {
                id: self.id.clone(),
                reason: "id is empty".into(),
            });
        }
        if self.text.trim().is_empty() {
            return Err(Error::InvalidRecord {
                id: self.id.clone(),
                reason: "text is empty".into(),
            });
        }
        Ok(())
    }
}

/// Ordered collection of records with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    records: Vec<SurveyRecord>,
}

impl Corpus {
    pub fn from_records(records: Vec<SurveyRecord>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            r.validate()?;
            if !seen.insert(r.id.as_str()) {
                return Err(Error::DuplicateId(r.id.clone()));
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[SurveyRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SurveyRecord> {
        self.records.iter()
    }

    pub fn get(&self, id: &str) -> Option<&SurveyRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Records of one dimension, in corpus order.
    pub fn filter_dimension(&self, dimension: HoneycombDimension) -> Corpus {
        Corpus {
            records: self
                .records
                .iter()
                .filter(|r| r.dimension == dimension)
                .cloned()
                .collect(),
        }
    }

    pub fn into_records(self) -> Vec<SurveyRecord> {
        self.records
    }

    /// Parse JSONL content. Blank lines are skipped; line numbers in errors are
    /// 1-based.
    pub fn from_jsonl(content: &str) -> Result<Self> {
        let mut records = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in content.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let record = parse_line(line).map_err(|e| match e {
                Error::UnknownDimension(d) => Error::Parse {
                    line: line_no,
                    message: format!("unknown dimension {d:?}"),
                },
                other => Error::Parse {
                    line: line_no,
                    message: other.to_string(),
                },
            })?;
            if !seen.insert(record.id.clone()) {
                return Err(Error::Parse {
                    line: line_no,
                    message: Error::DuplicateId(record.id).to_string(),
                });
            }
            records.push(record);
        }
        Ok(Self { records })
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records always serialize"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_jsonl()).map_err(|e| Error::io(path, e))
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a SurveyRecord;
    type IntoIter = std::slice::Iter<'a, SurveyRecord>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    text: String,
    dimension: String,
    label: serde_json::Value,
    #[serde(default)]
    meta: Option<BTreeMap<String, String>>,
}

fn parse_line(line: &str) -> Result<SurveyRecord> {
    let raw: RawRecord = serde_json::from_str(line)?;
    let dimension = raw.dimension.parse()?;
    let label = match raw.label.as_u64() {
        Some(0) => SatisfactionLabel::Unsatisfied,
        Some(1) => SatisfactionLabel::Satisfied,
        _ => {
            return Err(Error::InvalidRecord {
                id: raw.id,
                reason: format!("label must be 0 or 1, got {}", raw.label),
            })
        }
    };
    let record = SurveyRecord {
        id: raw.id,
        text: raw.text,
        dimension,
        label,
        meta: raw.meta,
    };
    record.validate()?;
    Ok(record)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Corpus::from_jsonl(&content)
}

/// Split into `(train, test)` keeping each (dimension, label) stratum's share of
/// the test split at `round(test_fraction * n)`, clamped so that both sides get
/// at least one record. Both outputs keep the input order.
pub fn split_stratified(c: &Corpus, test_fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::config(
            "test_fraction",
            format!("must lie strictly between 0 and 1, got {test_fraction}"),
        ));
    }
    let mut strata: BTreeMap<(HoneycombDimension, SatisfactionLabel), Vec<usize>> = BTreeMap::new();
    for (i, r) in c.records.iter().enumerate() {
        strata.entry((r.dimension, r.label)).or_default().push(i);
    }

    let mut in_test = vec![false; c.len()];
    for ((dim, label), mut members) in strata {
        let name = format!("{dim}/{}", label.as_index());
        if members.len() < 2 {
            return Err(Error::StratumTooSmall {
                stratum: name,
                count: members.len(),
            });
        }
        let n = members.len();
        let n_test = ((test_fraction * n as f64).round() as usize).clamp(1, n - 1);
        let mut s = rng::stream(seed, &["split", &name]);
        members.shuffle(&mut s);
        for &i in &members[..n_test] {
            in_test[i] = true;
        }
    }

    let (test, train): (Vec<_>, Vec<_>) = c
        .records
        .iter()
        .cloned()
        .zip(in_test)
        .partition(|(_, t)| *t);
    Ok((
        Corpus {
            records: train.into_iter().map(|(r, _)| r).collect(),
        },
        Corpus {
            records: test.into_iter().map(|(r, _)| r).collect(),
        },
    ))
}

/// Keywords that push a synthetic response towards "satisfied".
pub const POSITIVE_KEYWORDS: [&str; 6] = [
    "friendly",
    "cultural",
    "clear",
    "helpful",
    "convenient",
    "reliable",
];

/// Keywords that push a synthetic response towards "unsatisfied".
pub const NEGATIVE_KEYWORDS: [&str; 6] = [
    "interface",
    "platform",
    "stark",
    "skeptical",
    "confusing",
    "slow",
];

/// Filler drawn for both classes.
pub const SHARED_FILLER: [&str; 12] = [
    "guangdong",
    "wechat",
    "province",
    "the",
    "app",
    "health",
    "i",
    "my",
    "it",
    "is",
    "when",
    "using",
];

fn dimension_filler(d: HoneycombDimension) -> [&'static str; 4] {
    match d {
        HoneycombDimension::Usability => ["menu", "button", "steps", "login"],
        HoneycombDimension::Usefulness => ["appointment", "records", "reminder", "medicine"],
        HoneycombDimension::Desirability => ["colors", "design", "look", "style"],
        HoneycombDimension::Findability => ["search", "find", "section", "navigation"],
        HoneycombDimension::Accessibility => ["font", "voice", "cantonese", "text"],
        HoneycombDimension::Credibility => ["information", "privacy", "doctor", "trust"],
    }
}

/// Deterministic stand-in for a private survey corpus.
///
/// Each response holds planted keywords from [`POSITIVE_KEYWORDS`] and
/// [`NEGATIVE_KEYWORDS`] plus 3 to 6 distinct filler tokens. The label is a
/// function of the planted keywords alone: satisfied iff more positive than
/// negative keywords were planted. Labels alternate within each dimension so
/// both classes are balanced. Some responses carry one keyword of the
/// opposite polarity, outweighed by two of their own.
pub fn generate_synthetic(seed: u64, n_per_dimension: usize) -> Result<Corpus> {
    if n_per_dimension < 2 {
        return Err(Error::config(
            "n_per_dimension",
            format!("must be at least 2, got {n_per_dimension}"),
        ));
    }
    let mut records = Vec::with_capacity(6 * n_per_dimension);
    for dim in HoneycombDimension::ALL {
        let mut s = rng::stream(seed, &["synthetic", dim.as_str()]);
        let mut filler_pool: Vec<&str> = SHARED_FILLER.to_vec();
        filler_pool.extend(dimension_filler(dim));
        for i in 0..n_per_dimension {
            let satisfied = i % 2 == 0;
            let (own, other) = if satisfied {
                (&POSITIVE_KEYWORDS, &NEGATIVE_KEYWORDS)
            } else {
                (&NEGATIVE_KEYWORDS, &POSITIVE_KEYWORDS)
            };
            let n_own = if s.random_bool(0.5) { 2 } else { 1 };
            let n_other = usize::from(n_own == 2 && s.random_bool(0.3));
            let mut tokens: Vec<&str> = own.choose_multiple(&mut s, n_own).copied().collect();
            tokens.extend(other.choose_multiple(&mut s, n_other).copied());
            let n_filler = s.random_range(3..=6);
            tokens.extend(filler_pool.choose_multiple(&mut s, n_filler).copied());
            tokens.shuffle(&mut s);

            let (pos, neg) = if satisfied {
                (n_own, n_other)
            } else {
                (n_other, n_own)
            };
            let label = if pos > neg {
                SatisfactionLabel::Satisfied
            } else {
                SatisfactionLabel::Unsatisfied
            };
            debug_assert_eq!(label == SatisfactionLabel::Satisfied, satisfied);

            let mut text = tokens.join(" ");
            text.push('.');
            let mut record = SurveyRecord::new(
                format!("{}-{:04}", dim.as_str().to_lowercase(), i),
                text,
                dim,
                label,
            );
            record.meta = Some(BTreeMap::from([(
                "source".to_string(),
                "synthetic".to_string(),
            )]));
            records.push(record);
        }
    }
    Ok(Corpus { records })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(id: &str, dim: &str, label: u8) -> String {
        format!(
            r#"{{"id":"{id}","text":"the interface is friendly","dimension":"{dim}","label":{label}}}"#
        )
    }

    #[test]
    fn parses_two_lines() {
        let src = format!(
            "{}\n{}\n",
            line("a", "Usability", 1),
            line("b", "Credibility", 0)
        );
        let c = Corpus::from_jsonl(&src).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.records()[1].dimension, HoneycombDimension::Credibility);
        assert_eq!(c.records()[1].label, SatisfactionLabel::Unsatisfied);
    }

    #[test]
    fn empty_file_is_empty_corpus() {
        assert!(Corpus::from_jsonl("").unwrap().is_empty());
    }

    #[test]
    fn value_is_not_a_dimension() {
        let src = format!("{}\n{}\n", line("a", "Usability", 1), line("b", "Value", 1));
        let err = Corpus::from_jsonl(&src).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        assert!(err.contains("unknown dimension"), "{err}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let src = format!("{}\n{{not json\n", line("a", "Usability", 1));
        match Corpus::from_jsonl(&src) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let src = format!(
            "{}\n{}\n",
            line("a", "Usability", 1),
            line("a", "Usability", 0)
        );
        let err = Corpus::from_jsonl(&src).unwrap_err().to_string();
        assert!(err.contains("duplicate"), "{err}");
    }

    #[test]
    fn label_must_be_binary() {
        assert!(Corpus::from_jsonl(&line("a", "Usability", 2)).is_err());
        let src = r#"{"id":"a","text":"x","dimension":"Usability","label":"1"}"#;
        assert!(Corpus::from_jsonl(src).is_err());
    }

    #[test]
    fn blank_text_rejected() {
        let src = r#"{"id":"a","text":"   ","dimension":"Usability","label":1}"#;
        assert!(Corpus::from_jsonl(src).is_err());
    }

    #[test]
    fn dimension_names_are_exact() {
        assert!("usability".parse::<HoneycombDimension>().is_err());
        for d in HoneycombDimension::ALL {
            assert_eq!(d.as_str().parse::<HoneycombDimension>().unwrap(), d);
        }
    }

    #[test]
    fn round_trips_meta() {
        let src = concat!(
            r#"{"id":"a","text":"ok, \"quoted\"","dimension":"Findability","label":0,"meta":{"age":"71"}}"#,
            "\n",
            r#"{"id":"b","text":"fine","dimension":"Usability","label":1}"#,
            "\n"
        );
        let c = Corpus::from_jsonl(src).unwrap();
        assert_eq!(c.to_jsonl(), src);
    }

    fn balanced(n: usize) -> Corpus {
        let records = (0..n)
            .map(|i| {
                let label = SatisfactionLabel::from_index(i % 2).unwrap();
                SurveyRecord::new(
                    format!("r{i}"),
                    "some text",
                    HoneycombDimension::Usability,
                    label,
                )
            })
            .collect();
        Corpus::from_records(records).unwrap()
    }

    #[test]
    fn split_keeps_label_proportions() {
        let c = balanced(100);
        let (train, test) = split_stratified(&c, 0.2, 3).unwrap();
        assert_eq!(train.len(), 80);
        assert_eq!(test.len(), 20);
        let sat = test
            .iter()
            .filter(|r| r.label == SatisfactionLabel::Satisfied)
            .count();
        assert_eq!(sat, 10);
    }

    #[test]
    fn split_is_a_deterministic_partition() {
        let c = balanced(37);
        let a = split_stratified(&c, 0.3, 11).unwrap();
        let b = split_stratified(&c, 0.3, 11).unwrap();
        assert_eq!(a.0.to_jsonl(), b.0.to_jsonl());
        assert_eq!(a.1.to_jsonl(), b.1.to_jsonl());
        let mut ids: Vec<_> = a.0.iter().chain(a.1.iter()).map(|r| r.id.clone()).collect();
        ids.sort();
        let mut all: Vec<_> = c.iter().map(|r| r.id.clone()).collect();
        all.sort();
        assert_eq!(ids, all);
    }

    #[test]
    fn split_rejects_bad_fraction_and_tiny_strata() {
        let c = balanced(10);
        assert!(split_stratified(&c, 0.0, 1).is_err());
        assert!(split_stratified(&c, 1.0, 1).is_err());
        let tiny = balanced(3);
        match split_stratified(&tiny, 0.5, 1) {
            Err(Error::StratumTooSmall { stratum, count }) => {
                assert_eq!(stratum, "Usability/1");
                assert_eq!(count, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn synthetic_counts_and_determinism() {
        let a = generate_synthetic(1, 10).unwrap();
        assert_eq!(a.len(), 60);
        for d in HoneycombDimension::ALL {
            assert_eq!(a.filter_dimension(d).len(), 10);
        }
        assert_eq!(a, generate_synthetic(1, 10).unwrap());
        assert_ne!(a, generate_synthetic(2, 10).unwrap());
        assert!(generate_synthetic(1, 1).is_err());
    }

    #[test]
    fn synthetic_labels_follow_planted_keywords() {
        let c = generate_synthetic(5, 50).unwrap();
        let mut saw_guangdong = [false; 2];
        for r in &c {
            let words: Vec<&str> = r.text.trim_end_matches('.').split(' ').collect();
            let pos = words
                .iter()
                .filter(|w| POSITIVE_KEYWORDS.contains(w))
                .count();
            let neg = words
                .iter()
                .filter(|w| NEGATIVE_KEYWORDS.contains(w))
                .count();
            assert!(pos + neg >= 1);
            assert_eq!(
                r.label == SatisfactionLabel::Satisfied,
                pos > neg,
                "{}",
                r.text
            );
            if words.contains(&"guangdong") {
                saw_guangdong[r.label.as_index()] = true;
            }
        }
        assert_eq!(saw_guangdong, [true, true]);
    }
}
