//! Per-dimension reports: keyword rankings, word-cloud data, per-word SHAP
//! distributions and sample explanations, rendered as JSON and SVG.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::anchor::AnchorResult;
use crate::corpus::{Corpus, HoneycombDimension, SatisfactionLabel};
use crate::error::{Error, Result};
use crate::forest::EvaluationMetrics;
use crate::lime::LimeExplanation;
use crate::shap::{GlobalShapSummary, ShapExplanation};
use crate::vectorize::tokenize;

pub const REPORT_VERSION: u32 = 1;

/// One explanation line as stored in explanation JSONL files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Explanation {
    Lime(LimeExplanation),
    Shap(ShapExplanation),
    Anchor(AnchorResult),
}

impl Explanation {
    pub fn id(&self) -> &str {
        match self {
            Explanation::Lime(e) => &e.id,
            Explanation::Shap(e) => &e.id,
            Explanation::Anchor(e) => &e.id,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("explanations always serialize")
    }

    pub fn from_json(line: &str) -> Result<Self> {
        Ok(serde_json::from_str(line)?)
    }
}

/// Parse a JSONL file of explanations.
pub fn parse_explanations(content: &str) -> Result<Vec<Explanation>> {
    content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            Explanation::from_json(l).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassTag {
    Satisfied,
    Unsatisfied,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordCloudDatum {
    pub token: String,
    pub weight: f64,
    pub class_tag: ClassTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WordCloudMode {
    Frequency,
    Shap,
}

impl WordCloudMode {
    pub fn as_str(self) -> &'static str {
        match self {
            WordCloudMode::Frequency => "frequency",
            WordCloudMode::Shap => "shap",
        }
    }
}

fn rank_desc<T>(items: &mut [T], key: impl Fn(&T) -> (f64, &str)) {
    items.sort_by(|a, b| {
        let (wa, ta) = key(a);
        let (wb, tb) = key(b);
        wb.total_cmp(&wa).then_with(|| ta.cmp(tb))
    });
}

/// Document frequency of each token among the dimension's records. Tokens seen
/// only in satisfied (unsatisfied) records are tagged accordingly.
pub fn word_cloud_frequency(
    c: &Corpus,
    dimension: HoneycombDimension,
    top_n: usize,
) -> Vec<WordCloudDatum> {
    let mut df: BTreeMap<String, (usize, [bool; 2])> = BTreeMap::new();
    for r in c.iter().filter(|r| r.dimension == dimension) {
        let distinct: HashSet<String> = tokenize(&r.text).into_inner().into_iter().collect();
        for t in distinct {
            let e = df.entry(t).or_default();
            e.0 += 1;
            e.1[r.label.as_index()] = true;
        }
    }
    let mut out: Vec<WordCloudDatum> = df
        .into_iter()
        .map(|(token, (n, seen))| WordCloudDatum {
            token,
            weight: n as f64,
            class_tag: match seen {
                [false, true] => ClassTag::Satisfied,
                [true, false] => ClassTag::Unsatisfied,
                _ => ClassTag::Both,
            },
        })
        .collect();
    rank_desc(&mut out, |d| (d.weight, &d.token));
    out.truncate(top_n);
    out
}

/// Mean `|phi|` per token, tagged by the sign of the mean attribution.
pub fn word_cloud_shap(summary: &GlobalShapSummary, top_n: usize) -> Vec<WordCloudDatum> {
    let mut out: Vec<WordCloudDatum> = summary
        .tokens
        .iter()
        .map(|t| WordCloudDatum {
            token: t.token.clone(),
            weight: t.mean_abs_phi,
            class_tag: if t.mean_phi > 0.0 {
                ClassTag::Satisfied
            } else if t.mean_phi < 0.0 {
                ClassTag::Unsatisfied
            } else {
                ClassTag::Both
            },
        })
        .collect();
    rank_desc(&mut out, |d| (d.weight, &d.token));
    out.truncate(top_n);
    out
}

/// `(phi, fx)` for each explanation that attributes `token`, input order.
pub fn shap_distribution(token: &str, explanations: &[ShapExplanation]) -> Vec<(f64, f64)> {
    explanations
        .iter()
        .filter_map(|e| e.phi_of(token).map(|phi| (phi, e.fx)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordEntry {
    pub token: String,
    pub mean_abs_phi: f64,
    pub mean_phi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WordClouds {
    pub frequency: Vec<WordCloudDatum>,
    pub shap: Vec<WordCloudDatum>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleExplanations {
    pub id: String,
    pub p_satisfied: f64,
    pub lime: Option<LimeExplanation>,
    pub anchor: Option<AnchorResult>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Samples {
    pub positive: Option<SampleExplanations>,
    pub negative: Option<SampleExplanations>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub version: u32,
    pub dimension: HoneycombDimension,
    pub metrics: Option<EvaluationMetrics>,
    pub keywords: Vec<KeywordEntry>,
    pub word_cloud: WordClouds,
    /// Per-word `(phi, fx)` pairs for the listed keywords.
    pub distributions: BTreeMap<String, Vec<(f64, f64)>>,
    pub samples: Samples,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportOptions {
    pub top_keywords: usize,
    pub word_cloud_size: usize,
    /// Extra tokens whose SHAP distributions are always included.
    pub distribution_tokens: Vec<String>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            top_keywords: 10,
            word_cloud_size: 30,
            distribution_tokens: vec!["guangdong".into(), "wechat".into()],
        }
    }
}

impl ReportOptions {
    pub fn validate(&self) -> Result<()> {
        if self.top_keywords == 0 {
            return Err(Error::config("top_keywords", "must be at least 1"));
        }
        if self.word_cloud_size == 0 {
            return Err(Error::config("word_cloud_size", "must be at least 1"));
        }
        Ok(())
    }
}

/// Inputs for one dimension's report.
pub struct ReportInputs<'a> {
    pub dimension: HoneycombDimension,
    pub metrics: Option<EvaluationMetrics>,
    /// Records whose document frequencies feed the frequency word cloud.
    pub corpus: &'a Corpus,
    pub shap: &'a [ShapExplanation],
    pub lime: &'a [LimeExplanation],
    pub anchors: &'a [AnchorResult],
}

pub fn build_report(inputs: &ReportInputs<'_>, opts: &ReportOptions) -> DimensionReport {
    let summary = crate::shap::aggregate_global(inputs.shap);
    let keywords: Vec<KeywordEntry> = summary
        .tokens
        .iter()
        .take(opts.top_keywords)
        .map(|t| KeywordEntry {
            token: t.token.clone(),
            mean_abs_phi: t.mean_abs_phi,
            mean_phi: t.mean_phi,
            count: t.count,
        })
        .collect();

    let mut distributions = BTreeMap::new();
    for token in keywords
        .iter()
        .map(|k| k.token.as_str())
        .chain(opts.distribution_tokens.iter().map(String::as_str))
    {
        let d = shap_distribution(token, inputs.shap);
        if !d.is_empty() {
            distributions.insert(token.to_string(), d);
        }
    }

    let sample = |e: &ShapExplanation| SampleExplanations {
        id: e.id.clone(),
        p_satisfied: e.fx,
        lime: inputs.lime.iter().find(|l| l.id == e.id).cloned(),
        anchor: inputs.anchors.iter().find(|a| a.id == e.id).cloned(),
    };
    // first occurrence wins on equal confidence
    let most = |pick_positive: bool| {
        inputs
            .shap
            .iter()
            .filter(|e| {
                let label = crate::model::Probabilities::from_satisfied(e.fx).label();
                (label == SatisfactionLabel::Satisfied) == pick_positive
            })
            .fold(None::<&ShapExplanation>, |best, e| match best {
                Some(b) if (pick_positive && e.fx <= b.fx) || (!pick_positive && e.fx >= b.fx) => {
                    Some(b)
                }
                _ => Some(e),
            })
            .map(sample)
    };

    DimensionReport {
        version: REPORT_VERSION,
        dimension: inputs.dimension,
        metrics: inputs.metrics.clone(),
        keywords,
        word_cloud: WordClouds {
            frequency: word_cloud_frequency(inputs.corpus, inputs.dimension, opts.word_cloud_size),
            shap: word_cloud_shap(&summary, opts.word_cloud_size),
        },
        distributions,
        samples: Samples {
            positive: most(true),
            negative: most(false),
        },
    }
}

impl DimensionReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(json)?;
        if r.version != REPORT_VERSION {
            return Err(Error::Model(format!(
                "unsupported report version {}",
                r.version
            )));
        }
        Ok(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Svg,
}

const SVG_COLUMNS: usize = 4;
const CELL_W: f64 = 240.0;
const CELL_H: f64 = 72.0;
const MIN_FONT: f64 = 12.0;
const MAX_FONT: f64 = 48.0;

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Grid word cloud: row-major by rank, font size linear in weight from 12 at
/// the smallest weight to 48 at the largest (48 throughout if all are equal).
pub fn word_cloud_svg(data: &[WordCloudDatum], title: &str) -> String {
    let rows = data.len().div_ceil(SVG_COLUMNS).max(1);
    let width = CELL_W * SVG_COLUMNS as f64;
    let height = CELL_H * rows as f64 + 40.0;
    let (lo, hi) = data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
            (lo.min(d.weight), hi.max(d.weight))
        });
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(svg, "<title>{}</title>", xml_escape(title));
    let _ = writeln!(
        svg,
        r##"<rect width="100%" height="100%" fill="#ffffff"/>"##
    );
    for (rank, d) in data.iter().enumerate() {
        let size = if hi > lo {
            MIN_FONT + (MAX_FONT - MIN_FONT) * (d.weight - lo) / (hi - lo)
        } else {
            MAX_FONT
        };
        let x = CELL_W * (rank % SVG_COLUMNS) as f64 + CELL_W / 2.0;
        let y = 40.0 + CELL_H * (rank / SVG_COLUMNS) as f64 + CELL_H / 2.0;
        let fill = match d.class_tag {
            ClassTag::Satisfied => "#2e7d32",
            ClassTag::Unsatisfied => "#c62828",
            ClassTag::Both => "#546e7a",
        };
        let _ = writeln!(
            svg,
            r#"<text x="{x:.1}" y="{y:.1}" font-size="{size:.2}" fill="{fill}" text-anchor="middle" dominant-baseline="middle" font-family="sans-serif">{}</text>"#,
            xml_escape(&d.token)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Write `<Dimension>.json` and, for each non-empty word cloud,
/// `<Dimension>_wordcloud_<mode>.svg` into `out_dir`. Returns the written paths.
pub fn render(
    report: &DimensionReport,
    out_dir: &Path,
    formats: &[Format],
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    let dim = report.dimension.as_str();
    if formats.contains(&Format::Json) {
        let path = out_dir.join(format!("{dim}.json"));
        std::fs::write(&path, report.to_json()).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    if formats.contains(&Format::Svg) {
        for (mode, data) in [
            (WordCloudMode::Frequency, &report.word_cloud.frequency),
            (WordCloudMode::Shap, &report.word_cloud.shap),
        ] {
            if data.is_empty() {
                continue;
            }
            let path = out_dir.join(format!("{dim}_wordcloud_{}.svg", mode.as_str()));
            let title = format!("{dim} word cloud ({})", mode.as_str());
            std::fs::write(&path, word_cloud_svg(data, &title)).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}
