//! The subcommands as library functions. Every command reads its inputs from
//! the configured paths or from earlier outputs under the output directory,
//! and writes only below the output directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use honeycomb_xai::anchor::{find_anchor, AnchorConfig};
use honeycomb_xai::augment::{augment_corpus, AugmentConfig, SynonymLexicon};
use honeycomb_xai::corpus::{
    generate_synthetic, load_corpus, split_stratified, Corpus, HoneycombDimension, SurveyRecord,
};
use honeycomb_xai::forest::{
    featurize, train_forest, EvaluationMetrics, ForestConfig, RandomForestModel,
};
use honeycomb_xai::lime::{explain_lime, LimeConfig};
use honeycomb_xai::report::{
    build_report, parse_explanations, render, Explanation, Format, ReportInputs,
};
use honeycomb_xai::rng::derive_seed;
use honeycomb_xai::shap::{explain_shap, ShapConfig};
use honeycomb_xai::vectorize::build_vocabulary;
use honeycomb_xai::Error;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// File locations under the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn corpus(&self) -> PathBuf {
        self.root.join("corpus.jsonl")
    }

    pub fn train_split(&self) -> PathBuf {
        self.root.join("split").join("train.jsonl")
    }

    pub fn test_split(&self) -> PathBuf {
        self.root.join("split").join("test.jsonl")
    }

    pub fn augmented(&self) -> PathBuf {
        self.root.join("augmented_train.jsonl")
    }

    pub fn model(&self, d: HoneycombDimension) -> PathBuf {
        self.root.join("models").join(format!("{d}.json"))
    }

    pub fn metrics(&self) -> PathBuf {
        self.root.join("models").join("metrics.json")
    }

    pub fn explanations(&self, d: HoneycombDimension, method: ExplainMethod) -> PathBuf {
        self.root
            .join("explanations")
            .join(d.as_str())
            .join(format!("{}.jsonl", method.as_str()))
    }

    pub fn reports(&self) -> PathBuf {
        self.root.join("reports")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExplainMethod {
    Lime,
    Shap,
    Anchor,
}

impl ExplainMethod {
    pub const ALL: [ExplainMethod; 3] = [
        ExplainMethod::Lime,
        ExplainMethod::Shap,
        ExplainMethod::Anchor,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExplainMethod::Lime => "lime",
            ExplainMethod::Shap => "shap",
            ExplainMethod::Anchor => "anchor",
        }
    }
}

/// Which records `explain` covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selection {
    AllTest,
    Ids(Vec<String>),
}

fn write(path: &Path, content: &str) -> Result<()> {
    let io = |e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    std::fs::write(path, content).map_err(io)?;
    Ok(())
}

fn require(path: PathBuf, hint: &'static str) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(CliError::Missing { path, hint })
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data always serializes");
    s.push('\n');
    s
}

#[cfg(feature = "parallel")]
fn map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    items.iter().map(f).collect()
}

fn layout(cfg: &RunConfig) -> Layout {
    Layout::new(&cfg.paths.out)
}

/// The corpus the pipeline starts from.
pub fn source_corpus(cfg: &RunConfig) -> Result<Corpus> {
    let path = match &cfg.paths.corpus {
        Some(p) => require(p.clone(), "check paths.corpus")?,
        None => require(
            layout(cfg).corpus(),
            "run `hcx generate` first or set paths.corpus",
        )?,
    };
    Ok(load_corpus(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusSummary {
    pub records: usize,
    /// `[unsatisfied, satisfied]` counts per dimension.
    pub by_dimension: BTreeMap<HoneycombDimension, [usize; 2]>,
}

impl CorpusSummary {
    pub fn of(c: &Corpus) -> Self {
        let mut by_dimension = BTreeMap::new();
        for r in c {
            by_dimension.entry(r.dimension).or_insert([0, 0])[r.label.as_index()] += 1;
        }
        Self {
            records: c.len(),
            by_dimension,
        }
    }
}

/// Validate a corpus file and summarize it.
pub fn ingest(path: &Path) -> Result<CorpusSummary> {
    let c = load_corpus(require(path.to_path_buf(), "check the corpus path")?)?;
    Ok(CorpusSummary::of(&c))
}

/// Write a synthetic corpus to `<out>/corpus.jsonl`.
pub fn generate(out: &Path, seed: u64, n_per_dimension: usize) -> Result<PathBuf> {
    let c = generate_synthetic(seed, n_per_dimension)
        .map_err(|e| CliError::from(e).in_block("synthetic"))?;
    let path = Layout::new(out).corpus();
    write(&path, &c.to_jsonl())?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AugmentSummary {
    pub train: usize,
    pub test: usize,
    pub augmented_train: usize,
}

/// Split the source corpus, then augment the training part only.
pub fn augment(cfg: &RunConfig) -> Result<AugmentSummary> {
    let l = layout(cfg);
    let corpus = source_corpus(cfg)?;
    let (train, test) = split_stratified(
        &corpus,
        cfg.split_fraction,
        derive_seed(cfg.seed, &["split"]),
    )?;
    let lexicon = match &cfg.paths.lexicon {
        Some(p) => SynonymLexicon::load(require(p.clone(), "check paths.lexicon")?)?,
        None => SynonymLexicon::default(),
    };
    let aug_cfg = AugmentConfig {
        seed: derive_seed(cfg.seed, &["augment"]),
        ..cfg.augment.clone()
    };
    let augmented = augment_corpus(&train, &lexicon, &aug_cfg)?;
    write(&l.train_split(), &train.to_jsonl())?;
    write(&l.test_split(), &test.to_jsonl())?;
    write(&l.augmented(), &augmented.to_jsonl())?;
    Ok(AugmentSummary {
        train: train.len(),
        test: test.len(),
        augmented_train: augmented.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TrainSummary {
    pub metrics: BTreeMap<HoneycombDimension, EvaluationMetrics>,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

enum Trained {
    Model(Box<RandomForestModel>, Option<EvaluationMetrics>),
    Skipped(String),
}

fn train_dimension(
    cfg: &RunConfig,
    d: HoneycombDimension,
    train: &Corpus,
    test: &Corpus,
) -> Result<Trained> {
    let train = train.filter_dimension(d);
    let summary = CorpusSummary::of(&train);
    let counts = summary.by_dimension.get(&d).copied().unwrap_or([0, 0]);
    if counts.contains(&0) {
        return Ok(Trained::Skipped(format!(
            "{d}: training split has {} unsatisfied and {} satisfied records; skipping",
            counts[0], counts[1]
        )));
    }
    let vocab = build_vocabulary(&train, cfg.min_df)?;
    let (x, y) = featurize(&train, &vocab);
    let forest_cfg = ForestConfig {
        seed: derive_seed(cfg.seed, &["forest", d.as_str()]),
        ..cfg.forest.clone()
    };
    let model = train_forest(&x, &y, vocab, &forest_cfg)?;
    let test = test.filter_dimension(d);
    let metrics = if test.is_empty() {
        None
    } else {
        Some(model.evaluate(&test)?)
    };
    Ok(Trained::Model(Box::new(model), metrics))
}

/// One forest per dimension on the augmented training split, evaluated on
/// the test split. Dimensions with a single class are skipped with a warning.
pub fn train(cfg: &RunConfig) -> Result<TrainSummary> {
    let l = layout(cfg);
    let train = load_corpus(require(l.augmented(), "run `hcx augment` first")?)?;
    let test = load_corpus(require(l.test_split(), "run `hcx augment` first")?)?;
    let results = map(&HoneycombDimension::ALL, |&d| {
        train_dimension(cfg, d, &train, &test)
    });
    let mut summary = TrainSummary::default();
    for (d, result) in HoneycombDimension::ALL.into_iter().zip(results) {
        let path = l.model(d);
        match result? {
            Trained::Model(model, metrics) => {
                write(&path, &model.to_json())?;
                if let Some(m) = metrics {
                    summary.metrics.insert(d, m);
                }
            }
            Trained::Skipped(warning) => {
                if path.exists() {
                    std::fs::remove_file(&path).map_err(|e| Error::Io { path, source: e })?;
                }
                summary.warnings.push(warning);
            }
        }
    }
    write(&l.metrics(), &to_json(&summary.metrics))?;
    Ok(summary)
}

fn load_metrics(l: &Layout) -> Result<BTreeMap<HoneycombDimension, EvaluationMetrics>> {
    let path = l.metrics();
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    let json = std::fs::read_to_string(&path).map_err(|e| Error::Io { path, source: e })?;
    Ok(serde_json::from_str(&json).map_err(Error::from)?)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExplainSummary {
    /// Explanations written per dimension and method.
    pub written: BTreeMap<(HoneycombDimension, ExplainMethod), usize>,
    pub warnings: Vec<String>,
}

fn loaded_model(l: &Layout, d: HoneycombDimension) -> Result<Option<RandomForestModel>> {
    let path = l.model(d);
    if path.exists() {
        Ok(Some(RandomForestModel::load(path)?))
    } else {
        Ok(None)
    }
}

fn explain_record(
    model: &RandomForestModel,
    record: &SurveyRecord,
    methods: &[ExplainMethod],
    cfgs: &(LimeConfig, ShapConfig, AnchorConfig),
) -> Result<Option<Vec<Explanation>>> {
    let mut out = Vec::with_capacity(methods.len());
    for &m in methods {
        let e = match m {
            ExplainMethod::Lime => explain_lime(model, record, &cfgs.0).map(Explanation::Lime),
            ExplainMethod::Shap => explain_shap(model, record, &cfgs.1).map(Explanation::Shap),
            ExplainMethod::Anchor => find_anchor(model, record, &cfgs.2).map(Explanation::Anchor),
        };
        match e {
            Ok(e) => out.push(e),
            Err(Error::NothingToExplain) => return Ok(None),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Some(out))
}

/// Explain the selected records with the model of their dimension and write
/// one JSONL file per dimension and method.
pub fn explain(
    cfg: &RunConfig,
    methods: &[ExplainMethod],
    selection: &Selection,
) -> Result<ExplainSummary> {
    let l = layout(cfg);
    let records: Vec<SurveyRecord> = match selection {
        Selection::AllTest => {
            load_corpus(require(l.test_split(), "run `hcx augment` first")?)?.into_records()
        }
        Selection::Ids(ids) => {
            let corpus = source_corpus(cfg)?;
            ids.iter()
                .map(|id| {
                    corpus
                        .get(id)
                        .cloned()
                        .ok_or_else(|| CliError::UnknownId(id.clone()))
                })
                .collect::<Result<_>>()?
        }
    };
    let mut methods = methods.to_vec();
    methods.sort();
    methods.dedup();

    let mut summary = ExplainSummary::default();
    for d in HoneycombDimension::ALL {
        let selected: Vec<&SurveyRecord> = records.iter().filter(|r| r.dimension == d).collect();
        if selected.is_empty() {
            continue;
        }
        let Some(model) = loaded_model(&l, d)? else {
            summary.warnings.push(format!(
                "{d}: no model; skipping {} records",
                selected.len()
            ));
            continue;
        };
        let cfgs = (
            LimeConfig {
                seed: derive_seed(cfg.seed, &["lime", d.as_str()]),
                ..cfg.lime.clone()
            },
            ShapConfig {
                seed: derive_seed(cfg.seed, &["shap", d.as_str()]),
                ..cfg.shap.clone()
            },
            AnchorConfig {
                seed: derive_seed(cfg.seed, &["anchor", d.as_str()]),
                ..cfg.anchor.clone()
            },
        );
        let results = map(&selected, |r| explain_record(&model, r, &methods, &cfgs));
        let mut lines: BTreeMap<ExplainMethod, String> =
            methods.iter().map(|&m| (m, String::new())).collect();
        let mut count = 0;
        for (r, result) in selected.iter().zip(results) {
            let Some(explanations) = result? else {
                summary.warnings.push(format!(
                    "{d}: record `{}` has no in-vocabulary tokens; skipped",
                    r.id
                ));
                continue;
            };
            count += 1;
            for (&m, e) in methods.iter().zip(explanations) {
                let buf = lines.get_mut(&m).expect("one buffer per method");
                buf.push_str(&e.to_json());
                buf.push('\n');
            }
        }
        for (m, content) in lines {
            write(&l.explanations(d, m), &content)?;
            summary.written.insert((d, m), count);
        }
    }
    Ok(summary)
}

fn load_explanations(path: PathBuf) -> Result<Vec<Explanation>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let content = std::fs::read_to_string(&path).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    parse_explanations(&content).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        }
        .into(),
        other => other.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportSummary {
    pub written: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// One report per dimension that has a model.
pub fn report(cfg: &RunConfig) -> Result<ReportSummary> {
    let l = layout(cfg);
    let corpus = source_corpus(cfg)?;
    let metrics = load_metrics(&l)?;
    let mut summary = ReportSummary::default();
    for d in HoneycombDimension::ALL {
        if !l.model(d).exists() {
            summary.warnings.push(format!("{d}: no model; no report"));
            continue;
        }
        let (mut lime, mut shap, mut anchors) = (Vec::new(), Vec::new(), Vec::new());
        for m in ExplainMethod::ALL {
            for e in load_explanations(l.explanations(d, m))? {
                match e {
                    Explanation::Lime(e) => lime.push(e),
                    Explanation::Shap(e) => shap.push(e),
                    Explanation::Anchor(e) => anchors.push(e),
                }
            }
        }
        let inputs = ReportInputs {
            dimension: d,
            metrics: metrics.get(&d).cloned(),
            corpus: &corpus,
            shap: &shap,
            lime: &lime,
            anchors: &anchors,
        };
        let r = build_report(&inputs, &cfg.report);
        summary
            .written
            .extend(render(&r, &l.reports(), &[Format::Json, Format::Svg])?);
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunSummary {
    pub train: TrainSummary,
    pub reports: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// Generate (if configured), augment, train, explain every test record with
/// every method, report.
pub fn run_all(cfg: &RunConfig) -> Result<RunSummary> {
    if let Some(s) = &cfg.synthetic {
        generate(&cfg.paths.out, cfg.seed, s.n_per_dimension)?;
    }
    augment(cfg)?;
    let train = train(cfg)?;
    let explained = explain(cfg, &ExplainMethod::ALL, &Selection::AllTest)?;
    let reported = report(cfg)?;
    let mut warnings = train.warnings.clone();
    warnings.extend(explained.warnings);
    warnings.extend(reported.warnings);
    Ok(RunSummary {
        train,
        reports: reported.written,
        warnings,
    })
}
