//! WebAssembly bindings for the static demo page in `www/`.
//!
//! [`DemoCore`] is plain Rust so it can be tested natively; [`Demo`] wraps it
//! for JavaScript and hands every result over as a JSON string.

use honeycomb_xai::anchor::{find_anchor_instance, AnchorConfig};
use honeycomb_xai::corpus::{generate_synthetic, split_stratified};
use honeycomb_xai::forest::{
    featurize, train_forest, EvaluationMetrics, ForestConfig, RandomForestModel,
};
use honeycomb_xai::lime::{self, LimeConfig};
use honeycomb_xai::shap::{self, ShapConfig};
use honeycomb_xai::vectorize::build_vocabulary;
use honeycomb_xai::{Instance, Result, TextClassifier};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Record id used to key the explainers' random streams.
const INPUT_ID: &str = "input";

#[derive(Debug, Serialize)]
struct Prediction<'a> {
    p_satisfied: f64,
    label: &'static str,
    /// Distinct in-vocabulary tokens of the input, in first-occurrence order.
    tokens: &'a [String],
}

pub struct DemoCore {
    model: RandomForestModel,
    metrics: EvaluationMetrics,
    lime: LimeConfig,
    shap: ShapConfig,
    anchor: AnchorConfig,
}

impl DemoCore {
    /// Train a pooled forest on a synthetic corpus, holding out a fifth.
    pub fn train(seed: u64, n_per_dimension: usize, n_trees: usize) -> Result<Self> {
        let corpus = generate_synthetic(seed, n_per_dimension)?;
        let (train, test) = split_stratified(&corpus, 0.2, seed)?;
        let vocab = build_vocabulary(&train, 2)?;
        let (x, y) = featurize(&train, &vocab);
        let cfg = ForestConfig {
            n_trees,
            seed,
            ..ForestConfig::default()
        };
        let model = train_forest(&x, &y, vocab, &cfg)?;
        let metrics = model.evaluate(&test)?;
        Ok(Self {
            model,
            metrics,
            lime: LimeConfig {
                n_samples: 2000,
                seed,
                ..LimeConfig::default()
            },
            shap: ShapConfig {
                seed,
                ..ShapConfig::default()
            },
            anchor: AnchorConfig {
                seed,
                ..AnchorConfig::default()
            },
        })
    }

    pub fn model(&self) -> &RandomForestModel {
        &self.model
    }

    pub fn metrics_json(&self) -> String {
        serde_json::to_string(&self.metrics).expect("metrics serialize")
    }

    pub fn vocabulary_json(&self) -> String {
        self.model.vocabulary().to_json()
    }

    pub fn predict_json(&self, text: &str) -> Result<String> {
        let inst = Instance::new(text, self.model.vocabulary());
        let p = self.model.predict_proba(&inst.full_features())?;
        let out = Prediction {
            p_satisfied: p.satisfied,
            label: match p.label() {
                honeycomb_xai::corpus::SatisfactionLabel::Satisfied => "satisfied",
                honeycomb_xai::corpus::SatisfactionLabel::Unsatisfied => "unsatisfied",
            },
            tokens: inst.features(),
        };
        Ok(serde_json::to_string(&out)?)
    }

    pub fn lime_json(&self, text: &str) -> Result<String> {
        let inst = Instance::explainable(text, self.model.vocabulary())?;
        let e = lime::explain_instance(&self.model, INPUT_ID, &inst, &self.lime)?;
        Ok(serde_json::to_string(&e)?)
    }

    pub fn shap_json(&self, text: &str) -> Result<String> {
        let inst = Instance::explainable(text, self.model.vocabulary())?;
        let e = shap::explain_instance(&self.model, INPUT_ID, &inst, &self.shap)?;
        Ok(serde_json::to_string(&e)?)
    }

    pub fn anchor_json(&self, text: &str) -> Result<String> {
        let inst = Instance::explainable(text, self.model.vocabulary())?;
        let e = find_anchor_instance(&self.model, INPUT_ID, &inst, &self.anchor)?;
        Ok(serde_json::to_string(&e)?)
    }
}

fn js(e: honeycomb_xai::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Demo(DemoCore);

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, n_per_dimension: u32, n_trees: u32) -> Result<Demo, JsError> {
        DemoCore::train(u64::from(seed), n_per_dimension as usize, n_trees as usize)
            .map(Demo)
            .map_err(js)
    }

    pub fn metrics(&self) -> String {
        self.0.metrics_json()
    }

    pub fn vocabulary(&self) -> String {
        self.0.vocabulary_json()
    }

    pub fn predict(&self, text: &str) -> Result<String, JsError> {
        self.0.predict_json(text).map_err(js)
    }

    pub fn lime(&self, text: &str) -> Result<String, JsError> {
        self.0.lime_json(text).map_err(js)
    }

    pub fn shap(&self, text: &str) -> Result<String, JsError> {
        self.0.shap_json(text).map_err(js)
    }

    pub fn anchor(&self, text: &str) -> Result<String, JsError> {
        self.0.anchor_json(text).map_err(js)
    }
}
