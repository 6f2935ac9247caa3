mod common;

use honeycomb_xai::anchor::{
    estimate_precision, find_anchor_instance, sample_conditional, AnchorConfig,
};
use honeycomb_xai::lime::{self, enumerate_masks, sample_perturbations, LimeConfig};
use honeycomb_xai::reference::{Blinded, FnModel, KeywordModel, LinearModel};
use honeycomb_xai::rng;
use honeycomb_xai::shap::{self, exact_shapley_oracle, ShapConfig, ShapMode};
use honeycomb_xai::vectorize::InterpretableMask;
use honeycomb_xai::{Error, Instance, TextClassifier};

const WORDS: [&str; 10] = [
    "friendly",
    "stark",
    "wechat",
    "guangdong",
    "interface",
    "cultural",
    "app",
    "menu",
    "slow",
    "clear",
];

/// Pseudo-random but fixed game: p depends on the exact active set.
fn scrambled(seed: u64) -> impl Fn(&honeycomb_xai::vectorize::FeatureVector) -> f64 + Sync {
    move |x| {
        let code: u64 = x.active().iter().map(|&i| 1u64 << i).sum();
        (rng::derive_seed(seed, &[code.to_string()]) % 10_000) as f64 / 10_000.0
    }
}

#[test]
fn exact_shap_matches_oracle_on_arbitrary_games() {
    let v = common::vocab(&WORDS);
    for trial in 0..20u64 {
        let model = FnModel::new(v.clone(), scrambled(trial));
        let m = 1 + (trial as usize % 10);
        let text = WORDS[..m].join(" ");
        let inst = Instance::new(&text, &v);
        let e = shap::explain_instance(&model, "t", &inst, &ShapConfig::default()).unwrap();
        assert_eq!(e.mode, ShapMode::Exact);
        let (phi0, phis) =
            exact_shapley_oracle(|z| inst.p_satisfied(&model, z).unwrap(), m).unwrap();
        assert!((e.phi0 - phi0).abs() < 1e-12);
        for ((_, got), want) in e.phis.iter().zip(&phis) {
            assert!((got - want).abs() <= 1e-6, "trial {trial}: {got} vs {want}");
        }
        assert!(e.efficiency_gap().abs() <= 1e-6);
    }
}

#[test]
fn exact_shap_matches_oracle_on_forest() {
    let s = common::suite();
    let mut checked = 0;
    for r in s.test.iter().take(30) {
        let inst = Instance::new(&r.text, s.model.vocabulary());
        if inst.is_empty() || inst.len() > 10 {
            continue;
        }
        let e = shap::explain_instance(&s.model, &r.id, &inst, &ShapConfig::default()).unwrap();
        let (_, phis) =
            exact_shapley_oracle(|z| inst.p_satisfied(&s.model, z).unwrap(), inst.len()).unwrap();
        let err = e
            .phis
            .iter()
            .zip(&phis)
            .map(|((_, a), b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-6, "{}: {err}", r.id);
        checked += 1;
    }
    assert!(checked >= 20);
}

#[test]
fn shapley_axioms_on_constructed_models() {
    let v = common::vocab(&["friendly", "cultural", "wechat", "stark"]);
    // symmetric in friendly/cultural, ignores wechat, super-additive in the pair
    let model = FnModel::new(v.clone(), |x| {
        let f = x.contains(0) as u8 as f64;
        let c = x.contains(1) as u8 as f64;
        let s = x.contains(3) as u8 as f64;
        0.3 + 0.2 * (f + c) + 0.25 * f * c - 0.2 * s
    });
    let inst = Instance::new("friendly wechat cultural stark", &v);
    let e = shap::explain_instance(&model, "x", &inst, &ShapConfig::default()).unwrap();
    let phi = |t| e.phi_of(t).unwrap();
    assert!((phi("friendly") - phi("cultural")).abs() <= 1e-6);
    assert!(phi("wechat").abs() <= 1e-6);
    assert!((phi("stark") + 0.2).abs() <= 1e-6);
    assert!((phi("friendly") - 0.325).abs() <= 1e-6);
}

#[test]
fn shap_needs_in_vocabulary_tokens() {
    let v = common::vocab(&["friendly"]);
    let model = KeywordModel::new(v.clone(), "friendly", 0.9, 0.2);
    let rec = honeycomb_xai::corpus::SurveyRecord::new(
        "r",
        "nothing here",
        honeycomb_xai::corpus::HoneycombDimension::Usability,
        honeycomb_xai::corpus::SatisfactionLabel::Satisfied,
    );
    assert!(matches!(
        shap::explain_shap(&model, &rec, &ShapConfig::default()),
        Err(Error::NothingToExplain)
    ));
    assert!(matches!(
        lime::explain_lime(&model, &rec, &LimeConfig::default()),
        Err(Error::NothingToExplain)
    ));
}

#[test]
fn sampled_shap_converges_to_exact() {
    let s = common::suite();
    let sampled_cfg = ShapConfig {
        exact_limit: 1,
        n_coalitions: 4096,
        seed: 3,
    };
    let mut worst: f64 = 0.0;
    for r in s.test.iter().take(40) {
        let inst = Instance::new(&r.text, s.model.vocabulary());
        if inst.len() < 2 || inst.len() > 10 {
            continue;
        }
        let exact = shap::explain_instance(&s.model, &r.id, &inst, &ShapConfig::default()).unwrap();
        let approx = shap::explain_instance(&s.model, &r.id, &inst, &sampled_cfg).unwrap();
        assert_eq!(approx.mode, ShapMode::Sampled);
        assert!(approx.efficiency_gap().abs() < 1e-9);
        for ((_, a), (_, b)) in exact.phis.iter().zip(&approx.phis) {
            worst = worst.max((a - b).abs());
        }
    }
    assert!(worst <= 0.02, "max deviation {worst}");
}

#[test]
fn shap_is_deterministic_per_seed() {
    let s = common::suite();
    let cfg = ShapConfig {
        exact_limit: 2,
        ..ShapConfig::default()
    };
    let r = &s.test.records()[0];
    let a = shap::explain_shap(&s.model, r, &cfg).unwrap();
    assert_eq!(a, shap::explain_shap(&s.model, r, &cfg).unwrap());
}

#[test]
fn lime_recovers_linear_model() {
    let v = common::vocab(&WORDS[..6]);
    let coef = vec![0.12, -0.07, 0.0, 0.05, -0.2, 0.09];
    let model = LinearModel::new(v.clone(), 0.4, coef.clone());
    let inst = Instance::new(&WORDS[..6].join(" "), &v);
    let cfg = LimeConfig {
        ridge_lambda: 0.0,
        ..LimeConfig::default()
    };
    let e = lime::explain_masks(&model, "lin", &inst, &enumerate_masks(6), &cfg).unwrap();
    assert!((e.intercept - 0.4).abs() <= 1e-6);
    for (j, w) in WORDS[..6].iter().enumerate() {
        assert!((e.weight_of(w).unwrap() - coef[j]).abs() <= 1e-6, "{w}");
    }
    assert!((e.local_r2 - 1.0).abs() < 1e-9);
}

#[test]
fn lime_single_keyword_model() {
    let v = common::vocab(&["friendly"]);
    let model = KeywordModel::new(v.clone(), "friendly", 0.9, 0.2);
    let inst = Instance::new("friendly", &v);
    let cfg = LimeConfig {
        ridge_lambda: 0.0,
        ..LimeConfig::default()
    };
    let e = lime::explain_masks(&model, "k", &inst, &enumerate_masks(1), &cfg).unwrap();
    assert!((e.weight_of("friendly").unwrap() - 0.7).abs() <= 1e-6);
    assert!((e.intercept - 0.2).abs() <= 1e-6);
    assert!((e.fx - 0.9).abs() < 1e-12);
}

#[test]
fn lime_weights_are_sparse_sorted_and_deterministic() {
    let s = common::suite();
    let cfg = LimeConfig {
        top_k: 3,
        ..LimeConfig::default()
    };
    for r in s.test.iter().take(10) {
        let e = lime::explain_lime(&s.model, r, &cfg).unwrap();
        assert!(e.weights.len() <= 3);
        assert!(e.weights.windows(2).all(|w| w[0].1.abs() >= w[1].1.abs()));
        assert_eq!(e, lime::explain_lime(&s.model, r, &cfg).unwrap());
    }
}

#[test]
fn lime_ignores_hidden_token() {
    let s = common::suite();
    let wechat = s.model.vocabulary().index_of("wechat").unwrap();
    let blind = Blinded::new(&s.model, vec![wechat]);
    let mut seen = 0;
    for r in s.test.iter().filter(|r| r.text.contains("wechat")) {
        let e = lime::explain_lime(&blind, r, &LimeConfig::default()).unwrap();
        let w = e.weight_of("wechat").unwrap_or(0.0);
        assert!(w.abs() < 0.02, "{}: {w}", r.id);
        seen += 1;
    }
    assert!(seen >= 5);
}

#[test]
fn perturbation_active_bits_average_half() {
    let masks = sample_perturbations(4, 100_000, &mut rng::seeded(17));
    let mean = masks.iter().map(|z| z.count_active()).sum::<usize>() as f64 / masks.len() as f64;
    assert!((mean - 2.0).abs() <= 0.05, "{mean}");
}

#[test]
fn conditional_samples_average_keep_prob() {
    let masks = sample_conditional(6, &[], 100_000, 0.5, &mut rng::seeded(23));
    let mean = masks.iter().map(|z| z.count_active()).sum::<usize>() as f64 / masks.len() as f64;
    assert!((mean - 3.0).abs() <= 0.05, "{mean}");
}

/// Exact precision of `anchor` under `keep_prob = 0.5` by visiting every mask.
fn brute_force_precision<M: TextClassifier>(model: &M, inst: &Instance, anchor: &[usize]) -> f64 {
    let m = inst.len();
    let target = inst
        .predict_masked(model, &InterpretableMask::ones(m))
        .unwrap();
    let (mut hits, mut total) = (0, 0);
    for code in 0..1u64 << m {
        let z = InterpretableMask::from_code(code, m);
        if anchor.iter().all(|&j| z.get(j)) {
            total += 1;
            hits += (inst.predict_masked(model, &z).unwrap() == target) as usize;
        }
    }
    hits as f64 / total as f64
}

#[test]
fn anchor_finds_the_single_relevant_token() {
    let v = common::vocab(&WORDS);
    for (k, key) in WORDS.iter().enumerate() {
        let model = KeywordModel::new(v.clone(), key, 0.9, 0.1);
        let m = (k + 1).clamp(4, 10);
        let text = WORDS[..m].join(" ");
        let inst = Instance::new(&text, &v);
        let res = find_anchor_instance(&model, &format!("k{k}"), &inst, &AnchorConfig::default())
            .unwrap();
        assert_eq!(res.anchor, [key.to_string()]);
        assert_eq!(res.precision_estimate, 1.0);
        assert!(res.converged && res.precision_lower_bound >= 0.95);
        let j = inst.features().iter().position(|t| t == key).unwrap();
        assert_eq!(brute_force_precision(&model, &inst, &[j]), 1.0);
        // no smaller anchor suffices
        assert!(brute_force_precision(&model, &inst, &[]) < 0.95);
    }
}

#[test]
fn anchor_for_constant_model_is_empty() {
    let v = common::vocab(&WORDS);
    let model = FnModel::new(v.clone(), |_| 0.8);
    let inst = Instance::new("friendly stark app", &v);
    let res = find_anchor_instance(&model, "c", &inst, &AnchorConfig::default()).unwrap();
    assert!(res.anchor.is_empty());
    assert_eq!(res.precision_estimate, 1.0);
    assert!(res.converged);
    assert_eq!(res.coverage_estimate, 1.0);
    let mut s = rng::seeded(1);
    let est = estimate_precision(&model, &inst, &[1], &AnchorConfig::default(), &mut s).unwrap();
    assert_eq!(est.estimate, 1.0);
}

#[test]
fn anchor_on_forest_is_sound_and_deterministic() {
    let s = common::suite();
    let cfg = AnchorConfig::default();
    for r in s.test.iter().take(15) {
        let inst = Instance::new(&r.text, s.model.vocabulary());
        let a = find_anchor_instance(&s.model, &r.id, &inst, &cfg).unwrap();
        assert_eq!(
            a,
            find_anchor_instance(&s.model, &r.id, &inst, &cfg).unwrap()
        );
        assert!(a.anchor.iter().all(|t| inst.features().contains(t)));
        if a.converged {
            assert!(a.precision_lower_bound >= cfg.tau);
        }
        assert!((0.0..=1.0).contains(&a.coverage_estimate));
        let idx: Vec<usize> = a
            .anchor
            .iter()
            .map(|t| inst.features().iter().position(|f| f == t).unwrap())
            .collect();
        if inst.len() <= 10 && a.converged {
            assert!(
                brute_force_precision(&s.model, &inst, &idx) >= 0.9,
                "{}",
                r.id
            );
        }
    }
}

#[test]
fn anchor_best_effort_when_budget_is_tight() {
    let v = common::vocab(&WORDS[..4]);
    // satisfied only when all four tokens are present
    let model = FnModel::new(v.clone(), |x| if x.active().len() == 4 { 0.9 } else { 0.1 });
    let inst = Instance::new(&WORDS[..4].join(" "), &v);
    let cfg = AnchorConfig {
        max_anchor_size: 2,
        ..AnchorConfig::default()
    };
    let res = find_anchor_instance(&model, "tight", &inst, &cfg).unwrap();
    assert_eq!(res.anchor.len(), 2);
    assert!(!res.converged);
    let full = find_anchor_instance(&model, "tight", &inst, &AnchorConfig::default()).unwrap();
    assert_eq!(full.anchor.len(), 4);
    assert!(full.converged);
    assert!(full.coverage_estimate <= res.coverage_estimate);
}
