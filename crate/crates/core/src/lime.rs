//! Local surrogate explanations.
//!
//! Perturbations of an instance are drawn in mask space, scored by the black
//! box, weighted by an exponential proximity kernel
//! `pi(z) = exp(-D(x, z)^2 / sigma^2)` and fitted with weighted ridge
//! regression. Sparsity is enforced by keeping the `top_k` largest
//! coefficients and refitting on those alone.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::SurveyRecord;
use crate::error::{Error, Result};
use crate::linalg::weighted_ridge;
use crate::model::{Instance, TextClassifier};
use crate::rng;
use crate::vectorize::InterpretableMask;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProximityKernel {
    pub sigma: f64,
}

impl Default for ProximityKernel {
    fn default() -> Self {
        Self { sigma: 25.0 }
    }
}

impl ProximityKernel {
    pub fn new(sigma: f64) -> Result<Self> {
        let k = Self { sigma };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma > 0.0 && self.sigma.is_finite() {
            Ok(())
        } else {
            Err(Error::config(
                "sigma",
                format!("must be positive, got {}", self.sigma),
            ))
        }
    }

    pub fn weight(&self, distance: f64) -> f64 {
        kernel_weight(self, distance)
    }
}

/// `exp(-d^2 / sigma^2)`.
pub fn kernel_weight(k: &ProximityKernel, d: f64) -> f64 {
    (-(d * d) / (k.sigma * k.sigma)).exp()
}

/// Cosine distance between `mask` and the all-ones mask of the same length.
/// With `a` active bits out of `M` this is `1 - sqrt(a / M)`; the all-zeros
/// mask is at distance 1.
pub fn cosine_distance_to_full(mask: &InterpretableMask) -> f64 {
    let m = mask.len();
    let a = mask.count_active();
    if m == 0 || a == 0 {
        return 1.0;
    }
    1.0 - (a as f64 / m as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimeConfig {
    pub n_samples: usize,
    pub top_k: usize,
    pub ridge_lambda: f64,
    pub kernel: ProximityKernel,
    pub seed: u64,
}

impl Default for LimeConfig {
    fn default() -> Self {
        Self {
            n_samples: 5000,
            top_k: 10,
            ridge_lambda: 1.0,
            kernel: ProximityKernel::default(),
            seed: 0,
        }
    }
}

impl LimeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 10 {
            return Err(Error::config(
                "n_samples",
                format!("must be at least 10, got {}", self.n_samples),
            ));
        }
        if self.top_k == 0 {
            return Err(Error::config("top_k", "must be at least 1"));
        }
        if !(self.ridge_lambda >= 0.0 && self.ridge_lambda.is_finite()) {
            return Err(Error::config(
                "ridge_lambda",
                format!("must be non-negative, got {}", self.ridge_lambda),
            ));
        }
        self.kernel.validate()
    }
}

/// `n` masks over `m` features. The first is all ones; each other mask picks a
/// deactivation count uniformly in `0..=m` and switches off a uniform subset of
/// that size.
pub fn sample_perturbations<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    rng: &mut R,
) -> Vec<InterpretableMask> {
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    out.push(InterpretableMask::ones(m));
    for _ in 1..n {
        let k = rng.random_range(0..=m);
        let mut mask = InterpretableMask::ones(m);
        for j in index::sample(rng, m, k) {
            mask.set(j, false);
        }
        out.push(mask);
    }
    out
}

/// All `2^m` masks, code order (bit `j` of the code is feature `j`).
pub fn enumerate_masks(m: usize) -> Vec<InterpretableMask> {
    assert!(m < 63, "mask enumeration over {m} features");
    (0..1u64 << m)
        .map(|c| InterpretableMask::from_code(c, m))
        .collect()
}

/// Sparse linear surrogate over feature indices.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSurrogate {
    pub intercept: f64,
    /// `(feature index, weight)`, descending `|weight|`, at most `top_k`.
    pub weights: Vec<(usize, f64)>,
    pub local_r2: f64,
}

fn by_abs_desc(a: &(usize, f64), b: &(usize, f64)) -> std::cmp::Ordering {
    b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0))
}

/// Weighted ridge fit of `preds` on mask bits, then refit on the `top_k`
/// largest coefficients. The intercept is not penalized.
pub fn fit_surrogate(
    masks: &[InterpretableMask],
    preds: &[f64],
    weights: &[f64],
    cfg: &LimeConfig,
) -> Result<LocalSurrogate> {
    if masks.len() != preds.len() || masks.len() != weights.len() {
        return Err(Error::LengthMismatch(format!(
            "{} masks, {} predictions, {} weights",
            masks.len(),
            preds.len(),
            weights.len()
        )));
    }
    if masks.len() < 2 {
        return Err(Error::LengthMismatch(
            "at least two perturbations are required".into(),
        ));
    }
    if let Some(w) = weights.iter().find(|w| w.is_nan() || **w <= 0.0) {
        return Err(Error::config(
            "weights",
            format!("must be positive, got {w}"),
        ));
    }
    if cfg.top_k == 0 {
        return Err(Error::config("top_k", "must be at least 1"));
    }
    let m = masks[0].len();
    if let Some(bad) = masks.iter().find(|z| z.len() != m) {
        return Err(Error::MaskLength {
            expected: m,
            got: bad.len(),
        });
    }

    let design = |cols: &[usize]| -> Vec<Vec<f64>> {
        masks
            .iter()
            .map(|z| {
                cols.iter()
                    .map(|&j| if z.get(j) { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect()
    };

    let all: Vec<usize> = (0..m).collect();
    let selected: Vec<usize> = if m <= cfg.top_k {
        all
    } else {
        let full = weighted_ridge(&design(&all), preds, weights, cfg.ridge_lambda, true)?;
        let mut ranked: Vec<(usize, f64)> = full.coef.into_iter().enumerate().collect();
        ranked.sort_by(by_abs_desc);
        let mut keep: Vec<usize> = ranked.into_iter().take(cfg.top_k).map(|(j, _)| j).collect();
        keep.sort_unstable();
        keep
    };

    let x = design(&selected);
    let fit = weighted_ridge(&x, preds, weights, cfg.ridge_lambda, true)?;

    let w_sum: f64 = weights.iter().sum();
    let mean = preds.iter().zip(weights).map(|(y, w)| w * y).sum::<f64>() / w_sum;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for ((row, &y), &w) in x.iter().zip(preds).zip(weights) {
        ss_res += w * (y - fit.predict(row)).powi(2);
        ss_tot += w * (y - mean).powi(2);
    }
    let local_r2 = if ss_tot > 1e-300 {
        1.0 - ss_res / ss_tot
    } else if ss_res <= 1e-18 {
        1.0
    } else {
        0.0
    };

    let mut out: Vec<(usize, f64)> = selected.into_iter().zip(fit.coef).collect();
    out.sort_by(by_abs_desc);
    Ok(LocalSurrogate {
        intercept: fit.intercept,
        weights: out,
        local_r2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeExplanation {
    pub id: String,
    /// `p_satisfied` of the unperturbed instance.
    pub fx: f64,
    pub intercept: f64,
    pub local_r2: f64,
    /// Descending `|weight|`.
    pub weights: Vec<(String, f64)>,
}

impl LimeExplanation {
    pub fn weight_of(&self, token: &str) -> Option<f64> {
        self.weights
            .iter()
            .find(|(t, _)| t == token)
            .map(|(_, w)| *w)
    }
}

/// Score the given masks with the model and fit the surrogate.
pub fn explain_masks<M: TextClassifier + ?Sized>(
    model: &M,
    id: &str,
    instance: &Instance,
    masks: &[InterpretableMask],
    cfg: &LimeConfig,
) -> Result<LimeExplanation> {
    if instance.is_empty() {
        return Err(Error::NothingToExplain);
    }
    let preds = masks
        .iter()
        .map(|z| instance.p_satisfied(model, z))
        .collect::<Result<Vec<f64>>>()?;
    let weights: Vec<f64> = masks
        .iter()
        .map(|z| cfg.kernel.weight(cosine_distance_to_full(z)))
        .collect();
    let surrogate = fit_surrogate(masks, &preds, &weights, cfg)?;
    let fx = instance.p_satisfied(model, &InterpretableMask::ones(instance.len()))?;
    Ok(LimeExplanation {
        id: id.to_string(),
        fx,
        intercept: surrogate.intercept,
        local_r2: surrogate.local_r2,
        weights: surrogate
            .weights
            .into_iter()
            .map(|(j, w)| (instance.features()[j].clone(), w))
            .collect(),
    })
}

pub fn explain_instance<M: TextClassifier + ?Sized>(
    model: &M,
    id: &str,
    instance: &Instance,
    cfg: &LimeConfig,
) -> Result<LimeExplanation> {
    cfg.validate()?;
    if instance.is_empty() {
        return Err(Error::NothingToExplain);
    }
    let mut s = rng::stream(cfg.seed, &["lime", id]);
    let masks = sample_perturbations(instance.len(), cfg.n_samples, &mut s);
    explain_masks(model, id, instance, &masks, cfg)
}

pub fn explain_lime<M: TextClassifier + ?Sized>(
    model: &M,
    record: &SurveyRecord,
    cfg: &LimeConfig,
) -> Result<LimeExplanation> {
    let instance = Instance::explainable(&record.text, model.vocabulary())?;
    explain_instance(model, &record.id, &instance, cfg)
}
