//! Shapley-value attributions over an instance's tokens.
//!
//! The cooperative game is `v(S) = p_satisfied(text keeping only the tokens in
//! S)`, and the additive explanation is `g(z) = phi0 + sum_j phi_j z_j` with
//! `phi0 = v(empty)`. Attributions come from the kernel-weighted least squares
//! over coalitions with `g(0) = v(empty)` and `g(1) = v(full)` imposed as
//! equality constraints. Enumerating every coalition gives the exact Shapley
//! values; above `exact_limit` features, coalitions are sampled instead.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::SurveyRecord;
use crate::error::{Error, Result};
use crate::linalg::weighted_ridge;
use crate::model::{Instance, TextClassifier};
use crate::rng;
use crate::vectorize::InterpretableMask;

/// Largest game size the brute-force oracle accepts.
pub const ORACLE_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapConfig {
    pub exact_limit: usize,
    pub n_coalitions: usize,
    pub seed: u64,
}

impl Default for ShapConfig {
    fn default() -> Self {
        Self {
            exact_limit: 12,
            n_coalitions: 4096,
            seed: 0,
        }
    }
}

impl ShapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.exact_limit == 0 {
            return Err(Error::config("exact_limit", "must be at least 1"));
        }
        if self.exact_limit > ORACLE_LIMIT {
            return Err(Error::config(
                "exact_limit",
                format!("must not exceed {ORACLE_LIMIT}, got {}", self.exact_limit),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapMode {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapExplanation {
    pub id: String,
    pub phi0: f64,
    pub fx: f64,
    pub mode: ShapMode,
    /// One entry per distinct in-vocabulary token, instance order.
    pub phis: Vec<(String, f64)>,
}

impl ShapExplanation {
    pub fn phi_of(&self, token: &str) -> Option<f64> {
        self.phis.iter().find(|(t, _)| t == token).map(|(_, p)| *p)
    }

    /// `phi0 + sum(phi) - fx`.
    pub fn efficiency_gap(&self) -> f64 {
        self.phi0 + self.phis.iter().map(|(_, p)| p).sum::<f64>() - self.fx
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Shapley kernel `(M - 1) / (C(M, s) * s * (M - s))` for `0 < s < M`.
pub fn shapley_kernel_weight(m: usize, s: usize) -> Result<f64> {
    if s == 0 || s >= m {
        return Err(Error::config(
            "coalition size",
            format!("kernel is defined for 0 < s < M, got s = {s}, M = {m}"),
        ));
    }
    Ok((m - 1) as f64 / (binomial(m, s) * s as f64 * (m - s) as f64))
}

/// Classical Shapley values by enumerating all `2^m` coalitions:
/// `phi_j = sum_{S not containing j} |S|! (m - |S| - 1)! / m! * (v(S + j) - v(S))`.
/// Returns `(v(empty), phis)`.
pub fn exact_shapley_oracle<F>(mut value: F, m: usize) -> Result<(f64, Vec<f64>)>
where
    F: FnMut(&InterpretableMask) -> f64,
{
    if m > ORACLE_LIMIT {
        return Err(Error::TooManyFeatures {
            features: m,
            limit: ORACLE_LIMIT,
        });
    }
    let n_coalitions = 1usize << m;
    let v: Vec<f64> = (0..n_coalitions as u64)
        .map(|code| value(&InterpretableMask::from_code(code, m)))
        .collect();
    let weight_by_size: Vec<f64> = (0..m.max(1))
        .map(|s| 1.0 / (m as f64 * binomial(m - 1, s)))
        .collect();
    let mut phis = vec![0.0; m];
    for (j, phi) in phis.iter_mut().enumerate() {
        let bit = 1usize << j;
        for s in 0..n_coalitions {
            if s & bit == 0 {
                let size = s.count_ones() as usize;
                *phi += weight_by_size[size] * (v[s | bit] - v[s]);
            }
        }
    }
    Ok((v[0], phis))
}

/// Draw `n` coalitions with sizes proportional to the total kernel mass of each
/// size, `(M - 1) / (s (M - s))`, uniform members within a size, each followed
/// by its complement. Duplicates are merged into integer weights.
fn sample_coalitions<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    rng: &mut R,
) -> Vec<(InterpretableMask, f64)> {
    let mass: Vec<f64> = (1..m).map(|s| 1.0 / (s * (m - s)) as f64).collect();
    let total: f64 = mass.iter().sum();
    let mut drawn: BTreeMap<Vec<bool>, f64> = BTreeMap::new();
    let mut emitted = 0;
    while emitted < n {
        let mut u = rng.random::<f64>() * total;
        let mut size = m - 1;
        for (i, w) in mass.iter().enumerate() {
            if u < *w {
                size = i + 1;
                break;
            }
            u -= w;
        }
        let mut bits = vec![false; m];
        for j in index::sample(rng, m, size) {
            bits[j] = true;
        }
        let complement: Vec<bool> = bits.iter().map(|b| !b).collect();
        *drawn.entry(bits).or_default() += 1.0;
        emitted += 1;
        if emitted < n {
            *drawn.entry(complement).or_default() += 1.0;
            emitted += 1;
        }
    }
    drawn
        .into_iter()
        .map(|(bits, w)| (InterpretableMask::new(bits), w))
        .collect()
}

/// Constrained weighted least squares: minimize
/// `sum_k w_k (v_k - phi0 - phi . z_k)^2` subject to `sum(phi) = fx - phi0`,
/// solved by eliminating the last coefficient.
fn constrained_fit(
    coalitions: &[(InterpretableMask, f64)],
    values: &[f64],
    phi0: f64,
    fx: f64,
    m: usize,
) -> Result<Vec<f64>> {
    let total = fx - phi0;
    if m == 1 {
        return Ok(vec![total]);
    }
    let last = m - 1;
    let mut rows = Vec::with_capacity(coalitions.len());
    let mut y = Vec::with_capacity(coalitions.len());
    let mut w = Vec::with_capacity(coalitions.len());
    for ((z, weight), &v) in coalitions.iter().zip(values) {
        let z_last = if z.get(last) { 1.0 } else { 0.0 };
        rows.push(
            (0..last)
                .map(|j| if z.get(j) { 1.0 } else { 0.0 } - z_last)
                .collect::<Vec<f64>>(),
        );
        y.push(v - phi0 - z_last * total);
        w.push(*weight);
    }
    let fit = match weighted_ridge(&rows, &y, &w, 0.0, false) {
        Ok(fit) => fit,
        // sparse samples can leave a direction unobserved
        Err(Error::Singular) => weighted_ridge(&rows, &y, &w, 1e-8, false)?,
        Err(e) => return Err(e),
    };
    let mut phis = fit.coef;
    let rest: f64 = phis.iter().sum();
    phis.push(total - rest);
    Ok(phis)
}

/// Shapley attributions for an arbitrary game over `m` players, using the
/// same constrained kernel regression as [`explain_shap`].
pub fn kernel_shap<F>(
    mut value: F,
    m: usize,
    cfg: &ShapConfig,
    rng: &mut rng::Stream,
) -> Result<(f64, f64, ShapMode, Vec<f64>)>
where
    F: FnMut(&InterpretableMask) -> Result<f64>,
{
    cfg.validate()?;
    if m == 0 {
        return Err(Error::NothingToExplain);
    }
    let phi0 = value(&InterpretableMask::zeros(m))?;
    let fx = value(&InterpretableMask::ones(m))?;
    let (mode, coalitions) = if m <= cfg.exact_limit {
        let full = (1u64 << m) - 1;
        let coalitions = (1..full)
            .map(|code| {
                let z = InterpretableMask::from_code(code, m);
                let w = shapley_kernel_weight(m, z.count_active()).expect("0 < s < M");
                (z, w)
            })
            .collect::<Vec<_>>();
        (ShapMode::Exact, coalitions)
    } else {
        if cfg.n_coalitions < 2 * m + 2 {
            return Err(Error::config(
                "n_coalitions",
                format!("must be at least 2M + 2 = {} for M = {m}", 2 * m + 2),
            ));
        }
        (
            ShapMode::Sampled,
            sample_coalitions(m, cfg.n_coalitions, rng),
        )
    };
    let values = coalitions
        .iter()
        .map(|(z, _)| value(z))
        .collect::<Result<Vec<f64>>>()?;
    let phis = constrained_fit(&coalitions, &values, phi0, fx, m)?;
    Ok((phi0, fx, mode, phis))
}

pub fn explain_instance<M: TextClassifier + ?Sized>(
    model: &M,
    id: &str,
    instance: &Instance,
    cfg: &ShapConfig,
) -> Result<ShapExplanation> {
    let mut s = rng::stream(cfg.seed, &["shap", id]);
    let (phi0, fx, mode, phis) = kernel_shap(
        |z| instance.p_satisfied(model, z),
        instance.len(),
        cfg,
        &mut s,
    )?;
    Ok(ShapExplanation {
        id: id.to_string(),
        phi0,
        fx,
        mode,
        phis: instance.features().iter().cloned().zip(phis).collect(),
    })
}

pub fn explain_shap<M: TextClassifier + ?Sized>(
    model: &M,
    record: &SurveyRecord,
    cfg: &ShapConfig,
) -> Result<ShapExplanation> {
    let instance = Instance::explainable(&record.text, model.vocabulary())?;
    explain_instance(model, &record.id, &instance, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenShapStats {
    pub token: String,
    pub mean_abs_phi: f64,
    pub mean_phi: f64,
    pub count: usize,
    /// `(phi, fx)` per explanation containing the token, input order.
    pub values: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GlobalShapSummary {
    /// Descending mean `|phi|`, ties lexicographic.
    pub tokens: Vec<TokenShapStats>,
}

impl GlobalShapSummary {
    pub fn get(&self, token: &str) -> Option<&TokenShapStats> {
        self.tokens.iter().find(|t| t.token == token)
    }

    pub fn rank_of(&self, token: &str) -> Option<usize> {
        self.tokens.iter().position(|t| t.token == token)
    }
}

pub fn aggregate_global(explanations: &[ShapExplanation]) -> GlobalShapSummary {
    let mut by_token: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for e in explanations {
        for (token, phi) in &e.phis {
            by_token.entry(token).or_default().push((*phi, e.fx));
        }
    }
    let mut tokens: Vec<TokenShapStats> = by_token
        .into_iter()
        .map(|(token, values)| {
            let n = values.len() as f64;
            TokenShapStats {
                token: token.to_string(),
                mean_abs_phi: values.iter().map(|(p, _)| p.abs()).sum::<f64>() / n,
                mean_phi: values.iter().map(|(p, _)| p).sum::<f64>() / n,
                count: values.len(),
                values,
            }
        })
        .collect();
    // stable sort over lexicographic input keeps ties lexicographic
    tokens.sort_by(|a, b| b.mean_abs_phi.total_cmp(&a.mean_abs_phi));
    GlobalShapSummary { tokens }
}
