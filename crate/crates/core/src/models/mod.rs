//! Weighted-sum models `X = Σ_d w_d X_d` and their spectral building blocks.

mod cf;
mod filter;
mod quadrature;
mod support;

pub use cf::{
    categorical_cf_dense, categorical_cf_qtt, gaussian_cf, lognormal_cf_dense, lognormal_cf_qtt,
    LognormalTerms,
};
pub use filter::{default_exponential_alpha, filter_dense, filter_eval, filter_qtt, FilterSpec};
pub use quadrature::gauss_hermite;
pub use support::{
    inv_normal_cdf, normal_cdf, normal_pdf, normal_sf, support_bound_lognormal_sum,
    support_bound_single,
};

use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::tt::{TensorTrain, Truncation};

/// Default Gauss–Hermite node count for lognormal characteristic functions.
pub const DEFAULT_LOGNORMAL_NODES: usize = 45;

/// Tolerance on `Σ p_k = 1` for categorical components.
const PROB_SUM_TOLERANCE: f64 = 1e-12;

/// Law of one component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ComponentSpec {
    Bernoulli { p: f64 },
    Categorical { values: Vec<f64>, probs: Vec<f64> },
    Lognormal { mu: f64, sigma: f64 },
}

impl ComponentSpec {
    fn validate(&self, index: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid(format!("component {index}: {msg}")));
        match self {
            ComponentSpec::Bernoulli { p } => {
                if !(0.0..=1.0).contains(p) {
                    return bad(format!("bernoulli p = {p} outside [0, 1]"));
                }
            }
            ComponentSpec::Categorical { values, probs } => {
                if values.is_empty() {
                    return bad("categorical needs at least one value".into());
                }
                if values.len() != probs.len() {
                    return bad(format!(
                        "{} values but {} probabilities",
                        values.len(),
                        probs.len()
                    ));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return bad("non-finite support value".into());
                }
                if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    return bad("probabilities must be finite and nonnegative".into());
                }
                let s: f64 = probs.iter().sum();
                if (s - 1.0).abs() > PROB_SUM_TOLERANCE {
                    return bad(format!("probabilities sum to {s}, expected 1"));
                }
            }
            ComponentSpec::Lognormal { mu, sigma } => {
                if !mu.is_finite() {
                    return bad("lognormal mu must be finite".into());
                }
                if !(*sigma > 0.0 && sigma.is_finite()) {
                    return bad(format!("lognormal sigma = {sigma} must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Support and probabilities for discrete laws.
    pub fn atoms(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            ComponentSpec::Bernoulli { p } => Some((vec![0.0, 1.0], vec![1.0 - p, *p])),
            ComponentSpec::Categorical { values, probs } => Some((values.clone(), probs.clone())),
            ComponentSpec::Lognormal { .. } => None,
        }
    }

    /// `(E X, Var X, E|X − E X|³)`.
    pub fn moments(&self) -> Result<(f64, f64, f64)> {
        match self {
            ComponentSpec::Lognormal { mu, sigma } => {
                let s2 = sigma * sigma;
                let mean = (mu + s2 / 2.0).exp();
                let var = (s2.exp() - 1.0) * (2.0 * mu + s2).exp();
                // E|Y − m|³ = E(Y−m)³ + 2E[(m−Y)³; Y < m], the second term by quadrature in log space
                let skew = (s2.exp() + 2.0) * (s2.exp() - 1.0).sqrt() * var.powf(1.5);
                let z_m = ((mean.ln() - mu) / sigma).min(40.0);
                let lower = truncated_cubic_deficit(*mu, *sigma, mean, z_m);
                Ok((mean, var, skew + 2.0 * lower))
            }
            _ => {
                let (v, p) = self.atoms().expect("discrete");
                let mean: f64 = v.iter().zip(&p).map(|(x, q)| x * q).sum();
                let var: f64 = v.iter().zip(&p).map(|(x, q)| q * (x - mean).powi(2)).sum();
                let abs3: f64 = v
                    .iter()
                    .zip(&p)
                    .map(|(x, q)| q * (x - mean).abs().powi(3))
                    .sum();
                Ok((mean, var, abs3))
            }
        }
    }
}

/// `E[(m − Y)³; Y < m]` for `log Y ~ N(μ, σ²)`, by composite Simpson in `z = (log y − μ)/σ`.
fn truncated_cubic_deficit(mu: f64, sigma: f64, m: f64, z_max: f64) -> f64 {
    let z_min = -40.0f64;
    if z_max <= z_min {
        return 0.0;
    }
    let steps = 4000;
    let h = (z_max - z_min) / steps as f64;
    let f = |z: f64| (m - (mu + sigma * z).exp()).max(0.0).powi(3) * normal_pdf(z);
    let mut acc = f(z_min) + f(z_max);
    for i in 1..steps {
        acc += f(z_min + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// Source of per-factor characteristic functions for the spectral pipelines.
///
/// The global CF is the product of the factors.
pub trait CharacteristicModel: Sync {
    fn factor_count(&self) -> usize;
    fn factor_dense(&self, index: usize, omegas: &[f64]) -> Result<Vec<c64>>;
    fn factor_qtt(
        &self,
        index: usize,
        freq: &FrequencyGrid,
        policy: &Truncation,
    ) -> Result<TensorTrain>;
}

#[derive(Debug, Clone, Deserialize)]
struct RawModel {
    weights: Vec<f64>,
    #[serde(default)]
    normalize_weights: bool,
    components: Vec<ComponentSpec>,
    #[serde(default)]
    quadrature_nodes: Option<usize>,
}

/// Validated weighted sum of independent components.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedSumModel {
    components: Vec<ComponentSpec>,
    weights: Vec<f64>,
    normalize_weights: bool,
    quadrature_nodes: usize,
}

impl WeightedSumModel {
    /// Validates and, if requested, normalizes the weights to sum to one.
    /// Zero-weight components are dropped (their CF is identically one).
    pub fn new(
        components: Vec<ComponentSpec>,
        weights: Vec<f64>,
        normalize_weights: bool,
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("model needs at least one component"));
        }
        if components.len() != weights.len() {
            return Err(Error::invalid(format!(
                "{} components but {} weights",
                components.len(),
                weights.len()
            )));
        }
        for (d, (c, w)) in components.iter().zip(&weights).enumerate() {
            c.validate(d)?;
            if !w.is_finite() {
                return Err(Error::invalid(format!(
                    "component {d}: weight is not finite"
                )));
            }
            if matches!(c, ComponentSpec::Lognormal { .. }) && *w < 0.0 {
                return Err(Error::invalid(format!(
                    "component {d}: lognormal components need a nonnegative weight"
                )));
            }
        }
        let mut weights = weights;
        if normalize_weights {
            let s: f64 = weights.iter().sum();
            if !(s.is_finite() && s != 0.0) {
                return Err(Error::invalid("cannot normalize weights that sum to zero"));
            }
            weights.iter_mut().for_each(|w| *w /= s);
        }
        let (components, weights): (Vec<_>, Vec<_>) = components
            .into_iter()
            .zip(weights)
            .filter(|(_, w)| *w != 0.0)
            .unzip();
        if components.is_empty() {
            return Err(Error::invalid("all component weights are zero"));
        }
        Ok(WeightedSumModel {
            components,
            weights,
            normalize_weights,
            quadrature_nodes: DEFAULT_LOGNORMAL_NODES,
        })
    }

    /// Parse and validate the JSON model schema.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawModel =
            serde_json::from_str(text).map_err(|e| Error::invalid(format!("model JSON: {e}")))?;
        let m = WeightedSumModel::new(raw.components, raw.weights, raw.normalize_weights)?;
        match raw.quadrature_nodes {
            Some(k) => m.with_quadrature_nodes(k),
            None => Ok(m),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn with_quadrature_nodes(mut self, nodes: usize) -> Result<Self> {
        gauss_hermite(nodes)?;
        self.quadrature_nodes = nodes;
        Ok(self)
    }

    /// `D` equal Bernoulli(p) components with weight `w` each.
    pub fn binomial(d: usize, p: f64, weight: f64) -> Result<Self> {
        WeightedSumModel::new(
            vec![ComponentSpec::Bernoulli { p }; d],
            vec![weight; d],
            false,
        )
    }

    /// Weighted Poisson–binomial model.
    pub fn poisson_binomial(probs: &[f64], weights: &[f64]) -> Result<Self> {
        WeightedSumModel::new(
            probs
                .iter()
                .map(|&p| ComponentSpec::Bernoulli { p })
                .collect(),
            weights.to_vec(),
            false,
        )
    }

    pub fn components(&self) -> &[ComponentSpec] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn quadrature_nodes(&self) -> usize {
        self.quadrature_nodes
    }

    pub fn is_discrete(&self) -> bool {
        self.components.iter().all(|c| c.atoms().is_some())
    }

    /// `[Σ min(w x), Σ max(w x)]` for discrete models.
    pub fn discrete_support_range(&self) -> Option<(f64, f64)> {
        if !self.is_discrete() {
            return None;
        }
        let mut lo = 0.0;
        let mut hi = 0.0;
        for (c, &w) in self.components.iter().zip(&self.weights) {
            let (v, _) = c.atoms().expect("discrete");
            let scaled = v.iter().map(|x| w * x);
            lo += scaled.clone().fold(f64::INFINITY, f64::min);
            hi += scaled.fold(f64::NEG_INFINITY, f64::max);
        }
        Some((lo, hi))
    }

    /// `(μ_d, σ_d, w_d)` when every component is lognormal.
    pub fn lognormal_params(&self) -> Option<Vec<(f64, f64, f64)>> {
        self.components
            .iter()
            .zip(&self.weights)
            .map(|(c, &w)| match c {
                ComponentSpec::Lognormal { mu, sigma } => Some((*mu, *sigma, w)),
                _ => None,
            })
            .collect()
    }

    /// `(E X, Var X)` of the weighted sum.
    pub fn mean_variance(&self) -> Result<(f64, f64)> {
        let mut mean = 0.0;
        let mut var = 0.0;
        for (c, &w) in self.components.iter().zip(&self.weights) {
            let (m, v, _) = c.moments()?;
            mean += w * m;
            var += w * w * v;
        }
        Ok((mean, var))
    }
}

/// Domain bound `b` for an all-lognormal model with tail mass `δ` beyond `b`.
pub fn support_bound_sum(model: &WeightedSumModel, delta: f64) -> Result<f64> {
    let params = model
        .lognormal_params()
        .ok_or_else(|| Error::invalid("support bound requires all components to be lognormal"))?;
    support_bound_lognormal_sum(&params, delta)
}

impl CharacteristicModel for WeightedSumModel {
    fn factor_count(&self) -> usize {
        self.components.len()
    }

    fn factor_dense(&self, index: usize, omegas: &[f64]) -> Result<Vec<c64>> {
        let w = self.weights[index];
        match &self.components[index] {
            ComponentSpec::Lognormal { mu, sigma } => {
                lognormal_cf_dense(*mu, *sigma, w, omegas, self.quadrature_nodes)
            }
            c => {
                let (v, p) = c.atoms().expect("discrete");
                Ok(categorical_cf_dense(&v, &p, w, omegas))
            }
        }
    }

    fn factor_qtt(
        &self,
        index: usize,
        freq: &FrequencyGrid,
        policy: &Truncation,
    ) -> Result<TensorTrain> {
        let w = self.weights[index];
        match &self.components[index] {
            ComponentSpec::Lognormal { mu, sigma } => {
                lognormal_cf_qtt(*mu, *sigma, w, freq, self.quadrature_nodes, policy)
            }
            c => {
                let (v, p) = c.atoms().expect("discrete");
                categorical_cf_qtt(&v, &p, w, freq, policy)
            }
        }
    }
}

/// Normal law used as an analytic reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianModel {
    pub mean: f64,
    pub variance: f64,
}

impl CharacteristicModel for GaussianModel {
    fn factor_count(&self) -> usize {
        1
    }

    fn factor_dense(&self, _index: usize, omegas: &[f64]) -> Result<Vec<c64>> {
        Ok(gaussian_cf(self.mean, self.variance, omegas))
    }

    /// Built by TT-SVD of the dense samples, so limited to dense-capable sizes.
    fn factor_qtt(
        &self,
        _index: usize,
        freq: &FrequencyGrid,
        policy: &Truncation,
    ) -> Result<TensorTrain> {
        if freq.len() > crate::tt::DEFAULT_DENSE_CAP {
            return Err(Error::ResourceLimit {
                what: "dense Gaussian reference samples".into(),
                limit: crate::tt::DEFAULT_DENSE_CAP,
                actual: freq.len(),
                step: None,
            });
        }
        let v = gaussian_cf(self.mean, self.variance, &freq.omegas());
        TensorTrain::from_dense(&v, &vec![2; freq.n_pad], policy.tolerance)?.truncate(policy)
    }
}
