//! Reference methods: exact recursive convolution for discrete models and
//! Monte Carlo sampling with empirical CDF, VaR and ES estimators.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ComponentSpec, WeightedSumModel};
use crate::risk::RiskReport;

/// Default cap on the number of atoms kept by [`recursive_convolution`].
pub const DEFAULT_SUPPORT_CAP: usize = 1 << 24;

/// Relative quantization of support keys, in units of the support span.
const SUPPORT_QUANTUM: f64 = 1e-12;

/// Samples drawn per independent generator stream.
const MC_CHUNK: usize = 1 << 16;

/// Default number of bootstrap resamples for Monte Carlo error bars.
pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 200;

/// Finite law with strictly increasing support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    support: Vec<f64>,
    pmf: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    support: f64,
    pmf: f64,
}

impl DiscreteDistribution {
    pub fn new(support: Vec<f64>, pmf: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != pmf.len() {
            return Err(Error::invalid(
                "support and pmf must be nonempty and of equal length",
            ));
        }
        if support.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("support must be strictly increasing"));
        }
        if pmf.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::invalid("pmf entries must be finite and nonnegative"));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!("pmf sums to {total}, expected 1")));
        }
        Ok(DiscreteDistribution { support, pmf })
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().zip(&self.pmf).map(|(x, p)| x * p).sum()
    }

    /// CSV with header `support,pmf`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for (&support, &pmf) in self.support.iter().zip(&self.pmf) {
            w.serialize(CsvRow { support, pmf })
                .map_err(|e| Error::invalid(format!("csv: {e}")))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::invalid(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut support = Vec::new();
        let mut pmf = Vec::new();
        for row in csv::Reader::from_reader(text.as_bytes()).deserialize::<CsvRow>() {
            let row = row.map_err(|e| Error::invalid(format!("csv: {e}")))?;
            support.push(row.support);
            pmf.push(row.pmf);
        }
        DiscreteDistribution::new(support, pmf)
    }

    /// Smallest atom with `F ≥ α`, and the tail expectation above it.
    pub fn var_es(&self, alpha: f64) -> Result<(f64, f64)> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!(
                "confidence level {alpha} outside (0, 1)"
            )));
        }
        let mut cum = 0.0;
        let mut k = self.len() - 1;
        for (i, p) in self.pmf.iter().enumerate() {
            cum += p;
            if cum >= alpha {
                k = i;
                break;
            }
        }
        let var = self.support[k];
        // E[X | tail] with the VaR atom split so that the tail mass is 1 − α
        let above: f64 = self.support[k + 1..]
            .iter()
            .zip(&self.pmf[k + 1..])
            .map(|(x, p)| x * p)
            .sum();
        let es = (above + (cum - alpha) * var) / (1.0 - alpha);
        Ok((var, es))
    }
}

/// Exact aggregate law by the recursion `f⁽ℓ⁺¹⁾(x) = Σ_k p_k f⁽ℓ⁾(x − w x_k)`.
///
/// Positions are merged when they agree to `1e-12` of the support span, which
/// absorbs drift from repeated floating-point shifts.
pub fn recursive_convolution(model: &WeightedSumModel, cap: usize) -> Result<DiscreteDistribution> {
    let (lo, hi) = model
        .discrete_support_range()
        .ok_or_else(|| Error::invalid("recursive convolution needs discrete components"))?;
    let quantum = SUPPORT_QUANTUM * (hi - lo).max(f64::MIN_POSITIVE.sqrt());
    let key = |x: f64| ((x - lo) / quantum).round() as i64;
    let mut atoms: HashMap<i64, (f64, f64)> = HashMap::from([(key(0.0), (0.0, 1.0))]);
    for (d, (c, &w)) in model.components().iter().zip(model.weights()).enumerate() {
        let (values, probs) = c.atoms().expect("discrete component");
        let mut next: HashMap<i64, (f64, f64)> = HashMap::with_capacity(atoms.len() * values.len());
        for &(x, p) in atoms.values() {
            for (&v, &q) in values.iter().zip(&probs) {
                if q == 0.0 {
                    continue;
                }
                let y = x + w * v;
                next.entry(key(y)).or_insert((y, 0.0)).1 += p * q;
            }
        }
        if next.len() > cap {
            return Err(Error::ResourceLimit {
                what: "recursive convolution support size".into(),
                limit: cap,
                actual: next.len(),
                step: Some(d),
            });
        }
        atoms = next;
    }
    let mut pairs: Vec<(f64, f64)> = atoms.into_values().collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (support, pmf) = pairs.into_iter().unzip();
    DiscreteDistribution::new(support, pmf)
}

/// Right-continuous step CDF `Σ_m f_m Θ(x − x_m)` by binary search.
pub fn exact_cdf(dist: &DiscreteDistribution, xs: &[f64]) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(dist.len());
    let mut acc = 0.0;
    for p in &dist.pmf {
        acc += p;
        prefix.push(acc);
    }
    xs.iter()
        .map(|&x| match dist.support.partition_point(|&s| s <= x) {
            0 => 0.0,
            m => prefix[m - 1],
        })
        .collect()
}

/// Monte Carlo draws of the weighted sum, reproducible from the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub samples: Vec<f64>,
    pub seed: u64,
}

enum Sampler {
    Discrete {
        values: Vec<f64>,
        cumulative: Vec<f64>,
    },
    Lognormal {
        mu: f64,
        sigma: f64,
    },
}

impl Sampler {
    fn new(c: &ComponentSpec) -> Self {
        match c {
            ComponentSpec::Lognormal { mu, sigma } => Sampler::Lognormal {
                mu: *mu,
                sigma: *sigma,
            },
            _ => {
                let (values, probs) = c.atoms().expect("discrete component");
                let mut acc = 0.0;
                let cumulative = probs
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                Sampler::Discrete { values, cumulative }
            }
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Sampler::Discrete { values, cumulative } => {
                // inverse CDF; rounding in the last cumulative entry falls back to the top atom
                let u: f64 = rng.random();
                let k = cumulative
                    .partition_point(|&c| c <= u)
                    .min(values.len() - 1);
                values[k]
            }
            Sampler::Lognormal { mu, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                (mu + sigma * z).exp()
            }
        }
    }
}

/// `S` independent draws. Chunk `c` uses ChaCha stream `c` of the seed, so
/// the output is bitwise identical however the chunks are scheduled.
pub fn mc_sample(model: &WeightedSumModel, count: usize, seed: u64) -> Result<SampleSet> {
    if count == 0 {
        return Err(Error::invalid("Monte Carlo needs at least one sample"));
    }
    let samplers: Vec<(Sampler, f64)> = model
        .components()
        .iter()
        .zip(model.weights())
        .map(|(c, &w)| (Sampler::new(c), w))
        .collect();
    let mut samples = vec![0.0; count];
    samples
        .par_chunks_mut(MC_CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            for s in chunk.iter_mut() {
                *s = samplers.iter().map(|(smp, w)| w * smp.draw(&mut rng)).sum();
            }
        });
    Ok(SampleSet { samples, seed })
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.samples.clone();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// Empirical CDF `F̂(x) = #{X ≤ x}/S` and its variance estimate `F̂(1−F̂)/S`.
pub fn mc_cdf(samples: &SampleSet, xs: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let sorted = samples.sorted();
    let s = sorted.len() as f64;
    let f: Vec<f64> = xs
        .iter()
        .map(|&x| sorted.partition_point(|&v| v <= x) as f64 / s)
        .collect();
    let var = f.iter().map(|p| p * (1.0 - p) / s).collect();
    (f, var)
}

/// Order-statistic VaR and tail-average ES of an ascending sample.
fn var_es_sorted(sorted: &[f64], alpha: f64) -> (f64, f64, bool) {
    let s = sorted.len();
    let k = ((alpha * s as f64).ceil() as usize).clamp(1, s);
    let var = sorted[k - 1];
    let degenerate = sorted[k..].iter().all(|&x| x <= var);
    if degenerate {
        return (var, var, true);
    }
    // the VaR order statistic carries the weight needed to make the tail mass 1 − α
    let tail: f64 = sorted[k..].iter().sum();
    let es = (tail + (k as f64 - alpha * s as f64) * var) / (s as f64 * (1.0 - alpha));
    (var, es, false)
}

/// VaR as the `⌈αS⌉`-th order statistic, ES by the tail average with the
/// VaR atom split at `α`.
pub fn mc_var_es(samples: &SampleSet, alpha: f64) -> Result<RiskReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!(
            "confidence level {alpha} outside (0, 1)"
        )));
    }
    if samples.len() < 10 {
        return Err(Error::invalid("Monte Carlo risk needs at least 10 samples"));
    }
    let start = std::time::Instant::now();
    let (var, es, degenerate) = var_es_sorted(&samples.sorted(), alpha);
    Ok(RiskReport {
        alpha,
        var,
        var_index: None,
        es,
        representation: "mc".into(),
        seconds: start.elapsed().as_secs_f64(),
        tail_mass_beyond_grid: None,
        degenerate_tail: degenerate,
    })
}

/// Bootstrap standard errors `(se_VaR, se_ES)` from `resamples` draws with replacement.
pub fn bootstrap_var_es(
    samples: &SampleSet,
    alpha: f64,
    resamples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if resamples < 2 {
        return Err(Error::invalid("bootstrap needs at least two resamples"));
    }
    mc_var_es(samples, alpha)?;
    let s = samples.len();
    let estimates: Vec<(f64, f64)> = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut v: Vec<f64> = (0..s)
                .map(|_| samples.samples[rng.random_range(0..s)])
                .collect();
            v.sort_by(f64::total_cmp);
            let (var, es, _) = var_es_sorted(&v, alpha);
            (var, es)
        })
        .collect();
    let sd = |f: &dyn Fn(&(f64, f64)) -> f64| {
        let m = estimates.iter().map(f).sum::<f64>() / resamples as f64;
        (estimates.iter().map(|e| (f(e) - m).powi(2)).sum::<f64>() / (resamples - 1) as f64).sqrt()
    };
    Ok((sd(&|e| e.0), sd(&|e| e.1)))
}
