//! `bench` command: parameter sweeps emitted as plot-ready CSV tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use qttagg::baselines::{
    exact_cdf, mc_cdf, mc_sample, recursive_convolution, DiscreteDistribution,
};
use qttagg::engine::{
    dense_spectral_cdf, error_metrics, qtt_spectral_cdf, Approximation, ErrorMetrics,
    PipelineOptions,
};
use qttagg::grid::GridSpec;
use qttagg::models::{normal_cdf, ComponentSpec, FilterSpec, WeightedSumModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::config::{bond_cap, default_length, read_json, Method, MAX_N};
use crate::run::write_atomic;
use crate::CliError;

/// Schema tag written in every row; bump when columns change.
pub const SCHEMA: &str = "qttagg-bench-v1";

/// Support size above which the exact reference is skipped.
const REFERENCE_CAP: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `D` Bernoulli(p) components with weights `1/D`.
    Binomial,
    /// Weights `U(0,1)` normalized, probabilities `Beta(2,10)`.
    Wpb,
    /// `μ ~ U(−1,1)`, `σ ~ U(1,3)`, weights `U(0,1)` normalized.
    LognormalSum,
}

fn default_p() -> f64 {
    0.5
}

fn default_epsilons() -> Vec<f64> {
    vec![1e-8]
}

fn default_filters() -> Vec<String> {
    vec!["exp".into()]
}

fn default_instances() -> usize {
    1
}

fn default_delta() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub family: Family,
    /// Success probability for the binomial family.
    #[serde(default = "default_p")]
    pub p: f64,
    pub d: Vec<usize>,
    pub n: Vec<usize>,
    #[serde(default = "default_epsilons")]
    pub epsilon: Vec<f64>,
    #[serde(default = "default_filters")]
    pub filters: Vec<String>,
    pub methods: Vec<Method>,
    /// Sample counts for `mc` rows.
    #[serde(default)]
    pub samples: Vec<usize>,
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub max_bond: Option<usize>,
    pub output: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub schema: String,
    pub family: String,
    pub instance: usize,
    pub d: usize,
    pub n: usize,
    pub method: String,
    pub filter: String,
    pub epsilon: Option<f64>,
    pub samples: Option<usize>,
    pub length: f64,
    pub status: String,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub linf: Option<f64>,
    pub median: Option<f64>,
    pub peak_bond: Option<usize>,
    pub final_max_bond: Option<usize>,
    pub peak_bytes: Option<usize>,
    pub final_bytes: Option<usize>,
    pub seconds: f64,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub schema: String,
    pub family: String,
    pub d: usize,
    pub n: usize,
    pub method: String,
    pub filter: String,
    pub epsilon: Option<f64>,
    pub samples: Option<usize>,
    pub ok: usize,
    pub failed: usize,
    pub l1_mean: Option<f64>,
    pub l1_std: Option<f64>,
    pub linf_mean: Option<f64>,
    pub linf_std: Option<f64>,
    pub median_mean: Option<f64>,
    pub median_std: Option<f64>,
    pub peak_bond_mean: Option<f64>,
    pub peak_bond_std: Option<f64>,
    pub final_max_bond_mean: Option<f64>,
    pub final_max_bond_std: Option<f64>,
    pub seconds_mean: Option<f64>,
    pub seconds_std: Option<f64>,
}

impl Family {
    fn name(&self) -> &'static str {
        match self {
            Family::Binomial => "binomial",
            Family::Wpb => "wpb",
            Family::LognormalSum => "lognormal_sum",
        }
    }

    /// Instance `i` of size `d`, drawn from its own generator stream.
    pub fn instance(
        &self,
        d: usize,
        p: f64,
        seed: u64,
        i: usize,
    ) -> Result<WeightedSumModel, CliError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(((d as u64) << 32) | i as u64);
        let uniform_weights = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let w: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            let total: f64 = w.iter().sum();
            w.into_iter().map(|x| x / total).collect()
        };
        let model = match *self {
            Family::Binomial => WeightedSumModel::binomial(d, p, 1.0 / d as f64)?,
            Family::Wpb => {
                let beta = Beta::new(2.0, 10.0).expect("valid shape");
                let w = uniform_weights(&mut rng);
                let p: Vec<f64> = (0..d).map(|_| beta.sample(&mut rng)).collect();
                WeightedSumModel::poisson_binomial(&p, &w)?
            }
            Family::LognormalSum => {
                let w = uniform_weights(&mut rng);
                let comps = (0..d)
                    .map(|_| ComponentSpec::Lognormal {
                        mu: rng.random_range(-1.0..1.0),
                        sigma: rng.random_range(1.0..3.0),
                    })
                    .collect();
                WeightedSumModel::new(comps, w, false)?
            }
        };
        Ok(model)
    }
}

impl SweepConfig {
    fn validate(&self) -> Result<(), CliError> {
        let empty = self.d.is_empty()
            || self.n.is_empty()
            || self.methods.is_empty()
            || self.instances == 0
            || (self
                .methods
                .iter()
                .any(|m| matches!(m, Method::Dense | Method::Qtt))
                && (self.filters.is_empty() || self.epsilon.is_empty()))
            || (self.methods.contains(&Method::Mc) && self.samples.is_empty());
        if empty {
            return Err(CliError::Config("empty sweep".into()));
        }
        if let Some(&n) = self.n.iter().find(|&&n| n == 0 || n > MAX_N) {
            return Err(CliError::Config(format!("n = {n} outside 1..={MAX_N}")));
        }
        if self.d.contains(&0) {
            return Err(CliError::Config("d must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(CliError::Config(format!("p = {} outside [0, 1]", self.p)));
        }
        for f in &self.filters {
            FilterSpec::from_name(f)?;
        }
        if self.methods.contains(&Method::Rc) {
            return Err(CliError::Config(
                "rc is the reference, not a bench method".into(),
            ));
        }
        Ok(())
    }
}

/// Reference CDF on the grid: exact for discrete models, analytic for a
/// single lognormal, otherwise unavailable.
fn reference(
    model: &WeightedSumModel,
    exact: Option<&DiscreteDistribution>,
    grid: &GridSpec,
) -> Option<Vec<f64>> {
    if model.is_discrete() {
        return exact.map(|dist| exact_cdf(dist, &grid.points()));
    }
    match model.lognormal_params()?.as_slice() {
        [(mu, sigma, w)] => Some(
            grid.points()
                .iter()
                .map(|&x| {
                    if x <= 0.0 {
                        0.0
                    } else {
                        normal_cdf(((x / w).ln() - mu) / sigma)
                    }
                })
                .collect(),
        ),
        _ => None,
    }
}

fn fill_metrics(row: &mut Row, m: Option<ErrorMetrics>) {
    if let Some(m) = m {
        row.l1 = Some(m.l1);
        row.l2 = Some(m.l2);
        row.linf = Some(m.linf);
        row.median = Some(m.median);
    }
}

fn spectral_row(
    row: &mut Row,
    model: &WeightedSumModel,
    grid: &GridSpec,
    reference: Option<&[f64]>,
    method: Method,
    opts: &PipelineOptions,
) -> Result<(), CliError> {
    let approx: Approximation = match method {
        Method::Dense => dense_spectral_cdf(model, grid.n, grid.length(), opts)?,
        _ => qtt_spectral_cdf(model, grid.n, grid.length(), opts)?,
    };
    let d = &approx.diagnostics;
    row.seconds = d.wall_seconds;
    row.peak_bytes = Some(d.peak_bytes);
    row.final_bytes = Some(d.final_bytes);
    if method == Method::Qtt {
        row.peak_bond = Some(d.peak_truncated_bond);
        row.final_max_bond = d.final_bonds.iter().copied().max();
    }
    if let Some(r) = reference {
        fill_metrics(row, Some(approx.error_metrics(r)?));
    }
    Ok(())
}

fn mc_row(
    row: &mut Row,
    model: &WeightedSumModel,
    grid: &GridSpec,
    reference: Option<&[f64]>,
    s: usize,
    seed: u64,
) -> Result<(), CliError> {
    let start = Instant::now();
    let samples = mc_sample(model, s, seed)?;
    let (f, _) = mc_cdf(&samples, &grid.points());
    row.seconds = start.elapsed().as_secs_f64();
    row.peak_bytes = Some(8 * s);
    row.final_bytes = Some(8 * f.len());
    if let Some(r) = reference {
        fill_metrics(row, Some(error_metrics(&f, r, grid.dx())?));
    }
    Ok(())
}

fn mean_std(values: impl Iterator<Item = f64>) -> (Option<f64>, Option<f64>) {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        return (None, None);
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let s = if v.len() > 1 {
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    (Some(m), Some(s))
}

/// `(d, n, method, filter, epsilon, samples)`
type GroupKey = (usize, usize, String, String, String, Option<usize>);

pub fn summarize(rows: &[Row]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<GroupKey, Vec<&Row>> = BTreeMap::new();
    for r in rows {
        let key = (
            r.d,
            r.n,
            r.method.clone(),
            r.filter.clone(),
            format!("{:?}", r.epsilon),
            r.samples,
        );
        groups.entry(key).or_default().push(r);
    }
    groups
        .into_values()
        .map(|g| {
            let first = g[0];
            let ok: Vec<&&Row> = g.iter().filter(|r| r.status == "ok").collect();
            let stat = |f: &dyn Fn(&Row) -> Option<f64>| mean_std(ok.iter().filter_map(|r| f(r)));
            let (l1_mean, l1_std) = stat(&|r| r.l1);
            let (linf_mean, linf_std) = stat(&|r| r.linf);
            let (median_mean, median_std) = stat(&|r| r.median);
            let (peak_bond_mean, peak_bond_std) = stat(&|r| r.peak_bond.map(|b| b as f64));
            let (final_max_bond_mean, final_max_bond_std) =
                stat(&|r| r.final_max_bond.map(|b| b as f64));
            let (seconds_mean, seconds_std) = stat(&|r| Some(r.seconds));
            SummaryRow {
                schema: SCHEMA.into(),
                family: first.family.clone(),
                d: first.d,
                n: first.n,
                method: first.method.clone(),
                filter: first.filter.clone(),
                epsilon: first.epsilon,
                samples: first.samples,
                ok: ok.len(),
                failed: g.len() - ok.len(),
                l1_mean,
                l1_std,
                linf_mean,
                linf_std,
                median_mean,
                median_std,
                peak_bond_mean,
                peak_bond_std,
                final_max_bond_mean,
                final_max_bond_std,
                seconds_mean,
                seconds_std,
            }
        })
        .collect()
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    write_atomic(path, &bytes)
}

pub fn summary_path(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("bench");
    output.with_file_name(format!("{stem}_summary.csv"))
}

/// Runs every row; returns the first error only when no row succeeded.
pub fn cmd_bench(path: &Path) -> Result<(), CliError> {
    let sweep: SweepConfig = read_json(path)?;
    sweep.validate()?;
    let max_bond = bond_cap(sweep.max_bond)?;
    let output = path.parent().unwrap_or(Path::new(".")).join(&sweep.output);
    if let Some(dir) = output.parent() {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    let mut rows = Vec::new();
    let mut first_error = None;
    for &d in &sweep.d {
        for i in 0..sweep.instances {
            let model = sweep.family.instance(d, sweep.p, sweep.seed, i)?;
            let length = default_length(&model, sweep.delta)?;
            let exact = if model.is_discrete() {
                recursive_convolution(&model, REFERENCE_CAP).ok()
            } else {
                None
            };
            for &n in &sweep.n {
                let grid = GridSpec::unit(length, n)?;
                let reference = reference(&model, exact.as_ref(), &grid);
                let mut jobs: Vec<(Method, String, Option<f64>, Option<usize>)> = Vec::new();
                for &m in &sweep.methods {
                    match m {
                        Method::Mc => jobs.extend(
                            sweep
                                .samples
                                .iter()
                                .map(|&s| (m, "none".to_string(), None, Some(s))),
                        ),
                        Method::Dense => {
                            jobs.extend(sweep.filters.iter().map(|f| (m, f.clone(), None, None)))
                        }
                        _ => {
                            for f in &sweep.filters {
                                jobs.extend(
                                    sweep.epsilon.iter().map(|&e| (m, f.clone(), Some(e), None)),
                                );
                            }
                        }
                    }
                }
                for (method, filter, eps, samples) in jobs {
                    let mut row = Row {
                        schema: SCHEMA.into(),
                        family: sweep.family.name().into(),
                        instance: i,
                        d,
                        n,
                        method: method.name().into(),
                        filter: filter.clone(),
                        epsilon: eps,
                        samples,
                        length,
                        ..Default::default()
                    };
                    let result = match method {
                        Method::Mc => {
                            let seed = sweep.seed ^ ((i as u64) << 20) ^ n as u64;
                            mc_row(
                                &mut row,
                                &model,
                                &grid,
                                reference.as_deref(),
                                samples.expect("mc job"),
                                seed,
                            )
                        }
                        _ => {
                            let mut opts =
                                PipelineOptions::with_filter(FilterSpec::from_name(&filter)?)
                                    .tolerance(eps.unwrap_or(1e-8));
                            opts.max_bond = max_bond;
                            spectral_row(
                                &mut row,
                                &model,
                                &grid,
                                reference.as_deref(),
                                method,
                                &opts,
                            )
                        }
                    };
                    match result {
                        Ok(()) => row.status = "ok".into(),
                        Err(e) => {
                            row.status = "error".into();
                            row.error = e.to_string();
                            first_error.get_or_insert(e);
                        }
                    }
                    rows.push(row);
                }
            }
        }
    }
    write_csv(&output, &rows)?;
    write_csv(&summary_path(&output), &summarize(&rows))?;
    match first_error {
        Some(e) if rows.iter().all(|r| r.status != "ok") => Err(e),
        _ => Ok(()),
    }
}
