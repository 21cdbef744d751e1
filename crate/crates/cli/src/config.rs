//! Run configuration files and model resolution.

use std::fs;
use std::path::{Path, PathBuf};

use qttagg::engine::{PipelineOptions, DEFAULT_DENSE_MAX_N};
use qttagg::models::{support_bound_lognormal_sum, ComponentSpec, FilterSpec, WeightedSumModel};
use qttagg::tt::DEFAULT_BOND_CAP;
use serde::Deserialize;

use crate::CliError;

/// Environment variable overriding the global bond cap.
pub const BOND_CAP_ENV: &str = "QTTAGG_BOND_CAP";

/// Largest resolution any method accepts.
pub const MAX_N: usize = 40;

/// Relative headroom above the largest atom for discrete models.
const DISCRETE_MARGIN: f64 = 1.0 / 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dense,
    Qtt,
    Mc,
    Rc,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Dense => "dense",
            Method::Qtt => "qtt",
            Method::Mc => "mc",
            Method::Rc => "rc",
        }
    }
}

/// Either a path to a model file (relative to the config) or the model inline.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Path(PathBuf),
    Inline(serde_json::Value),
}

fn default_epsilon() -> f64 {
    1e-8
}

fn default_filter() -> String {
    "exp".into()
}

fn default_delta() -> f64 {
    1e-10
}

fn default_alpha() -> Vec<f64> {
    vec![0.99]
}

fn default_true() -> bool {
    true
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelRef,
    pub method: Method,
    pub n: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_filter")]
    pub filter: String,
    #[serde(default = "default_true")]
    pub filter_first: bool,
    /// Tail tolerance for the lognormal domain bound.
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_alpha")]
    pub alpha: Vec<f64>,
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub density: bool,
    /// Domain length `L`; derived from the model when absent.
    pub length: Option<f64>,
    pub max_bond: Option<usize>,
    #[serde(default)]
    pub clamp_running_max: bool,
}

/// Validated configuration with the model loaded and paths resolved.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub model: WeightedSumModel,
    pub filter: FilterSpec,
    pub length: f64,
    pub output: PathBuf,
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn load_model(path: &Path) -> Result<WeightedSumModel, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(WeightedSumModel::from_json(&text)?)
}

/// Bond cap from the environment, else the config, else the library default.
pub fn bond_cap(configured: Option<usize>) -> Result<usize, CliError> {
    match std::env::var(BOND_CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&c| c > 0)
            .ok_or_else(|| {
                CliError::Config(format!("{BOND_CAP_ENV}='{v}' is not a positive integer"))
            }),
        Err(_) => Ok(configured.unwrap_or(DEFAULT_BOND_CAP)),
    }
}

/// Default domain: the discrete support plus a small margin, plus the
/// lognormal tail bound at `δ` when lognormal components are present.
pub fn default_length(model: &WeightedSumModel, delta: f64) -> Result<f64, CliError> {
    let mut discrete_top = 0.0;
    let mut lognormals = Vec::new();
    for (c, &w) in model.components().iter().zip(model.weights()) {
        match c {
            ComponentSpec::Lognormal { mu, sigma } => lognormals.push((*mu, *sigma, w)),
            _ => {
                let (values, _) = c.atoms().expect("discrete component");
                let lo = values.iter().map(|v| w * v).fold(f64::INFINITY, f64::min);
                if lo < 0.0 {
                    return Err(CliError::Config(
                        "negative support values need an explicit shift of the model".into(),
                    ));
                }
                discrete_top += values.iter().map(|v| w * v).fold(0.0, f64::max);
            }
        }
    }
    let mut length = if discrete_top > 0.0 {
        discrete_top * (1.0 + DISCRETE_MARGIN)
    } else {
        0.0
    };
    if !lognormals.is_empty() {
        length += support_bound_lognormal_sum(&lognormals, delta)?;
    }
    if length > 0.0 {
        Ok(length)
    } else {
        Ok(1.0)
    }
}

impl RunConfig {
    pub fn resolve(self, config_path: &Path) -> Result<Resolved, CliError> {
        let base = config_path.parent().unwrap_or(Path::new("."));
        let model = match &self.model {
            ModelRef::Path(p) => load_model(&base.join(p))?,
            ModelRef::Inline(v) => WeightedSumModel::from_json(&v.to_string())?,
        };
        let filter = FilterSpec::from_name(&self.filter)?;
        if self.n == 0 || self.n > MAX_N {
            return Err(CliError::Config(format!(
                "n = {} outside 1..={MAX_N}",
                self.n
            )));
        }
        if self.method == Method::Dense && self.n > DEFAULT_DENSE_MAX_N {
            return Err(CliError::Config(format!(
                "dense method caps n at {DEFAULT_DENSE_MAX_N}, got {}",
                self.n
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(CliError::Config(format!(
                "epsilon {} outside (0, 1)",
                self.epsilon
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(CliError::Config(format!(
                "delta {} outside (0, 1)",
                self.delta
            )));
        }
        if self.alpha.is_empty() {
            return Err(CliError::Config("alpha list is empty".into()));
        }
        if let Some(a) = self.alpha.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(CliError::Config(format!("alpha {a} outside (0, 1)")));
        }
        match self.method {
            Method::Mc if self.samples.unwrap_or(0) < 10 => {
                return Err(CliError::Config("method mc needs samples >= 10".into()));
            }
            Method::Rc if !model.is_discrete() => {
                return Err(CliError::Config("method rc needs a discrete model".into()));
            }
            Method::Mc | Method::Rc if self.density => {
                return Err(CliError::Config(
                    "density output needs method dense or qtt".into(),
                ));
            }
            _ => {}
        }
        let length = match self.length {
            Some(l) if l > 0.0 && l.is_finite() => l,
            Some(l) => return Err(CliError::Config(format!("length {l} must be positive"))),
            None => default_length(&model, self.delta)?,
        };
        let output = base.join(&self.output);
        Ok(Resolved {
            config: self,
            model,
            filter,
            length,
            output,
        })
    }
}

impl Resolved {
    pub fn pipeline_options(&self) -> Result<PipelineOptions, CliError> {
        let mut opts = PipelineOptions::with_filter(self.filter).tolerance(self.config.epsilon);
        opts.filter_first = self.config.filter_first;
        opts.max_bond = bond_cap(self.config.max_bond)?;
        Ok(opts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(json: &str) -> RunConfig {
        serde_json::from_str(json).unwrap()
    }

    const BINOMIAL: &str = r#"{"weights":[1,1,1],"normalize_weights":true,
        "components":[{"type":"bernoulli","p":0.5},{"type":"bernoulli","p":0.5},{"type":"bernoulli","p":0.5}]}"#;

    #[test]
    fn inline_model_and_defaults() {
        let c = config(&format!(r#"{{"model":{BINOMIAL},"method":"dense","n":8}}"#));
        let r = c.resolve(Path::new("cfg/run.json")).unwrap();
        assert_eq!(r.config.alpha, vec![0.99]);
        assert_eq!(r.output, Path::new("cfg/out"));
        assert!((r.length - (1.0 + DISCRETE_MARGIN)).abs() < 1e-12);
    }

    #[test]
    fn validation_errors() {
        let bad = [
            r#""method":"dense","n":30"#,
            r#""method":"qtt","n":0"#,
            r#""method":"mc","n":8"#,
            r#""method":"qtt","n":8,"alpha":[1.0]"#,
            r#""method":"qtt","n":8,"filter":"box""#,
            r#""method":"rc","n":8,"density":true"#,
        ];
        for fields in bad {
            let c = config(&format!(r#"{{"model":{BINOMIAL},{fields}}}"#));
            assert!(c.resolve(Path::new("run.json")).is_err(), "{fields}");
        }
        assert!(serde_json::from_str::<RunConfig>(
            r#"{"model":"m.json","method":"qtt","n":8,"typo":1}"#
        )
        .is_err());
    }

    #[test]
    fn lognormal_length_uses_tail_bound() {
        let m = WeightedSumModel::from_json(
            r#"{"weights":[1],"components":[{"type":"lognormal","mu":0,"sigma":1}]}"#,
        )
        .unwrap();
        let l = default_length(&m, 1e-8).unwrap();
        assert!((270.0..=277.0).contains(&l), "{l}");
    }
}
