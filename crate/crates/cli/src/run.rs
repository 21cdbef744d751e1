//! `run` and `risk` commands.

use std::fs;
use std::path::Path;
use std::time::Instant;

use qttagg::baselines::{
    exact_cdf, mc_cdf, mc_sample, mc_var_es, recursive_convolution, DEFAULT_SUPPORT_CAP,
};
use qttagg::engine::{
    dense_spectral_cdf, dense_spectral_pdf, qtt_spectral_cdf, qtt_spectral_pdf, Approximation,
};
use qttagg::grid::GridSpec;
use qttagg::risk::{risk_report, RiskOptions, RiskReport};
use serde_json::{json, Value};

use crate::config::{Method, Resolved};
use crate::CliError;

/// Write through a temporary sibling so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| CliError::Io(format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_series(
    path: &Path,
    header: [&str; 2],
    xs: &[f64],
    ys: &[f64],
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(Vec::with_capacity(xs.len() * 40));
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(io)?;
    for (x, y) in xs.iter().zip(ys) {
        w.write_record([x.to_string(), y.to_string()]).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    write_atomic(path, &bytes)
}

fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("json value serializes");
    write_atomic(path, text.as_bytes())
}

struct Outcome {
    cdf: Option<(Vec<f64>, Vec<f64>)>,
    density: Option<(Vec<f64>, Vec<f64>)>,
    risk: Vec<RiskReport>,
    diagnostics: Value,
}

fn spectral(r: &Resolved, want_cdf: bool) -> Result<Outcome, CliError> {
    let c = &r.config;
    let opts = r.pipeline_options()?;
    let (cdf, pdf): (Approximation, Option<Approximation>) = match c.method {
        Method::Dense => (
            dense_spectral_cdf(&r.model, c.n, r.length, &opts)?,
            if c.density {
                Some(dense_spectral_pdf(&r.model, c.n, r.length, &opts)?)
            } else {
                None
            },
        ),
        _ => (
            qtt_spectral_cdf(&r.model, c.n, r.length, &opts)?,
            if c.density {
                Some(qtt_spectral_pdf(&r.model, c.n, r.length, &opts)?)
            } else {
                None
            },
        ),
    };
    let risk_opts = RiskOptions {
        clamp_running_max: c.clamp_running_max,
    };
    let risk = c
        .alpha
        .iter()
        .map(|&a| risk_report(&cdf, a, &risk_opts))
        .collect::<Result<Vec<_>, _>>()?;
    let xs = cdf.grid.points();
    let cdf_values = if want_cdf {
        Some((xs.clone(), cdf.values()?))
    } else {
        None
    };
    let density = match &pdf {
        Some(p) => Some((xs, p.values()?)),
        None => None,
    };
    let diagnostics = json!({
        "status": "ok",
        "method": c.method.name(),
        "cdf": cdf.diagnostics,
        "density": pdf.as_ref().map(|p| &p.diagnostics),
    });
    Ok(Outcome {
        cdf: cdf_values,
        density,
        risk,
        diagnostics,
    })
}

fn monte_carlo(r: &Resolved, want_cdf: bool) -> Result<Outcome, CliError> {
    let c = &r.config;
    let start = Instant::now();
    let samples = mc_sample(&r.model, c.samples.expect("validated"), c.seed)?;
    let sampling = start.elapsed().as_secs_f64();
    let risk = c
        .alpha
        .iter()
        .map(|&a| mc_var_es(&samples, a))
        .collect::<Result<Vec<_>, _>>()?;
    let cdf = if want_cdf {
        let xs = GridSpec::unit(r.length, c.n)?.points();
        let (f, _) = mc_cdf(&samples, &xs);
        Some((xs, f))
    } else {
        None
    };
    Ok(Outcome {
        cdf,
        density: None,
        risk,
        diagnostics: json!({
            "status": "ok",
            "method": "mc",
            "samples": samples.len(),
            "seed": samples.seed,
            "n": c.n,
            "length": r.length,
            "sampling_seconds": sampling,
            "wall_seconds": start.elapsed().as_secs_f64(),
        }),
    })
}

fn convolution(r: &Resolved, want_cdf: bool) -> Result<Outcome, CliError> {
    let c = &r.config;
    let start = Instant::now();
    let dist = recursive_convolution(&r.model, DEFAULT_SUPPORT_CAP)?;
    let mut risk = Vec::with_capacity(c.alpha.len());
    for &alpha in &c.alpha {
        let t = Instant::now();
        let (var, es) = dist.var_es(alpha)?;
        risk.push(RiskReport {
            alpha,
            var,
            var_index: None,
            es,
            representation: "rc".into(),
            seconds: t.elapsed().as_secs_f64(),
            tail_mass_beyond_grid: None,
            degenerate_tail: false,
        });
    }
    let cdf = if want_cdf {
        let xs = GridSpec::unit(r.length, c.n)?.points();
        let f = exact_cdf(&dist, &xs);
        Some((xs, f))
    } else {
        None
    };
    write_atomic(&r.output.join("support.csv"), dist.to_csv()?.as_bytes())?;
    Ok(Outcome {
        cdf,
        density: None,
        risk,
        diagnostics: json!({
            "status": "ok",
            "method": "rc",
            "support_size": dist.len(),
            "n": c.n,
            "length": r.length,
            "wall_seconds": start.elapsed().as_secs_f64(),
        }),
    })
}

fn error_diagnostics(r: &Resolved, err: &CliError) -> Value {
    let (kind, step) = match err {
        CliError::Core(qttagg::Error::ResourceLimit { step, .. }) => ("resource_limit", *step),
        CliError::Core(
            qttagg::Error::NumericFailure(_) | qttagg::Error::ConvergenceFailure { .. },
        ) => ("numeric_failure", None),
        CliError::Io(_) => ("io", None),
        _ => ("invalid_argument", None),
    };
    json!({
        "status": "error",
        "method": r.config.method.name(),
        "n": r.config.n,
        "length": r.length,
        "kind": kind,
        "step": step,
        "error": err.to_string(),
    })
}

/// Shared driver for `run` (all outputs) and `risk` (risk and diagnostics only).
pub fn execute(r: &Resolved, full: bool) -> Result<(), CliError> {
    fs::create_dir_all(&r.output)
        .map_err(|e| CliError::Io(format!("{}: {e}", r.output.display())))?;
    let result = match r.config.method {
        Method::Dense | Method::Qtt => spectral(r, full),
        Method::Mc => monte_carlo(r, full),
        Method::Rc => convolution(r, full),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            write_json(
                &r.output.join("diagnostics.json"),
                &error_diagnostics(r, &e),
            )?;
            return Err(e);
        }
    };
    if let Some((xs, f)) = &outcome.cdf {
        write_series(&r.output.join("cdf.csv"), ["x", "F"], xs, f)?;
    }
    if let Some((xs, f)) = &outcome.density {
        write_series(&r.output.join("density.csv"), ["x", "f"], xs, f)?;
    }
    let risk = serde_json::to_value(&outcome.risk).expect("reports serialize");
    write_json(&r.output.join("risk.json"), &risk)?;
    write_json(&r.output.join("diagnostics.json"), &outcome.diagnostics)
}
