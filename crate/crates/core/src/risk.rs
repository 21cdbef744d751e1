//! Value at Risk by binary search over the CDF digits and Expected Shortfall
//! by masked trapezoidal quadrature, on dense or QTT reconstructions.

use std::time::Instant;

use num_complex::Complex64 as c64;
use serde::Serialize;

use crate::engine::{Approximation, Payload, Quantity, Representation};
use crate::error::{Error, Result};
use crate::grid::{qtt_step, GridSpec, StepSense};
use crate::tt::{TensorTrain, Truncation, DEFAULT_DENSE_CAP};

/// Leftmost digit string whose CDF value is at least `α`.
///
/// Right environments `R_k = A_k¹ R_{k+1}` hold the contraction through the
/// all-ones suffix, so the probe `L·A_k⁰·R_{k+1}` is the CDF at the last point
/// of the lower subtree. Cost is `O(n χ²)`.
pub fn qtt_quantile(cdf: &TensorTrain, alpha: f64) -> Result<Vec<usize>> {
    if cdf.physical_dims().iter().any(|&d| d != 2) {
        return Err(Error::invalid("quantile search needs a binary train"));
    }
    let cores = cdf.cores();
    let n = cores.len();
    // R_k[a] = Σ_b A_k^1[a, b] R_{k+1}[b]
    let mut right = vec![vec![c64::new(1.0, 0.0)]; n + 1];
    for k in (0..n).rev() {
        let c = &cores[k];
        right[k] = (0..c.left())
            .map(|a| {
                (0..c.right())
                    .map(|b| c.get(a, 1, b) * right[k + 1][b])
                    .sum()
            })
            .collect();
    }
    // L·A_k^s as a row vector
    let step = |left: &[c64], k: usize, s: usize| -> Vec<c64> {
        let c = &cores[k];
        (0..c.right())
            .map(|b| (0..c.left()).map(|a| left[a] * c.get(a, s, b)).sum())
            .collect()
    };
    let mut left = vec![c64::new(1.0, 0.0)];
    let mut digits = Vec::with_capacity(n);
    for k in 0..n {
        let l0 = step(&left, k, 0);
        let y: c64 = l0.iter().zip(&right[k + 1]).map(|(a, b)| a * b).sum();
        if y.re >= alpha {
            digits.push(0);
            left = l0;
        } else {
            digits.push(1);
            left = step(&left, k, 1);
        }
    }
    Ok(digits)
}

/// Dense counterpart of [`qtt_quantile`]: the same digit-by-digit probes.
pub fn dense_quantile(values: &[f64], alpha: f64) -> Result<usize> {
    let len = values.len();
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::invalid("quantile search needs a power-of-two grid"));
    }
    let mut index = 0;
    let mut half = len / 2;
    while half > 0 {
        // probe the last point of the lower half of the current subtree
        if values[index + half - 1] < alpha {
            index += half;
        }
        half /= 2;
    }
    Ok(index)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!(
            "confidence level {alpha} outside (0, 1)"
        )));
    }
    Ok(())
}

fn check_cdf(cdf: &Approximation) -> Result<()> {
    if cdf.quantity != Quantity::Cdf {
        return Err(Error::invalid("risk metrics need a CDF reconstruction"));
    }
    Ok(())
}

/// `(VaR_α, grid index)` with VaR the leftmost grid point where `F ≥ α`.
pub fn value_at_risk(cdf: &Approximation, alpha: f64) -> Result<(f64, usize)> {
    check_alpha(alpha)?;
    check_cdf(cdf)?;
    let index = match &cdf.payload {
        Payload::Dense(v) => dense_quantile(v, alpha)?,
        Payload::Qtt(t) => GridSpec::digits_to_index(&qtt_quantile(t, alpha)?),
    };
    Ok((cdf.grid.point(index), index))
}

/// Newton–Cotes weights on the half-open grid: order 1 is the rectangle rule
/// `Δx`, order 2 the trapezoid rule with half weights at both ends.
pub fn quadrature_weights_qtt(grid: &GridSpec, order: usize) -> Result<TensorTrain> {
    let dx = c64::new(grid.dx(), 0.0);
    let constant = TensorTrain::constant(grid.n, dx);
    match order {
        1 => Ok(constant),
        2 => {
            let first = TensorTrain::basis(&vec![0; grid.n])?.scale(-0.5 * dx);
            let last = TensorTrain::basis(&vec![1; grid.n])?.scale(-0.5 * dx);
            constant
                .add(&first)?
                .add(&last)?
                .truncate(&Truncation::relative(0.0))
        }
        _ => Err(Error::invalid(format!(
            "unsupported quadrature order {order}"
        ))),
    }
}

/// Dense trapezoid weights matching [`quadrature_weights_qtt`] with order 2.
fn dense_tail_weights(len: usize, dx: f64, var_index: usize) -> impl Iterator<Item = (usize, f64)> {
    (var_index..len).map(move |j| {
        let w = if j == var_index || j == len - 1 {
            0.5 * dx
        } else {
            dx
        };
        // a single point carries no interval
        (j, if var_index == len - 1 { 0.0 } else { w })
    })
}

/// `ES_α = VaR_α + (1/(1−α)) ∫_{VaR}^{L} (1 − F) dx` with trapezoid half
/// weights at the VaR point and at the last grid point; mass beyond `L` is
/// taken as zero.
pub fn expected_shortfall(cdf: &Approximation, alpha: f64, var_index: usize) -> Result<f64> {
    check_alpha(alpha)?;
    check_cdf(cdf)?;
    let grid = cdf.grid;
    let len = grid.len();
    if var_index >= len {
        return Err(Error::invalid(format!(
            "VaR index {var_index} outside the grid"
        )));
    }
    let dx = grid.dx();
    let integral = match &cdf.payload {
        Payload::Dense(v) => dense_tail_weights(len, dx, var_index)
            .map(|(j, w)| w * (1.0 - v[j]))
            .sum::<f64>(),
        Payload::Qtt(f) => {
            let policy = Truncation::relative(1e-14);
            let mask = qtt_step(&grid, var_index, StepSense::AtOrAbove)?;
            let trap = quadrature_weights_qtt(&grid, 2)?;
            let mut w = mask.hadamard(&trap)?;
            let corner = TensorTrain::basis(&grid.index_to_digits(var_index))?
                .scale(c64::new(-0.5 * dx, 0.0));
            w = w.add(&corner)?.truncate(&policy)?;
            (w.sum() - w.inner(f)?).re
        }
    };
    Ok(grid.point(var_index) + integral / (1.0 - alpha))
}

/// Risk summary at one confidence level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskReport {
    pub alpha: f64,
    pub var: f64,
    pub var_index: Option<usize>,
    pub es: f64,
    pub representation: String,
    pub seconds: f64,
    /// `1 − F(L − Δx)`: mass the grid does not see, which biases ES low.
    pub tail_mass_beyond_grid: Option<f64>,
    /// Monte Carlo only: no sample lies strictly above VaR.
    pub degenerate_tail: bool,
}

impl RiskReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RiskOptions {
    /// Replace `F` by its running maximum before searching (off by default).
    pub clamp_running_max: bool,
}

fn running_max(cdf: &Approximation) -> Result<Approximation> {
    if cdf.len() > DEFAULT_DENSE_CAP {
        return Err(Error::ResourceLimit {
            what: "running-max clamp materializes the CDF".into(),
            limit: DEFAULT_DENSE_CAP,
            actual: cdf.len(),
            step: None,
        });
    }
    let mut v = cdf.values()?;
    let mut m = f64::NEG_INFINITY;
    for x in v.iter_mut() {
        m = m.max(*x);
        *x = m;
    }
    Ok(Approximation {
        payload: Payload::Dense(v),
        ..cdf.clone()
    })
}

/// VaR and ES at `α`.
pub fn risk_report(cdf: &Approximation, alpha: f64, opts: &RiskOptions) -> Result<RiskReport> {
    let start = Instant::now();
    let clamped;
    let source = if opts.clamp_running_max {
        clamped = running_max(cdf)?;
        &clamped
    } else {
        cdf
    };
    let (var, var_index) = value_at_risk(source, alpha)?;
    let es = expected_shortfall(source, alpha, var_index)?;
    let representation = match cdf.representation() {
        Representation::Dense => "dense",
        Representation::Qtt => "qtt",
    };
    Ok(RiskReport {
        alpha,
        var,
        var_index: Some(var_index),
        es,
        representation: representation.into(),
        seconds: start.elapsed().as_secs_f64(),
        tail_mass_beyond_grid: Some(1.0 - source.final_value()?),
        degenerate_tail: false,
    })
}
