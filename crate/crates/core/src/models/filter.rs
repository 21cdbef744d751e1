//! Spectral filters `σ(η)` on the normalized frequency `η = ω/Ω`.

use std::f64::consts::PI;

use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{qtt_chebyshev, qtt_sum_of_exponentials, FrequencyGrid};
use crate::tt::{TensorTrain, Truncation};

/// `α` for the exponential filter: `e^{−α} = ε_machine`.
pub fn default_exponential_alpha() -> f64 {
    -f64::EPSILON.ln()
}

/// Tolerance for the algebraic filter constructions.
const FILTER_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FilterSpec {
    #[default]
    None,
    /// `(1 + cos πη)/2`, order 2.
    RaisedCosine,
    /// `σ_rc⁴(35 − 84σ_rc + 70σ_rc² − 20σ_rc³)`, order 8.
    SharpenedRaisedCosine,
    /// `e^{−αη²}`.
    Exponential {
        #[serde(default = "default_exponential_alpha")]
        alpha: f64,
    },
}

impl FilterSpec {
    pub fn exponential() -> Self {
        FilterSpec::Exponential {
            alpha: default_exponential_alpha(),
        }
    }

    /// Parse a short name: `none`, `rc`, `src`, `exp`.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "none" => Ok(FilterSpec::None),
            "rc" | "raised_cosine" => Ok(FilterSpec::RaisedCosine),
            "src" | "sharpened_raised_cosine" => Ok(FilterSpec::SharpenedRaisedCosine),
            "exp" | "exponential" => Ok(FilterSpec::exponential()),
            other => Err(Error::invalid(format!("unknown filter kind '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FilterSpec::None => "none",
            FilterSpec::RaisedCosine => "rc",
            FilterSpec::SharpenedRaisedCosine => "src",
            FilterSpec::Exponential { .. } => "exp",
        }
    }

    /// Filter order `q` (`None` for the exponential and identity filters).
    pub fn order(&self) -> Option<usize> {
        match self {
            FilterSpec::RaisedCosine => Some(2),
            FilterSpec::SharpenedRaisedCosine => Some(8),
            _ => None,
        }
    }

    pub fn eval(&self, eta: f64) -> f64 {
        let rc = |e: f64| 0.5 * (1.0 + (PI * e).cos());
        match *self {
            FilterSpec::None => 1.0,
            FilterSpec::RaisedCosine => rc(eta),
            FilterSpec::SharpenedRaisedCosine => {
                let r = rc(eta);
                (r.powi(4) * (35.0 + r * (-84.0 + r * (70.0 - 20.0 * r)))).clamp(0.0, 1.0)
            }
            FilterSpec::Exponential { alpha } => (-alpha * eta * eta).exp(),
        }
    }
}

pub fn filter_eval(spec: &FilterSpec, etas: &[f64]) -> Vec<f64> {
    etas.iter().map(|&e| spec.eval(e)).collect()
}

/// Filter samples on the padded frequency grid, as a dense vector.
pub fn filter_dense(spec: &FilterSpec, freq: &FrequencyGrid) -> Vec<c64> {
    freq.omegas()
        .iter()
        .map(|&w| c64::new(spec.eval(w / freq.omega_max), 0.0))
        .collect()
}

/// Filter samples on the padded frequency grid as a tensor train.
///
/// The raised cosine is exact with three exponentials, the sharpened variant
/// is a Horner evaluation in Hadamard products, and the exponential filter
/// goes through a Chebyshev expansion.
pub fn filter_qtt(spec: &FilterSpec, freq: &FrequencyGrid) -> Result<TensorTrain> {
    let grid = freq.grid();
    let policy = Truncation::relative(FILTER_TOLERANCE);
    let rc = || -> Result<TensorTrain> {
        let k = c64::new(0.0, PI / freq.omega_max);
        qtt_sum_of_exponentials(
            &grid,
            &[c64::new(0.5, 0.0), c64::new(0.25, 0.0), c64::new(0.25, 0.0)],
            &[c64::new(0.0, 0.0), k, -k],
        )?
        .truncate(&policy)
    };
    match *spec {
        FilterSpec::None => Ok(TensorTrain::constant(grid.n, c64::new(1.0, 0.0))),
        FilterSpec::RaisedCosine => rc(),
        FilterSpec::SharpenedRaisedCosine => {
            let r = rc()?;
            let n = grid.n;
            let constant = |v: f64| TensorTrain::constant(n, c64::new(v, 0.0));
            let mut poly = constant(-20.0);
            for c in [70.0, -84.0, 35.0] {
                poly = poly.hadamard(&r)?.add(&constant(c))?.truncate(&policy)?;
            }
            let r2 = r.hadamard(&r)?.truncate(&policy)?;
            let r4 = r2.hadamard(&r2)?.truncate(&policy)?;
            r4.hadamard(&poly)?.truncate(&policy)
        }
        FilterSpec::Exponential { alpha } => {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(Error::invalid("exponential filter needs a positive alpha"));
            }
            let om = freq.omega_max;
            let f = move |w: f64| c64::new((-alpha * (w / om) * (w / om)).exp(), 0.0);
            Ok(qtt_chebyshev(&grid, &f, 1024, FILTER_TOLERANCE)?.tt)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_values() {
        let rc = FilterSpec::RaisedCosine;
        assert_eq!(rc.eval(0.0), 1.0);
        assert!(rc.eval(1.0).abs() < 1e-16 && rc.eval(-1.0).abs() < 1e-16);
        let src = FilterSpec::SharpenedRaisedCosine;
        assert!((src.eval(0.0) - 1.0).abs() < 1e-15);
        assert!(src.eval(1.0).abs() < 1e-15);
        let e = FilterSpec::exponential();
        assert!(e.eval(1.0) <= 2.0 * f64::EPSILON && e.eval(1.0) >= 0.5 * f64::EPSILON);
        assert!((default_exponential_alpha() - 36.04365338911715).abs() < 1e-12);
    }

    #[test]
    fn sharpened_filter_stays_in_unit_interval() {
        let src = FilterSpec::SharpenedRaisedCosine;
        for i in 0..=10_000 {
            let eta = -1.0 + 2.0 * i as f64 / 10_000.0;
            let v = src.eval(eta);
            assert!((-1e-15..=1.0 + 1e-15).contains(&v), "eta={eta} v={v}");
        }
    }

    #[test]
    fn sharpened_filter_is_flat_at_origin() {
        let src = FilterSpec::SharpenedRaisedCosine;
        let h = 1e-2;
        let binom =
            |l: usize, k: usize| (0..k).fold(1.0, |acc, i| acc * (l - i) as f64 / (i + 1) as f64);
        for l in 1..=3usize {
            let d: f64 = (0..=l)
                .map(|k| {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    sign * binom(l, k) * src.eval((l as f64 / 2.0 - k as f64) * h)
                })
                .sum::<f64>()
                / h.powi(l as i32);
            assert!(d.abs() < 1e-6, "order {l}: {d}");
        }
        // orders 4..7: 1 − σ(η) must scale as η⁸ with the analytic constant 35(π²/4)⁴
        let c8 = 35.0 * (PI * PI / 4.0).powi(4);
        for eta in [0.04, 0.03, 0.02] {
            let ratio = (1.0 - src.eval(eta)) / eta.powi(8);
            assert!((ratio / c8 - 1.0).abs() < 0.05, "eta={eta} ratio={ratio}");
        }
        let rc = FilterSpec::RaisedCosine;
        let d2 = (rc.eval(h) - 2.0 * rc.eval(0.0) + rc.eval(-h)) / (h * h);
        assert!(d2.abs() > 1.0);
    }

    #[test]
    fn qtt_filters_match_pointwise() {
        let freq = FrequencyGrid::new(9, 1.0).unwrap();
        for spec in [
            FilterSpec::None,
            FilterSpec::RaisedCosine,
            FilterSpec::SharpenedRaisedCosine,
            FilterSpec::exponential(),
        ] {
            let tt = filter_qtt(&spec, &freq).unwrap();
            let want = filter_dense(&spec, &freq);
            let got = tt.to_dense().unwrap();
            let err = got
                .iter()
                .zip(&want)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-10, "{spec:?}: {err}");
            if spec == FilterSpec::RaisedCosine {
                assert!(tt.max_bond() <= 3);
            }
        }
    }

    #[test]
    fn json_and_names() {
        let f: FilterSpec = serde_json::from_str(r#"{"kind":"exponential"}"#).unwrap();
        assert_eq!(f, FilterSpec::exponential());
        let f: FilterSpec = serde_json::from_str(r#"{"kind":"raised_cosine"}"#).unwrap();
        assert_eq!(f.order(), Some(2));
        assert_eq!(FilterSpec::from_name("src").unwrap().order(), Some(8));
        assert!(FilterSpec::from_name("lanczos").is_err());
        assert!(serde_json::from_str::<FilterSpec>(r#"{"kind":"lanczos"}"#).is_err());
    }
}
