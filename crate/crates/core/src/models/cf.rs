//! Characteristic functions of the component laws, dense and in QTT form.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64 as c64;

use super::quadrature::gauss_hermite;
use crate::error::{Error, Result};
use crate::grid::{qtt_piecewise_halves, qtt_sum_of_exponentials, FrequencyGrid};
use crate::tt::{TensorTrain, Truncation};

/// `φ(ω) = Σ_k p_k e^{iω w x_k}`.
pub fn categorical_cf_dense(
    values: &[f64],
    probs: &[f64],
    weight: f64,
    omegas: &[f64],
) -> Vec<c64> {
    omegas
        .iter()
        .map(|&w| {
            values
                .iter()
                .zip(probs)
                .map(|(&x, &p)| c64::from_polar(p, w * weight * x))
                .sum()
        })
        .collect()
}

/// Categorical CF on the padded grid: raw bond `K`, then truncated.
pub fn categorical_cf_qtt(
    values: &[f64],
    probs: &[f64],
    weight: f64,
    freq: &FrequencyGrid,
    policy: &Truncation,
) -> Result<TensorTrain> {
    let coeffs: Vec<c64> = probs.iter().map(|&p| c64::new(p, 0.0)).collect();
    let rates: Vec<c64> = values.iter().map(|&x| c64::new(0.0, weight * x)).collect();
    qtt_sum_of_exponentials(&freq.grid(), &coeffs, &rates)?.truncate(policy)
}

/// `exp(iμω − σ²ω²/2)`.
pub fn gaussian_cf(mean: f64, variance: f64, omegas: &[f64]) -> Vec<c64> {
    omegas
        .iter()
        .map(|&w| c64::from_polar((-0.5 * variance * w * w).exp(), mean * w))
        .collect()
}

/// Quadrature form of the lognormal CF for `ω ≥ 0`: `φ(ω) = Σ_k c_k e^{r_k ω}`.
#[derive(Debug, Clone)]
pub struct LognormalTerms {
    pub coeffs: Vec<c64>,
    pub rates: Vec<f64>,
}

impl LognormalTerms {
    /// Gauss–Hermite discretization of the rotated-contour integral for `wY`,
    /// `log Y ~ N(μ, σ²)`. The phase weights are normalized by their sum so
    /// that `φ(0) = 1` holds exactly at every node count.
    pub fn new(mu: f64, sigma: f64, weight: f64, nodes: usize) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!(
                "lognormal sigma must be positive, got {sigma}"
            )));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::invalid(format!(
                "lognormal weight must be positive, got {weight}"
            )));
        }
        if !mu.is_finite() {
            return Err(Error::invalid("lognormal mu must be finite"));
        }
        let (z, v) = gauss_hermite(nodes)?;
        let raw: Vec<c64> = z
            .iter()
            .zip(&v)
            .map(|(&zk, &vk)| c64::from_polar(vk, -PI * zk / (SQRT_2 * sigma)))
            .collect();
        let total: c64 = raw.iter().sum();
        if total.norm() == 0.0 || !total.re.is_finite() {
            return Err(Error::NumericFailure(
                "lognormal quadrature normalization vanished".into(),
            ));
        }
        let scale = weight * mu.exp();
        Ok(LognormalTerms {
            coeffs: raw.iter().map(|c| c / total).collect(),
            rates: z
                .iter()
                .map(|&zk| -scale * (SQRT_2 * sigma * zk).exp())
                .collect(),
        })
    }

    pub fn eval(&self, omega: f64) -> c64 {
        let w = omega.abs();
        let v: c64 = self
            .coeffs
            .iter()
            .zip(&self.rates)
            .map(|(c, r)| c * (r * w).exp())
            .sum();
        if omega < 0.0 {
            v.conj()
        } else {
            v
        }
    }
}

/// Lognormal CF at arbitrary frequencies (Hermitian reflection for `ω < 0`).
pub fn lognormal_cf_dense(
    mu: f64,
    sigma: f64,
    weight: f64,
    omegas: &[f64],
    nodes: usize,
) -> Result<Vec<c64>> {
    let t = LognormalTerms::new(mu, sigma, weight, nodes)?;
    Ok(omegas.iter().map(|&w| t.eval(w)).collect())
}

/// Lognormal CF on the padded grid: exponential sums on each half, joined and truncated.
pub fn lognormal_cf_qtt(
    mu: f64,
    sigma: f64,
    weight: f64,
    freq: &FrequencyGrid,
    nodes: usize,
    policy: &Truncation,
) -> Result<TensorTrain> {
    let t = LognormalTerms::new(mu, sigma, weight, nodes)?;
    let (lower, upper) = freq.halves();
    let rates: Vec<c64> = t.rates.iter().map(|&r| c64::new(r, 0.0)).collect();
    let pos = qtt_sum_of_exponentials(&upper, &t.coeffs, &rates)?.truncate(policy)?;
    let conj: Vec<c64> = t.coeffs.iter().map(|c| c.conj()).collect();
    let neg_rates: Vec<c64> = rates.iter().map(|r| -r).collect();
    let neg = qtt_sum_of_exponentials(&lower, &conj, &neg_rates)?.truncate(policy)?;
    qtt_piecewise_halves(&neg, &pos)?.truncate(policy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn categorical_examples() {
        let w = [0.0, 0.7, -1.3, 5.0];
        let cf = categorical_cf_dense(&[0.0, 1.0], &[0.7, 0.3], 1.0, &w);
        for (z, &om) in cf.iter().zip(&w) {
            assert!((z - (0.7 + c64::from_polar(0.3, om))).norm() < 1e-15);
        }
        assert!(
            (categorical_cf_dense(&[0.2, 3.0, 7.0], &[0.2, 0.5, 0.3], 0.4, &[0.0])[0] - 1.0).norm()
                < 1e-15
        );
    }

    #[test]
    fn categorical_qtt_matches_dense() {
        let freq = FrequencyGrid::new(9, 1.0).unwrap();
        let (vals, probs) = ([0.0, 0.25, 0.6, 1.0], [0.1, 0.4, 0.3, 0.2]);
        let tt =
            categorical_cf_qtt(&vals, &probs, 0.5, &freq, &Truncation::relative(1e-13)).unwrap();
        let want = categorical_cf_dense(&vals, &probs, 0.5, &freq.omegas());
        let err = tt
            .to_dense()
            .unwrap()
            .iter()
            .zip(&want)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn gaussian_examples() {
        assert_eq!(gaussian_cf(0.3, 2.0, &[0.0])[0], c64::new(1.0, 0.0));
        assert!((gaussian_cf(0.0, 1.0, &[1.0])[0] - (-0.5f64).exp()).norm() < 1e-16);
    }

    #[test]
    fn lognormal_axioms() {
        for k in [1usize, 2, 7, 45] {
            let t = LognormalTerms::new(0.4, 1.3, 0.8, k).unwrap();
            assert!((t.eval(0.0) - 1.0).norm() < 1e-15);
        }
        let v = lognormal_cf_dense(0.0, 1.0, 1.0, &[0.7, -0.7, 3.0, -3.0], 45).unwrap();
        assert!((v[0] - v[1].conj()).norm() < 1e-14);
        assert!((v[2] - v[3].conj()).norm() < 1e-14);
        assert!(v.iter().all(|z| z.norm() <= 1.0 + 1e-12));
        assert!(LognormalTerms::new(0.0, 0.0, 1.0, 45).is_err());
        assert!(LognormalTerms::new(0.0, -1.0, 1.0, 45).is_err());
    }

    #[test]
    fn lognormal_45_nodes_agree_with_high_order_rule() {
        // 45 nodes resolve ω ≤ 1 to 1e-8; at ω = 5 the rule itself is only good to ~1.4e-7
        let w = [0.5, 1.0, 5.0];
        let lo = lognormal_cf_dense(0.0, 1.0, 1.0, &w, 45).unwrap();
        let mid = lognormal_cf_dense(0.0, 1.0, 1.0, &w, 100).unwrap();
        let hi = lognormal_cf_dense(0.0, 1.0, 1.0, &w, 200).unwrap();
        let tol = [1e-8, 1e-8, 2e-7];
        for i in 0..3 {
            assert!(
                (lo[i] - hi[i]).norm() < tol[i] * hi[i].norm(),
                "{} vs {}",
                lo[i],
                hi[i]
            );
            assert!((mid[i] - hi[i]).norm() < 1e-11 * hi[i].norm());
        }
    }

    #[test]
    fn lognormal_small_frequency_matches_moments() {
        // φ(ω) ≈ 1 + iωE[Y] − ω²E[Y²]/2 for small ω
        let (mu, sigma) = (0.2, 0.6);
        let (m1, m2) = (
            (mu + sigma * sigma / 2.0f64).exp(),
            (2.0 * mu + 2.0 * sigma * sigma).exp(),
        );
        let om = 1e-4;
        let v = lognormal_cf_dense(mu, sigma, 1.0, &[om], 45).unwrap()[0];
        let want = c64::new(1.0 - om * om * m2 / 2.0, om * m1);
        assert!((v - want).norm() < 1e-10, "{v} vs {want}");
    }

    #[test]
    fn lognormal_qtt_matches_dense() {
        let freq = FrequencyGrid::new(10, 30.0).unwrap();
        let tt = lognormal_cf_qtt(0.0, 1.0, 1.0, &freq, 45, &Truncation::relative(1e-12)).unwrap();
        let want = lognormal_cf_dense(0.0, 1.0, 1.0, &freq.omegas(), 45).unwrap();
        let got = tt.to_dense().unwrap();
        let err = got
            .iter()
            .zip(&want)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
        assert!((got[freq.half_len()] - 1.0).norm() < 1e-10);
    }
}
