//! Normal quantiles and lognormal support bounds.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

/// `Φ(x)`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// `1 − Φ(x)` without cancellation in the upper tail.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Rational initial guess for `Φ⁻¹(p)`, `p ≤ 1/2` (relative error ≈ 1e-9).
fn acklam_lower(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.38357751867269e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549671010322563,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996,
        3.754408661907416,
    ];
    if p < 0.02425 {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// `Φ⁻¹(p)`: rational guess refined by Halley steps on `erfc`.
pub fn inv_normal_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("probability {p} outside (0, 1)")));
    }
    if p > 0.5 {
        // 1 − p is exact here
        return inv_normal_cdf(1.0 - p).map(|x| -x);
    }
    let mut x = acklam_lower(p);
    for _ in 0..3 {
        let err = normal_cdf(x) - p;
        let u = err / normal_pdf(x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    Ok(x)
}

/// `b = exp(μ + σΦ⁻¹(1−δ))`: the lognormal mass above `b` is `δ`.
pub fn support_bound_single(mu: f64, sigma: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!(
            "tail tolerance {delta} outside (0, 1)"
        )));
    }
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma must be positive"));
    }
    Ok((mu + sigma * -inv_normal_cdf(delta)?).exp())
}

/// Root `b` of `Σ_d [1 − Φ((ln b − m_d)/σ_d)] = δ` with `m_d = μ_d + ln w_d`, by bisection in `ln b`.
pub fn support_bound_lognormal_sum(params: &[(f64, f64, f64)], delta: f64) -> Result<f64> {
    if params.is_empty() {
        return Err(Error::invalid("no lognormal components"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!(
            "tail tolerance {delta} outside (0, 1)"
        )));
    }
    for (d, &(_, sigma, w)) in params.iter().enumerate() {
        if !(sigma > 0.0 && w > 0.0) {
            return Err(Error::invalid(format!(
                "component {d}: lognormal needs sigma > 0 and weight > 0"
            )));
        }
    }
    let tail = |log_b: f64| -> f64 {
        params
            .iter()
            .map(|&(mu, sigma, w)| normal_sf((log_b - mu - w.ln()) / sigma))
            .sum()
    };
    let mut lo = params
        .iter()
        .map(|&(mu, _, w)| mu + w.ln())
        .fold(f64::NEG_INFINITY, f64::max);
    while tail(lo) < delta {
        lo -= std::f64::consts::LN_2;
    }
    let mut hi = lo + std::f64::consts::LN_2;
    while tail(hi) >= delta {
        lo = hi;
        hi += std::f64::consts::LN_2;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if tail(mid) >= delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (tl, th) = (tail(lo) - delta, tail(hi) - delta);
    Ok(if tl.abs() <= th.abs() { lo } else { hi }.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bisect_quantile(p: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0f64, 40.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            // compare in the tail that is accurate
            let below = if mid < 0.0 {
                normal_cdf(mid) < p
            } else {
                normal_sf(mid) > 1.0 - p
            };
            if below {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(inv_normal_cdf(0.5).unwrap(), 0.0);
        let x = inv_normal_cdf(1.0 - 1e-8).unwrap();
        assert!((x - 5.612001244174789).abs() < 1e-9, "{x}");
        for p in [1e-300, 1e-20, 1e-8, 0.01, 0.02425, 0.2, 0.4999] {
            let x = inv_normal_cdf(p).unwrap();
            if p > 1e-16 {
                assert!((x + inv_normal_cdf(1.0 - p).unwrap()).abs() < 1e-7 * x.abs());
            }
            assert!(
                (x - bisect_quantile(p)).abs() < 1e-12 * x.abs().max(1.0),
                "p={p}"
            );
        }
        assert!(inv_normal_cdf(0.0).is_err() && inv_normal_cdf(1.0).is_err());
    }

    #[test]
    fn single_bounds() {
        let b = support_bound_single(0.0, 1.0, 1e-8).unwrap();
        assert!((b - 273.0).abs() < 1.0, "{b}");
        assert!((support_bound_single(0.0, 2.0, 0.5).unwrap() - 1.0).abs() < 1e-15);
        // bisection on the lognormal survival function
        let (mu, sigma, delta) = (1.0, 2.0, 1e-6);
        let (mut lo, mut hi) = (0.0f64, 100.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if normal_sf((mid - mu) / sigma) > delta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let b = support_bound_single(mu, sigma, delta).unwrap();
        assert!((b.ln() - lo).abs() < 1e-10);
        assert!(support_bound_single(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn sum_bounds() {
        let b1 = support_bound_lognormal_sum(&[(0.3, 1.2, 0.5)], 1e-6).unwrap();
        let b2 = support_bound_single(0.3 + 0.5f64.ln(), 1.2, 1e-6).unwrap();
        assert!((b1 / b2 - 1.0).abs() < 1e-10);
        let params = [(0.2, 1.1, 0.2), (-0.7, 2.5, 0.5), (0.9, 1.7, 0.3)];
        let mut prev = f64::INFINITY;
        for delta in [1e-12, 1e-10, 1e-6, 1e-3, 0.3, 0.9] {
            let b = support_bound_lognormal_sum(&params, delta).unwrap();
            assert!(b < prev);
            prev = b;
            let resid: f64 = params
                .iter()
                .map(|&(m, s, w)| normal_sf((b.ln() - m - f64::ln(w)) / s))
                .sum::<f64>()
                - delta;
            assert!(resid.abs() < 1e-10 * delta, "delta={delta} resid={resid}");
        }
    }
}
