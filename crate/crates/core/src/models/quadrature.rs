//! Gauss–Hermite rules from the eigen-decomposition of the Jacobi matrix.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Largest supported rule.
pub const MAX_NODES: usize = 200;

/// Nodes and weights for `∫ e^{−z²} g(z) dz ≈ Σ v_k g(z_k)`, nodes ascending.
pub fn gauss_hermite(k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if k == 0 || k > MAX_NODES {
        return Err(Error::invalid(format!(
            "Gauss-Hermite node count {k} outside 1..={MAX_NODES}"
        )));
    }
    let mut d = vec![0.0; k];
    // off-diagonal of the Hermite Jacobi matrix, e[i] couples i and i+1
    let mut e: Vec<f64> = (1..=k).map(|i| (i as f64 / 2.0).sqrt()).collect();
    e[k - 1] = 0.0;
    let mut z0 = vec![0.0; k];
    z0[0] = 1.0;
    symmetric_tridiagonal_ql(&mut d, &mut e, &mut z0)?;
    let mut pairs: Vec<(f64, f64)> = d
        .into_iter()
        .zip(z0)
        .map(|(x, v)| (x, PI.sqrt() * v * v))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // enforce exact symmetry about zero
    for i in 0..k / 2 {
        let j = k - 1 - i;
        let node = 0.5 * (pairs[j].0 - pairs[i].0);
        let weight = 0.5 * (pairs[i].1 + pairs[j].1);
        pairs[i] = (-node, weight);
        pairs[j] = (node, weight);
    }
    if k % 2 == 1 {
        pairs[k / 2].0 = 0.0;
    }
    Ok(pairs.into_iter().unzip())
}

/// Implicit QL with Wilkinson shifts; `z0` is rotated like the first row of the eigenvector matrix.
fn symmetric_tridiagonal_ql(d: &mut [f64], e: &mut [f64], z0: &mut [f64]) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NumericFailure(
                    "tridiagonal eigen-solver did not converge".into(),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let f = z0[i + 1];
                z0[i + 1] = s * z0[i] + c * f;
                z0[i] = c * z0[i] - s * f;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
