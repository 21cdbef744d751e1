//! Uniform binary grids and exact or spectral QTT constructors on them.
//!
//! Grid point of the digit string `(s₁,…,s_n)` is `a + (b−a)·Σ s_i 2^{−i}`,
//! with `s₁` the most significant digit, so the points cover `[a, b−Δx]`.

use std::f64::consts::PI;

use num_complex::Complex64 as c64;

use crate::error::{Error, Result};
use crate::tt::{Core, TensorTrain, Truncation};

const ZERO: c64 = c64::new(0.0, 0.0);
const ONE: c64 = c64::new(1.0, 0.0);

/// Half-open interval `[a, b)` sampled at `2ⁿ` equispaced points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::invalid(format!(
                "grid needs finite a < b, got [{a}, {b})"
            )));
        }
        if n == 0 || n > 62 {
            return Err(Error::invalid(format!(
                "core count {n} out of range 1..=62"
            )));
        }
        Ok(GridSpec { a, b, n })
    }

    /// Spatial grid `[0, L)`.
    pub fn unit(length: f64, n: usize) -> Result<Self> {
        GridSpec::new(0.0, length, n)
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn len(&self) -> usize {
        1usize << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.len() as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        self.a + j as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.point(j)).collect()
    }

    /// `h_i = (b−a)·2^{−i}` for `i = 1..n`.
    fn digit_steps(&self) -> Vec<f64> {
        (1..=self.n)
            .map(|i| self.length() * 0.5f64.powi(i as i32))
            .collect()
    }

    /// Grid point of a big-endian digit string.
    pub fn index_to_point(&self, digits: &[usize]) -> Result<f64> {
        if digits.len() != self.n {
            return Err(Error::invalid(format!(
                "expected {} digits, got {}",
                self.n,
                digits.len()
            )));
        }
        let mut x = self.a;
        for (&s, h) in digits.iter().zip(self.digit_steps()) {
            match s {
                0 => {}
                1 => x += h,
                _ => return Err(Error::invalid("binary digit out of range")),
            }
        }
        Ok(x)
    }

    pub fn index_to_digits(&self, j: usize) -> Vec<usize> {
        (0..self.n).map(|k| (j >> (self.n - 1 - k)) & 1).collect()
    }

    pub fn digits_to_index(digits: &[usize]) -> usize {
        digits.iter().fold(0, |acc, &s| 2 * acc + s)
    }
}

/// Zero-padded centered frequency grid for an `n`-core spatial grid of length `L`.
///
/// `Ω = πN/L`, `Δω = Ω/N`, `ω_k = −Ω + kΔω` for `k = 0..2N`; index `N` is `ω = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub omega_max: f64,
    pub n_pad: usize,
}

impl FrequencyGrid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::invalid("support length must be positive"));
        }
        if n == 0 || n > 61 {
            return Err(Error::invalid(format!(
                "core count {n} out of range 1..=61"
            )));
        }
        let big_n = (1usize << n) as f64;
        Ok(FrequencyGrid {
            omega_max: PI * big_n / length,
            n_pad: n + 1,
        })
    }

    /// Number of unpadded spatial points `N`.
    pub fn half_len(&self) -> usize {
        1usize << (self.n_pad - 1)
    }

    pub fn len(&self) -> usize {
        1usize << self.n_pad
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn d_omega(&self) -> f64 {
        self.omega_max / self.half_len() as f64
    }

    pub fn omega(&self, k: usize) -> f64 {
        -self.omega_max + k as f64 * self.d_omega()
    }

    pub fn omegas(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.omega(k)).collect()
    }

    /// The same points as a [`GridSpec`] on `[−Ω, Ω)`.
    pub fn grid(&self) -> GridSpec {
        GridSpec {
            a: -self.omega_max,
            b: self.omega_max,
            n: self.n_pad,
        }
    }

    /// Lower half `[−Ω, 0)` and upper half `[0, Ω)` as `(n_pad−1)`-core grids.
    pub fn halves(&self) -> (GridSpec, GridSpec) {
        let m = self.n_pad - 1;
        (
            GridSpec {
                a: -self.omega_max,
                b: 0.0,
                n: m,
            },
            GridSpec {
                a: 0.0,
                b: self.omega_max,
                n: m,
            },
        )
    }
}

/// Per-digit factors of `e^{λx}` and the prefactor, anchored so no factor exceeds one in modulus.
fn exponential_factors(grid: &GridSpec, lambda: c64) -> (c64, Vec<[c64; 2]>) {
    let steps = grid.digit_steps();
    if lambda.re <= 0.0 {
        let factors = steps.iter().map(|&h| [ONE, (lambda * h).exp()]).collect();
        (lambda * grid.a, factors)
    } else {
        // anchor at the last grid point: x = x_top − Σ h_i (1 − s_i)
        let top = grid.b - grid.dx();
        let factors = steps.iter().map(|&h| [(-lambda * h).exp(), ONE]).collect();
        (lambda * top, factors)
    }
}

/// Rank-1 train with entries `c·e^{λx_j}`.
pub fn qtt_exponential(grid: &GridSpec, c: c64, lambda: c64) -> TensorTrain {
    let (log_pre, factors) = exponential_factors(grid, lambda);
    let pre = c * log_pre.exp();
    let mut cores: Vec<Core> = factors.iter().map(|f| Core::from_values(f)).collect();
    let first: Vec<c64> = factors[0].iter().map(|z| z * pre).collect();
    cores[0] = Core::from_values(&first);
    TensorTrain::new(cores).expect("rank-1 cores")
}

/// Entries `Σ_k c_k e^{λ_k x_j}` with raw bond `K` (block-diagonal cores).
pub fn qtt_sum_of_exponentials(
    grid: &GridSpec,
    coeffs: &[c64],
    rates: &[c64],
) -> Result<TensorTrain> {
    let k = coeffs.len();
    if k == 0 || rates.len() != k {
        return Err(Error::invalid(
            "need equally many (at least one) coefficients and rates",
        ));
    }
    let n = grid.n;
    let terms: Vec<(c64, Vec<[c64; 2]>)> = coeffs
        .iter()
        .zip(rates)
        .map(|(&c, &l)| {
            let (log_pre, f) = exponential_factors(grid, l);
            (c * log_pre.exp(), f)
        })
        .collect();
    if n == 1 {
        let mut v = [ZERO; 2];
        for (pre, f) in &terms {
            v[0] += pre * f[0][0];
            v[1] += pre * f[0][1];
        }
        return TensorTrain::new(vec![Core::from_values(&v)]);
    }
    let mut cores = Vec::with_capacity(n);
    for i in 0..n {
        let l = if i == 0 { 1 } else { k };
        let r = if i == n - 1 { 1 } else { k };
        let mut core = Core::zeros(l, 2, r);
        for (t, (pre, f)) in terms.iter().enumerate() {
            for (s, &fs) in f[i].iter().enumerate() {
                let v = if i == 0 { pre * fs } else { fs };
                let (a, b) = (if i == 0 { 0 } else { t }, if i == n - 1 { 0 } else { t });
                core.set(a, s, b, v);
            }
        }
        cores.push(core);
    }
    TensorTrain::new(cores)
}

/// Which side of the threshold index a step selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepSense {
    AtOrAbove,
    Below,
}

/// Indicator of `{j ≥ j₀}` or `{j < j₀}` with bond at most 2.
///
/// Built from a two-state digit comparator scanning from the most
/// significant digit: state 0 means "equal to j₀ so far", state 1 means
/// "already decided in favour of the selected side".
pub fn qtt_step(grid: &GridSpec, threshold: usize, sense: StepSense) -> Result<TensorTrain> {
    let n = grid.n;
    let big_n = grid.len();
    if threshold > big_n {
        return Err(Error::invalid(format!(
            "threshold index {threshold} exceeds grid size {big_n}"
        )));
    }
    if threshold == big_n {
        let fill = match sense {
            StepSense::AtOrAbove => ZERO,
            StepSense::Below => ONE,
        };
        return Ok(TensorTrain::constant(n, fill));
    }
    let bits = grid.index_to_digits(threshold);
    // transition[s][from][to]
    let transition = |t: usize, s: usize| -> [[c64; 2]; 2] {
        let mut m = [[ZERO; 2]; 2];
        m[1][1] = ONE;
        let wins = match sense {
            StepSense::AtOrAbove => s > t,
            StepSense::Below => s < t,
        };
        if s == t {
            m[0][0] = ONE;
        } else if wins {
            m[0][1] = ONE;
        }
        m
    };
    let accept = match sense {
        StepSense::AtOrAbove => [ONE, ONE],
        StepSense::Below => [ZERO, ONE],
    };
    let mut cores = Vec::with_capacity(n);
    for (i, &t) in bits.iter().enumerate() {
        let l = if i == 0 { 1 } else { 2 };
        let r = if i == n - 1 { 1 } else { 2 };
        let mut core = Core::zeros(l, 2, r);
        for s in 0..2 {
            let m = transition(t, s);
            for (from, row) in m.iter().enumerate() {
                if i == 0 && from != 0 {
                    continue;
                }
                for (to, &acc) in accept.iter().enumerate() {
                    let v = if i == n - 1 { row[to] * acc } else { row[to] };
                    let a = if i == 0 { 0 } else { from };
                    let b = if i == n - 1 { 0 } else { to };
                    let cur = core.get(a, s, b);
                    core.set(a, s, b, cur + v);
                }
            }
        }
        cores.push(core);
    }
    TensorTrain::new(cores)
}

/// Affine function `c₀ + c₁·x` on the grid, bond 2.
pub fn qtt_linear(grid: &GridSpec, c0: c64, c1: c64) -> TensorTrain {
    let n = grid.n;
    let steps = grid.digit_steps();
    let start = c0 + c1 * grid.a;
    if n == 1 {
        return TensorTrain::new(vec![Core::from_values(&[start, start + c1 * steps[0]])])
            .expect("single core");
    }
    // row state (1, accumulated value)
    let mut cores = Vec::with_capacity(n);
    for (i, &h) in steps.iter().enumerate() {
        let l = if i == 0 { 1 } else { 2 };
        let r = if i == n - 1 { 1 } else { 2 };
        let mut core = Core::zeros(l, 2, r);
        for s in 0..2 {
            let inc = c1 * h * s as f64;
            // matrix [[1, inc], [0, 1]] with left boundary (1, start), right boundary (0, 1)ᵀ
            if i == 0 {
                core.set(0, s, 0, ONE);
                core.set(0, s, 1, start + inc);
            } else if i == n - 1 {
                core.set(0, s, 0, inc);
                core.set(1, s, 0, ONE);
            } else {
                core.set(0, s, 0, ONE);
                core.set(0, s, 1, inc);
                core.set(1, s, 1, ONE);
            }
        }
        cores.push(core);
    }
    TensorTrain::new(cores).expect("affine cores")
}

/// Concatenate two `(n−1)`-core halves into an `n`-core train whose first digit picks the half.
pub fn qtt_piecewise_halves(neg: &TensorTrain, pos: &TensorTrain) -> Result<TensorTrain> {
    if neg.len() != pos.len() {
        return Err(Error::invalid(format!(
            "halves have different core counts ({} vs {})",
            neg.len(),
            pos.len()
        )));
    }
    let select = |digit: usize, half: &TensorTrain| {
        let mut v = [ZERO; 2];
        v[digit] = ONE;
        let mut cores = vec![Core::from_values(&v)];
        cores.extend(half.cores().iter().cloned());
        TensorTrain::new(cores)
    };
    select(0, neg)?.add(&select(1, pos)?)
}

/// Result of [`qtt_chebyshev`].
#[derive(Debug, Clone)]
pub struct ChebyshevApprox {
    pub tt: TensorTrain,
    /// Degree of the retained expansion.
    pub order: usize,
    /// Estimated sup-norm error (tail coefficient mass).
    pub error_estimate: f64,
    pub coefficients: Vec<c64>,
}

/// Chebyshev coefficients of degree `m` from values at the `m+1` extrema nodes.
fn chebyshev_coefficients(f: &dyn Fn(f64) -> c64, a: f64, b: f64, m: usize) -> Vec<c64> {
    let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
    let vals: Vec<c64> = (0..=m)
        .map(|j| f(mid + half * (PI * j as f64 / m as f64).cos()))
        .collect();
    (0..=m)
        .map(|k| {
            let mut acc = ZERO;
            for (j, v) in vals.iter().enumerate() {
                let w = if j == 0 || j == m { 0.5 } else { 1.0 };
                acc += v * (w * (PI * ((j * k) % (2 * m)) as f64 / m as f64).cos());
            }
            let scale = if k == 0 || k == m { 1.0 } else { 2.0 } / m as f64;
            acc * scale
        })
        .collect()
}

/// QTT approximation of a smooth `f` on the grid via an adaptive Chebyshev expansion.
///
/// The degree doubles from 8 until the last two coefficients fall below
/// `ε·max|c_k|`; trailing coefficients under that level are then dropped. The
/// expansion is summed by Clenshaw's recurrence with Hadamard products by the
/// affine map onto `[−1, 1]`, truncating each step at relative `ε/10`.
pub fn qtt_chebyshev(
    grid: &GridSpec,
    f: &dyn Fn(f64) -> c64,
    max_order: usize,
    eps: f64,
) -> Result<ChebyshevApprox> {
    if max_order == 0 {
        return Err(Error::invalid("max_order must be at least 1"));
    }
    if !(eps > 0.0) {
        return Err(Error::invalid("Chebyshev tolerance must be positive"));
    }
    let (a, b) = (grid.a, grid.b);
    let mut m = max_order.clamp(1, 8);
    let coeffs = loop {
        let c = chebyshev_coefficients(f, a, b, m);
        if c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NumericFailure(
                "function is not finite on the interval".into(),
            ));
        }
        let cmax = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let tail = c[m].norm() + if m >= 1 { c[m - 1].norm() } else { 0.0 };
        if tail <= eps * cmax || cmax == 0.0 {
            break c;
        }
        if m >= max_order {
            return Err(Error::ConvergenceFailure {
                message: format!("Chebyshev coefficients did not decay by order {max_order}"),
                estimate: tail,
            });
        }
        m = (2 * m).min(max_order);
    };
    let cmax = coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let keep = coeffs
        .iter()
        .rposition(|z| z.norm() > eps * cmax)
        .unwrap_or(0);
    let dropped: f64 = coeffs[keep + 1..].iter().map(|z| z.norm()).sum();
    let kept_mass: f64 = coeffs[..=keep].iter().map(|z| z.norm()).sum();
    let error_estimate = 2.0 * dropped
        + 16.0 * f64::EPSILON * kept_mass.max(1.0) * (keep + 1) as f64
        + if keep > 0 {
            eps / 10.0 * kept_mass
        } else {
            0.0
        };
    let coeffs_kept = coeffs[..=keep].to_vec();

    let n = grid.n;
    let policy = Truncation::relative(eps / 10.0);
    let tt = if keep == 0 {
        TensorTrain::constant(n, coeffs_kept[0])
    } else {
        // t(x) = (2x − a − b)/(b − a)
        let t = qtt_linear(
            grid,
            c64::new(-(a + b) / (b - a), 0.0),
            c64::new(2.0 / (b - a), 0.0),
        );
        let two_t = t.scale(c64::new(2.0, 0.0));
        let mut b1: Option<TensorTrain> = None;
        let mut b2: Option<TensorTrain> = None;
        for k in (1..=keep).rev() {
            let mut next = TensorTrain::constant(n, coeffs_kept[k]);
            if let Some(prev) = &b1 {
                next = next.add(&two_t.hadamard(prev)?)?;
            }
            if let Some(prev2) = &b2 {
                next = next.add(&prev2.scale(-ONE))?;
            }
            let next = next.truncate(&policy)?;
            b2 = b1;
            b1 = Some(next);
        }
        let b1 = b1.expect("keep ≥ 1");
        let mut out = TensorTrain::constant(n, coeffs_kept[0]).add(&t.hadamard(&b1)?)?;
        if let Some(prev2) = &b2 {
            out = out.add(&prev2.scale(-ONE))?;
        }
        out.truncate(&policy)?
    };
    Ok(ChebyshevApprox {
        tt,
        order: keep,
        error_estimate,
        coefficients: coeffs_kept,
    })
}
