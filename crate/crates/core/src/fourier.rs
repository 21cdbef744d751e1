//! Discrete Fourier transforms in dense and tensor-train form.
//!
//! Convention: the forward transform is `X_k = Σ_j x_j e^{+2πijk/M}`
//! (unnormalized, matching `φ(ω) = E[e^{iωX}]`); the inverse uses `e^{−2πijk/M}`
//! and the factor `1/M`.
//!
//! On a zero-padded grid of `2N` points with `Ω·Δx = π`, the centered phases
//! factor as `e^{iω_k x_j} = (−1)^j e^{2πijk/2N}`, so centering is a
//! `(−1)^j` modulation of the spatial samples (a rank-1 factor on the last
//! core) rather than an index roll.

use std::collections::HashMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64 as c64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::{qtt_step, FrequencyGrid, StepSense};
use crate::linalg::{self, Matrix};
use crate::tt::{Core, OperatorCore, TensorTrain, Truncation, TtOperator};

const ZERO: c64 = c64::new(0.0, 0.0);
const ONE: c64 = c64::new(1.0, 0.0);

/// Tolerance used when compressing the transform operator.
pub const OPERATOR_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Dense DFT under the module convention; the length must be a power of two.
pub fn dense_dft(values: &[c64], direction: Direction) -> Result<Vec<c64>> {
    let mut buf = values.to_vec();
    dense_dft_in_place(&mut buf, direction)?;
    Ok(buf)
}

/// In-place variant of [`dense_dft`] for large buffers.
pub fn dense_dft_in_place(buf: &mut [c64], direction: Direction) -> Result<()> {
    let m = buf.len();
    if m == 0 || !m.is_power_of_two() {
        return Err(Error::invalid(format!(
            "transform length {m} is not a power of two"
        )));
    }
    let mut planner = FftPlanner::<f64>::new();
    match direction {
        // rustfft's "inverse" is the unnormalized +i kernel
        Direction::Forward => planner.plan_fft_inverse(m).process(buf),
        Direction::Inverse => {
            planner.plan_fft_forward(m).process(buf);
            let s = 1.0 / m as f64;
            buf.iter_mut().for_each(|z| *z *= s);
        }
    }
    Ok(())
}

/// Multiply entry `j` by `(−1)^j`.
pub fn modulate_dense(values: &[c64]) -> Vec<c64> {
    values
        .iter()
        .enumerate()
        .map(|(j, &z)| if j % 2 == 0 { z } else { -z })
        .collect()
}

/// Multiply entry `j` by `(−1)^j`: a sign flip on the least significant digit.
pub fn modulate(tt: &TensorTrain) -> TensorTrain {
    tt.scale_digit(tt.len() - 1, &[ONE, -ONE])
        .expect("binary last core")
}

/// One circuit layer: Hadamard on qubit `q`, then the controlled phases
/// `e^{2πi o_q s_m / 2^{m−q+1}}` for every `m > q`, as a bond-2 operator.
fn circuit_layer(n: usize, q: usize) -> TtOperator {
    let h = FRAC_1_SQRT_2;
    let mut cores = Vec::with_capacity(n);
    for p in 0..n {
        let core = if p < q {
            TtOperator::identity(1).cores()[0].clone()
        } else if p == q {
            let right = if q == n - 1 { 1 } else { 2 };
            let mut c = OperatorCore::zeros(1, 2, 2, right);
            for o in 0..2 {
                for i in 0..2 {
                    let v = if o == 1 && i == 1 { -h } else { h };
                    c.set(0, o, i, if right == 1 { 0 } else { o }, c64::new(v, 0.0));
                }
            }
            c
        } else {
            let right = if p == n - 1 { 1 } else { 2 };
            let mut c = OperatorCore::zeros(2, 2, 2, right);
            let angle = 2.0 * PI / (1u64 << (p - q + 1)) as f64;
            for b in 0..2 {
                for s in 0..2 {
                    let phase = c64::from_polar(1.0, angle * (b * s) as f64);
                    c.set(b, s, s, if right == 1 { 0 } else { b }, phase);
                }
            }
            c
        };
        cores.push(core);
    }
    TtOperator::new(cores).expect("layer cores")
}

/// Operator whose dense matrix is the DFT composed with digit reversal.
///
/// Applying it to `x` and reversing the core order of the result yields
/// `dense_dft(x)`. Built by composing the phase circuit layer by layer with
/// compression at [`OPERATOR_TOLERANCE`].
pub fn qft_operator(n: usize, direction: Direction) -> Result<TtOperator> {
    if n == 0 {
        return Err(Error::invalid("transform needs at least one core"));
    }
    let policy = Truncation::relative(OPERATOR_TOLERANCE);
    let mut op = circuit_layer(n, 0);
    for q in 1..n {
        op = circuit_layer(n, q).compose_raw(&op)?.truncate(&policy)?;
    }
    let m = (n as f64).exp2();
    Ok(match direction {
        Direction::Forward => op.scale(c64::new(m.sqrt(), 0.0)),
        Direction::Inverse => op.conj().scale(c64::new(1.0 / m.sqrt(), 0.0)),
    })
}

type OperatorCache = Mutex<HashMap<(usize, Direction), Arc<TtOperator>>>;

/// Process-wide cache of transform operators keyed by `(n, direction)`.
pub fn cached_qft_operator(n: usize, direction: Direction) -> Result<Arc<TtOperator>> {
    static CACHE: OnceLock<OperatorCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(op) = cache
        .lock()
        .expect("operator cache poisoned")
        .get(&(n, direction))
    {
        return Ok(Arc::clone(op));
    }
    let op = Arc::new(qft_operator(n, direction)?);
    cache
        .lock()
        .expect("operator cache poisoned")
        .entry((n, direction))
        .or_insert_with(|| Arc::clone(&op));
    Ok(op)
}

/// Apply an operator by a left-to-right zip-up sweep, truncating as it goes.
///
/// Avoids forming the raw `χ_op·χ_x` bonds; a final rounding pass restores
/// the error accounting and canonical form.
pub fn apply_operator_zipup(
    op: &TtOperator,
    x: &TensorTrain,
    policy: &Truncation,
) -> Result<TensorTrain> {
    let n = x.len();
    if op.len() != n {
        return Err(Error::invalid(format!(
            "operator has {} cores, vector has {n}",
            op.len()
        )));
    }
    if n == 1 {
        return op.apply(x, policy);
    }
    // right-canonical input keeps the local singular values meaningful
    let x = x
        .reversed()
        .truncate(&Truncation::relative(0.0).with_max_bond(usize::MAX))?
        .reversed();
    let step_policy = Truncation {
        tolerance: policy.tolerance / 2.0,
        ..*policy
    };
    let mut cores = Vec::with_capacity(n);
    // carry[r, (wa, xa)]
    let mut carry = Matrix::from_data(1, 1, vec![ONE]);
    let mut carry_w = 1usize;
    for k in 0..n {
        let w = &op.cores()[k];
        let a = &x.cores()[k];
        if w.in_dim() != a.phys() {
            return Err(Error::invalid(format!(
                "input dimension mismatch at core {k}"
            )));
        }
        let (r, xa, xb, phys) = (carry.rows, a.left(), a.right(), a.phys());
        let (wa, wb, out) = (carry_w, w.right(), w.out_dim());
        // tmp[(r, wa), (i, xb)]
        let c2 = Matrix::from_data(r * wa, xa, carry.data);
        let tmp = linalg::matmul(&c2, &Matrix::from_data(xa, phys * xb, a.data().to_vec()));
        // permute to [(r, xb), (wa, i)]
        let mut perm = Matrix::zeros(r * xb, wa * phys);
        for ri in 0..r {
            for wai in 0..wa {
                for i in 0..phys {
                    for b in 0..xb {
                        perm.data[(ri * xb + b) * wa * phys + wai * phys + i] =
                            tmp.data[(ri * wa + wai) * phys * xb + i * xb + b];
                    }
                }
            }
        }
        // W as [(wa, i), (o, wb)]
        let mut wmat = Matrix::zeros(wa * phys, out * wb);
        for wai in 0..wa {
            for o in 0..out {
                for i in 0..phys {
                    for b in 0..wb {
                        wmat.data[(wai * phys + i) * out * wb + o * wb + b] = w.get(wai, o, i, b);
                    }
                }
            }
        }
        let t = linalg::matmul(&perm, &wmat);
        // T[(r, o), (wb, xb)]
        let mut tm = Matrix::zeros(r * out, wb * xb);
        for ri in 0..r {
            for b in 0..xb {
                for o in 0..out {
                    for c in 0..wb {
                        tm.data[(ri * out + o) * wb * xb + c * xb + b] =
                            t.data[(ri * xb + b) * out * wb + o * wb + c];
                    }
                }
            }
        }
        if k == n - 1 {
            cores.push(Core::from_left_unfolding(tm, out));
            break;
        }
        let dec = linalg::svd(&tm)?;
        let norm2: f64 = dec.s.iter().map(|s| s * s).sum();
        let budget = match step_policy.mode {
            crate::tt::ToleranceMode::Relative => step_policy.tolerance.powi(2) * norm2,
            crate::tt::ToleranceMode::Absolute => step_policy.tolerance.powi(2),
        } / (n - 1) as f64;
        let rank = linalg::truncation_rank(&dec.s, budget);
        if rank > policy.max_bond {
            return Err(Error::ResourceLimit {
                what: "bond dimension".into(),
                limit: policy.max_bond,
                actual: rank,
                step: None,
            });
        }
        let rows = dec.u.rows;
        let mut u = Matrix::zeros(rows, rank);
        for i in 0..rows {
            u.data[i * rank..(i + 1) * rank]
                .copy_from_slice(&dec.u.data[i * dec.u.cols..i * dec.u.cols + rank]);
        }
        cores.push(Core::from_left_unfolding(u, out));
        let cols = dec.vh.cols;
        let mut next = Matrix::zeros(rank, cols);
        for i in 0..rank {
            for j in 0..cols {
                next.data[i * cols + j] = dec.vh.data[i * cols + j] * dec.s[i];
            }
        }
        carry = next;
        carry_w = wb;
    }
    TensorTrain::new(cores)?.truncate(&step_policy)
}

/// DFT of a binary train under the module convention, in natural index order.
pub fn apply_fourier(
    tt: &TensorTrain,
    direction: Direction,
    policy: &Truncation,
) -> Result<TensorTrain> {
    let op = cached_qft_operator(tt.len(), direction)?;
    Ok(apply_operator_zipup(&op, tt, policy)?.reversed())
}

/// Restrict a padded train to its first half (leading digit 0).
pub fn project_lower_half(tt: &TensorTrain) -> Result<TensorTrain> {
    tt.fix_digit(0, 0)
}

/// `D_k = Σ_{j<N} e^{iω_k x_j}` on the padded frequency grid, as a dense vector.
pub fn dirichlet_kernel_dense(freq: &FrequencyGrid) -> Result<Vec<c64>> {
    let big_n = freq.half_len();
    let mut v = vec![ZERO; 2 * big_n];
    for (j, z) in v.iter_mut().take(big_n).enumerate() {
        *z = if j % 2 == 0 { ONE } else { -ONE };
    }
    dense_dft(&v, Direction::Forward)
}

/// Closed form of the Dirichlet kernel at index `k`: a geometric sum with
/// ratio `r = e^{iω_k Δx}`, so `D_k = (1 − r^N)/(1 − r)` and `D_N = N`.
pub fn dirichlet_kernel_value(freq: &FrequencyGrid, k: usize) -> c64 {
    let big_n = freq.half_len();
    if k == big_n {
        return c64::new(big_n as f64, 0.0);
    }
    let r = c64::from_polar(1.0, PI * (k as f64 - big_n as f64) / big_n as f64);
    // r^N = (−1)^{k−N} = (−1)^k since N is even
    let r_n = if k % 2 == 0 { ONE } else { -ONE };
    (ONE - r_n) / (ONE - r)
}

/// The Dirichlet kernel as the forward transform of the modulated first-half indicator.
pub fn dirichlet_kernel_qtt(freq: &FrequencyGrid, policy: &Truncation) -> Result<TensorTrain> {
    let grid = freq.grid();
    let indicator = qtt_step(&grid, freq.half_len(), StepSense::Below)?;
    apply_fourier(&modulate(&indicator), Direction::Forward, policy)
}
