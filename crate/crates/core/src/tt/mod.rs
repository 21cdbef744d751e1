//! Tensor trains (matrix product states) over complex scalars.
//!
//! A [`TensorTrain`] encodes a vector of length `∏ ℓ_k` as a chain of
//! three-index cores `A_k[α_{k-1}, s_k, α_k]`. The first core's digit is the
//! most significant one (big-endian), so entry `j` of the dense vector is the
//! product of core slices selected by the mixed-radix expansion of `j`.
//!
//! Every operation returns a new value; trains are never mutated in place
//! once built.

mod operator;
mod serialize;
mod truncate;

pub use operator::{OperatorCore, TtOperator};
pub use serialize::{from_bytes, from_json, to_bytes, to_json};
pub use truncate::{ToleranceMode, Truncation, DEFAULT_BOND_CAP};

use num_complex::Complex64 as c64;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// Largest dense vector `to_dense` will materialize by default.
pub const DEFAULT_DENSE_CAP: usize = 1 << 24;

const ZERO: c64 = c64::new(0.0, 0.0);
const ONE: c64 = c64::new(1.0, 0.0);

/// One three-index core, stored row-major as `(left, physical, right)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Core {
    left: usize,
    phys: usize,
    right: usize,
    data: Vec<c64>,
}

impl Core {
    pub fn new(left: usize, phys: usize, right: usize, data: Vec<c64>) -> Result<Self> {
        if left == 0 || phys == 0 || right == 0 {
            return Err(Error::invalid("core dimensions must be positive"));
        }
        if data.len() != left * phys * right {
            return Err(Error::invalid(format!(
                "core buffer has {} entries, expected {}",
                data.len(),
                left * phys * right
            )));
        }
        Ok(Core {
            left,
            phys,
            right,
            data,
        })
    }

    pub fn zeros(left: usize, phys: usize, right: usize) -> Self {
        Core {
            left,
            phys,
            right,
            data: vec![ZERO; left * phys * right],
        }
    }

    /// Core of a bond-1 train whose entry for digit `s` is `values[s]`.
    pub fn from_values(values: &[c64]) -> Self {
        Core {
            left: 1,
            phys: values.len(),
            right: 1,
            data: values.to_vec(),
        }
    }

    pub fn left(&self) -> usize {
        self.left
    }
    pub fn phys(&self) -> usize {
        self.phys
    }
    pub fn right(&self) -> usize {
        self.right
    }
    pub fn data(&self) -> &[c64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, a: usize, s: usize, b: usize) -> c64 {
        self.data[(a * self.phys + s) * self.right + b]
    }

    #[inline]
    pub fn set(&mut self, a: usize, s: usize, b: usize, v: c64) {
        self.data[(a * self.phys + s) * self.right + b] = v;
    }

    /// The `left × right` matrix selected by digit `s`.
    pub fn slice(&self, s: usize) -> Matrix {
        let mut m = Matrix::zeros(self.left, self.right);
        for a in 0..self.left {
            for b in 0..self.right {
                m.data[a * self.right + b] = self.get(a, s, b);
            }
        }
        m
    }

    /// `(left·phys) × right` unfolding (shares the buffer layout).
    pub(crate) fn left_unfolding(&self) -> Matrix {
        Matrix::from_data(self.left * self.phys, self.right, self.data.clone())
    }

    /// `left × (phys·right)` unfolding (shares the buffer layout).
    pub(crate) fn right_unfolding(&self) -> Matrix {
        Matrix::from_data(self.left, self.phys * self.right, self.data.clone())
    }

    pub(crate) fn from_left_unfolding(m: Matrix, phys: usize) -> Self {
        debug_assert_eq!(m.rows % phys, 0);
        Core {
            left: m.rows / phys,
            phys,
            right: m.cols,
            data: m.data,
        }
    }

    pub(crate) fn from_right_unfolding(m: Matrix, phys: usize) -> Self {
        debug_assert_eq!(m.cols % phys, 0);
        Core {
            left: m.rows,
            phys,
            right: m.cols / phys,
            data: m.data,
        }
    }

    /// Swap the bond legs, `(l, s, r) → (r, s, l)`.
    fn transposed_bonds(&self) -> Core {
        let mut out = Core::zeros(self.right, self.phys, self.left);
        for a in 0..self.left {
            for s in 0..self.phys {
                for b in 0..self.right {
                    out.set(b, s, a, self.get(a, s, b));
                }
            }
        }
        out
    }

    fn scaled(&self, c: c64) -> Core {
        Core {
            data: self.data.iter().map(|z| z * c).collect(),
            ..*self
        }
    }
}

/// A tensor train with trivial boundary bonds.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorTrain {
    cores: Vec<Core>,
}

impl TensorTrain {
    /// Validates boundary and adjacency invariants.
    pub fn new(cores: Vec<Core>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::invalid("a tensor train needs at least one core"));
        }
        if cores[0].left != 1 || cores[cores.len() - 1].right != 1 {
            return Err(Error::invalid("boundary bond dimensions must be 1"));
        }
        for (k, w) in cores.windows(2).enumerate() {
            if w[0].right != w[1].left {
                return Err(Error::invalid(format!(
                    "bond mismatch between cores {k} and {}: {} vs {}",
                    k + 1,
                    w[0].right,
                    w[1].left
                )));
            }
        }
        Ok(TensorTrain { cores })
    }

    pub(crate) fn from_cores_unchecked(cores: Vec<Core>) -> Self {
        debug_assert!(TensorTrain::new(cores.clone()).is_ok());
        TensorTrain { cores }
    }

    /// Rank-1 train from per-core digit values.
    pub fn product(factors: &[Vec<c64>]) -> Result<Self> {
        TensorTrain::new(factors.iter().map(|f| Core::from_values(f)).collect())
    }

    /// Binary train filled with the constant `c`.
    pub fn constant(n: usize, c: c64) -> Self {
        let mut cores: Vec<Core> = (0..n).map(|_| Core::from_values(&[ONE, ONE])).collect();
        cores[0] = cores[0].scaled(c);
        TensorTrain { cores }
    }

    /// Binary one-hot train for big-endian digit string `digits`.
    pub fn basis(digits: &[usize]) -> Result<Self> {
        let factors: Vec<Vec<c64>> = digits
            .iter()
            .map(|&d| {
                if d > 1 {
                    return Err(Error::invalid("binary digit out of range"));
                }
                let mut v = vec![ZERO; 2];
                v[d] = ONE;
                Ok(v)
            })
            .collect::<Result<_>>()?;
        TensorTrain::product(&factors)
    }

    pub fn cores(&self) -> &[Core] {
        &self.cores
    }

    pub fn into_cores(self) -> Vec<Core> {
        self.cores
    }

    pub fn len(&self) -> usize {
        self.cores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cores.is_empty()
    }

    pub fn physical_dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.phys).collect()
    }

    /// Internal bond dimensions `χ_1 … χ_{n-1}`.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.cores[..self.cores.len() - 1]
            .iter()
            .map(|c| c.right)
            .collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Number of stored complex parameters.
    pub fn parameter_count(&self) -> usize {
        self.cores.iter().map(|c| c.data.len()).sum()
    }

    /// Storage estimate in bytes (16 bytes per complex entry).
    pub fn memory_bytes(&self) -> usize {
        16 * self.parameter_count()
    }

    /// Length of the encoded vector.
    pub fn dense_len(&self) -> Option<usize> {
        self.cores
            .iter()
            .try_fold(1usize, |acc, c| acc.checked_mul(c.phys))
    }

    fn check_same_shape(&self, other: &TensorTrain, what: &str) -> Result<()> {
        if self.physical_dims() != other.physical_dims() {
            return Err(Error::invalid(format!(
                "{what}: physical dimensions differ ({:?} vs {:?})",
                self.physical_dims(),
                other.physical_dims()
            )));
        }
        Ok(())
    }

    /// Entry `A_{s_1 … s_n}`.
    pub fn element(&self, digits: &[usize]) -> Result<c64> {
        if digits.len() != self.cores.len() {
            return Err(Error::invalid(format!(
                "expected {} digits, got {}",
                self.cores.len(),
                digits.len()
            )));
        }
        let mut row = vec![ONE];
        for (core, &s) in self.cores.iter().zip(digits) {
            if s >= core.phys {
                return Err(Error::invalid(format!(
                    "digit {s} out of range for physical dimension {}",
                    core.phys
                )));
            }
            let mut next = vec![ZERO; core.right];
            for (a, &ra) in row.iter().enumerate() {
                if ra == ZERO {
                    continue;
                }
                for (b, nb) in next.iter_mut().enumerate() {
                    *nb += ra * core.get(a, s, b);
                }
            }
            row = next;
        }
        Ok(row[0])
    }

    /// Entry at mixed-radix (big-endian) linear index `j`.
    pub fn element_at(&self, mut j: usize) -> Result<c64> {
        let mut digits = vec![0; self.cores.len()];
        for (k, core) in self.cores.iter().enumerate().rev() {
            digits[k] = j % core.phys;
            j /= core.phys;
        }
        if j != 0 {
            return Err(Error::invalid("linear index out of range"));
        }
        self.element(&digits)
    }

    /// TT-SVD of a dense vector with relative L² tolerance `eps`.
    pub fn from_dense(values: &[c64], physical_dims: &[usize], eps: f64) -> Result<Self> {
        if physical_dims.is_empty() || physical_dims.contains(&0) {
            return Err(Error::invalid("physical dimensions must be positive"));
        }
        let total: usize = physical_dims.iter().product();
        if values.len() != total {
            return Err(Error::invalid(format!(
                "dense length {} does not match product of physical dims {total}",
                values.len()
            )));
        }
        if !(eps >= 0.0) {
            return Err(Error::invalid("tolerance must be nonnegative"));
        }
        let n = physical_dims.len();
        let norm = values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let budget = if n > 1 {
            (eps * norm).powi(2) / (n - 1) as f64
        } else {
            0.0
        };
        let mut cores = Vec::with_capacity(n);
        let mut rest = Matrix::from_data(1, total, values.to_vec());
        for &phys in &physical_dims[..n - 1] {
            let rows = rest.rows * phys;
            let cols = rest.data.len() / rows;
            let m = Matrix::from_data(rows, cols, rest.data);
            let dec = linalg::svd(&m)?;
            let rank = linalg::truncation_rank(&dec.s, budget);
            let mut u = Matrix::zeros(rows, rank);
            for i in 0..rows {
                u.data[i * rank..(i + 1) * rank]
                    .copy_from_slice(&dec.u.data[i * dec.u.cols..i * dec.u.cols + rank]);
            }
            cores.push(Core::from_left_unfolding(u, phys));
            let mut svh = Matrix::zeros(rank, cols);
            for i in 0..rank {
                for j in 0..cols {
                    svh.data[i * cols + j] = dec.vh.data[i * cols + j] * dec.s[i];
                }
            }
            rest = svh;
        }
        let last_phys = physical_dims[n - 1];
        cores.push(Core::from_right_unfolding(
            Matrix::from_data(rest.rows, last_phys, rest.data),
            last_phys,
        ));
        TensorTrain::new(cores)
    }

    /// Dense vector, refusing to materialize more than [`DEFAULT_DENSE_CAP`] entries.
    pub fn to_dense(&self) -> Result<Vec<c64>> {
        self.to_dense_capped(DEFAULT_DENSE_CAP)
    }

    pub fn to_dense_capped(&self, cap: usize) -> Result<Vec<c64>> {
        let total = self.dense_len().unwrap_or(usize::MAX);
        if total > cap {
            return Err(Error::ResourceLimit {
                what: "dense materialization".into(),
                limit: cap,
                actual: total,
                step: None,
            });
        }
        let mut acc = Matrix::from_data(1, 1, vec![ONE]);
        for core in &self.cores {
            let prod = linalg::matmul(&acc, &core.right_unfolding());
            acc = Matrix::from_data(acc.rows * core.phys, core.right, prod.data);
        }
        Ok(acc.data)
    }

    /// Entrywise product; raw bonds are `χ_a · χ_b`.
    pub fn hadamard(&self, other: &TensorTrain) -> Result<TensorTrain> {
        if self.len() != other.len() {
            return Err(Error::invalid("hadamard: core counts differ"));
        }
        self.check_same_shape(other, "hadamard")?;
        let cores = self
            .cores
            .iter()
            .zip(&other.cores)
            .map(|(a, b)| {
                let (l, r) = (a.left * b.left, a.right * b.right);
                let mut c = Core::zeros(l, a.phys, r);
                for ia in 0..a.left {
                    for ib in 0..b.left {
                        for s in 0..a.phys {
                            for ja in 0..a.right {
                                let va = a.get(ia, s, ja);
                                if va == ZERO {
                                    continue;
                                }
                                for jb in 0..b.right {
                                    c.set(
                                        ia * b.left + ib,
                                        s,
                                        ja * b.right + jb,
                                        va * b.get(ib, s, jb),
                                    );
                                }
                            }
                        }
                    }
                }
                c
            })
            .collect();
        Ok(TensorTrain { cores })
    }

    /// Entrywise sum; raw bonds are `χ_a + χ_b`.
    pub fn add(&self, other: &TensorTrain) -> Result<TensorTrain> {
        if self.len() != other.len() {
            return Err(Error::invalid("add: core counts differ"));
        }
        self.check_same_shape(other, "add")?;
        let n = self.len();
        if n == 1 {
            let data = self.cores[0]
                .data
                .iter()
                .zip(&other.cores[0].data)
                .map(|(x, y)| x + y)
                .collect();
            return Ok(TensorTrain {
                cores: vec![Core::new(1, self.cores[0].phys, 1, data)?],
            });
        }
        let mut cores = Vec::with_capacity(n);
        for k in 0..n {
            let (a, b) = (&self.cores[k], &other.cores[k]);
            let l = if k == 0 { 1 } else { a.left + b.left };
            let r = if k == n - 1 { 1 } else { a.right + b.right };
            let (bl, br) = (
                if k == 0 { 0 } else { a.left },
                if k == n - 1 { 0 } else { a.right },
            );
            let mut c = Core::zeros(l, a.phys, r);
            for s in 0..a.phys {
                for i in 0..a.left {
                    for j in 0..a.right {
                        c.set(i, s, j, a.get(i, s, j));
                    }
                }
                for i in 0..b.left {
                    for j in 0..b.right {
                        c.set(bl + i, s, br + j, b.get(i, s, j));
                    }
                }
            }
            cores.push(c);
        }
        Ok(TensorTrain { cores })
    }

    pub fn scale(&self, c: c64) -> TensorTrain {
        let mut cores = self.cores.clone();
        cores[0] = cores[0].scaled(c);
        TensorTrain { cores }
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> TensorTrain {
        let cores = self
            .cores
            .iter()
            .map(|c| Core {
                data: c.data.iter().map(|z| z.conj()).collect(),
                ..*c
            })
            .collect();
        TensorTrain { cores }
    }

    /// `‖Im t‖ / ‖t‖`, from `‖Im t‖² = (‖t‖² − Re Σ t_j²)/2`.
    pub fn relative_imaginary_norm(&self) -> f64 {
        let total = self.inner(self).map(|z| z.re).unwrap_or(0.0);
        if total <= 0.0 {
            return 0.0;
        }
        let squares = self.conj().inner(self).map(|z| z.re).unwrap_or(total);
        ((total - squares).max(0.0) / 2.0 / total).sqrt()
    }

    /// `⟨self | other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &TensorTrain) -> Result<c64> {
        if self.len() != other.len() {
            return Err(Error::invalid("inner: core counts differ"));
        }
        self.check_same_shape(other, "inner")?;
        let mut env = Matrix::from_data(1, 1, vec![ONE]);
        for (a, b) in self.cores.iter().zip(&other.cores) {
            // (χa × s·rb) == (χa·s × rb) in row-major layout
            let t = linalg::matmul(&env, &b.right_unfolding());
            let t = Matrix::from_data(a.left * a.phys, b.right, t.data);
            env = linalg::matmul(&a.left_unfolding().adjoint(), &t);
        }
        Ok(env.data[0])
    }

    pub fn norm(&self) -> f64 {
        self.inner(self)
            .map(|z| z.re.max(0.0).sqrt())
            .unwrap_or(0.0)
    }

    /// Sum of all entries.
    pub fn sum(&self) -> c64 {
        let mut row = vec![ONE];
        for core in &self.cores {
            let mut next = vec![ZERO; core.right];
            for (a, &ra) in row.iter().enumerate() {
                for s in 0..core.phys {
                    for (b, nb) in next.iter_mut().enumerate() {
                        *nb += ra * core.get(a, s, b);
                    }
                }
            }
            row = next;
        }
        row[0]
    }

    /// Fix the digit of core `k` to `digit`, returning an `(n-1)`-core train.
    pub fn fix_digit(&self, k: usize, digit: usize) -> Result<TensorTrain> {
        let n = self.len();
        if n < 2 {
            return Err(Error::invalid("cannot fix a digit of a single-core train"));
        }
        if k >= n || digit >= self.cores[k].phys {
            return Err(Error::invalid("digit position or value out of range"));
        }
        let slice = self.cores[k].slice(digit);
        let mut cores: Vec<Core> = Vec::with_capacity(n - 1);
        if k + 1 < n {
            // absorb into the following core
            let next = &self.cores[k + 1];
            let merged = linalg::matmul(&slice, &next.right_unfolding());
            for (i, c) in self.cores.iter().enumerate() {
                if i == k {
                    continue;
                }
                if i == k + 1 {
                    cores.push(Core::from_right_unfolding(merged.clone(), next.phys));
                } else {
                    cores.push(c.clone());
                }
            }
        } else {
            let prev = &self.cores[k - 1];
            let merged = linalg::matmul(&prev.left_unfolding(), &slice);
            for (i, c) in self.cores.iter().enumerate().take(n - 1) {
                if i == k - 1 {
                    cores.push(Core::from_left_unfolding(merged.clone(), prev.phys));
                } else {
                    cores.push(c.clone());
                }
            }
        }
        TensorTrain::new(cores)
    }

    /// Reverse the digit order (core `k` becomes core `n-1-k`).
    pub fn reversed(&self) -> TensorTrain {
        TensorTrain {
            cores: self
                .cores
                .iter()
                .rev()
                .map(Core::transposed_bonds)
                .collect(),
        }
    }

    /// Multiply every entry by `factor[s]` of its digit at core `k`.
    pub fn scale_digit(&self, k: usize, factor: &[c64]) -> Result<TensorTrain> {
        let core = self
            .cores
            .get(k)
            .ok_or_else(|| Error::invalid("core index out of range"))?;
        if factor.len() != core.phys {
            return Err(Error::invalid("digit factor length mismatch"));
        }
        let mut out = core.clone();
        for a in 0..core.left {
            for (s, &f) in factor.iter().enumerate() {
                for b in 0..core.right {
                    out.set(a, s, b, core.get(a, s, b) * f);
                }
            }
        }
        let mut cores = self.cores.clone();
        cores[k] = out;
        Ok(TensorTrain { cores })
    }

    /// Truncate with the given policy; see [`Truncation`].
    pub fn truncate(&self, policy: &Truncation) -> Result<TensorTrain> {
        truncate::truncate(self, policy)
    }

    /// Relative-tolerance truncation with the default bond cap.
    pub fn truncated(&self, eps: f64) -> Result<TensorTrain> {
        self.truncate(&Truncation::relative(eps))
    }

    /// Largest entry of a dense comparison against another train (test/diagnostic helper).
    pub fn max_abs_diff(&self, other: &TensorTrain) -> Result<f64> {
        let a = self.to_dense()?;
        let b = other.to_dense()?;
        if a.len() != b.len() {
            return Err(Error::invalid("length mismatch"));
        }
        Ok(a.iter()
            .zip(&b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max))
    }
}

#[cfg(test)]
mod tests;
