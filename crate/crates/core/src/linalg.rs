//! Dense complex kernels used by the tensor-train algebra.
//!
//! Matrices are passed around as row-major `Vec<c64>` buffers, matching the
//! storage of tensor-train cores. The heavy lifting (SVD, QR, GEMM) is done by
//! `faer` through zero-copy views.

use faer::{Accum, MatRef, Par};
use num_complex::Complex64 as c64;

use crate::error::{Error, Result};

/// Row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<c64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![c64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = c64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_data(rows: usize, cols: usize, data: Vec<c64>) -> Self {
        assert_eq!(rows * cols, data.len(), "matrix buffer size mismatch");
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.data[i * self.cols + j]
    }

    pub fn view(&self) -> MatRef<'_, c64> {
        MatRef::from_row_major_slice(&self.data, self.rows, self.cols)
    }

    fn from_view(m: MatRef<'_, c64>) -> Self {
        let (rows, cols) = (m.nrows(), m.ncols());
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(m[(i, j)]);
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn adjoint(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j].conj();
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// `a · b`.
pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.cols, b.rows, "matmul inner dimension mismatch");
    let mut out = Matrix::zeros(a.rows, b.cols);
    if a.rows == 0 || b.cols == 0 || a.cols == 0 {
        return out;
    }
    {
        let dst = faer::MatMut::from_row_major_slice_mut(&mut out.data, a.rows, b.cols);
        faer::linalg::matmul::matmul(
            dst,
            Accum::Replace,
            a.view(),
            b.view(),
            c64::new(1.0, 0.0),
            Par::Seq,
        );
    }
    out
}

/// Thin singular value decomposition `m = U · diag(s) · Vh`, singular values non-increasing.
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub vh: Matrix,
}

pub fn svd(m: &Matrix) -> Result<Svd> {
    let k = m.rows.min(m.cols);
    if k == 0 {
        return Ok(Svd {
            u: Matrix::zeros(m.rows, 0),
            s: Vec::new(),
            vh: Matrix::zeros(0, m.cols),
        });
    }
    if m.data
        .iter()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::NumericFailure(
            "non-finite entry passed to SVD".into(),
        ));
    }
    let dec = m
        .view()
        .thin_svd()
        .map_err(|e| Error::NumericFailure(format!("SVD did not converge: {e:?}")))?;
    let s_col = dec.S().column_vector();
    let s: Vec<f64> = (0..k).map(|i| s_col[i].re).collect();
    let u = Matrix::from_view(dec.U());
    let v = dec.V();
    let mut vh = Matrix::zeros(k, m.cols);
    for i in 0..k {
        for j in 0..m.cols {
            vh.data[i * m.cols + j] = v[(j, i)].conj();
        }
    }
    Ok(Svd { u, s, vh })
}

/// Thin QR decomposition `m = Q · R` with orthonormal columns in `Q`.
pub fn qr(m: &Matrix) -> (Matrix, Matrix) {
    let k = m.rows.min(m.cols);
    if k == 0 {
        return (Matrix::zeros(m.rows, 0), Matrix::zeros(0, m.cols));
    }
    let dec = m.view().qr();
    let q = dec.compute_thin_Q();
    let r = dec.thin_R();
    (Matrix::from_view(q.as_ref()), Matrix::from_view(r))
}

/// Thin LQ decomposition `m = L · Q` with orthonormal rows in `Q`.
pub fn lq(m: &Matrix) -> (Matrix, Matrix) {
    let (q, r) = qr(&m.adjoint());
    (r.adjoint(), q.adjoint())
}

/// Smallest rank whose discarded tail satisfies `Σ_{i≥rank} s_i² ≤ budget`.
/// Always keeps at least one singular value.
pub fn truncation_rank(s: &[f64], budget: f64) -> usize {
    if s.is_empty() {
        return 0;
    }
    let mut tail = 0.0;
    let mut rank = s.len();
    while rank > 1 {
        let next = tail + s[rank - 1] * s[rank - 1];
        if next > budget {
            break;
        }
        tail = next;
        rank -= 1;
    }
    rank
}
