use super::{Core, TensorTrain};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// Default hard cap on any bond dimension.
pub const DEFAULT_BOND_CAP: usize = 4096;

/// How the truncation tolerance is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToleranceMode {
    /// `‖t − t̃‖ ≤ ε·‖t‖`.
    Relative,
    /// `‖t − t̃‖ ≤ ε`, for vectors whose norm may be close to zero.
    Absolute,
}

/// Truncation policy: tolerance, its interpretation, and the bond cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub tolerance: f64,
    pub mode: ToleranceMode,
    pub max_bond: usize,
}

impl Truncation {
    pub fn relative(tolerance: f64) -> Self {
        Truncation {
            tolerance,
            mode: ToleranceMode::Relative,
            max_bond: DEFAULT_BOND_CAP,
        }
    }

    pub fn absolute(tolerance: f64) -> Self {
        Truncation {
            tolerance,
            mode: ToleranceMode::Absolute,
            max_bond: DEFAULT_BOND_CAP,
        }
    }

    pub fn with_max_bond(mut self, max_bond: usize) -> Self {
        self.max_bond = max_bond;
        self
    }
}

/// Right-canonicalize with an LQ sweep, then truncate left to right with SVDs.
///
/// The discarded weight at each of the `n−1` bonds is bounded by
/// `δ² = tol²/(n−1)` (times `‖t‖²` in relative mode), so the total error obeys
/// `‖t − t̃‖ ≤ tol` (resp. `tol·‖t‖`). The result is left-canonical.
pub(super) fn truncate(tt: &TensorTrain, policy: &Truncation) -> Result<TensorTrain> {
    if !(policy.tolerance >= 0.0) {
        return Err(Error::invalid("truncation tolerance must be nonnegative"));
    }
    let n = tt.len();
    if n == 1 {
        return Ok(tt.clone());
    }
    let mut cores: Vec<Core> = tt.cores.clone();

    for k in (1..n).rev() {
        let phys = cores[k].phys;
        let (l, q) = linalg::lq(&cores[k].right_unfolding());
        cores[k] = Core::from_right_unfolding(q, phys);
        let prev = &cores[k - 1];
        let merged = linalg::matmul(&prev.left_unfolding(), &l);
        cores[k - 1] = Core::from_left_unfolding(merged, prev.phys);
    }

    let norm = Matrix::from_data(1, cores[0].data.len(), cores[0].data.clone()).frobenius_norm();
    if !norm.is_finite() {
        return Err(Error::NumericFailure(
            "non-finite norm during truncation".into(),
        ));
    }
    let scale = match policy.mode {
        ToleranceMode::Relative => norm,
        ToleranceMode::Absolute => 1.0,
    };
    let budget = (policy.tolerance * scale).powi(2) / (n - 1) as f64;

    for k in 0..n - 1 {
        let phys = cores[k].phys;
        let dec = linalg::svd(&cores[k].left_unfolding())?;
        let rank = if policy.tolerance == 0.0 {
            // drop only exactly vanishing directions
            dec.s.iter().rposition(|&s| s > 0.0).map_or(1, |i| i + 1)
        } else {
            linalg::truncation_rank(&dec.s, budget)
        };
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
        cores[k] = Core::from_left_unfolding(u, phys);
        let cols = dec.vh.cols;
        let mut svh = Matrix::zeros(rank, cols);
        for i in 0..rank {
            for j in 0..cols {
                svh.data[i * cols + j] = dec.vh.data[i * cols + j] * dec.s[i];
            }
        }
        let next = &cores[k + 1];
        let merged = linalg::matmul(&svh, &next.right_unfolding());
        cores[k + 1] = Core::from_right_unfolding(merged, next.phys);
    }
    Ok(TensorTrain::from_cores_unchecked(cores))
}
