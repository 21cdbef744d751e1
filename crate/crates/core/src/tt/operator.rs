use num_complex::Complex64 as c64;

use super::{Core, TensorTrain, Truncation, DEFAULT_DENSE_CAP};
use crate::error::{Error, Result};

/// One four-index operator core, stored row-major as `(left, out, in, right)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorCore {
    left: usize,
    out: usize,
    inp: usize,
    right: usize,
    data: Vec<c64>,
}

impl OperatorCore {
    pub fn new(left: usize, out: usize, inp: usize, right: usize, data: Vec<c64>) -> Result<Self> {
        if left == 0 || out == 0 || inp == 0 || right == 0 {
            return Err(Error::invalid("operator core dimensions must be positive"));
        }
        if data.len() != left * out * inp * right {
            return Err(Error::invalid("operator core buffer size mismatch"));
        }
        Ok(OperatorCore {
            left,
            out,
            inp,
            right,
            data,
        })
    }

    pub fn zeros(left: usize, out: usize, inp: usize, right: usize) -> Self {
        OperatorCore {
            left,
            out,
            inp,
            right,
            data: vec![c64::new(0.0, 0.0); left * out * inp * right],
        }
    }

    /// Bond-1 core holding the local matrix `m[o][i]`.
    pub fn local(m: &[Vec<c64>]) -> Result<Self> {
        let out = m.len();
        let inp = m.first().map_or(0, |r| r.len());
        if m.iter().any(|r| r.len() != inp) {
            return Err(Error::invalid("ragged local operator matrix"));
        }
        OperatorCore::new(1, out, inp, 1, m.iter().flatten().copied().collect())
    }

    pub fn left(&self) -> usize {
        self.left
    }
    pub fn out_dim(&self) -> usize {
        self.out
    }
    pub fn in_dim(&self) -> usize {
        self.inp
    }
    pub fn right(&self) -> usize {
        self.right
    }
    pub fn data(&self) -> &[c64] {
        &self.data
    }

    #[inline]
    fn idx(&self, a: usize, o: usize, i: usize, b: usize) -> usize {
        ((a * self.out + o) * self.inp + i) * self.right + b
    }

    #[inline]
    pub fn get(&self, a: usize, o: usize, i: usize, b: usize) -> c64 {
        self.data[self.idx(a, o, i, b)]
    }

    #[inline]
    pub fn set(&mut self, a: usize, o: usize, i: usize, b: usize, v: c64) {
        let k = self.idx(a, o, i, b);
        self.data[k] = v;
    }

    fn as_core(&self) -> Core {
        Core {
            left: self.left,
            phys: self.out * self.inp,
            right: self.right,
            data: self.data.clone(),
        }
    }

    fn from_core(c: Core, out: usize, inp: usize) -> Self {
        OperatorCore {
            left: c.left,
            out,
            inp,
            right: c.right,
            data: c.data,
        }
    }
}

/// Linear operator in tensor-train (matrix product operator) form.
#[derive(Debug, Clone, PartialEq)]
pub struct TtOperator {
    cores: Vec<OperatorCore>,
}

impl TtOperator {
    pub fn new(cores: Vec<OperatorCore>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::invalid("an operator needs at least one core"));
        }
        if cores[0].left != 1 || cores[cores.len() - 1].right != 1 {
            return Err(Error::invalid("boundary bond dimensions must be 1"));
        }
        if cores.windows(2).any(|w| w[0].right != w[1].left) {
            return Err(Error::invalid("operator bond mismatch"));
        }
        Ok(TtOperator { cores })
    }

    /// Identity on `n` binary digits.
    pub fn identity(n: usize) -> Self {
        let one = c64::new(1.0, 0.0);
        let zero = c64::new(0.0, 0.0);
        let core = OperatorCore::local(&[vec![one, zero], vec![zero, one]]).expect("2x2");
        TtOperator {
            cores: vec![core; n],
        }
    }

    pub fn cores(&self) -> &[OperatorCore] {
        &self.cores
    }

    pub fn len(&self) -> usize {
        self.cores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cores.is_empty()
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.cores[..self.cores.len() - 1]
            .iter()
            .map(|c| c.right)
            .collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// `y = op · x` with raw bonds `χ_op · χ_x`, no truncation.
    pub fn apply_raw(&self, x: &TensorTrain) -> Result<TensorTrain> {
        if self.len() != x.len() {
            return Err(Error::invalid(format!(
                "operator has {} cores, vector has {}",
                self.len(),
                x.len()
            )));
        }
        let mut cores = Vec::with_capacity(self.len());
        for (k, (w, a)) in self.cores.iter().zip(x.cores()).enumerate() {
            if w.inp != a.phys {
                return Err(Error::invalid(format!(
                    "input dimension mismatch at core {k}: {} vs {}",
                    w.inp, a.phys
                )));
            }
            let (l, r) = (w.left * a.left, w.right * a.right);
            let mut c = Core::zeros(l, w.out, r);
            for wa in 0..w.left {
                for o in 0..w.out {
                    for i in 0..w.inp {
                        for wb in 0..w.right {
                            let wv = w.get(wa, o, i, wb);
                            if wv == c64::new(0.0, 0.0) {
                                continue;
                            }
                            for xa in 0..a.left {
                                for xb in 0..a.right {
                                    let idx =
                                        ((wa * a.left + xa) * w.out + o) * r + wb * a.right + xb;
                                    c.data[idx] += wv * a.get(xa, i, xb);
                                }
                            }
                        }
                    }
                }
            }
            cores.push(c);
        }
        Ok(TensorTrain::from_cores_unchecked(cores))
    }

    /// `op · x` truncated with `policy`.
    pub fn apply(&self, x: &TensorTrain, policy: &Truncation) -> Result<TensorTrain> {
        self.apply_raw(x)?.truncate(policy)
    }

    /// `self ∘ other` (apply `other` first), raw bonds multiply.
    pub fn compose_raw(&self, other: &TtOperator) -> Result<TtOperator> {
        if self.len() != other.len() {
            return Err(Error::invalid("compose: core counts differ"));
        }
        let mut cores = Vec::with_capacity(self.len());
        for (a, b) in self.cores.iter().zip(&other.cores) {
            if a.inp != b.out {
                return Err(Error::invalid("compose: inner dimension mismatch"));
            }
            let (l, r) = (a.left * b.left, a.right * b.right);
            let mut c = OperatorCore::zeros(l, a.out, b.inp, r);
            for aa in 0..a.left {
                for o in 0..a.out {
                    for m in 0..a.inp {
                        for ab in 0..a.right {
                            let av = a.get(aa, o, m, ab);
                            if av == c64::new(0.0, 0.0) {
                                continue;
                            }
                            for ba in 0..b.left {
                                for i in 0..b.inp {
                                    for bb in 0..b.right {
                                        let k = c.idx(aa * b.left + ba, o, i, ab * b.right + bb);
                                        c.data[k] += av * b.get(ba, m, i, bb);
                                    }
                                }
                            }
                        }
                    }
                }
            }
            cores.push(c);
        }
        Ok(TtOperator { cores })
    }

    /// Compress by treating each core as a vector core with physical dimension `out·in`.
    pub fn truncate(&self, policy: &Truncation) -> Result<TtOperator> {
        let dims: Vec<(usize, usize)> = self.cores.iter().map(|c| (c.out, c.inp)).collect();
        let tt =
            TensorTrain::from_cores_unchecked(self.cores.iter().map(|c| c.as_core()).collect());
        let t = tt.truncate(policy)?;
        Ok(TtOperator {
            cores: t
                .into_cores()
                .into_iter()
                .zip(dims)
                .map(|(c, (o, i))| OperatorCore::from_core(c, o, i))
                .collect(),
        })
    }

    /// Reverse the digit order of both input and output.
    pub fn reversed(&self) -> TtOperator {
        let cores = self
            .cores
            .iter()
            .rev()
            .map(|c| {
                let mut t = OperatorCore::zeros(c.right, c.out, c.inp, c.left);
                for a in 0..c.left {
                    for o in 0..c.out {
                        for i in 0..c.inp {
                            for b in 0..c.right {
                                t.set(b, o, i, a, c.get(a, o, i, b));
                            }
                        }
                    }
                }
                t
            })
            .collect();
        TtOperator { cores }
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> TtOperator {
        TtOperator {
            cores: self
                .cores
                .iter()
                .map(|c| OperatorCore {
                    data: c.data.iter().map(|z| z.conj()).collect(),
                    ..*c
                })
                .collect(),
        }
    }

    pub fn scale(&self, s: c64) -> TtOperator {
        let mut cores = self.cores.clone();
        for z in cores[0].data.iter_mut() {
            *z *= s;
        }
        TtOperator { cores }
    }

    /// Dense row-major matrix (rows indexed by output, columns by input).
    pub fn to_dense(&self) -> Result<(usize, usize, Vec<c64>)> {
        let rows: usize = self.cores.iter().map(|c| c.out).product();
        let cols: usize = self.cores.iter().map(|c| c.inp).product();
        if rows.saturating_mul(cols) > DEFAULT_DENSE_CAP {
            return Err(Error::ResourceLimit {
                what: "dense operator materialization".into(),
                limit: DEFAULT_DENSE_CAP,
                actual: rows.saturating_mul(cols),
                step: None,
            });
        }
        // acc[(row, col), bond]
        let (mut r_acc, mut c_acc, mut bond) = (1usize, 1usize, 1usize);
        let mut acc = vec![c64::new(1.0, 0.0)];
        for w in &self.cores {
            let (nr, nc) = (r_acc * w.out, c_acc * w.inp);
            let mut next = vec![c64::new(0.0, 0.0); nr * nc * w.right];
            for r in 0..r_acc {
                for c in 0..c_acc {
                    for a in 0..bond {
                        let v = acc[(r * c_acc + c) * bond + a];
                        if v == c64::new(0.0, 0.0) {
                            continue;
                        }
                        for o in 0..w.out {
                            for i in 0..w.inp {
                                let row = r * w.out + o;
                                let col = c * w.inp + i;
                                for b in 0..w.right {
                                    next[(row * nc + col) * w.right + b] += v * w.get(a, o, i, b);
                                }
                            }
                        }
                    }
                }
            }
            acc = next;
            r_acc = nr;
            c_acc = nc;
            bond = w.right;
        }
        Ok((rows, cols, acc))
    }
}
