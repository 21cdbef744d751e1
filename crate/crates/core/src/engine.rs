//! Spectral CDF and density reconstruction, dense and in QTT form, with the
//! error analysis used to study convergence.
//!
//! Both pipelines work on the zero-padded grid of `2N` points: the product of
//! the component characteristic functions (optionally filtered) is sampled at
//! `ω_k = −Ω + kΔω`, multiplied by the Dirichlet kernel for the CDF, inverted,
//! and the upper half discarded.

use std::time::Instant;

use num_complex::Complex64 as c64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{
    apply_fourier, dense_dft_in_place, dirichlet_kernel_qtt, dirichlet_kernel_value, modulate,
    project_lower_half, Direction,
};
use crate::grid::{FrequencyGrid, GridSpec};
use crate::models::{filter_qtt, CharacteristicModel, FilterSpec, WeightedSumModel};
use crate::tt::{TensorTrain, Truncation, DEFAULT_BOND_CAP, DEFAULT_DENSE_CAP};

const ONE: c64 = c64::new(1.0, 0.0);

/// Largest `n` accepted by the dense pipelines by default.
pub const DEFAULT_DENSE_MAX_N: usize = 24;

/// Default failure threshold on the relative imaginary residue.
pub const DEFAULT_IMAG_THRESHOLD: f64 = 1e-6;

/// Upper Berry–Esseen constant.
pub const BERRY_ESSEEN_C: f64 = 0.5583;

/// Frequencies evaluated per block in the dense pipeline.
const DENSE_BLOCK: usize = 1 << 14;

/// Settings shared by the dense and QTT pipelines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    pub filter: FilterSpec,
    /// Multiply the filter before the component factors (the default) or after.
    pub filter_first: bool,
    /// Relative truncation tolerance `ε` for the QTT pipeline.
    pub tolerance: f64,
    pub max_bond: usize,
    /// Largest `n` the dense pipeline accepts.
    pub dense_max_n: usize,
    pub imag_threshold: f64,
    /// Experimental: pairwise tree reduction of the factor products.
    pub tree_reduction: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            filter: FilterSpec::None,
            filter_first: true,
            tolerance: 1e-8,
            max_bond: DEFAULT_BOND_CAP,
            dense_max_n: DEFAULT_DENSE_MAX_N,
            imag_threshold: DEFAULT_IMAG_THRESHOLD,
            tree_reduction: false,
        }
    }
}

impl PipelineOptions {
    pub fn with_filter(filter: FilterSpec) -> Self {
        PipelineOptions {
            filter,
            ..Default::default()
        }
    }

    pub fn tolerance(mut self, eps: f64) -> Self {
        self.tolerance = eps;
        self
    }

    fn policy(&self) -> Truncation {
        Truncation::relative(self.tolerance).with_max_bond(self.max_bond)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Dense,
    Qtt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Cdf,
    Pdf,
}

/// One pipeline stage: bonds before and after truncation, storage and time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub label: String,
    pub raw_max_bond: usize,
    pub max_bond: usize,
    pub bytes: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub representation: Representation,
    pub quantity: Quantity,
    pub n: usize,
    pub length: f64,
    pub filter: String,
    pub filter_first: bool,
    pub tolerance: Option<f64>,
    pub steps: Vec<StepRecord>,
    /// Largest bond seen anywhere, including untruncated products.
    pub peak_bond: usize,
    /// Largest bond after truncation.
    pub peak_truncated_bond: usize,
    pub final_bonds: Vec<usize>,
    pub peak_bytes: usize,
    pub final_bytes: usize,
    pub wall_seconds: f64,
    /// Discarded imaginary part relative to the real output: `max|Im|/max|Re|`
    /// for dense runs, `‖Im‖/‖·‖` for QTT runs (resolution about 1e-8).
    pub imag_residue: f64,
    /// `max(−min F, max F − 1, 0)` when the values were materialized.
    pub overshoot: Option<f64>,
}

impl Diagnostics {
    fn new(
        rep: Representation,
        quantity: Quantity,
        n: usize,
        length: f64,
        opts: &PipelineOptions,
    ) -> Self {
        Diagnostics {
            representation: rep,
            quantity,
            n,
            length,
            filter: opts.filter.name().to_string(),
            filter_first: opts.filter_first,
            tolerance: (rep == Representation::Qtt).then_some(opts.tolerance),
            steps: Vec::new(),
            peak_bond: 1,
            peak_truncated_bond: 1,
            final_bonds: Vec::new(),
            peak_bytes: 0,
            final_bytes: 0,
            wall_seconds: 0.0,
            imag_residue: 0.0,
            overshoot: None,
        }
    }

    fn record(
        &mut self,
        label: impl Into<String>,
        raw: Option<&TensorTrain>,
        out: &TensorTrain,
        start: Instant,
    ) {
        let raw_bond = raw.map_or(out.max_bond(), |r| r.max_bond());
        let raw_bytes = raw.map_or(0, |r| r.memory_bytes());
        self.peak_bond = self.peak_bond.max(raw_bond).max(out.max_bond());
        self.peak_truncated_bond = self.peak_truncated_bond.max(out.max_bond());
        self.peak_bytes = self.peak_bytes.max(raw_bytes).max(out.memory_bytes());
        self.steps.push(StepRecord {
            label: label.into(),
            raw_max_bond: raw_bond,
            max_bond: out.max_bond(),
            bytes: out.memory_bytes(),
            seconds: start.elapsed().as_secs_f64(),
        });
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("diagnostics serialize")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Dense(Vec<f64>),
    /// Complex train whose real part is the reconstruction.
    Qtt(TensorTrain),
}

/// A reconstructed CDF or density on the spatial grid `[0, L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Approximation {
    pub grid: GridSpec,
    pub quantity: Quantity,
    pub payload: Payload,
    pub filter: FilterSpec,
    pub tolerance: Option<f64>,
    pub diagnostics: Diagnostics,
}

pub type CdfApproximation = Approximation;
pub type PdfApproximation = Approximation;

impl Approximation {
    /// Wrap externally computed samples, such as an exact reference CDF.
    pub fn from_values(grid: GridSpec, quantity: Quantity, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid("sample count does not match the grid"));
        }
        Ok(Self::wrap(
            grid,
            quantity,
            Payload::Dense(values),
            Representation::Dense,
        ))
    }

    /// Wrap an externally built train (real part is the value).
    pub fn from_tt(grid: GridSpec, quantity: Quantity, tt: TensorTrain) -> Result<Self> {
        if tt.len() != grid.n || tt.physical_dims().iter().any(|&d| d != 2) {
            return Err(Error::invalid("train does not match the grid"));
        }
        Ok(Self::wrap(
            grid,
            quantity,
            Payload::Qtt(tt),
            Representation::Qtt,
        ))
    }

    fn wrap(grid: GridSpec, quantity: Quantity, payload: Payload, rep: Representation) -> Self {
        let opts = PipelineOptions::default();
        Approximation {
            grid,
            quantity,
            payload,
            filter: FilterSpec::None,
            tolerance: None,
            diagnostics: Diagnostics::new(rep, quantity, grid.n, grid.length(), &opts),
        }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn representation(&self) -> Representation {
        match self.payload {
            Payload::Dense(_) => Representation::Dense,
            Payload::Qtt(_) => Representation::Qtt,
        }
    }

    /// All samples; QTT payloads are contracted up to the dense safety cap.
    pub fn values(&self) -> Result<Vec<f64>> {
        match &self.payload {
            Payload::Dense(v) => Ok(v.clone()),
            Payload::Qtt(t) => Ok(t.to_dense()?.into_iter().map(|z| z.re).collect()),
        }
    }

    pub fn value(&self, j: usize) -> Result<f64> {
        match &self.payload {
            Payload::Dense(v) => v
                .get(j)
                .copied()
                .ok_or_else(|| Error::invalid(format!("index {j} outside the grid"))),
            Payload::Qtt(t) => Ok(t.element_at(j)?.re),
        }
    }

    /// Value at the last grid point `L − Δx`.
    pub fn final_value(&self) -> Result<f64> {
        self.value(self.len() - 1)
    }

    pub fn tt(&self) -> Option<&TensorTrain> {
        match &self.payload {
            Payload::Qtt(t) => Some(t),
            Payload::Dense(_) => None,
        }
    }

    pub fn error_metrics(&self, reference: &[f64]) -> Result<ErrorMetrics> {
        error_metrics(&self.values()?, reference, self.grid.dx())
    }

    fn fill_overshoot(&mut self) {
        if self.quantity != Quantity::Cdf || self.len() > DEFAULT_DENSE_CAP {
            return;
        }
        if let Ok(v) = self.values() {
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            self.diagnostics.overshoot = Some((-lo).max(hi - 1.0).max(0.0));
        }
    }
}

fn check_dense_size(n: usize, opts: &PipelineOptions) -> Result<()> {
    if n > opts.dense_max_n {
        return Err(Error::ResourceLimit {
            what: "dense pipeline resolution n".into(),
            limit: opts.dense_max_n,
            actual: n,
            step: None,
        });
    }
    Ok(())
}

/// Padded spectrum `σ·∏φ_d [·D]` evaluated blockwise.
fn dense_spectrum(
    model: &dyn CharacteristicModel,
    freq: &FrequencyGrid,
    opts: &PipelineOptions,
    dirichlet: bool,
) -> Result<Vec<c64>> {
    let m = freq.len();
    let mut buf = vec![ONE; m];
    let filter = |w: f64| opts.filter.eval(w / freq.omega_max);
    let use_filter = opts.filter != FilterSpec::None;
    for (b, block) in buf.chunks_mut(DENSE_BLOCK).enumerate() {
        let start = b * DENSE_BLOCK;
        let omegas: Vec<f64> = (start..start + block.len())
            .map(|k| freq.omega(k))
            .collect();
        if use_filter && opts.filter_first {
            for (z, &w) in block.iter_mut().zip(&omegas) {
                *z *= filter(w);
            }
        }
        for d in 0..model.factor_count() {
            let f = model.factor_dense(d, &omegas)?;
            for (z, v) in block.iter_mut().zip(f) {
                *z *= v;
            }
        }
        if use_filter && !opts.filter_first {
            for (z, &w) in block.iter_mut().zip(&omegas) {
                *z *= filter(w);
            }
        }
        if dirichlet {
            for (i, z) in block.iter_mut().enumerate() {
                *z *= dirichlet_kernel_value(freq, start + i);
            }
        }
        if block
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::NumericFailure(
                "non-finite value in the characteristic function product".into(),
            ));
        }
    }
    Ok(buf)
}

fn dense_pipeline(
    model: &dyn CharacteristicModel,
    n: usize,
    length: f64,
    opts: &PipelineOptions,
    quantity: Quantity,
) -> Result<Approximation> {
    check_dense_size(n, opts)?;
    let start = Instant::now();
    let grid = GridSpec::unit(length, n)?;
    let freq = FrequencyGrid::new(n, length)?;
    let mut diag = Diagnostics::new(Representation::Dense, quantity, n, length, opts);
    let mut buf = dense_spectrum(model, &freq, opts, quantity == Quantity::Cdf)?;
    let t = Instant::now();
    dense_dft_in_place(&mut buf, Direction::Inverse)?;
    let half = freq.half_len();
    buf.truncate(half);
    let scale = match quantity {
        Quantity::Cdf => 1.0,
        Quantity::Pdf => 1.0 / grid.dx(),
    };
    let mut max_re = 0.0f64;
    let mut max_im = 0.0f64;
    let values: Vec<f64> = buf
        .iter()
        .enumerate()
        .map(|(j, z)| {
            let z = if j % 2 == 0 { *z } else { -*z } * scale;
            max_re = max_re.max(z.re.abs());
            max_im = max_im.max(z.im.abs());
            z.re
        })
        .collect();
    drop(buf);
    let bytes = 16 * freq.len();
    diag.steps.push(StepRecord {
        label: "inverse_transform".into(),
        raw_max_bond: 1,
        max_bond: 1,
        bytes,
        seconds: t.elapsed().as_secs_f64(),
    });
    diag.peak_bytes = bytes;
    diag.final_bytes = 8 * half;
    diag.imag_residue = if max_re > 0.0 {
        max_im / max_re
    } else {
        max_im
    };
    diag.wall_seconds = start.elapsed().as_secs_f64();
    check_imaginary(diag.imag_residue, opts)?;
    let mut out = Approximation {
        grid,
        quantity,
        payload: Payload::Dense(values),
        filter: opts.filter,
        tolerance: None,
        diagnostics: diag,
    };
    out.fill_overshoot();
    Ok(out)
}

fn check_imaginary(residue: f64, opts: &PipelineOptions) -> Result<()> {
    if residue > opts.imag_threshold {
        return Err(Error::NumericFailure(format!(
            "imaginary residue {residue:.3e} exceeds threshold {:.1e}",
            opts.imag_threshold
        )));
    }
    Ok(())
}

/// Dense CDF reconstruction on `[0, L)` with `2ⁿ` points.
pub fn dense_spectral_cdf(
    model: &dyn CharacteristicModel,
    n: usize,
    length: f64,
    opts: &PipelineOptions,
) -> Result<CdfApproximation> {
    dense_pipeline(model, n, length, opts, Quantity::Cdf)
}

/// Dense density reconstruction, normalized so that `Σ f·Δx ≈ 1`.
pub fn dense_spectral_pdf(
    model: &dyn CharacteristicModel,
    n: usize,
    length: f64,
    opts: &PipelineOptions,
) -> Result<PdfApproximation> {
    dense_pipeline(model, n, length, opts, Quantity::Pdf)
}

/// Sequential Hadamard products with truncation after each step.
fn qtt_spectrum(
    model: &dyn CharacteristicModel,
    freq: &FrequencyGrid,
    opts: &PipelineOptions,
    diag: &mut Diagnostics,
) -> Result<TensorTrain> {
    let policy = opts.policy();
    let count = model.factor_count();
    let use_filter = opts.filter != FilterSpec::None;
    let t = Instant::now();
    let mut acc = if use_filter && opts.filter_first {
        filter_qtt(&opts.filter, freq)?
    } else {
        TensorTrain::constant(freq.n_pad, ONE)
    };
    diag.record("filter", None, &acc, t);
    if opts.tree_reduction {
        let t = Instant::now();
        let mut leaves: Vec<TensorTrain> = (0..count)
            .into_par_iter()
            .map(|d| model.factor_qtt(d, freq, &policy).map_err(|e| e.at_step(d)))
            .collect::<Result<_>>()?;
        leaves.insert(0, acc);
        while leaves.len() > 1 {
            leaves = leaves
                .par_chunks(2)
                .map(|p| match p {
                    [a, b] => a.hadamard(b)?.truncate(&policy),
                    [a] => Ok(a.clone()),
                    _ => unreachable!(),
                })
                .collect::<Result<_>>()?;
        }
        acc = leaves.pop().expect("one leaf");
        diag.record("tree_reduction", None, &acc, t);
    } else {
        for d in 0..count {
            let t = Instant::now();
            let factor = model
                .factor_qtt(d, freq, &policy)
                .map_err(|e| e.at_step(d))?;
            let raw = acc.hadamard(&factor)?;
            acc = raw.truncate(&policy).map_err(|e| e.at_step(d))?;
            diag.record(format!("component {d}"), Some(&raw), &acc, t);
        }
    }
    if use_filter && !opts.filter_first {
        let t = Instant::now();
        let raw = acc.hadamard(&filter_qtt(&opts.filter, freq)?)?;
        acc = raw.truncate(&policy).map_err(|e| e.at_step(count))?;
        diag.record("filter", Some(&raw), &acc, t);
    }
    Ok(acc)
}

fn qtt_pipeline(
    model: &dyn CharacteristicModel,
    n: usize,
    length: f64,
    opts: &PipelineOptions,
    quantity: Quantity,
) -> Result<Approximation> {
    if !(opts.tolerance > 0.0) {
        return Err(Error::invalid("QTT pipeline needs a positive tolerance"));
    }
    let start = Instant::now();
    let grid = GridSpec::unit(length, n)?;
    let freq = FrequencyGrid::new(n, length)?;
    let policy = opts.policy();
    let count = model.factor_count();
    let mut diag = Diagnostics::new(Representation::Qtt, quantity, n, length, opts);
    let mut spectrum = qtt_spectrum(model, &freq, opts, &mut diag)?;
    if quantity == Quantity::Cdf {
        let t = Instant::now();
        let kernel = dirichlet_kernel_qtt(&freq, &policy).map_err(|e| e.at_step(count))?;
        let raw = spectrum.hadamard(&kernel)?;
        spectrum = raw.truncate(&policy).map_err(|e| e.at_step(count))?;
        diag.record("dirichlet", Some(&raw), &spectrum, t);
    }
    let t = Instant::now();
    let back =
        apply_fourier(&spectrum, Direction::Inverse, &policy).map_err(|e| e.at_step(count + 1))?;
    let mut out = project_lower_half(&modulate(&back))?.truncate(&policy)?;
    if quantity == Quantity::Pdf {
        out = out.scale(c64::new(1.0 / grid.dx(), 0.0));
    }
    diag.record("inverse_transform", None, &out, t);
    diag.final_bonds = out.bond_dims();
    diag.final_bytes = out.memory_bytes();
    diag.imag_residue = out.relative_imaginary_norm();
    diag.wall_seconds = start.elapsed().as_secs_f64();
    check_imaginary(diag.imag_residue, opts)?;
    let mut approx = Approximation {
        grid,
        quantity,
        payload: Payload::Qtt(out),
        filter: opts.filter,
        tolerance: Some(opts.tolerance),
        diagnostics: diag,
    };
    approx.fill_overshoot();
    Ok(approx)
}

/// QTT CDF reconstruction; resource-limit errors carry the step index
/// (component index, `D` for the Dirichlet product, `D+1` for the transform).
pub fn qtt_spectral_cdf(
    model: &dyn CharacteristicModel,
    n: usize,
    length: f64,
    opts: &PipelineOptions,
) -> Result<CdfApproximation> {
    qtt_pipeline(model, n, length, opts, Quantity::Cdf)
}

/// QTT density reconstruction.
pub fn qtt_spectral_pdf(
    model: &dyn CharacteristicModel,
    n: usize,
    length: f64,
    opts: &PipelineOptions,
) -> Result<PdfApproximation> {
    qtt_pipeline(model, n, length, opts, Quantity::Pdf)
}

/// Just the (optionally filtered) characteristic-function train on the padded
/// grid, as used by the compressibility studies.
pub fn qtt_characteristic_function(
    model: &dyn CharacteristicModel,
    n: usize,
    length: f64,
    opts: &PipelineOptions,
) -> Result<(TensorTrain, Diagnostics)> {
    let freq = FrequencyGrid::new(n, length)?;
    let mut diag = Diagnostics::new(Representation::Qtt, Quantity::Cdf, n, length, opts);
    let start = Instant::now();
    let tt = qtt_spectrum(model, &freq, opts, &mut diag)?;
    diag.final_bonds = tt.bond_dims();
    diag.final_bytes = tt.memory_bytes();
    diag.wall_seconds = start.elapsed().as_secs_f64();
    Ok((tt, diag))
}

/// Pointwise error summary with `Δx`-weighted norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorMetrics {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub p10: f64,
    pub median: f64,
    pub p90: f64,
    pub p99: f64,
}

/// Nearest-rank quantile of an ascending sample.
fn sorted_quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[idx]
}

pub fn error_metrics(approx: &[f64], reference: &[f64], dx: f64) -> Result<ErrorMetrics> {
    if approx.len() != reference.len() || approx.is_empty() {
        return Err(Error::invalid(format!(
            "grid mismatch: {} vs {} samples",
            approx.len(),
            reference.len()
        )));
    }
    let mut err: Vec<f64> = approx
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).abs())
        .collect();
    let l1 = err.iter().sum::<f64>() * dx;
    let l2 = (err.iter().map(|e| e * e).sum::<f64>() * dx).sqrt();
    err.sort_by(f64::total_cmp);
    Ok(ErrorMetrics {
        l1,
        l2,
        linf: *err.last().expect("nonempty"),
        p10: sorted_quantile(&err, 0.1),
        median: sorted_quantile(&err, 0.5),
        p90: sorted_quantile(&err, 0.9),
        p99: sorted_quantile(&err, 0.99),
    })
}

/// Default Gibbs-band threshold: `1e-3` of the largest jump.
pub fn default_gibbs_threshold(largest_jump: f64) -> f64 {
    1e-3 * largest_jump
}

/// Width of the maximal contiguous run of grid points around each jump where
/// `|error| > threshold`; zero if neither neighbour of the jump exceeds it.
pub fn gibbs_band_width(
    errors: &[f64],
    grid: &GridSpec,
    jumps: &[f64],
    threshold: f64,
) -> Result<Vec<f64>> {
    if !(threshold > 0.0) {
        return Err(Error::invalid("Gibbs threshold must be positive"));
    }
    if errors.len() != grid.len() {
        return Err(Error::invalid("error vector does not match the grid"));
    }
    let len = errors.len();
    let above = |j: usize| errors[j].abs() > threshold;
    Ok(jumps
        .iter()
        .map(|&x| {
            let pos = ((x - grid.a) / grid.dx()).floor();
            let left = pos.clamp(0.0, (len - 1) as f64) as usize;
            let right = (pos + 1.0).clamp(0.0, (len - 1) as f64) as usize;
            let seed = [left, right].into_iter().find(|&j| above(j));
            match seed {
                None => 0.0,
                Some(j) => {
                    let mut lo = j;
                    while lo > 0 && above(lo - 1) {
                        lo -= 1;
                    }
                    let mut hi = j;
                    while hi + 1 < len && above(hi + 1) {
                        hi += 1;
                    }
                    (hi - lo + 1) as f64 * grid.dx()
                }
            }
        })
        .collect())
}

fn check_refinement(fine: &GridSpec, coarse: &GridSpec) -> Result<()> {
    if fine.a != coarse.a || fine.b != coarse.b || fine.n != coarse.n + 1 {
        return Err(Error::invalid(
            "self-error needs the same interval and consecutive resolutions",
        ));
    }
    Ok(())
}

/// `‖f_fine[2j] − f_coarse[j]‖` in the `Δx`-weighted discrete L² norm.
pub fn self_error_dense(fine: &[f64], coarse: &[f64], dx_coarse: f64) -> Result<f64> {
    if fine.len() != 2 * coarse.len() {
        return Err(Error::invalid(
            "fine grid must have twice the coarse points",
        ));
    }
    let s: f64 = coarse
        .iter()
        .enumerate()
        .map(|(j, c)| (fine[2 * j] - c).powi(2))
        .sum();
    Ok((s * dx_coarse).sqrt())
}

/// QTT self-error: the even nodes are the last digit fixed to zero.
pub fn self_error_qtt(fine: &TensorTrain, coarse: &TensorTrain, dx_coarse: f64) -> Result<f64> {
    if fine.len() != coarse.len() + 1 {
        return Err(Error::invalid("fine train must have one more core"));
    }
    let even = fine.fix_digit(fine.len() - 1, 0)?;
    let diff = even.add(&coarse.scale(-ONE))?;
    // real parts only: ‖Re d‖² = (‖d‖² + Re Σ d_j²)/2
    let total = diff.inner(&diff)?.re;
    let squares = diff.conj().inner(&diff)?.re;
    Ok((((total + squares) / 2.0).max(0.0) * dx_coarse).sqrt())
}

/// Self-error between consecutive resolutions of the same quantity.
pub fn self_error(fine: &Approximation, coarse: &Approximation) -> Result<f64> {
    check_refinement(&fine.grid, &coarse.grid)?;
    match (&fine.payload, &coarse.payload) {
        (Payload::Qtt(f), Payload::Qtt(c)) => self_error_qtt(f, c, coarse.grid.dx()),
        _ => self_error_dense(&fine.values()?, &coarse.values()?, coarse.grid.dx()),
    }
}

/// `C·ρ/σ³` with `ρ = Σ |w_d|³ E|X_d − E X_d|³` and `σ² = Σ w_d² Var X_d`.
pub fn berry_esseen_bound(model: &WeightedSumModel) -> Result<f64> {
    let mut rho = 0.0;
    let mut var = 0.0;
    for (c, &w) in model.components().iter().zip(model.weights()) {
        let (_, v, a3) = c.moments()?;
        rho += w.abs().powi(3) * a3;
        var += w * w * v;
    }
    if !(var > 0.0) {
        return Err(Error::invalid(
            "Berry–Esseen bound needs a positive variance",
        ));
    }
    Ok(BERRY_ESSEEN_C * rho / var.powf(1.5))
}

#[cfg(test)]
mod tests;
