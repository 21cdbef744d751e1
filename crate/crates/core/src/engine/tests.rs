use super::*;
use crate::models::{normal_cdf, ComponentSpec, GaussianModel};

fn binomial3() -> WeightedSumModel {
    WeightedSumModel::binomial(3, 0.5, 1.0 / 3.0).unwrap()
}

/// Closed-form CDF of Σ of three Bernoulli(1/2) with weights 1/3.
fn binomial3_cdf(x: f64) -> f64 {
    let pmf = [0.125, 0.375, 0.375, 0.125];
    (0..4)
        .filter(|&k| k as f64 / 3.0 <= x + 1e-15)
        .map(|k| pmf[k])
        .sum()
}

fn exp_opts() -> PipelineOptions {
    PipelineOptions::with_filter(FilterSpec::exponential())
}

fn gaussian_pdf(x: f64, m: f64, s: f64) -> f64 {
    (-0.5 * ((x - m) / s).powi(2)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
}

#[test]
fn binomial_midpoint_plateau() {
    let cdf = dense_spectral_cdf(&binomial3(), 8, 1.0, &exp_opts()).unwrap();
    assert!((cdf.value(128).unwrap() - 0.5).abs() < 1e-8);
    assert_eq!(cdf.len(), 256);
    let diag = &cdf.diagnostics;
    assert!(diag.imag_residue < 1e-12);
    assert!(diag.overshoot.unwrap() < 1e-2);
}

#[test]
fn gaussian_density_matches_analytic() {
    let (m, s) = (0.5, 0.05);
    let model = GaussianModel {
        mean: m,
        variance: s * s,
    };
    let pdf = dense_spectral_pdf(&model, 12, 1.0, &PipelineOptions::default()).unwrap();
    let g = pdf.grid;
    let v = pdf.values().unwrap();
    let err = v
        .iter()
        .enumerate()
        .map(|(j, f)| (f - gaussian_pdf(g.point(j), m, s)).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-8, "{err}");
    let mass: f64 = v.iter().sum::<f64>() * g.dx();
    assert!((mass - 1.0).abs() < 1e-8);
}

#[test]
fn gaussian_cdf_is_the_rectangular_rule_of_the_density() {
    let (m, s) = (0.5, 0.05);
    let model = GaussianModel {
        mean: m,
        variance: s * s,
    };
    let cdf = dense_spectral_cdf(&model, 12, 1.0, &PipelineOptions::default()).unwrap();
    let g = cdf.grid;
    let v = cdf.values().unwrap();
    let mut acc = 0.0;
    let mut worst_rule = 0.0f64;
    let mut worst_exact = 0.0f64;
    for (j, f) in v.iter().enumerate() {
        acc += gaussian_pdf(g.point(j), m, s) * g.dx();
        worst_rule = worst_rule.max((f - acc).abs());
        worst_exact = worst_exact.max((f - normal_cdf((g.point(j) - m) / s)).abs());
    }
    assert!(worst_rule < 1e-8, "{worst_rule}");
    // first-order rule: bias bounded by Δx·max f / 2 plus change of f
    assert!(
        worst_exact < g.dx() * gaussian_pdf(m, m, s),
        "{worst_exact}"
    );
    assert!((cdf.final_value().unwrap() - 1.0).abs() < 1e-8);
}

#[test]
fn filtered_point_masses_keep_their_lobe_mass() {
    let pdf = dense_spectral_pdf(&binomial3(), 10, 1.0, &exp_opts()).unwrap();
    let g = pdf.grid;
    let v = pdf.values().unwrap();
    for (centre, p) in [(1.0 / 3.0, 0.375), (2.0 / 3.0, 0.375)] {
        let mass: f64 = (0..g.len())
            .filter(|&j| (g.point(j) - centre).abs() < 1.0 / 6.0)
            .map(|j| v[j] * g.dx())
            .sum();
        assert!((mass - p).abs() < 1e-6, "{centre}: {mass}");
    }
}

#[test]
fn qtt_matches_dense_on_binomial() {
    let opts = exp_opts().tolerance(1e-8);
    let dense = dense_spectral_cdf(&binomial3(), 12, 1.0, &opts).unwrap();
    let qtt = qtt_spectral_cdf(&binomial3(), 12, 1.0, &opts).unwrap();
    let m = qtt.error_metrics(&dense.values().unwrap()).unwrap();
    assert!(m.linf < 1e-6, "{}", m.linf);
    let d = &qtt.diagnostics;
    assert_eq!(d.representation, Representation::Qtt);
    assert!(d.steps.len() >= 5);
    assert!(d.peak_bond >= d.peak_truncated_bond);
    assert_eq!(d.final_bonds.len(), 11);
    let json: serde_json::Value = serde_json::from_str(&d.to_json()).unwrap();
    assert_eq!(json["representation"], "qtt");
}

#[test]
fn qtt_density_matches_dense() {
    let model = WeightedSumModel::new(
        vec![ComponentSpec::Lognormal {
            mu: 0.0,
            sigma: 0.5,
        }],
        vec![1.0],
        false,
    )
    .unwrap();
    let opts = PipelineOptions::default().tolerance(1e-10);
    let dense = dense_spectral_pdf(&model, 11, 12.0, &opts).unwrap();
    let qtt = qtt_spectral_pdf(&model, 11, 12.0, &opts).unwrap();
    let m = qtt.error_metrics(&dense.values().unwrap()).unwrap();
    assert!(m.linf < 1e-6, "{}", m.linf);
}

#[test]
fn single_bernoulli_is_a_staircase() {
    let model = WeightedSumModel::binomial(1, 0.3, 1.0).unwrap();
    let opts = exp_opts();
    let cdf = qtt_spectral_cdf(&model, 10, 2.0, &opts).unwrap();
    let g = cdf.grid;
    for j in [256, 400, 700, 1000] {
        let expected = if g.point(j) < 1.0 { 0.7 } else { 1.0 };
        assert!(
            (cdf.value(j).unwrap() - expected).abs() < 1e-6,
            "x={}",
            g.point(j)
        );
    }
}

#[test]
fn filter_order_and_tree_reduction_agree() {
    let model = WeightedSumModel::poisson_binomial(
        &[0.1, 0.25, 0.4, 0.15, 0.3, 0.2],
        &[0.3, 0.1, 0.15, 0.2, 0.05, 0.2],
    )
    .unwrap();
    let eps = 1e-8;
    let first = qtt_spectral_cdf(&model, 10, 1.0, &exp_opts().tolerance(eps)).unwrap();
    let reference = first.values().unwrap();
    let last = PipelineOptions {
        filter_first: false,
        ..exp_opts().tolerance(eps)
    };
    let tree = PipelineOptions {
        tree_reduction: true,
        ..exp_opts().tolerance(eps)
    };
    for opts in [last, tree] {
        let other = qtt_spectral_cdf(&model, 10, 1.0, &opts).unwrap();
        let m = other.error_metrics(&reference).unwrap();
        assert!(m.linf < 10.0 * eps, "{opts:?}: {}", m.linf);
    }
    let dense_last = dense_spectral_cdf(&model, 10, 1.0, &last).unwrap();
    let dense_first = dense_spectral_cdf(&model, 10, 1.0, &exp_opts()).unwrap();
    assert!(
        dense_last
            .error_metrics(&dense_first.values().unwrap())
            .unwrap()
            .linf
            < 1e-13
    );
}

#[test]
fn bond_cap_reports_the_failing_step() {
    let probs: Vec<f64> = (0..8).map(|d| 0.1 + 0.05 * d as f64).collect();
    let weights: Vec<f64> = (0..8)
        .map(|d| (d as f64 * 0.7315).sin().abs() + 0.1)
        .collect();
    let model = WeightedSumModel::poisson_binomial(&probs, &weights).unwrap();
    let opts = PipelineOptions {
        max_bond: 4,
        ..PipelineOptions::default()
    };
    match qtt_spectral_cdf(&model, 12, weights.iter().sum(), &opts) {
        Err(Error::ResourceLimit {
            step: Some(_),
            limit: 4,
            ..
        }) => {}
        other => panic!("expected a resource limit with a step, got {other:?}"),
    }
}

#[test]
fn dense_cap_and_invalid_tolerance() {
    let opts = PipelineOptions {
        dense_max_n: 6,
        ..PipelineOptions::default()
    };
    assert!(matches!(
        dense_spectral_cdf(&binomial3(), 7, 1.0, &opts),
        Err(Error::ResourceLimit { .. })
    ));
    assert!(qtt_spectral_cdf(
        &binomial3(),
        7,
        1.0,
        &PipelineOptions::default().tolerance(0.0)
    )
    .is_err());
}

#[test]
fn peak_bonds_grow_as_tolerance_tightens() {
    let model =
        WeightedSumModel::poisson_binomial(&[0.2, 0.3, 0.15, 0.4], &[0.37, 0.21, 0.13, 0.29])
            .unwrap();
    let mut last = 0;
    for eps in [1e-4, 1e-6, 1e-8, 1e-10] {
        let (tt, _) = qtt_characteristic_function(
            &model,
            10,
            1.0,
            &PipelineOptions::default().tolerance(eps),
        )
        .unwrap();
        assert!(tt.max_bond() >= last);
        last = tt.max_bond();
    }
}

#[test]
fn error_metric_examples() {
    let a = vec![0.1, 0.2, 0.3, 0.4];
    let z = error_metrics(&a, &a, 0.25).unwrap();
    assert_eq!((z.l1, z.l2, z.linf, z.median), (0.0, 0.0, 0.0, 0.0));
    let shifted: Vec<f64> = a.iter().map(|x| x + 0.01).collect();
    let m = error_metrics(&shifted, &a, 0.25).unwrap();
    assert!((m.linf - 0.01).abs() < 1e-15 && (m.l1 - 0.01).abs() < 1e-15);
    assert!(error_metrics(&a, &a[..3], 0.25).is_err());
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let x: Vec<f64> = (0..256).map(|_| rng.random()).collect();
    let y: Vec<f64> = (0..256).map(|_| rng.random()).collect();
    let m = error_metrics(&x, &y, 1.0 / 256.0).unwrap();
    let l1: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum::<f64>() / 256.0;
    let l2: f64 = (x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / 256.0).sqrt();
    let mut e: Vec<f64> = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).collect();
    e.sort_by(f64::total_cmp);
    assert!((m.l1 - l1).abs() < 1e-14 && (m.l2 - l2).abs() < 1e-14);
    assert_eq!(m.median, e[127]);
}

#[test]
fn gibbs_band_examples() {
    let g = GridSpec::unit(1.0, 10).unwrap();
    let zero = vec![0.0; g.len()];
    assert_eq!(
        gibbs_band_width(&zero, &g, &[0.3, 0.6], 1e-3).unwrap(),
        vec![0.0, 0.0]
    );
    let r = 0.05;
    let jumps = [0.3, 0.7];
    let balls: Vec<f64> = g
        .points()
        .iter()
        .map(|&x| {
            if jumps.iter().any(|j| (x - j).abs() < r) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    for w in gibbs_band_width(&balls, &g, &jumps, 0.5).unwrap() {
        assert!((w - 2.0 * r).abs() <= 2.0 * g.dx(), "{w}");
    }
    assert!(gibbs_band_width(&zero, &g, &jumps, 0.0).is_err());
}

#[test]
fn self_error_examples() {
    let opts = exp_opts().tolerance(1e-10);
    let model = GaussianModel {
        mean: 0.5,
        variance: 0.01,
    };
    let fine = qtt_spectral_pdf(&model, 9, 1.0, &opts).unwrap();
    let coarse = qtt_spectral_pdf(&model, 8, 1.0, &opts).unwrap();
    let q = self_error(&fine, &coarse).unwrap();
    let d = self_error_dense(
        &fine.values().unwrap(),
        &coarse.values().unwrap(),
        coarse.grid.dx(),
    )
    .unwrap();
    assert!((q - d).abs() < 1e-10, "{q} vs {d}");
    let c: Vec<f64> = (0..8).map(|j| j as f64).collect();
    let f: Vec<f64> = (0..16).map(|j| j as f64 / 2.0).collect();
    assert_eq!(self_error_dense(&f, &c, 0.125).unwrap(), 0.0);
    assert!(self_error(&coarse, &fine).is_err());
}

#[test]
fn berry_esseen_examples() {
    let b = berry_esseen_bound(&WeightedSumModel::binomial(100, 0.5, 1.0).unwrap()).unwrap();
    assert!((b - 0.05583).abs() < 1e-12);
    let m = WeightedSumModel::poisson_binomial(&[0.2, 0.6, 0.3], &[1.0, 2.0, 0.5]).unwrap();
    let t = WeightedSumModel::poisson_binomial(&[0.2, 0.6, 0.3], &[3.0, 6.0, 1.5]).unwrap();
    let (a, b) = (
        berry_esseen_bound(&m).unwrap(),
        berry_esseen_bound(&t).unwrap(),
    );
    assert!((a - b).abs() < 1e-12 * a);
    // D=4 binomial: sup |F − F_G| over both sides of every jump
    let bound = berry_esseen_bound(&WeightedSumModel::binomial(4, 0.5, 1.0).unwrap()).unwrap();
    let pmf = [1.0, 4.0, 6.0, 4.0, 1.0].map(|c| c / 16.0);
    let mut f = 0.0;
    let mut sup = 0.0f64;
    for (k, p) in pmf.iter().enumerate() {
        let g = normal_cdf((k as f64 - 2.0) / 1.0);
        sup = sup.max((f - g).abs());
        f += p;
        sup = sup.max((f - g).abs());
    }
    assert!(sup <= bound, "{sup} > {bound}");
}

#[test]
fn exponential_filter_median_error_on_binomial() {
    let cdf = dense_spectral_cdf(&binomial3(), 12, 1.0, &exp_opts()).unwrap();
    let exact: Vec<f64> = cdf
        .grid
        .points()
        .iter()
        .map(|&x| binomial3_cdf(x))
        .collect();
    let m = cdf.error_metrics(&exact).unwrap();
    assert!(m.median < 1e-8, "{}", m.median);
    assert!(m.linf > 0.05, "Gibbs bands must survive near the jumps");
}
