use proptest::prelude::*;
use qttagg::baselines::{
    exact_cdf, mc_sample, mc_var_es, recursive_convolution, DEFAULT_SUPPORT_CAP,
};
use qttagg::engine::{dense_spectral_cdf, dense_spectral_pdf, qtt_spectral_cdf, PipelineOptions};
use qttagg::models::{FilterSpec, WeightedSumModel};
use qttagg::risk::{risk_report, RiskOptions};

fn wpb_from_json(p: &[f64], w: &[f64]) -> WeightedSumModel {
    let comps: Vec<String> = p
        .iter()
        .map(|p| format!(r#"{{"type":"bernoulli","p":{p}}}"#))
        .collect();
    let json = format!(
        r#"{{"weights":{w:?},"normalize_weights":true,"components":[{}]}}"#,
        comps.join(",")
    );
    WeightedSumModel::from_json(&json).unwrap()
}

fn exp_opts() -> PipelineOptions {
    PipelineOptions::with_filter(FilterSpec::exponential())
}

/// Grid index of the exact quantile: first `x_j` with `F(x_j) ≥ α`.
fn exact_var_index(
    exact: &qttagg::baselines::DiscreteDistribution,
    xs: &[f64],
    alpha: f64,
) -> usize {
    exact_cdf(exact, xs)
        .iter()
        .position(|&f| f >= alpha)
        .unwrap()
}

#[test]
fn model_json_to_risk_matches_exact_law() {
    let p = [0.12, 0.31, 0.08, 0.22, 0.17, 0.26];
    let w = [0.9, 0.35, 0.6, 0.15, 0.75, 0.5];
    let model = wpb_from_json(&p, &w);
    // the order-8 filter keeps the smoothed jumps within about one cell
    let opts = PipelineOptions::with_filter(FilterSpec::SharpenedRaisedCosine);
    let cdf = qtt_spectral_cdf(&model, 14, 1.25, &opts).unwrap();
    let exact = recursive_convolution(&model, DEFAULT_SUPPORT_CAP).unwrap();
    let xs = cdf.grid.points();
    for alpha in [0.9, 0.99] {
        let r = risk_report(&cdf, alpha, &RiskOptions::default()).unwrap();
        let (_, es) = exact.var_es(alpha).unwrap();
        let j = exact_var_index(&exact, &xs, alpha);
        assert!(
            r.var_index.unwrap().abs_diff(j) <= 1,
            "VaR index {:?} vs {j}",
            r.var_index
        );
        assert!((r.es - es).abs() <= 1e-3 * es, "ES {} vs {es}", r.es);
    }
}

/// Binomial-like model shifted off the origin, so no smoothed atom straddles `x = 0`.
fn shifted_model() -> WeightedSumModel {
    WeightedSumModel::from_json(
        r#"{"weights":[0.5,0.3,0.2,0.25],"components":[
            {"type":"bernoulli","p":0.2},{"type":"bernoulli","p":0.4},{"type":"bernoulli","p":0.3},
            {"type":"categorical","values":[1.0],"probs":[1.0]}]}"#,
    )
    .unwrap()
}

#[test]
fn density_integrates_to_one_and_cdf_matches_prefix_sums() {
    let model = shifted_model();
    let opts = exp_opts();
    let f = dense_spectral_pdf(&model, 11, 1.5, &opts)
        .unwrap()
        .values()
        .unwrap();
    let big_f = dense_spectral_cdf(&model, 11, 1.5, &opts)
        .unwrap()
        .values()
        .unwrap();
    let dx = 1.5 / 2048.0;
    assert!((f.iter().sum::<f64>() * dx - 1.0).abs() < 1e-8);
    assert!((big_f[2047] - 1.0).abs() < 1e-8);
    let mut acc = 0.0;
    for (fj, big) in f.iter().zip(&big_f) {
        acc += fj * dx;
        assert!((acc - big).abs() < 1e-9);
    }
}

fn wpb_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..=6).prop_flat_map(|d| {
        (
            prop::collection::vec(0.02f64..0.98, d),
            prop::collection::vec(0.05f64..1.0, d),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_law_is_normalized_with_the_right_mean((p, w) in wpb_strategy()) {
        let model = WeightedSumModel::poisson_binomial(&p, &w).unwrap();
        let dist = recursive_convolution(&model, DEFAULT_SUPPORT_CAP).unwrap();
        prop_assert!((dist.pmf().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mean: f64 = p.iter().zip(&w).map(|(p, w)| p * w).sum();
        prop_assert!((dist.mean() - mean).abs() < 1e-12);
        let xs: Vec<f64> = (0..64).map(|i| i as f64 * 0.1).collect();
        let f = exact_cdf(&dist, &xs);
        prop_assert!(f.windows(2).all(|v| v[0] <= v[1]));
    }

    #[test]
    fn dense_and_qtt_agree((p, w) in wpb_strategy()) {
        let model = WeightedSumModel::poisson_binomial(&p, &w).unwrap();
        let length = 1.5 * w.iter().sum::<f64>();
        let opts = exp_opts();
        let dense = dense_spectral_cdf(&model, 10, length, &opts).unwrap().values().unwrap();
        let qtt = qtt_spectral_cdf(&model, 10, length, &opts).unwrap().values().unwrap();
        let linf = dense.iter().zip(&qtt).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(linf < 1e-6, "{}", linf);
    }

    #[test]
    fn monte_carlo_shortfall_dominates_var((p, w) in wpb_strategy(), seed in any::<u64>(), alpha in 0.5f64..0.995) {
        let model = WeightedSumModel::poisson_binomial(&p, &w).unwrap();
        let s = mc_sample(&model, 2000, seed).unwrap();
        let r = mc_var_es(&s, alpha).unwrap();
        prop_assert!(s.samples.contains(&r.var));
        prop_assert!(r.es >= r.var - 1e-12);
        let max = s.samples.iter().cloned().fold(f64::MIN, f64::max);
        prop_assert!(r.es <= max + 1e-12);
    }
}
