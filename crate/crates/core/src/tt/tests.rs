use super::*;
use crate::testutil::{random_tt, random_vec, rel_l2};
use proptest::prelude::*;

fn c(re: f64) -> c64 {
    c64::new(re, 0.0)
}

fn dense_rank1(factors: &[Vec<c64>]) -> Vec<c64> {
    let mut out = vec![ONE];
    for f in factors {
        out = out
            .iter()
            .flat_map(|a| f.iter().map(move |b| a * b))
            .collect();
    }
    out
}

#[test]
fn element_of_rank_one_train_is_product_of_factors() {
    let f = vec![
        vec![c(2.0), c(3.0)],
        vec![c(5.0), c(7.0)],
        vec![c(11.0), c(13.0)],
    ];
    let tt = TensorTrain::product(&f).unwrap();
    assert_eq!(tt.element(&[1, 0, 1]).unwrap(), c(3.0 * 5.0 * 13.0));
    assert_eq!(tt.to_dense().unwrap(), dense_rank1(&f));
}

#[test]
fn element_uses_big_endian_digits() {
    let v: Vec<c64> = (0..8).map(|j| c(j as f64)).collect();
    let tt = TensorTrain::from_dense(&v, &[2, 2, 2], 0.0).unwrap();
    assert!((tt.element(&[1, 0, 1]).unwrap() - c(5.0)).norm() < 1e-12);
}

#[test]
fn element_rejects_out_of_range_digits() {
    let tt = TensorTrain::constant(3, ONE);
    assert!(matches!(
        tt.element(&[0, 2, 0]),
        Err(Error::InvalidArgument(_))
    ));
    assert!(matches!(
        tt.element(&[0, 1]),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn every_element_matches_dense_contraction() {
    let tt = random_tt(7, 3, 11);
    let dense = tt.to_dense().unwrap();
    for (j, v) in dense.iter().enumerate() {
        assert!((tt.element_at(j).unwrap() - v).norm() < 1e-12);
    }
}

#[test]
fn geometric_sequence_is_rank_one() {
    let r = c64::new(0.9, 0.2);
    let v: Vec<c64> = (0..8).map(|j| r.powi(j)).collect();
    let tt = TensorTrain::from_dense(&v, &[2, 2, 2], 1e-12).unwrap();
    assert_eq!(tt.bond_dims(), vec![1, 1]);
}

#[test]
fn one_hot_is_a_product_state() {
    let mut v = vec![ZERO; 8];
    v[3] = ONE;
    let tt = TensorTrain::from_dense(&v, &[2, 2, 2], 0.0).unwrap();
    assert_eq!(tt.bond_dims(), vec![1, 1]);
    assert_eq!(tt.to_dense().unwrap(), v);
}

#[test]
fn from_dense_roundtrip_is_exact() {
    let v = random_vec(64, 3);
    let tt = TensorTrain::from_dense(&v, &[2; 6], 0.0).unwrap();
    assert!(rel_l2(&tt.to_dense().unwrap(), &v) < 1e-12);
}

#[test]
fn from_dense_checks_length() {
    assert!(matches!(
        TensorTrain::from_dense(&random_vec(7, 1), &[2, 2, 2], 0.0),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn constant_train_densifies_to_constant() {
    let k = c64::new(1.5, -0.5);
    assert_eq!(TensorTrain::constant(3, k).to_dense().unwrap(), vec![k; 8]);
}

#[test]
fn to_dense_enforces_cap() {
    let tt = TensorTrain::constant(25, ONE);
    assert!(matches!(tt.to_dense(), Err(Error::ResourceLimit { .. })));
    assert!(matches!(
        TensorTrain::constant(5, ONE).to_dense_capped(16),
        Err(Error::ResourceLimit { .. })
    ));
}

#[test]
fn rank_inflated_exponential_collapses() {
    // e^{λx} = ½e^{λx} + ½e^{λx} written with bond 2, then squared to bond 4
    let f: Vec<Vec<c64>> = (0..6)
        .map(|i| {
            let h = 0.5f64.powi(i + 1);
            vec![ONE, (c64::new(-0.3, 1.1) * h).exp()]
        })
        .collect();
    let exact = TensorTrain::product(&f).unwrap();
    let half = exact.scale(c(0.5));
    let inflated = half.add(&half).unwrap();
    let two_term_one = TensorTrain::constant(6, ONE)
        .add(&TensorTrain::constant(6, ZERO))
        .unwrap();
    let inflated = inflated.hadamard(&two_term_one).unwrap();
    assert_eq!(inflated.max_bond(), 4);
    let t = inflated.truncated(1e-10).unwrap();
    assert!(t.bond_dims().iter().all(|&b| b == 1));
    assert!(t.max_abs_diff(&exact).unwrap() < 1e-12);
}

#[test]
fn sum_of_two_exponentials_has_bond_two() {
    let n = 8;
    let dense: Vec<c64> = (0..1 << n)
        .map(|j| {
            let x = j as f64 / 256.0;
            (c64::new(0.0, 3.0) * x).exp() + (c64::new(-1.0, 0.5) * x).exp()
        })
        .collect();
    let tt = TensorTrain::from_dense(&dense, &vec![2; n], 0.0).unwrap();
    let t = tt.truncated(1e-12).unwrap();
    assert!(t.bond_dims().iter().all(|&b| b <= 2));
    assert_eq!(t.max_bond(), 2);
}

#[test]
fn zero_tolerance_truncation_preserves_norm() {
    let tt = random_tt(8, 4, 5);
    let t = tt.truncated(0.0).unwrap();
    assert!((t.norm() - tt.norm()).abs() < 1e-12 * tt.norm());
    assert!(rel_l2(&t.to_dense().unwrap(), &tt.to_dense().unwrap()) < 1e-12);
}

#[test]
fn truncation_output_is_left_canonical() {
    let t = random_tt(6, 4, 9).truncated(1e-3).unwrap();
    for core in &t.cores()[..t.len() - 1] {
        let u = core.left_unfolding();
        let g = linalg::matmul(&u.adjoint(), &u);
        for i in 0..g.rows {
            for j in 0..g.cols {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g.get(i, j) - c(expect)).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn bond_cap_raises_resource_limit() {
    let tt = random_tt(8, 8, 2);
    let err = tt
        .truncate(&Truncation::relative(0.0).with_max_bond(3))
        .unwrap_err();
    assert!(matches!(err, Error::ResourceLimit { limit: 3, .. }));
}

#[test]
fn absolute_mode_drops_tiny_vectors() {
    let tt = random_tt(6, 3, 4).scale(c(1e-20));
    let t = tt.truncate(&Truncation::absolute(1e-12)).unwrap();
    assert_eq!(t.max_bond(), 1);
}

#[test]
fn hadamard_identity_and_bond_accounting() {
    let f = random_tt(5, 2, 1);
    let one = TensorTrain::constant(5, ONE);
    assert!(f.hadamard(&one).unwrap().max_abs_diff(&f).unwrap() < 1e-14);
    let g = random_tt(5, 3, 2);
    assert_eq!(f.hadamard(&g).unwrap().bond_dims(), vec![6; 4]);
}

#[test]
fn hadamard_matches_dense_product() {
    let (a, b) = (random_tt(6, 3, 7), random_tt(6, 2, 8));
    let want: Vec<c64> = a
        .to_dense()
        .unwrap()
        .iter()
        .zip(b.to_dense().unwrap())
        .map(|(x, y)| x * y)
        .collect();
    assert!(rel_l2(&a.hadamard(&b).unwrap().to_dense().unwrap(), &want) < 1e-12);
}

#[test]
fn shape_mismatch_is_rejected() {
    let (a, b) = (random_tt(5, 2, 1), random_tt(6, 2, 1));
    assert!(matches!(a.hadamard(&b), Err(Error::InvalidArgument(_))));
    assert!(matches!(a.add(&b), Err(Error::InvalidArgument(_))));
    assert!(matches!(a.inner(&b), Err(Error::InvalidArgument(_))));
}

#[test]
fn add_and_scale() {
    let f = random_tt(6, 3, 3);
    let z = f.add(&f.scale(c(-1.0))).unwrap();
    assert!(z.norm() <= 1e-12 * f.norm());
    let (a, b) = (random_tt(6, 2, 4), random_tt(6, 3, 5));
    let s = a.add(&b).unwrap();
    assert_eq!(s.bond_dims(), vec![5; 5]);
    let want: Vec<c64> = a
        .to_dense()
        .unwrap()
        .iter()
        .zip(b.to_dense().unwrap())
        .map(|(x, y)| x + y)
        .collect();
    assert!(rel_l2(&s.to_dense().unwrap(), &want) < 1e-12);
}

#[test]
fn inner_products() {
    for i in 0..8usize {
        for j in 0..8usize {
            let di = [(i >> 2) & 1, (i >> 1) & 1, i & 1];
            let dj = [(j >> 2) & 1, (j >> 1) & 1, j & 1];
            let v = TensorTrain::basis(&di)
                .unwrap()
                .inner(&TensorTrain::basis(&dj).unwrap())
                .unwrap();
            assert_eq!(v, if i == j { ONE } else { ZERO });
        }
    }
    let (a, b) = (random_tt(6, 3, 1), random_tt(6, 4, 2));
    let aa = a.inner(&a).unwrap();
    assert!(aa.re >= 0.0 && aa.im.abs() <= 1e-14 * aa.re);
    let want: c64 = a
        .to_dense()
        .unwrap()
        .iter()
        .zip(b.to_dense().unwrap())
        .map(|(x, y)| x.conj() * y)
        .sum();
    assert!((a.inner(&b).unwrap() - want).norm() < 1e-12 * want.norm().max(1.0));
}

#[test]
fn sum_and_fix_digit() {
    let a = random_tt(5, 3, 6);
    let d = a.to_dense().unwrap();
    let total: c64 = d.iter().sum();
    assert!((a.sum() - total).norm() < 1e-12 * total.norm().max(1.0));
    let lower = a.fix_digit(0, 0).unwrap().to_dense().unwrap();
    assert!(rel_l2(&lower, &d[..16]) < 1e-13);
    let odd = a.fix_digit(4, 1).unwrap().to_dense().unwrap();
    let want: Vec<c64> = d.iter().skip(1).step_by(2).copied().collect();
    assert!(rel_l2(&odd, &want) < 1e-13);
}

#[test]
fn reversal_permutes_bits() {
    let a = random_tt(5, 3, 12);
    let d = a.to_dense().unwrap();
    let r = a.reversed().to_dense().unwrap();
    for (j, rj) in r.iter().enumerate() {
        let rev = j.reverse_bits() >> (usize::BITS - 5);
        assert!((rj - d[rev]).norm() < 1e-14);
    }
}

#[test]
fn operator_identity_and_dense_product() {
    let x = random_tt(4, 3, 1);
    let id = TtOperator::identity(4);
    let y = id.apply(&x, &Truncation::relative(0.0)).unwrap();
    assert!(y.max_abs_diff(&x).unwrap() < 1e-13);

    let op = crate::testutil::random_operator(4, 3, 2);
    let raw = op.apply_raw(&x).unwrap();
    assert_eq!(raw.bond_dims(), vec![9; 3]);
    let (rows, cols, m) = op.to_dense().unwrap();
    let xd = x.to_dense().unwrap();
    let want: Vec<c64> = (0..rows)
        .map(|i| (0..cols).map(|j| m[i * cols + j] * xd[j]).sum())
        .collect();
    let y = op.apply(&x, &Truncation::relative(1e-12)).unwrap();
    assert!(rel_l2(&y.to_dense().unwrap(), &want) < 1e-10);
}

#[test]
fn operator_composition_matches_dense() {
    let a = crate::testutil::random_operator(3, 2, 3);
    let b = crate::testutil::random_operator(3, 2, 4);
    let (_, _, ma) = a.to_dense().unwrap();
    let (_, _, mb) = b.to_dense().unwrap();
    let (_, _, mc) = a.compose_raw(&b).unwrap().to_dense().unwrap();
    for i in 0..8 {
        for j in 0..8 {
            let want: c64 = (0..8).map(|k| ma[i * 8 + k] * mb[k * 8 + j]).sum();
            assert!((mc[i * 8 + j] - want).norm() < 1e-12);
        }
    }
    let t = a
        .compose_raw(&b)
        .unwrap()
        .truncate(&Truncation::relative(0.0))
        .unwrap();
    let (_, _, mt) = t.to_dense().unwrap();
    assert!(rel_l2(&mt, &mc) < 1e-12);
}

#[test]
fn binary_and_json_roundtrip() {
    let a = random_tt(6, 3, 21);
    let bytes = to_bytes(&a).unwrap();
    assert_eq!(&bytes[..4], b"QTT1");
    assert_eq!(from_bytes(&bytes).unwrap(), a);
    assert_eq!(from_json(&to_json(&a).unwrap()).unwrap(), a);
    assert!(from_bytes(&bytes[..bytes.len() - 1]).is_err());
    assert!(from_bytes(b"QTT2\x01\x00\x00\x00").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn truncation_error_within_tolerance(n in 2usize..9, chi in 1usize..6, seed in 0u64..1000, exp in 1i32..12) {
        let tt = random_tt(n, chi, seed);
        let eps = 10f64.powi(-exp);
        let t = tt.truncated(eps).unwrap();
        let err = rel_l2(&t.to_dense().unwrap(), &tt.to_dense().unwrap());
        prop_assert!(err <= eps * (1.0 + 1e-9) + 1e-14);
        for (b, b0) in t.bond_dims().iter().zip(tt.bond_dims()) {
            prop_assert!(*b <= b0);
        }
    }

    #[test]
    fn canonicalization_preserves_norm(n in 2usize..9, chi in 1usize..6, seed in 0u64..1000) {
        let tt = random_tt(n, chi, seed);
        let t = tt.truncated(0.0).unwrap();
        prop_assert!((t.norm() - tt.norm()).abs() <= 1e-12 * tt.norm());
    }

    #[test]
    fn algebra_agrees_with_dense(n in 1usize..8, seed in 0u64..1000) {
        let (a, b) = (random_tt(n, 2, seed), random_tt(n, 3, seed + 7));
        let (da, db) = (a.to_dense().unwrap(), b.to_dense().unwrap());
        let h: Vec<c64> = da.iter().zip(&db).map(|(x, y)| x * y).collect();
        let s: Vec<c64> = da.iter().zip(&db).map(|(x, y)| x + y).collect();
        prop_assert!(rel_l2(&a.hadamard(&b).unwrap().to_dense().unwrap(), &h) < 1e-10);
        prop_assert!(rel_l2(&a.add(&b).unwrap().to_dense().unwrap(), &s) < 1e-10);
        let ip: c64 = da.iter().zip(&db).map(|(x, y)| x.conj() * y).sum();
        prop_assert!((a.inner(&b).unwrap() - ip).norm() <= 1e-10 * (a.norm() * b.norm()).max(1e-300));
    }
}

#[test]
fn conjugate_and_imaginary_residue() {
    let t = random_tt(6, 3, 21);
    let d = t.to_dense().unwrap();
    let c = t.conj().to_dense().unwrap();
    assert!(d.iter().zip(&c).all(|(a, b)| (a.conj() - b).norm() < 1e-14));
    let im: f64 = d.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
    let all: f64 = d.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    assert!((t.relative_imaginary_norm() - im / all).abs() < 1e-10);
    let real = TensorTrain::from_dense(
        &d.iter().map(|z| c64::new(z.re, 0.0)).collect::<Vec<_>>(),
        &[2; 6],
        0.0,
    )
    .unwrap();
    assert!(real.relative_imaginary_norm() < 1e-7);
}
