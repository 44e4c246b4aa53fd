use proptest::prelude::*;
use sconcave::fremlin::{
    grid_domination_check, odot, projective_norm_upper, tensor_domination_check, TensorCheckOptions,
};
use sconcave::{AtomicMeasureSpace, ExponentTriple, LatticeSpec, MultilinearOperator, TensorGrid};

fn spaces(n: usize, m: usize) -> impl Strategy<Value = (AtomicMeasureSpace, AtomicMeasureSpace)> {
    (prop::collection::vec(0.25..2.0_f64, n), prop::collection::vec(0.25..2.0_f64, m))
        .prop_map(|(a, b)| (AtomicMeasureSpace::new(a).unwrap(), AtomicMeasureSpace::new(b).unwrap()))
}

fn vec_of(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => -2.0..2.0_f64], n)
}

/// Two factor spaces, two vectors on each, and scalars.
fn bilinear_data() -> impl Strategy<Value = ((AtomicMeasureSpace, AtomicMeasureSpace), [Vec<f64>; 4], f64, f64)> {
    (1usize..=3, 1usize..=3).prop_flat_map(|(n, m)| {
        (spaces(n, m), [vec_of(n), vec_of(n), vec_of(m), vec_of(m)], -2.0..2.0_f64, -2.0..2.0_f64)
    })
}

fn extreme() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(f64::INFINITY)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn odot_is_multilinear(((a, b), [x, x2, y, _y2], s, t) in bilinear_data()) {
        let f = [a, b];
        let comb: Vec<f64> = x.iter().zip(&x2).map(|(u, v)| s * u + t * v).collect();
        let lhs = odot(&f, &[comb, y.clone()]).unwrap();
        let rhs = TensorGrid::combination(&[(s, odot(&f, &[x, y.clone()]).unwrap()), (t, odot(&f, &[x2, y]).unwrap())]).unwrap();
        for (u, v) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!((u - v).abs() <= 1e-12 * (1.0 + u.abs()));
        }
    }

    #[test]
    fn modulus_of_elementary_tensor_is_exact(((a, b), [x, _x2, y, _y2], _s, _t) in bilinear_data()) {
        let f = [a, b];
        let ax: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        let ay: Vec<f64> = y.iter().map(|v| v.abs()).collect();
        prop_assert_eq!(odot(&f, &[x, y]).unwrap().abs(), odot(&f, &[ax, ay]).unwrap());
    }

    #[test]
    fn elementary_bound_never_exceeds_cross_norm(((a, b), [x, _x2, y, _y2], _s, _t) in bilinear_data(), s1 in 1.0..4.0_f64, s2 in extreme()) {
        let specs = [LatticeSpec::weighted_ls(a.clone(), s1).unwrap(), LatticeSpec::weighted_ls(b.clone(), s2).unwrap()];
        let g = odot(&[a, b], &[x.clone(), y.clone()]).unwrap();
        let bound = projective_norm_upper(&g, &specs, 4).unwrap();
        let cross = specs[0].norm(&x).unwrap() * specs[1].norm(&y).unwrap();
        prop_assert!(bound.value <= cross * (1.0 + 1e-12) + 1e-15, "{} > {}", bound.value, cross);
    }

    #[test]
    fn projective_bound_is_homogeneous(((a, b), [x, x2, y, y2], s, _t) in bilinear_data(), s1 in 1.0..4.0_f64, s2 in 1.0..4.0_f64) {
        let specs = [LatticeSpec::weighted_ls(a.clone(), s1).unwrap(), LatticeSpec::weighted_ls(b.clone(), s2).unwrap()];
        let f = [a, b];
        let u = odot(&f, &[x, y]).unwrap().add(&odot(&f, &[x2, y2]).unwrap()).unwrap();
        let base = projective_norm_upper(&u, &specs, 6).unwrap().value;
        let scaled = projective_norm_upper(&u.scaled(s), &specs, 6).unwrap().value;
        prop_assert!((scaled - s.abs() * base).abs() <= 1e-9 * base.max(1e-12));
    }

    #[test]
    fn projective_bound_is_subadditive_on_extreme_factors(((a, b), [x, x2, y, y2], _s, _t) in bilinear_data(), s1 in extreme(), s2 in extreme()) {
        let specs = [LatticeSpec::weighted_ls(a.clone(), s1).unwrap(), LatticeSpec::weighted_ls(b.clone(), s2).unwrap()];
        let f = [a, b];
        let u = odot(&f, &[x.clone(), y2.clone()]).unwrap();
        let v = odot(&f, &[x2, y]).unwrap().add(&odot(&f, &[x, y2]).unwrap().scaled(-0.5)).unwrap();
        let nu = projective_norm_upper(&u, &specs, 16).unwrap().value;
        let nv = projective_norm_upper(&v, &specs, 16).unwrap().value;
        let nuv = projective_norm_upper(&u.add(&v).unwrap(), &specs, 16).unwrap().value;
        prop_assert!(nuv <= (nu + nv) * (1.0 + 1e-9) + 1e-15, "{} > {} + {}", nuv, nu, nv);
    }

    #[test]
    fn l1_factors_give_the_weighted_l1_norm(((a, b), [x, x2, y, y2], _s, _t) in bilinear_data()) {
        let specs = [LatticeSpec::weighted_ls(a.clone(), 1.0).unwrap(), LatticeSpec::weighted_ls(b.clone(), 1.0).unwrap()];
        let f = [a.clone(), b.clone()];
        let u = odot(&f, &[x, y]).unwrap().add(&odot(&f, &[x2, y2]).unwrap()).unwrap();
        // independent oracle: sum_{ij} mu_i nu_j |u_ij|
        let m = b.len();
        let oracle: f64 = u.values().iter().enumerate().map(|(k, v)| a.weights()[k / m] * b.weights()[k % m] * v.abs()).sum();
        let got = projective_norm_upper(&u, &specs, 16).unwrap().value;
        prop_assert!((got - oracle).abs() <= 1e-9 * oracle.max(1e-12), "{} vs {}", got, oracle);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn grid_and_elementary_paths_agree(
        ((a, b), [x, x2, y, y2], _s, _t) in bilinear_data(),
        coeffs in prop::collection::vec(-1.0..1.0_f64, 9),
    ) {
        let (n, m) = (a.len(), b.len());
        let x_spec = LatticeSpec::weighted_ls(a.clone(), 1.0).unwrap();
        let y_spec = LatticeSpec::weighted_ls(b.clone(), 1.0).unwrap();
        let codomain = LatticeSpec::ls(1, 1.0).unwrap();
        let tensor: Vec<f64> = (0..n * m).map(|k| coeffs[k % coeffs.len()]).collect();
        let t = MultilinearOperator::new(vec![x_spec, y_spec], codomain, tensor).unwrap();
        let e = LatticeSpec::weighted_ls(AtomicMeasureSpace::product(&[a.clone(), b.clone()]).unwrap(), 1.0).unwrap();
        let tuples = vec![vec![x.clone(), y.clone()], vec![x2.clone(), y2.clone()]];
        let grids = vec![odot(&[a.clone(), b.clone()], &[x, y]).unwrap(), odot(&[a, b], &[x2, y2]).unwrap()];
        let exps = ExponentTriple::new(1.0, 2.0).unwrap();
        let opts = TensorCheckOptions::default();
        let el = tensor_domination_check(&t, &e, &tuples, exps, None, &opts).unwrap();
        let gr = grid_domination_check(&t, &e, &grids, exps, None, &opts).unwrap();
        prop_assert_eq!(el.lhs, gr.lhs);
        prop_assert_eq!(el.strong, gr.strong);
        // l^1 factors embed isometrically into l^1 of the product
        if let Some(r) = el.embedding_ratio {
            prop_assert!((r - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn zero_rounds_is_a_config_error() {
    let a = AtomicMeasureSpace::counting(2).unwrap();
    let specs = [LatticeSpec::ls(2, 1.0).unwrap(), LatticeSpec::ls(2, 1.0).unwrap()];
    let g = odot(&[a.clone(), a], &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    assert!(matches!(projective_norm_upper(&g, &specs, 0), Err(sconcave::Error::Config(_))));
}
