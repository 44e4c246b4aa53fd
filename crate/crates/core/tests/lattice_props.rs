use proptest::prelude::*;
use sconcave::{AtomicMeasureSpace, LatticeKind, LatticeSpec};

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(1.5), Just(2.0), Just(3.0), Just(f64::INFINITY)]
}

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2..3.0_f64, n)
}

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0_f64, n)
}

/// A weighted `l^s` or a two-block mixed norm with a pair of test vectors.
fn lattice_and_vectors() -> impl Strategy<Value = (LatticeSpec, Vec<f64>, Vec<f64>)> {
    (1usize..=5, any::<bool>(), exponent(), exponent()).prop_flat_map(|(n, mixed, a, b)| {
        let n = if mixed { n.max(2) } else { n };
        (weights(n), vector(n), vector(n)).prop_map(move |(w, f, g)| {
            let spec = if mixed {
                let cut = n / 2;
                let blocks = vec![(0..cut).collect(), (cut..n).collect()];
                let space = AtomicMeasureSpace::with_blocks(w, blocks).unwrap();
                LatticeSpec::mixed_block(space, a, b).unwrap()
            } else {
                LatticeSpec::weighted_ls(AtomicMeasureSpace::new(w).unwrap(), a).unwrap()
            };
            (spec, f, g)
        })
    })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn norm_is_absolutely_homogeneous((x, f, _g) in lattice_and_vectors(), t in -3.0..3.0_f64) {
        let tf: Vec<f64> = f.iter().map(|v| t * v).collect();
        prop_assert!(close(x.norm(&tf).unwrap(), t.abs() * x.norm(&f).unwrap(), 1e-12));
    }

    #[test]
    fn norm_satisfies_triangle_inequality((x, f, g) in lattice_and_vectors()) {
        let s: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
        prop_assert!(x.norm(&s).unwrap() <= (x.norm(&f).unwrap() + x.norm(&g).unwrap()) * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn norm_is_monotone_in_modulus((x, f, g) in lattice_and_vectors()) {
        // |f| <= |f| + |g| pointwise, signs scrambled
        let big: Vec<f64> = f.iter().zip(&g).map(|(a, b)| -(a.abs() + b.abs())).collect();
        prop_assert!(x.norm(&f).unwrap() <= x.norm(&big).unwrap() * (1.0 + 1e-12));
        let abs: Vec<f64> = f.iter().map(|v| v.abs()).collect();
        prop_assert_eq!(x.norm(&f).unwrap(), x.norm(&abs).unwrap());
    }

    #[test]
    fn concavification_is_power_of_base_norm((x, f, _g) in lattice_and_vectors(), p in prop_oneof![Just(1.0), Just(1.5), Just(2.0)]) {
        let xp = x.concavified(p).unwrap();
        let root: Vec<f64> = f.iter().map(|v| v.abs().powf(1.0 / p)).collect();
        prop_assert!(close(xp.norm(&f).unwrap(), x.norm(&root).unwrap().powf(p), 1e-10));
    }

    #[test]
    fn double_dual_recovers_the_norm((x, f, _g) in lattice_and_vectors()) {
        let dd = x.kothe_dual().unwrap().kothe_dual().unwrap();
        prop_assert!(close(dd.norm(&f).unwrap(), x.norm(&f).unwrap(), 1e-10));
    }

    #[test]
    fn holder_inequality_against_kothe_dual((x, f, g) in lattice_and_vectors()) {
        let pairing = x.space().pairing(&f, &g).abs();
        let bound = x.norm(&f).unwrap() * x.kothe_dual_norm(&g).unwrap();
        prop_assert!(pairing <= bound * (1.0 + 1e-10) + 1e-14);
    }

    #[test]
    fn dual_norm_of_kind_matches_dual_lattice((x, _f, g) in lattice_and_vectors()) {
        prop_assert!(close(x.kothe_dual_norm(&g).unwrap(), x.kothe_dual().unwrap().norm(&g).unwrap(), 1e-10));
    }

    #[test]
    fn spec_json_round_trip((x, _f, _g) in lattice_and_vectors(), p in prop_oneof![Just(1.0), Just(2.0)]) {
        prop_assume!(x.is_p_convex(p));
        for spec in [x.clone(), x.concavified_dual(p).unwrap()] {
            let text = serde_json::to_string(&spec).unwrap();
            let back: LatticeSpec = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back, spec);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_dual_norm_matches_numerical_support((x, _f, g) in lattice_and_vectors()) {
        prop_assume!(x.dim() <= 4);
        let smooth = match x.kind() {
            LatticeKind::WeightedLs { s } => s.is_finite(),
            LatticeKind::MixedBlock { p, q } => p.is_finite() && q.is_finite(),
            _ => true,
        };
        prop_assume!(smooth);
        let closed = x.kothe_dual_norm(&g).unwrap();
        let numeric = x.kothe_dual_norm_numeric(&g).unwrap();
        prop_assert!(close(closed, numeric, 1e-5), "closed {} numeric {}", closed, numeric);
    }
}

#[test]
fn euclidean_norm_of_three_four() {
    assert_eq!(LatticeSpec::ls(2, 2.0).unwrap().norm(&[3.0, 4.0]).unwrap(), 5.0);
}

#[test]
fn kothe_dual_of_weighted_l1_is_weighted_sup() {
    let x = LatticeSpec::weighted_ls(AtomicMeasureSpace::new(vec![0.5, 2.0]).unwrap(), 1.0).unwrap();
    let d = x.kothe_dual().unwrap().canonical().unwrap();
    assert_eq!(d.kind(), &LatticeKind::weighted_ls(f64::INFINITY));
    assert_eq!(x.kothe_dual_norm(&[-3.0, 1.0]).unwrap(), 3.0);
}

#[test]
fn invalid_exponent_is_a_config_error() {
    let err = LatticeSpec::ls(2, 0.5).unwrap_err();
    assert!(matches!(err, sconcave::Error::Config(_)));
}
