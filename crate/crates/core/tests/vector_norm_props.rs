use proptest::prelude::*;
use sconcave::vector_norms::{
    chain_check, q_concave_rhs, strong_norm_dual, strong_norm_primal, weak_q_sum, StrongOptions,
};
use sconcave::{AtomicMeasureSpace, ExponentTriple, LatticeSpec, VectorFamily};

/// `(X, p, q, family)` with `X` weighted `l^s`, `s >= p` and `q >= p`.
fn instance() -> impl Strategy<Value = (LatticeSpec, f64, f64, Vec<Vec<f64>>)> {
    (1usize..=3, 1usize..=3, prop_oneof![Just(1.0), Just(2.0)], 0usize..=2, 0usize..=2).prop_flat_map(
        |(dim, n, p, ds, dq)| {
            let s = p + ds as f64;
            let q = p + dq as f64;
            (
                prop::collection::vec(0.3..2.0_f64, dim),
                prop::collection::vec(prop::collection::vec(-1.0..1.0_f64, dim), n),
            )
                .prop_map(move |(w, fam)| {
                    (LatticeSpec::weighted_ls(AtomicMeasureSpace::new(w).unwrap(), s).unwrap(), p, q, fam)
                })
        },
    )
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn chain_is_ordered((x, p, q, fam) in instance()) {
        let fam = VectorFamily::new(fam).unwrap();
        let c = chain_check(&fam, ExponentTriple::new(p, q).unwrap(), &x).unwrap();
        prop_assert!(c.weak_q_sum <= c.strong * (1.0 + 1e-9) + 1e-12);
        prop_assert!(c.strong <= c.concave_rhs * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn strong_norm_ignores_family_order((x, p, q, fam) in instance()) {
        let e = ExponentTriple::new(p, q).unwrap();
        let mut rev = fam.clone();
        rev.reverse();
        let a = strong_norm_dual(&VectorFamily::new(fam).unwrap(), e, &x).unwrap();
        let b = strong_norm_dual(&VectorFamily::new(rev).unwrap(), e, &x).unwrap();
        prop_assert!(close(a, b, 1e-6), "{} vs {}", a, b);
    }

    #[test]
    fn strong_norm_is_homogeneous((x, p, q, fam) in instance(), t in 0.1..4.0_f64) {
        let e = ExponentTriple::new(p, q).unwrap();
        let f = VectorFamily::new(fam).unwrap();
        let a = strong_norm_dual(&f, e, &x).unwrap();
        let b = strong_norm_dual(&f.scaled(-t), e, &x).unwrap();
        prop_assert!(close(b, t * a, 1e-6), "{} vs {}", b, t * a);
    }

    #[test]
    fn concave_rhs_is_monotone_in_the_family((x, _p, q, fam) in instance()) {
        let full = VectorFamily::new(fam.clone()).unwrap();
        let head = VectorFamily::new(fam[..1].to_vec()).unwrap();
        prop_assert!(q_concave_rhs(&head, q, &x).unwrap() <= q_concave_rhs(&full, q, &x).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn single_vector_collapses_to_its_norm((x, p, q, fam) in instance()) {
        let v = fam[0].clone();
        let f = VectorFamily::new(vec![v.clone()]).unwrap();
        let nx = x.norm(&v).unwrap();
        let e = ExponentTriple::new(p, q).unwrap();
        prop_assert!(close(strong_norm_primal(&f, e, &x, 48).unwrap(), nx, 1e-9));
        prop_assert!(close(strong_norm_dual(&f, e, &x).unwrap(), nx, 1e-6));
        prop_assert!(close(weak_q_sum(&f, q, &x, &StrongOptions::default()).unwrap().value, nx, 1e-6));
    }
}

#[test]
fn orthonormal_pair_in_l1_gives_sqrt_two() {
    let x = LatticeSpec::ls(2, 1.0).unwrap();
    let f = VectorFamily::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let e = ExponentTriple::new(1.0, 2.0).unwrap();
    let primal = strong_norm_primal(&f, e, &x, 48).unwrap();
    assert!((primal - 2f64.sqrt()).abs() < 1e-6);
    assert!((strong_norm_dual(&f, e, &x).unwrap() - 2f64.sqrt()).abs() < 1e-6);
}

#[test]
fn mismatched_lengths_are_input_errors() {
    let x = LatticeSpec::ls(3, 2.0).unwrap();
    let f = VectorFamily::new(vec![vec![1.0, 0.0]]).unwrap();
    let err = q_concave_rhs(&f, 2.0, &x).unwrap_err();
    assert!(matches!(err, sconcave::Error::Input(_)));
}
