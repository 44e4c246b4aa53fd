use proptest::prelude::*;
use sconcave::dominated_linear::{
    inf_form_check, inf_quotient_norm, pairing_check, prop_duality_check, q_dominated_comparison, LinearExponents,
    PairingFamily,
};
use sconcave::vector_norms::StrongOptions;
use sconcave::{AtomicMeasureSpace, LatticeSpec, MultilinearOperator, VectorFamily};

fn family(dim: usize, n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => -1.0..1.0_f64], dim), n)
}

/// A linear operator between weighted `l^s` spaces and a pairing family.
fn operator_and_family() -> impl Strategy<Value = (MultilinearOperator, PairingFamily)> {
    (1usize..=3, 1usize..=3, 1usize..=3, prop_oneof![Just(1.0), Just(2.0), Just(3.0)], prop_oneof![Just(1.0), Just(2.0)])
        .prop_flat_map(|(dx, dy, n, sx, sy)| {
            (
                prop::collection::vec(prop::collection::vec(-1.0..1.0_f64, dx), dy),
                prop::collection::vec(0.5..2.0_f64, dy),
                family(dx, n),
                family(dy, n),
            )
                .prop_map(move |(rows, wy, xs, ys)| {
                    let x = LatticeSpec::ls(dx, sx).unwrap();
                    let y = LatticeSpec::weighted_ls(AtomicMeasureSpace::new(wy).unwrap(), sy).unwrap();
                    let t = MultilinearOperator::linear(x, y, &rows).unwrap();
                    let fam = PairingFamily::new(VectorFamily::new(xs).unwrap(), VectorFamily::new(ys).unwrap()).unwrap();
                    (t, fam)
                })
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lattice_duality_is_weak(xs in (1usize..=4, 1usize..=3).prop_flat_map(|(d, n)| family(d, n)),
                               p in prop_oneof![Just(1.0), Just(2.0), Just(f64::INFINITY)],
                               s in prop_oneof![Just(1.0), Just(2.0), Just(4.0)]) {
        let e = LatticeSpec::ls(xs[0].len(), s).unwrap();
        let r = prop_duality_check(&VectorFamily::new(xs).unwrap(), p, &e, 3, 1).unwrap();
        prop_assert!(r.best_rhs <= r.lhs + 1e-9, "{} > {}", r.best_rhs, r.lhs);
    }

    #[test]
    fn strong_norms_dominate_weak_summing_norms((t, fam) in operator_and_family(), q in prop_oneof![Just(1.5), Just(2.0), Just(3.0)]) {
        let c = q_dominated_comparison(&t, &fam, q, &StrongOptions::default()).unwrap();
        prop_assert!(c.holds, "classical {} > strong {}", c.classical, c.strong);
    }

    #[test]
    fn inf_form_bound_is_sound((t, fam) in operator_and_family(), p2 in prop_oneof![Just(1.0), Just(2.0)]) {
        prop_assume!(t.codomain().kothe_dual().unwrap().is_p_convex(p2));
        let exps = LinearExponents::new(1.0, 2.0, p2).unwrap();
        let r = inf_form_check(&t, &fam, exps, &StrongOptions::default()).unwrap();
        prop_assert!(r.holds, "pairing {} > {} * {}", r.pairing, r.quotient.value, r.alpha_norm_y);
    }

    #[test]
    fn quotient_never_exceeds_its_initializer((t, fam) in operator_and_family()) {
        let q = inf_quotient_norm(&t, fam.xs(), f64::INFINITY, 2.0, 2.0, None).unwrap();
        prop_assert!(q.value <= q.initial * (1.0 + 1e-12) + 1e-15);
        let a2: f64 = q.alpha.iter().map(|a| a * a).sum();
        prop_assert!(q.value == 0.0 || (a2 - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn pairing_check_is_homogeneous((t, fam) in operator_and_family(), c in 0.2..3.0_f64) {
        let exps = LinearExponents::new(1.0, 2.0, 1.0).unwrap();
        let opts = StrongOptions::default();
        let a = pairing_check(&t, &fam, exps, &opts).unwrap();
        let scaled = PairingFamily::new(fam.xs().scaled(c), fam.ystars().clone()).unwrap();
        let b = pairing_check(&t, &scaled, exps, &opts).unwrap();
        prop_assert!((b.lhs - c * a.lhs).abs() <= 1e-12 * (1.0 + b.lhs));
        prop_assert!((b.ratio - a.ratio).abs() <= 1e-6 * (1.0 + a.ratio));
    }
}

#[test]
fn exponent_conjugacy_is_enforced() {
    assert!(LinearExponents::with_q2(1.0, 2.0, 1.0, 3.0).is_err());
    assert!(LinearExponents::new(1.0, 1.0, 1.0).is_err());
    let e = LinearExponents::new(1.0, 3.0, 1.0).unwrap();
    assert!((e.q2() - 1.5).abs() < 1e-15);
}
