use sconcave::dominated_linear::inf_quotient_norm;
use sconcave::gallery::{
    gallery_block_space, gallery_identity_concave, identity_witness, integral_evaluation_operator, BlockSpace,
};
use sconcave::vector_norms::strong_norm_primal;
use sconcave::{ExponentTriple, LatticeSpec, VectorFamily};

#[test]
fn block_space_constant_function() {
    let bs = BlockSpace::new(4, 3, 2.0, 4.0).unwrap();
    let ones = vec![1.0; 12];
    assert!((bs.y.norm(&ones).unwrap() - 4f64.powf(0.25)).abs() < 1e-12);
    let rf = bs.r.value_norm(&[&ones]).unwrap();
    assert!((rf - (1.0 - 2f64.powi(-4)).powf(0.25)).abs() < 1e-12);
}

#[test]
fn block_space_single_block_collapse() {
    let bs = BlockSpace::new(3, 2, 2.0, 3.0).unwrap();
    // f lives on the second block, whose atoms have mass 1/2
    let f = vec![0.0, 0.0, 0.6, -0.8, 0.0, 0.0];
    let lp = (0.5 * 0.36 + 0.5 * 0.64f64).sqrt();
    assert!((bs.y.norm(&f).unwrap() - lp).abs() < 1e-12);
    let rf = bs.r.apply(&[&f]).unwrap();
    let integral = 0.5 * 0.6 - 0.5 * 0.8;
    assert_eq!(rf[0], 0.0);
    assert!((rf[1] - 2f64.powf(-2.0 / 3.0) * integral).abs() < 1e-12);
    assert_eq!(rf[2], 0.0);
}

#[test]
fn block_space_rejects_bad_exponents() {
    assert!(BlockSpace::new(4, 2, 3.0, 2.0).is_err());
    assert!(BlockSpace::new(1, 2, 2.0, 4.0).is_err());
    assert!(gallery_block_space(4, 2, 2.0, 2.0, 10, 0).is_err());
}

#[test]
fn identity_equality_case_in_l1() {
    let x = LatticeSpec::ls(2, 1.0).unwrap();
    let fam = VectorFamily::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let strong = strong_norm_primal(&fam, ExponentTriple::new(1.0, 2.0).unwrap(), &x, 48).unwrap();
    assert!((strong - 2f64.sqrt()).abs() < 1e-9);
    // alpha_k = ||x_k||^{q/r} / (sum ||x_k||^q)^{1/r} with r = 2
    let alpha = identity_witness(&[1.0, 1.0], 2.0, 2.0);
    assert!((alpha[0] - 0.5f64.sqrt()).abs() < 1e-15 && (alpha[1] - 0.5f64.sqrt()).abs() < 1e-15);
}

#[test]
fn identity_single_vector_is_trivial() {
    let x = LatticeSpec::ls(3, 1.0).unwrap();
    let g = gallery_identity_concave(&x, 1.0, 2.0, 1, 20, 4).unwrap();
    assert!(g.passed());
    let main = g.checks.iter().find(|c| c.name == "identity_strongly_concave").unwrap();
    assert!(main.worst <= 1.0 + 1e-9);
}

#[test]
fn identity_needs_matching_exponent() {
    let x = LatticeSpec::ls(3, 2.0).unwrap();
    assert!(gallery_identity_concave(&x, 1.0, 2.0, 2, 5, 0).is_err());
}

#[test]
fn integral_of_the_constant_function() {
    let t = integral_evaluation_operator(5).unwrap();
    let chi = vec![1.0; 32];
    let tx = t.apply(&[&chi]).unwrap();
    for (k, v) in tx.iter().enumerate() {
        assert!((v - 2f64.powi(-(k as i32))).abs() < 1e-15);
    }
    assert_eq!(t.codomain().norm(&tx).unwrap(), 1.0);
    assert_eq!(t.domains()[0].norm(&chi).unwrap(), 1.0);
}

#[test]
fn integral_doubleton_quotient_is_sqrt_two() {
    let t = integral_evaluation_operator(4).unwrap();
    let chi = vec![1.0; 16];
    let fam = VectorFamily::new(vec![chi.clone(), chi]).unwrap();
    let q = inf_quotient_norm(&t, &fam, f64::INFINITY, 2.0, 2.0, None).unwrap();
    assert!((q.value - 2f64.sqrt()).abs() < 1e-12);
    assert!((q.initial - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn integral_mass_outside_small_blocks_shrinks() {
    let t = integral_evaluation_operator(4).unwrap();
    let mut x = vec![0.0; 16];
    x[15] = 1e-3;
    let tx = t.apply(&[&x]).unwrap();
    // only A_1 = [0, 1] sees the last atom
    assert!(tx[0] > 0.0 && tx[1..].iter().all(|v| *v == 0.0));
    assert!(t.codomain().norm(&tx).unwrap() < t.domains()[0].norm(&x).unwrap() + 1e-18);
}
