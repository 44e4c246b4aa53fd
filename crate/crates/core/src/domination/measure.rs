use crate::error::{Error, Result};
use crate::lattice::{DiscreteDualMeasure, DualFunctional, LatticeSpec};

/// `||x||_{p,q,nu} = (int <|x|^p, h>^{q/p} dnu(h))^{1/q}`.
pub fn f_seminorm(x: &[f64], p: f64, q: f64, nu: &DiscreteDualMeasure) -> Result<f64> {
    if x.len() != nu.atom_weights().len() {
        return crate::error::input(format!("vector of length {} for a measure on {} atoms", x.len(), nu.atom_weights().len()));
    }
    let v = nu.seminorm(x, p, q);
    if !v.is_finite() {
        return Err(Error::Numeric(format!("seminorm evaluated to {v}")));
    }
    Ok(v)
}

/// `(nu + delta_strict) / 2`.
pub fn augment_measure(nu: &DiscreteDualMeasure, strict: &DualFunctional) -> Result<DiscreteDualMeasure> {
    if !strict.is_strictly_positive() {
        return Err(Error::Precondition("augmenting functional must be positive on every atom".into()));
    }
    if strict.density().len() != nu.atom_weights().len() {
        return crate::error::input("augmenting functional lives on a different space");
    }
    let space = crate::lattice::AtomicMeasureSpace::new(nu.atom_weights().to_vec())?;
    let dirac = DiscreteDualMeasure::dirac(&space, strict.clone())?;
    nu.mixture(&dirac, 0.5)
}

/// The constant density normalized in `(X_p)'`, a strictly positive functional on `X_p`.
pub fn uniform_strict(x: &LatticeSpec, p: f64) -> Result<DualFunctional> {
    let ball = x.concavified_dual(p)?;
    DualFunctional::normalized(vec![1.0; x.dim()], &ball)
}

/// The lattice `S^q_{X_p}(xi)` normed by `f_seminorm`, on the atoms of `X`.
pub fn build_factor_space(x: &LatticeSpec, p: f64, q: f64, xi: &DiscreteDualMeasure) -> Result<LatticeSpec> {
    if xi.atom_weights() != x.space().weights() {
        return crate::error::input("measure lives on a different atomic space");
    }
    if !xi.is_definite() {
        return Err(Error::Precondition(
            "measure leaves an atom uncharged; its seminorm is not a norm (augment it first)".into(),
        ));
    }
    LatticeSpec::s_measure(x.space().clone(), p, q, xi.clone())
}
