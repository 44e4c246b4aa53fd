use serde::Serialize;

use super::fit::DominationCertificate;
use super::measure::build_factor_space;
use super::operator::MultilinearOperator;
use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;

/// Relative slack of the factorization bound against the certificate constant.
pub const FACTOR_SLACK: f64 = 1e-6;

/// `T = S o (i_1 x ... x i_m)` through the spaces `S^{q_j}_{(X_j)_{p_j}}(nu_j)`.
#[derive(Debug, Clone, Serialize)]
pub struct Factorization {
    pub factor_spaces: Vec<LatticeSpec>,
    #[serde(skip)]
    pub s: MultilinearOperator,
    /// `sup ||S(u)|| / prod_j ||u_j||_{S_j}` over the probes.
    pub bound: f64,
    pub constant: f64,
    /// Largest `||x_j||_{S_j} / ||x_j||_{X_j}` seen; at most one for norm-decreasing inclusions.
    pub inclusion_ratio: f64,
    pub reconstruction_exact: bool,
}

pub fn factorize_multilinear(
    t: &MultilinearOperator,
    cert: &DominationCertificate,
    probes: &[Vec<Vec<f64>>],
) -> Result<Factorization> {
    let e = cert.exponents();
    if e.arity() != t.arity() {
        return crate::error::input("certificate arity differs from the operator");
    }
    let factor_spaces = t
        .domains()
        .iter()
        .zip(cert.measures())
        .enumerate()
        .map(|(j, (x, nu))| build_factor_space(x, e.p()[j], e.q()[j], nu))
        .collect::<Result<Vec<_>>>()?;
    let s = t.remeasured(factor_spaces.clone(), t.codomain().clone())?;
    let mut bound: f64 = 0.0;
    let mut inclusion_ratio: f64 = 0.0;
    let mut reconstruction_exact = s.tensor() == t.tensor();
    for (i, tuple) in probes.iter().enumerate() {
        let tx = t.apply(tuple)?;
        let sx = s.apply(tuple)?;
        reconstruction_exact &= tx == sx;
        let value = s.codomain().norm(&sx)?;
        let mut prod = 1.0;
        for (j, u) in tuple.iter().enumerate() {
            let ns = factor_spaces[j].norm(u)?;
            let nx = t.domains()[j].norm(u)?;
            if nx > 0.0 {
                inclusion_ratio = inclusion_ratio.max(ns / nx);
            }
            prod *= ns;
        }
        if prod > 0.0 {
            bound = bound.max(value / prod);
        } else if value > 0.0 {
            return Err(Error::Invariant(format!("probe {i}: S is nonzero on a tuple of zero factor norm")));
        }
    }
    let constant = cert.constant();
    if bound > constant * (1.0 + FACTOR_SLACK) {
        return Err(Error::Invariant(format!(
            "certificate violation: factor bound {bound} exceeds C = {constant}"
        )));
    }
    Ok(Factorization { factor_spaces, s, bound, constant, inclusion_ratio, reconstruction_exact })
}
