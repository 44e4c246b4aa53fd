use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::lattice::LatticeSpec;

/// `T: X_1 x ... x X_m -> Y` given by a coefficient tensor of shape
/// `dim X_1 x ... x dim X_m x dim Y`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawOperator", into = "RawOperator")]
pub struct MultilinearOperator {
    domains: Vec<LatticeSpec>,
    codomain: LatticeSpec,
    tensor: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawOperator {
    domains: Vec<LatticeSpec>,
    codomain: LatticeSpec,
    tensor: Vec<f64>,
}

impl TryFrom<RawOperator> for MultilinearOperator {
    type Error = Error;

    fn try_from(r: RawOperator) -> Result<Self> {
        Self::new(r.domains, r.codomain, r.tensor)
    }
}

impl From<MultilinearOperator> for RawOperator {
    fn from(t: MultilinearOperator) -> Self {
        RawOperator { domains: t.domains, codomain: t.codomain, tensor: t.tensor }
    }
}

impl MultilinearOperator {
    pub fn new(domains: Vec<LatticeSpec>, codomain: LatticeSpec, tensor: Vec<f64>) -> Result<Self> {
        if domains.is_empty() {
            return input("a multilinear operator needs at least one argument");
        }
        let size: usize = domains.iter().map(|d| d.dim()).product::<usize>() * codomain.dim();
        if tensor.len() != size {
            return input(format!("coefficient tensor has {} entries, shape needs {size}", tensor.len()));
        }
        if tensor.iter().any(|v| !v.is_finite()) {
            return input("coefficient tensor has a non-finite entry");
        }
        Ok(Self { domains, codomain, tensor })
    }

    /// The linear map `x -> M x` for a `dim Y x dim X` matrix `M`.
    pub fn linear(domain: LatticeSpec, codomain: LatticeSpec, matrix: &[Vec<f64>]) -> Result<Self> {
        let (dx, dy) = (domain.dim(), codomain.dim());
        if matrix.len() != dy || matrix.iter().any(|r| r.len() != dx) {
            return input(format!("matrix must be {dy} x {dx}"));
        }
        let mut tensor = vec![0.0; dx * dy];
        for (y, row) in matrix.iter().enumerate() {
            for (a, v) in row.iter().enumerate() {
                tensor[a * dy + y] = *v;
            }
        }
        Self::new(vec![domain], codomain, tensor)
    }

    pub fn identity(x: LatticeSpec) -> Result<Self> {
        let n = x.dim();
        let m: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Self::linear(x.clone(), x, &m)
    }

    pub fn zero(domains: Vec<LatticeSpec>, codomain: LatticeSpec) -> Result<Self> {
        let size = domains.iter().map(|d| d.dim()).product::<usize>() * codomain.dim();
        Self::new(domains, codomain, vec![0.0; size])
    }

    pub fn arity(&self) -> usize {
        self.domains.len()
    }

    pub fn domains(&self) -> &[LatticeSpec] {
        &self.domains
    }

    pub fn codomain(&self) -> &LatticeSpec {
        &self.codomain
    }

    pub fn tensor(&self) -> &[f64] {
        &self.tensor
    }

    /// The same coefficients measured against other domain and codomain norms.
    pub fn remeasured(&self, domains: Vec<LatticeSpec>, codomain: LatticeSpec) -> Result<Self> {
        if domains.len() != self.arity()
            || domains.iter().zip(&self.domains).any(|(a, b)| a.dim() != b.dim())
            || codomain.dim() != self.codomain.dim()
        {
            return input("remeasured spaces must keep the operator's shape");
        }
        Self::new(domains, codomain, self.tensor.clone())
    }

    pub(crate) fn check_tuple<V: AsRef<[f64]>>(&self, xs: &[V]) -> Result<()> {
        if xs.len() != self.arity() {
            return input(format!("operator takes {} arguments, got {}", self.arity(), xs.len()));
        }
        for (j, (x, d)) in xs.iter().zip(&self.domains).enumerate() {
            if x.as_ref().len() != d.dim() {
                return input(format!("argument {j} has {} entries, domain has {}", x.as_ref().len(), d.dim()));
            }
        }
        Ok(())
    }

    /// `T(x_1, ..., x_m)`, contracting one mode at a time.
    pub fn apply<V: AsRef<[f64]>>(&self, xs: &[V]) -> Result<Vec<f64>> {
        self.check_tuple(xs)?;
        let mut cur = self.tensor.clone();
        for x in xs {
            let x = x.as_ref();
            let stride = cur.len() / x.len();
            let mut next = vec![0.0; stride];
            for (a, xa) in x.iter().enumerate() {
                if *xa != 0.0 {
                    for (n, c) in next.iter_mut().zip(&cur[a * stride..(a + 1) * stride]) {
                        *n += xa * c;
                    }
                }
            }
            cur = next;
        }
        Ok(cur)
    }

    /// `||T(x_1, ..., x_m)||_Y`.
    pub fn value_norm<V: AsRef<[f64]>>(&self, xs: &[V]) -> Result<f64> {
        self.codomain.norm(&self.apply(xs)?)
    }
}
