use serde::{Deserialize, Serialize};

use super::dual::DiscreteDualMeasure;
use super::exponent::{self, conjugate, is_exponent};
use super::space::AtomicMeasureSpace;
use super::support;
use crate::error::{config, input, Error, Result};

/// The shape of a lattice norm over an atomic space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LatticeKind {
    /// `(sum_i mu_i |f_i|^s)^{1/s}`, or `max_i |f_i|` for `s = inf`.
    WeightedLs {
        #[serde(with = "exponent")]
        s: f64,
    },
    /// `(sum_k (int_{A_k} |f|^p dmu)^{q/p})^{1/q}` over the block partition.
    MixedBlock {
        #[serde(with = "exponent")]
        p: f64,
        #[serde(with = "exponent")]
        q: f64,
    },
    /// `X_p`, normed by `|| |f|^{1/p} ||_X^p`.
    Concavified { base: Box<LatticeKind>, p: f64 },
    /// Köthe dual `X'` under the pairing `int f g dmu`.
    KotheDual { base: Box<LatticeKind> },
    /// `(sum_j w_j (int |f|^p h_j dmu)^{q/p})^{1/q}` for a discrete measure on dual densities.
    SMeasure {
        p: f64,
        q: f64,
        measure: DiscreteDualMeasure,
    },
}

/// Closed-form shapes every admitted `Concavified`/`KotheDual` chain reduces to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Closed {
    Ls(f64),
    Mixed(f64, f64),
}

impl LatticeKind {
    pub fn weighted_ls(s: f64) -> Self {
        LatticeKind::WeightedLs { s }
    }

    pub fn mixed_block(p: f64, q: f64) -> Self {
        LatticeKind::MixedBlock { p, q }
    }

    pub fn concavified(self, p: f64) -> Self {
        LatticeKind::Concavified { base: Box::new(self), p }
    }

    pub fn kothe_dual(self) -> Self {
        LatticeKind::KotheDual { base: Box::new(self) }
    }

    pub(crate) fn closed(&self) -> Option<Closed> {
        match self {
            LatticeKind::WeightedLs { s } => Some(Closed::Ls(*s)),
            LatticeKind::MixedBlock { p, q } => Some(Closed::Mixed(*p, *q)),
            LatticeKind::Concavified { base, p } => match base.closed()? {
                Closed::Ls(s) => Some(Closed::Ls(s / p)),
                Closed::Mixed(a, b) => Some(Closed::Mixed(a / p, b / p)),
            },
            LatticeKind::KotheDual { base } => match base.closed()? {
                Closed::Ls(s) => Some(Closed::Ls(conjugate(s))),
                Closed::Mixed(a, b) => Some(Closed::Mixed(conjugate(a), conjugate(b))),
            },
            LatticeKind::SMeasure { .. } => None,
        }
    }

    /// Largest `p` for which the lattice is `p`-convex with constant one, when known.
    pub fn convexity_exponent(&self) -> Option<f64> {
        match self.closed()? {
            Closed::Ls(s) => Some(s),
            Closed::Mixed(a, b) => Some(a.min(b)),
        }
    }

    fn validate(&self, space: &AtomicMeasureSpace) -> Result<()> {
        match self {
            LatticeKind::WeightedLs { s } => {
                if !is_exponent(*s) {
                    return config(format!("weighted_ls exponent s = {s} must lie in [1, inf]"));
                }
            }
            LatticeKind::MixedBlock { p, q } => {
                if !is_exponent(*p) || !is_exponent(*q) {
                    return config(format!("mixed_block exponents p = {p}, q = {q} must lie in [1, inf]"));
                }
                if space.blocks().is_none() {
                    return config("mixed_block needs a block partition on the space");
                }
            }
            LatticeKind::Concavified { base, p } => {
                base.validate(space)?;
                if !(is_exponent(*p) && p.is_finite()) {
                    return config(format!("concavification exponent p = {p} must lie in [1, inf)"));
                }
            }
            LatticeKind::KotheDual { base } => {
                base.validate(space)?;
                match base.closed() {
                    Some(Closed::Ls(s)) if s < 1.0 => {}
                    Some(Closed::Mixed(a, b)) if a < 1.0 || b < 1.0 => {}
                    _ => return Ok(()),
                }
                return config("the Köthe dual needs a normed base; its concavification exponent exceeds its convexity");
            }
            LatticeKind::SMeasure { p, q, measure } => {
                if !(is_exponent(*p) && p.is_finite() && is_exponent(*q) && q.is_finite()) {
                    return config(format!("s_measure exponents p = {p}, q = {q} must lie in [1, inf)"));
                }
                if measure.atom_weights() != space.weights() {
                    return input("s_measure measure lives on a different atomic space");
                }
            }
        }
        Ok(())
    }
}

/// A lattice norm on a finite atomic measure space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct LatticeSpec {
    space: AtomicMeasureSpace,
    kind: LatticeKind,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    #[serde(flatten)]
    space: AtomicMeasureSpace,
    kind: LatticeKind,
}

impl TryFrom<RawSpec> for LatticeSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        LatticeSpec::new(raw.space, raw.kind)
    }
}

impl From<LatticeSpec> for RawSpec {
    fn from(s: LatticeSpec) -> Self {
        RawSpec { space: s.space, kind: s.kind }
    }
}

impl LatticeSpec {
    pub fn new(space: AtomicMeasureSpace, kind: LatticeKind) -> Result<Self> {
        kind.validate(&space)?;
        Ok(Self { space, kind })
    }

    pub fn weighted_ls(space: AtomicMeasureSpace, s: f64) -> Result<Self> {
        Self::new(space, LatticeKind::weighted_ls(s))
    }

    /// `l^s` with counting measure on `n` atoms.
    pub fn ls(n: usize, s: f64) -> Result<Self> {
        Self::weighted_ls(AtomicMeasureSpace::counting(n)?, s)
    }

    pub fn mixed_block(space: AtomicMeasureSpace, p: f64, q: f64) -> Result<Self> {
        Self::new(space, LatticeKind::mixed_block(p, q))
    }

    pub fn s_measure(space: AtomicMeasureSpace, p: f64, q: f64, measure: DiscreteDualMeasure) -> Result<Self> {
        Self::new(space, LatticeKind::SMeasure { p, q, measure })
    }

    pub fn space(&self) -> &AtomicMeasureSpace {
        &self.space
    }

    pub fn kind(&self) -> &LatticeKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.space.len()
    }

    /// The `p`-concavification `X_p`.
    pub fn concavified(&self, p: f64) -> Result<Self> {
        Self::new(self.space.clone(), self.kind.clone().concavified(p))
    }

    /// The Köthe dual `X'`.
    pub fn kothe_dual(&self) -> Result<Self> {
        Self::new(self.space.clone(), self.kind.clone().kothe_dual())
    }

    /// Whether the lattice is `p`-convex with constant one by construction.
    pub fn is_p_convex(&self, p: f64) -> bool {
        self.kind.convexity_exponent().is_some_and(|c| c >= p)
    }

    /// Config error unless [`Self::is_p_convex`] holds.
    pub fn require_p_convex(&self, p: f64) -> Result<()> {
        match self.kind.convexity_exponent() {
            Some(c) if c >= p => Ok(()),
            Some(c) => config(format!("lattice is only {c}-convex with constant one; p = {p} is not admitted")),
            None => config(format!("p-convexity of this lattice kind is unknown; p = {p} is not admitted")),
        }
    }

    /// `(X_p)'`, the lattice whose nonnegative unit ball carries the domination measures.
    pub fn concavified_dual(&self, p: f64) -> Result<Self> {
        self.concavified(p)?.kothe_dual()
    }

    /// The same norm rewritten as a plain `WeightedLs`/`MixedBlock` when that is possible.
    pub fn canonical(&self) -> Option<Self> {
        let kind = match self.kind.closed()? {
            Closed::Ls(s) => LatticeKind::WeightedLs { s },
            Closed::Mixed(p, q) => LatticeKind::MixedBlock { p, q },
        };
        Some(Self { space: self.space.clone(), kind })
    }

    pub(crate) fn closed(&self) -> Option<Closed> {
        self.kind.closed()
    }

    pub fn norm(&self, f: &[f64]) -> Result<f64> {
        self.space.check_len(f)?;
        let v = kind_norm(&self.kind, &self.space, f)?;
        if !v.is_finite() {
            return Err(Error::Numeric(format!("norm evaluated to {v}")));
        }
        Ok(v)
    }

    /// `sup { <|f|, |g|> : ||f|| <= 1 }`, by closed form when one exists.
    pub fn kothe_dual_norm(&self, g: &[f64]) -> Result<f64> {
        self.space.check_len(g)?;
        let abs: Vec<f64> = g.iter().map(|v| v.abs()).collect();
        match self.closed() {
            Some(c) => Ok(closed_dual_norm(c, &self.space, &abs)),
            None => Ok(support::linear_max(self, &abs)?.value),
        }
    }

    /// Köthe dual norm computed by numerical maximization even when a closed form exists.
    ///
    /// Projected gradient on the simplex: accurate when the norm is differentiable on the
    /// positive orthant, a lower bound for `s = inf` or infinite mixed exponents.
    pub fn kothe_dual_norm_numeric(&self, g: &[f64]) -> Result<f64> {
        self.space.check_len(g)?;
        let abs: Vec<f64> = g.iter().map(|v| v.abs()).collect();
        Ok(support::linear_max_numeric(self, &abs)?.value)
    }

    /// Vector of ones scaled to norm one.
    pub fn unit_constant(&self) -> Result<Vec<f64>> {
        let ones = vec![1.0; self.dim()];
        let n = self.norm(&ones)?;
        Ok(ones.iter().map(|v| v / n).collect())
    }
}

fn kind_norm(kind: &LatticeKind, space: &AtomicMeasureSpace, f: &[f64]) -> Result<f64> {
    if let Some(c) = kind.closed() {
        return Ok(closed_norm(c, space, f));
    }
    match kind {
        LatticeKind::Concavified { base, p } => {
            let root: Vec<f64> = f.iter().map(|v| v.abs().powf(1.0 / p)).collect();
            Ok(kind_norm(base, space, &root)?.powf(*p))
        }
        LatticeKind::KotheDual { base } => {
            let abs: Vec<f64> = f.iter().map(|v| v.abs()).collect();
            let spec = LatticeSpec { space: space.clone(), kind: (**base).clone() };
            Ok(support::linear_max(&spec, &abs)?.value)
        }
        LatticeKind::SMeasure { p, q, measure } => Ok(measure.seminorm(f, *p, *q)),
        LatticeKind::WeightedLs { .. } | LatticeKind::MixedBlock { .. } => unreachable!("closed kinds handled above"),
    }
}

pub(crate) fn closed_norm(c: Closed, space: &AtomicMeasureSpace, f: &[f64]) -> f64 {
    match c {
        Closed::Ls(s) => ls_norm(space.weights(), f, s),
        Closed::Mixed(p, q) => {
            let blocks = space.blocks().expect("validated mixed_block space has blocks");
            let inner: Vec<f64> = blocks.iter().map(|b| block_norm(space.weights(), b, f, p)).collect();
            ls_norm_unit(&inner, q)
        }
    }
}

pub(crate) fn closed_dual_norm(c: Closed, space: &AtomicMeasureSpace, g: &[f64]) -> f64 {
    let dual = match c {
        Closed::Ls(s) => Closed::Ls(conjugate(s)),
        Closed::Mixed(p, q) => Closed::Mixed(conjugate(p), conjugate(q)),
    };
    closed_norm(dual, space, g)
}

/// Weighted `l^s` norm, scaled by the largest entry to avoid overflow.
pub(crate) fn ls_norm(w: &[f64], f: &[f64], s: f64) -> f64 {
    let m = f.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if m == 0.0 || s.is_infinite() {
        return m;
    }
    if s == 1.0 {
        return w.iter().zip(f).map(|(w, v)| w * v.abs()).sum();
    }
    let sum: f64 = w.iter().zip(f).map(|(w, v)| w * (v.abs() / m).powf(s)).sum();
    m * sum.powf(1.0 / s)
}

pub(crate) fn ls_norm_unit(f: &[f64], s: f64) -> f64 {
    let m = f.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if m == 0.0 || s.is_infinite() {
        return m;
    }
    if s == 1.0 {
        return f.iter().map(|v| v.abs()).sum();
    }
    m * f.iter().map(|v| (v.abs() / m).powf(s)).sum::<f64>().powf(1.0 / s)
}

fn block_norm(w: &[f64], block: &[usize], f: &[f64], p: f64) -> f64 {
    let wb: Vec<f64> = block.iter().map(|&i| w[i]).collect();
    let fb: Vec<f64> = block.iter().map(|&i| f[i]).collect();
    ls_norm(&wb, &fb, p)
}
