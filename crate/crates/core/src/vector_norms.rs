//! Vector-valued lattice norms: the q-concavity sum, the p-strongly q-concave
//! supremum over weight sequences and its dual form over `(X_p)'`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, input, Error, Result};
use crate::lattice::ls_norm_unit;
use crate::lattice::{support_maximize_with, LatticeSpec, MaximizeOptions, Objective, PowerSum};

/// A finite sequence of vectors on one space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct VectorFamily {
    vectors: Vec<Vec<f64>>,
}

impl TryFrom<Vec<Vec<f64>>> for VectorFamily {
    type Error = Error;

    fn try_from(v: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<VectorFamily> for Vec<Vec<f64>> {
    fn from(f: VectorFamily) -> Self {
        f.vectors
    }
}

impl VectorFamily {
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = vectors.first() else { return input("a vector family needs at least one vector") };
        let d = first.len();
        if vectors.iter().any(|v| v.len() != d) {
            return input("family vectors have different lengths");
        }
        if vectors.iter().flatten().any(|v| !v.is_finite()) {
            return input("family has a non-finite entry");
        }
        Ok(Self { vectors })
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self { vectors: self.vectors.iter().map(|v| v.iter().map(|a| a * t).collect()).collect() }
    }

    pub(crate) fn check_on(&self, x: &LatticeSpec) -> Result<()> {
        if self.dim() != x.dim() {
            return input(format!("family vectors have {} entries on a space of {} atoms", self.dim(), x.dim()));
        }
        Ok(())
    }

    /// Vectors sorted into a canonical order, so results do not depend on enumeration order.
    fn canonical(&self) -> Vec<Vec<f64>> {
        let mut v = self.vectors.clone();
        v.sort_by(|a, b| {
            a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        });
        v
    }
}

/// `p <= q` with `1/r = 1/p - 1/q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentTriple {
    pub p: f64,
    pub q: f64,
    #[serde(with = "crate::lattice::exponent")]
    pub r: f64,
}

impl ExponentTriple {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return config(format!("p = {p} must lie in [1, inf)"));
        }
        if !(q.is_finite() && q >= p) {
            return config(format!("q = {q} must be finite and at least p = {p}"));
        }
        let r = if p == q { f64::INFINITY } else { 1.0 / (1.0 / p - 1.0 / q) };
        Ok(Self { p, q, r })
    }
}

/// Tuning for the optimizers behind the strong norms.
#[derive(Debug, Clone)]
pub struct StrongOptions {
    /// Simplex-grid resolution for the exhaustive sweep.
    pub budget: usize,
    pub starts: usize,
    pub seed: u64,
}

impl Default for StrongOptions {
    fn default() -> Self {
        Self { budget: 48, starts: 8, seed: 0 }
    }
}

/// An optimized value together with the point attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct Attained {
    pub value: f64,
    /// Weights `gamma_k = beta_k^p` for the primal form, the density `h` for dual forms.
    pub witness: Vec<f64>,
    /// Whether the value is an exact supremum rather than a lower bound.
    pub exact: bool,
}

/// `|| (sum_k |x_k|^q)^{1/q} ||_X`.
pub fn q_concave_rhs(fam: &VectorFamily, q: f64, x: &LatticeSpec) -> Result<f64> {
    fam.check_on(x)?;
    if !(q >= 1.0) {
        return config(format!("q = {q} must be at least 1"));
    }
    let pointwise: Vec<f64> = (0..fam.dim())
        .map(|i| {
            let col: Vec<f64> = fam.vectors.iter().map(|v| v[i]).collect();
            ls_norm_unit(&col, q)
        })
        .collect();
    x.norm(&pointwise)
}

/// `gamma -> || sum_k gamma_k |x_k|^p ||_{X_p}`.
struct PrimalObjective<'a> {
    xp: &'a LatticeSpec,
    powers: Vec<Vec<f64>>,
}

impl Objective for PrimalObjective<'_> {
    fn value(&self, gamma: &[f64]) -> f64 {
        let mut s = vec![0.0; self.xp.dim()];
        for (g, a) in gamma.iter().zip(&self.powers) {
            for (si, ai) in s.iter_mut().zip(a) {
                *si += g * ai;
            }
        }
        self.xp.norm(&s).unwrap_or(f64::NAN)
    }
}

fn powers(vectors: &[Vec<f64>], p: f64) -> Result<Vec<Vec<f64>>> {
    let out: Vec<Vec<f64>> = vectors.iter().map(|v| v.iter().map(|a| a.abs().powf(p)).collect()).collect();
    if out.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("|x|^{p} overflows")));
    }
    Ok(out)
}

/// `sup_{beta in B_r^+} || (sum_k |beta_k x_k|^p)^{1/p} ||_X` with the default options.
pub fn strong_norm_primal(fam: &VectorFamily, e: ExponentTriple, x: &LatticeSpec, budget: usize) -> Result<f64> {
    let opts = StrongOptions { budget, ..Default::default() };
    Ok(strong_norm_primal_with(fam, e, x, &opts, &[])?.value)
}

/// Primal strong norm; `warm` holds extra starting weights `gamma` in the canonical family order.
pub fn strong_norm_primal_with(
    fam: &VectorFamily,
    e: ExponentTriple,
    x: &LatticeSpec,
    opts: &StrongOptions,
    warm: &[Vec<f64>],
) -> Result<Attained> {
    fam.check_on(x)?;
    x.require_p_convex(e.p)?;
    let n = fam.len();
    if e.r.is_infinite() {
        let value = q_concave_rhs(fam, e.p, x)?;
        return Ok(Attained { value, witness: vec![1.0; n], exact: true });
    }
    let xp = x.concavified(e.p)?;
    let objective = PrimalObjective { xp: &xp, powers: powers(&fam.canonical(), e.p)? };
    let ball = LatticeSpec::ls(n, e.r / e.p)?;
    let mopts = MaximizeOptions {
        starts: opts.starts,
        seed: opts.seed,
        warm_starts: warm.to_vec(),
        grid_budget: Some(opts.budget),
        ..Default::default()
    };
    let m = support_maximize_with(&ball, &objective, &mopts)?;
    Ok(Attained { value: m.value.powf(1.0 / e.p), witness: m.witness.density().to_vec(), exact: m.exact })
}

/// `sup_{h in B^+((X_p)')} (sum_k <|x_k|^p, h>^{q/p})^{1/q}` with the default options.
pub fn strong_norm_dual(fam: &VectorFamily, e: ExponentTriple, x: &LatticeSpec) -> Result<f64> {
    Ok(strong_norm_dual_with(fam, e, x, &StrongOptions::default())?.value)
}

pub fn strong_norm_dual_with(fam: &VectorFamily, e: ExponentTriple, x: &LatticeSpec, opts: &StrongOptions) -> Result<Attained> {
    fam.check_on(x)?;
    x.require_p_convex(e.p)?;
    let ball = x.concavified_dual(e.p)?;
    let objective = PowerSum::new(x.space().weights(), &powers(&fam.canonical(), e.p)?, e.q / e.p);
    let mopts = MaximizeOptions { starts: opts.starts, seed: opts.seed, grid_budget: Some(opts.budget), ..Default::default() };
    let m = support_maximize_with(&ball, &objective, &mopts)?;
    Ok(Attained { value: m.value.powf(1.0 / e.q), witness: m.witness.density().to_vec(), exact: m.exact })
}

/// Sign patterns enumerated exhaustively up to this many active atoms.
const SIGN_ENUM_ATOMS: usize = 8;

/// `sup_{h in B(X')} (sum_k |<x_k, h>|^q)^{1/q}`, the weak q-summing norm of the family.
///
/// The ball is solid, so the supremum is taken over nonnegative `h` against every
/// sign flip `sigma x_k` of the atoms; the witness is the signed density.
pub fn weak_q_sum(fam: &VectorFamily, q: f64, x: &LatticeSpec, opts: &StrongOptions) -> Result<Attained> {
    fam.check_on(x)?;
    let ball = x.kothe_dual()?;
    let rows = fam.canonical();
    let d = fam.dim();
    let active: Vec<usize> = (0..d).filter(|&i| rows.iter().any(|v| v[i] != 0.0)).collect();
    let mut patterns: Vec<Vec<f64>> = Vec::new();
    if active.len() <= SIGN_ENUM_ATOMS {
        // sigma and -sigma give the same value: fix the first active sign
        let free = active.len().saturating_sub(1);
        for mask in 0u32..(1 << free) {
            let mut sigma = vec![1.0; d];
            for (b, &i) in active.iter().skip(1).enumerate() {
                if mask & (1 << b) != 0 {
                    sigma[i] = -1.0;
                }
            }
            patterns.push(sigma);
        }
    } else {
        patterns.push(vec![1.0; d]);
        for v in &rows {
            patterns.push(v.iter().map(|a| if *a < 0.0 { -1.0 } else { 1.0 }).collect());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for _ in 0..opts.starts {
            patterns.push((0..d).map(|_| if rng.gen::<bool>() { -1.0 } else { 1.0 }).collect());
        }
    }
    let mopts = MaximizeOptions {
        starts: opts.starts,
        seed: opts.seed,
        grid_budget: Some(opts.budget.min(16)),
        ..Default::default()
    };
    let mut best: Option<Attained> = None;
    for sigma in patterns {
        let flipped: Vec<Vec<f64>> = rows.iter().map(|v| v.iter().zip(&sigma).map(|(a, s)| a * s).collect()).collect();
        let objective = PowerSum::new(x.space().weights(), &flipped, q);
        let m = support_maximize_with(&ball, &objective, &mopts)?;
        if best.as_ref().map_or(true, |b| m.value > b.value) {
            let witness = m.witness.density().iter().zip(&sigma).map(|(h, s)| h * s).collect();
            best = Some(Attained { value: m.value, witness, exact: m.exact && active.len() <= SIGN_ENUM_ATOMS });
        }
    }
    let mut best = best.expect("at least one sign pattern");
    best.value = best.value.powf(1.0 / q);
    Ok(best)
}

/// `a <= b` up to `slack`, relative to `max(1, |b|)`.
pub fn le_slack(a: f64, b: f64, slack: f64) -> bool {
    a <= b + slack * b.abs().max(1.0)
}

/// Slack of the chain ordering check.
pub const CHAIN_SLACK: f64 = 1e-9;

/// The three members of the weak <= strong <= concave chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub weak_q_sum: f64,
    pub strong: f64,
    pub concave_rhs: f64,
}

pub fn chain_check(fam: &VectorFamily, e: ExponentTriple, x: &LatticeSpec) -> Result<Chain> {
    chain_check_with(fam, e, x, &StrongOptions::default())
}

/// Evaluates the chain; an ordering violation beyond [`CHAIN_SLACK`] is an invariant error.
pub fn chain_check_with(fam: &VectorFamily, e: ExponentTriple, x: &LatticeSpec, opts: &StrongOptions) -> Result<Chain> {
    let weak = weak_q_sum(fam, e.q, x, opts)?;
    // weights realizing the weak value inside the strong supremum: gamma_k ~ |<x_k, h>|^{q-p}
    let mu = x.space().weights();
    let c: Vec<f64> = fam
        .canonical()
        .iter()
        .map(|v| v.iter().zip(&weak.witness).zip(mu).map(|((a, h), m)| a * h * m).sum::<f64>().abs())
        .collect();
    let warm: Vec<Vec<f64>> = if c.iter().any(|v| *v > 0.0) {
        vec![c.iter().map(|v| v.powf(e.q - e.p)).collect()]
    } else {
        Vec::new()
    };
    let strong = strong_norm_primal_with(fam, e, x, opts, &warm)?.value;
    let concave_rhs = q_concave_rhs(fam, e.q, x)?;
    let chain = Chain { weak_q_sum: weak.value, strong, concave_rhs };
    if !le_slack(chain.weak_q_sum, chain.strong, CHAIN_SLACK) || !le_slack(chain.strong, chain.concave_rhs, CHAIN_SLACK) {
        return Err(Error::Invariant(format!("chain ordering violated: {chain:?}")));
    }
    Ok(chain)
}
