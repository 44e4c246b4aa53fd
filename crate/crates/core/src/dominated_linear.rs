//! Linear operators `T: X -> Y` tested against families in `X` and in the Köthe dual `Y'`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domination::{
    candidates, fit_domination_lp_with, CandidateFamily, DominationCertificate, DominationExponents, FitOptions,
    MultilinearOperator,
};
use crate::domination::build_factor_space;
use crate::error::{config, input, Error, Result};
use crate::lattice::exponent::{self, conjugate};
use crate::lattice::support::{linear_max, numeric_gradient};
use crate::lattice::{simplex_grid, DiscreteDualMeasure, LatticeSpec};
use crate::vector_norms::{
    chain_check_with, le_slack, strong_norm_dual_with, strong_norm_primal_with, ExponentTriple, StrongOptions,
    VectorFamily,
};

/// Slack of the inequalities checked in this module.
pub const PAIRING_SLACK: f64 = 1e-9;

/// Families `(x_k)` in `X` and `(y*_k)` in `Y'` of a common length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPairing", into = "RawPairing")]
pub struct PairingFamily {
    xs: VectorFamily,
    ystars: VectorFamily,
}

#[derive(Serialize, Deserialize)]
struct RawPairing {
    xs: VectorFamily,
    ystars: VectorFamily,
}

impl TryFrom<RawPairing> for PairingFamily {
    type Error = Error;

    fn try_from(r: RawPairing) -> Result<Self> {
        Self::new(r.xs, r.ystars)
    }
}

impl From<PairingFamily> for RawPairing {
    fn from(f: PairingFamily) -> Self {
        RawPairing { xs: f.xs, ystars: f.ystars }
    }
}

impl PairingFamily {
    pub fn new(xs: VectorFamily, ystars: VectorFamily) -> Result<Self> {
        if xs.len() != ystars.len() {
            return input(format!("{} vectors in X but {} in Y'", xs.len(), ystars.len()));
        }
        Ok(Self { xs, ystars })
    }

    pub fn xs(&self) -> &VectorFamily {
        &self.xs
    }

    pub fn ystars(&self) -> &VectorFamily {
        &self.ystars
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    fn check(&self, t: &MultilinearOperator) -> Result<()> {
        if t.arity() != 1 {
            return input("a linear operator is required");
        }
        if self.xs.dim() != t.domains()[0].dim() || self.ystars.dim() != t.codomain().dim() {
            return input("family dimensions do not match the operator");
        }
        Ok(())
    }
}

/// `(p1, q1, p2, q2)` with `q2 = q1'`, `1/r_i = 1/p_i - 1/q_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLinearExponents", into = "RawLinearExponents")]
pub struct LinearExponents {
    p1: f64,
    q1: f64,
    p2: f64,
    q2: f64,
}

#[derive(Serialize, Deserialize)]
struct RawLinearExponents {
    p1: f64,
    q1: f64,
    p2: f64,
    q2: f64,
    #[serde(with = "exponent", default, skip_deserializing)]
    r1: f64,
    #[serde(with = "exponent", default, skip_deserializing)]
    r2: f64,
}

impl TryFrom<RawLinearExponents> for LinearExponents {
    type Error = Error;

    fn try_from(r: RawLinearExponents) -> Result<Self> {
        Self::with_q2(r.p1, r.q1, r.p2, r.q2)
    }
}

impl From<LinearExponents> for RawLinearExponents {
    fn from(e: LinearExponents) -> Self {
        RawLinearExponents { p1: e.p1, q1: e.q1, p2: e.p2, q2: e.q2, r1: e.x().r, r2: e.y().r }
    }
}

impl LinearExponents {
    /// Sets `q2 = q1'`.
    pub fn new(p1: f64, q1: f64, p2: f64) -> Result<Self> {
        if !(q1 > 1.0) {
            return config(format!("q1 = {q1} must exceed 1 so that q2 = q1' is finite"));
        }
        Self::with_q2(p1, q1, p2, conjugate(q1))
    }

    /// Checks `1/q1 + 1/q2 = 1` to `1e-12`.
    pub fn with_q2(p1: f64, q1: f64, p2: f64, q2: f64) -> Result<Self> {
        if !((1.0 / q1 + 1.0 / q2 - 1.0).abs() <= 1e-12) {
            return config(format!("q2 = {q2} is not the conjugate of q1 = {q1}"));
        }
        ExponentTriple::new(p1, q1)?;
        ExponentTriple::new(p2, q2)?;
        Ok(Self { p1, q1, p2, q2 })
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn q1(&self) -> f64 {
        self.q1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    pub fn q2(&self) -> f64 {
        self.q2
    }

    /// `(p1, q1, r1)`.
    pub fn x(&self) -> ExponentTriple {
        ExponentTriple::new(self.p1, self.q1).expect("checked on construction")
    }

    /// `(p2, q2, r2)`.
    pub fn y(&self) -> ExponentTriple {
        ExponentTriple::new(self.p2, self.q2).expect("checked on construction")
    }
}

/// The matrix `M[b][a]` of a linear operator, `(Tx)_b = sum_a M[b][a] x_a`.
pub fn matrix_of(t: &MultilinearOperator) -> Result<Vec<Vec<f64>>> {
    if t.arity() != 1 {
        return input("a linear operator is required");
    }
    let (dx, dy) = (t.domains()[0].dim(), t.codomain().dim());
    Ok((0..dy).map(|b| (0..dx).map(|a| t.tensor()[a * dy + b]).collect()).collect())
}

/// The Köthe dual of the codomain, in closed form when one exists.
pub fn codomain_dual(t: &MultilinearOperator) -> Result<LatticeSpec> {
    let d = t.codomain().kothe_dual()?;
    Ok(d.canonical().unwrap_or(d))
}

/// Largest of the primal and dual estimates of the strong norm; both are attained lower bounds.
fn strong(fam: &VectorFamily, e: ExponentTriple, x: &LatticeSpec, opts: &StrongOptions) -> Result<f64> {
    let a = strong_norm_primal_with(fam, e, x, opts, &[])?.value;
    let b = strong_norm_dual_with(fam, e, x, opts)?.value;
    Ok(a.max(b))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairingReport {
    /// `|sum_k <T x_k, y*_k>|`.
    pub lhs: f64,
    pub strong_x: f64,
    pub strong_y: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// `lhs = |sum_k <T x_k, y*_k>|` against the product of the two strong norms.
pub fn pairing_check(
    t: &MultilinearOperator,
    fam: &PairingFamily,
    exps: LinearExponents,
    opts: &StrongOptions,
) -> Result<PairingReport> {
    fam.check(t)?;
    let x = &t.domains()[0];
    let yd = codomain_dual(t)?;
    let lhs = pairing_sum(t, fam)?.abs();
    let strong_x = strong(&fam.xs, exps.x(), x, opts)?;
    let strong_y = strong(&fam.ystars, exps.y(), &yd, opts)?;
    let rhs = strong_x * strong_y;
    let ratio = if rhs > 0.0 {
        lhs / rhs
    } else if lhs <= PAIRING_SLACK {
        0.0
    } else {
        return Err(Error::Invariant(format!("pairing {lhs} is positive while both strong norms vanish")));
    };
    Ok(PairingReport { lhs, strong_x, strong_y, rhs, ratio })
}

fn pairing_sum(t: &MultilinearOperator, fam: &PairingFamily) -> Result<f64> {
    let space = t.codomain().space();
    let mut s = 0.0;
    for (x, y) in fam.xs.vectors().iter().zip(fam.ystars.vectors()) {
        s += space.pairing(&t.apply(&[x])?, y);
    }
    Ok(s)
}

/// The two right-hand sides compared by the q-dominated inclusion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QDominatedComparison {
    /// Product of the weak `q`- and `q'`-summing norms of the two families.
    pub classical: f64,
    /// Product of the `(1, q)` and `(1, q')` strong norms.
    pub strong: f64,
    pub holds: bool,
}

pub fn q_dominated_comparison(
    t: &MultilinearOperator,
    fam: &PairingFamily,
    q: f64,
    opts: &StrongOptions,
) -> Result<QDominatedComparison> {
    fam.check(t)?;
    if !(q > 1.0 && q.is_finite()) {
        return config(format!("q = {q} must lie in (1, inf)"));
    }
    let cx = chain_check_with(&fam.xs, ExponentTriple::new(1.0, q)?, &t.domains()[0], opts)?;
    let cy = chain_check_with(&fam.ystars, ExponentTriple::new(1.0, conjugate(q))?, &codomain_dual(t)?, opts)?;
    let classical = cx.weak_q_sum * cy.weak_q_sum;
    let strong = cx.strong * cy.strong;
    Ok(QDominatedComparison { classical, strong, holds: le_slack(classical, strong, PAIRING_SLACK) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualityReport {
    /// `|| (sum_k |x_k|^p)^{1/p} ||_E`.
    pub lhs: f64,
    /// Best `sum_k <x_k, x*_k>` found with `|| (sum_k |x*_k|^{p'})^{1/p'} ||_{E'} <= 1`.
    pub best_rhs: f64,
    pub gap: f64,
    #[serde(skip)]
    pub witness: Vec<Vec<f64>>,
}

fn pointwise_lp(vs: &[Vec<f64>], p: f64, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|a| {
            if p.is_infinite() {
                vs.iter().map(|v| v[a].abs()).fold(0.0, f64::max)
            } else {
                let m = vs.iter().map(|v| v[a].abs()).fold(0.0, f64::max);
                if m == 0.0 {
                    return 0.0;
                }
                m * vs.iter().map(|v| (v[a].abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
            }
        })
        .collect()
}

/// Pointwise maximizer of `sum_k x_k w_k` over `sum_k |w_k|^{p'} <= 1`.
fn holder_fiber(xs: &[f64], p: f64) -> Vec<f64> {
    let m = xs.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if m == 0.0 {
        return vec![0.0; xs.len()];
    }
    if p == 1.0 {
        return xs.iter().map(|v| if *v == 0.0 { 0.0 } else { v.signum() }).collect();
    }
    if p.is_infinite() {
        let ties = xs.iter().filter(|v| v.abs() == m).count() as f64;
        return xs.iter().map(|v| if v.abs() == m { v.signum() / ties } else { 0.0 }).collect();
    }
    let s = m * xs.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p);
    xs.iter().map(|v| v.signum() * (v.abs() / s).powf(p - 1.0)).collect()
}

/// Both sides of the lattice duality formula for `(sum_k |x_k|^p)^{1/p}`.
///
/// The dual family is written `x*_k = g w_k` with `g >= 0` in the unit ball of `E'` and
/// `(w_k(a))_k` in the unit ball of `l^{p'}` at every atom; block ascent alternates a
/// pointwise Hölder step in `w` with a linear maximization over the ball in `g`.
pub fn prop_duality_check(fam: &VectorFamily, p: f64, e: &LatticeSpec, starts: usize, seed: u64) -> Result<DualityReport> {
    fam.check_on(e)?;
    if !(p >= 1.0) {
        return config(format!("p = {p} must be at least 1"));
    }
    let dim = e.dim();
    let xs = fam.vectors();
    let lhs = e.norm(&pointwise_lp(xs, p, dim))?;
    let dual = e.kothe_dual()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = DualityReport { lhs, best_rhs: 0.0, gap: lhs, witness: vec![vec![0.0; dim]; xs.len()] };
    for _ in 0..starts.max(1) {
        let mut g: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
        let mut last = f64::NEG_INFINITY;
        for _ in 0..20 {
            let w: Vec<Vec<f64>> = (0..dim)
                .map(|a| {
                    let col: Vec<f64> = xs.iter().map(|x| x[a]).collect();
                    if g[a] > 0.0 { holder_fiber(&col, p) } else { vec![0.0; xs.len()] }
                })
                .collect();
            let c: Vec<f64> = (0..dim).map(|a| xs.iter().zip(&w[a]).map(|(x, wk)| x[a] * wk).sum::<f64>().max(0.0)).collect();
            let m = linear_max(&dual, &c)?;
            g = m.argmax;
            let stars: Vec<Vec<f64>> = (0..xs.len()).map(|k| (0..dim).map(|a| g[a] * w[a][k]).collect()).collect();
            let constraint = dual.norm(&pointwise_lp(&stars, conjugate(p), dim))?;
            let value: f64 = xs.iter().zip(&stars).map(|(x, s)| e.space().pairing(x, s)).sum();
            let value = if constraint > 1.0 { value / constraint } else { value };
            if value > best.best_rhs {
                let scale = constraint.max(1.0);
                best.best_rhs = value;
                best.witness = stars.iter().map(|s| s.iter().map(|v| v / scale).collect()).collect();
            }
            if value <= last * (1.0 + 1e-15) {
                break;
            }
            last = value;
            // keep every atom charged so the next Hölder step sees all of them
            for ga in g.iter_mut() {
                if *ga <= 0.0 {
                    *ga = f64::MIN_POSITIVE;
                }
            }
        }
    }
    best.gap = lhs - best.best_rhs;
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfQuotient {
    pub value: f64,
    /// Minimizing `alpha` in the positive part of the unit sphere of `l^{r2}`; zero on dropped indices.
    pub alpha: Vec<f64>,
    /// Value at the closed-form initializer.
    pub initial: f64,
}

fn quotient_value(y: &LatticeSpec, txs: &[Vec<f64>], alpha: &[f64], pc: f64) -> Result<f64> {
    let scaled: Vec<Vec<f64>> = txs.iter().zip(alpha).map(|(v, a)| v.iter().map(|c| c / a).collect()).collect();
    y.norm(&pointwise_lp(&scaled, pc, y.dim()))
}

/// `inf_{alpha in B_{r2}^+} || (sum_k |T x_k / alpha_k|^{p2'})^{1/p2'} ||_Y`.
///
/// Minimized over `u = alpha^{r2}` in the simplex, where the objective is convex, by
/// exponentiated-gradient steps followed by pairwise golden-section sweeps; the default
/// start is `alpha_k` proportional to `||T x_k||^{q2/r2}`.
pub fn inf_quotient_norm(
    t: &MultilinearOperator,
    xs: &VectorFamily,
    p2_conj: f64,
    r2: f64,
    q2: f64,
    init: Option<&[f64]>,
) -> Result<InfQuotient> {
    if t.arity() != 1 || xs.dim() != t.domains()[0].dim() {
        return input("family does not match the linear operator");
    }
    if !(p2_conj >= 1.0 && r2 >= 1.0) {
        return config("p2' and r2 must be at least 1");
    }
    let y = t.codomain();
    let n = xs.len();
    let mut txs = Vec::with_capacity(n);
    let mut norms = Vec::with_capacity(n);
    for x in xs.vectors() {
        let tx = t.apply(&[x])?;
        norms.push(y.norm(&tx)?);
        txs.push(tx);
    }
    let live: Vec<usize> = (0..n).filter(|k| norms[*k] > 0.0).collect();
    if live.is_empty() {
        return Ok(InfQuotient { value: 0.0, alpha: vec![1.0 / (n as f64).powf(1.0 / r2); n], initial: 0.0 });
    }
    let ltx: Vec<Vec<f64>> = live.iter().map(|k| txs[*k].clone()).collect();
    let expand = |a: &[f64]| {
        let mut out = vec![0.0; n];
        for (k, v) in live.iter().zip(a) {
            out[*k] = *v;
        }
        out
    };
    if r2.is_infinite() {
        let ones = vec![1.0; live.len()];
        let value = quotient_value(y, &ltx, &ones, p2_conj)?;
        return Ok(InfQuotient { value, alpha: expand(&ones), initial: value });
    }
    let start: Vec<f64> = match init {
        Some(a) if a.len() == n => live.iter().map(|k| a[*k].max(0.0).powf(r2)).collect(),
        Some(_) => return input("initial alpha has the wrong length"),
        None => live.iter().map(|k| norms[*k].powf(q2)).collect(),
    };
    let total: f64 = start.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return input("initial alpha must be positive on the indices with T x_k != 0");
    }
    let mut u: Vec<f64> = start.iter().map(|v| v / total).collect();
    let f = |u: &[f64]| -> f64 {
        if u.iter().any(|v| !(*v > 0.0)) {
            return f64::INFINITY;
        }
        let alpha: Vec<f64> = u.iter().map(|v| v.powf(1.0 / r2)).collect();
        quotient_value(y, &ltx, &alpha, p2_conj).unwrap_or(f64::INFINITY)
    };
    let initial = f(&u);
    if !initial.is_finite() {
        return Err(Error::Numeric("quotient norm is not finite at the initializer".into()));
    }
    let mut fu = initial;
    let m = u.len();
    if m > 1 {
        let mut eta = 1.0;
        for _ in 0..200 {
            let g = numeric_gradient(&f, &u);
            let gmax = g.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            if !(gmax > 0.0 && gmax.is_finite()) {
                break;
            }
            let mut improved = false;
            while eta > 1e-12 {
                let mut trial: Vec<f64> = u.iter().zip(&g).map(|(a, gi)| a * (-eta * gi / gmax).exp()).collect();
                let s: f64 = trial.iter().sum();
                trial.iter_mut().for_each(|v| *v /= s);
                let ft = f(&trial);
                if ft < fu {
                    u = trial;
                    fu = ft;
                    improved = true;
                    eta *= 2.0;
                    break;
                }
                eta *= 0.5;
            }
            if !improved {
                break;
            }
        }
        for _ in 0..20 {
            let before = fu;
            for i in 0..m {
                for j in i + 1..m {
                    let pool = u[i] + u[j];
                    let line = |s: f64| {
                        let mut v = u.clone();
                        v[i] = s * pool;
                        v[j] = (1.0 - s) * pool;
                        f(&v)
                    };
                    let (s, fs) = golden_section(&line, 0.0, 1.0, 60);
                    if fs < fu {
                        u[i] = s * pool;
                        u[j] = (1.0 - s) * pool;
                        fu = fs;
                    }
                }
            }
            if before - fu <= 1e-15 * before {
                break;
            }
        }
    }
    let alpha: Vec<f64> = u.iter().map(|v| v.powf(1.0 / r2)).collect();
    Ok(InfQuotient { value: fu, alpha: expand(&alpha), initial })
}

fn golden_section(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd { (c, fc) } else { (d, fd) }
}

/// The inf-form hypothesis and the pairing bound it implies on one pair of families.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfFormReport {
    pub quotient: InfQuotient,
    pub strong_x: f64,
    /// `quotient / strong_x`, the constant of the hypothesis on this family.
    pub hypothesis_ratio: f64,
    pub pairing: f64,
    /// `|| (sum_k |alpha_k y*_k|^{p2})^{1/p2} ||_{Y'}` at the quotient's `alpha`.
    pub alpha_norm_y: f64,
    /// `pairing <= quotient * alpha_norm_y`.
    pub holds: bool,
}

/// Checks `|sum_k <T x_k, y*_k>| <= Q(alpha) || (sum_k |alpha_k y*_k|^{p2})^{1/p2} ||_{Y'}`.
pub fn inf_form_check(
    t: &MultilinearOperator,
    fam: &PairingFamily,
    exps: LinearExponents,
    opts: &StrongOptions,
) -> Result<InfFormReport> {
    fam.check(t)?;
    let ey = exps.y();
    let quotient = inf_quotient_norm(t, &fam.xs, conjugate(exps.p2), ey.r, exps.q2, None)?;
    let strong_x = strong(&fam.xs, exps.x(), &t.domains()[0], opts)?;
    let hypothesis_ratio = if quotient.value == 0.0 { 0.0 } else { quotient.value / strong_x };
    let yd = codomain_dual(t)?;
    let scaled: Vec<Vec<f64>> = fam
        .ystars
        .vectors()
        .iter()
        .zip(&quotient.alpha)
        .map(|(v, a)| v.iter().map(|c| c * a).collect())
        .collect();
    let alpha_norm_y = yd.norm(&pointwise_lp(&scaled, exps.p2, yd.dim()))?;
    let pairing = pairing_sum(t, fam)?.abs();
    let holds = le_slack(pairing, quotient.value * alpha_norm_y, PAIRING_SLACK);
    Ok(InfFormReport { quotient, strong_x, hypothesis_ratio, pairing, alpha_norm_y, holds })
}

/// Two-measure bound `|<Tx, y'>| <= C ||x||_{nu1} ||y'||_{nu2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilinearCertificate {
    #[serde(rename = "C")]
    pub c: f64,
    pub nu1: DiscreteDualMeasure,
    pub nu2: DiscreteDualMeasure,
    pub exponents: LinearExponents,
}

/// `(x, y') -> <Tx, y'>` as a bilinear form on `X x Y'` with scalar values.
pub fn bilinear_form(t: &MultilinearOperator) -> Result<MultilinearOperator> {
    let m = matrix_of(t)?;
    let x = t.domains()[0].clone();
    let yd = codomain_dual(t)?;
    let mu = t.codomain().space().weights();
    let (dx, dy) = (x.dim(), yd.dim());
    let mut tensor = vec![0.0; dx * dy];
    for a in 0..dx {
        for b in 0..dy {
            tensor[a * dy + b] = m[b][a] * mu[b];
        }
    }
    MultilinearOperator::new(vec![x, yd], LatticeSpec::ls(1, 1.0)?, tensor)
}

/// Tuning for [`fit_bilinear_and_factorize`].
#[derive(Debug, Clone)]
pub struct LinearFactorOptions {
    pub families: Vec<CandidateFamily>,
    pub fit: FitOptions,
    pub probes: usize,
    pub seed: u64,
}

impl Default for LinearFactorOptions {
    fn default() -> Self {
        Self {
            families: crate::domination::DEFAULT_CANDIDATES.to_vec(),
            fit: FitOptions::default(),
            probes: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearFactorization {
    pub certificate: BilinearCertificate,
    /// Constant of the fit before augmentation.
    pub fitted_constant: f64,
    /// `T_0`, the same matrix measured `E -> F'`.
    pub t0: Vec<Vec<f64>>,
    pub e: LatticeSpec,
    pub f: LatticeSpec,
    pub reconstruction_exact: bool,
    pub probes: usize,
    /// `sup ||T_0 u||_{F'} / ||u||_E` over probes.
    pub t0_bound: f64,
    pub bound_holds: bool,
    /// Largest `||x||_E / ||x||_X` and `||y'||_F / ||y'||_{Y'}` seen.
    pub inclusion_x: f64,
    pub inclusion_y: f64,
    pub inclusions_hold: bool,
}

/// Relative slack of the `T_0` probe bound.
pub const T0_SLACK: f64 = 1e-3;

/// `||v||_{F'} = sup { <|v|, g> : g in B_F^+ }`, with a grid sweep at `dim <= 3`.
pub fn f_dual_norm(f: &LatticeSpec, v: &[f64]) -> Result<f64> {
    let abs: Vec<f64> = v.iter().map(|c| c.abs()).collect();
    let mut best = linear_max(f, &abs)?.value;
    if f.dim() <= 3 {
        for g in simplex_grid(f.dim(), 60) {
            let n = f.norm(&g)?;
            if n > 0.0 {
                best = best.max(f.space().pairing(&abs, &g) / n);
            }
        }
    }
    if !best.is_finite() {
        return Err(Error::Numeric("F' norm is not finite".into()));
    }
    Ok(best)
}

/// Fits a two-measure certificate for `<Tx, y'>` and factors `T` through `E -> F'`.
pub fn fit_bilinear_and_factorize(
    t: &MultilinearOperator,
    training: &[PairingFamily],
    exps: LinearExponents,
    opts: &LinearFactorOptions,
) -> Result<LinearFactorization> {
    let x = t.domains().first().ok_or_else(|| Error::Input("operator has no domain".into()))?.clone();
    let yd = codomain_dual(t)?;
    x.require_p_convex(exps.p1)?;
    yd.require_p_convex(exps.p2)?;
    let bil = bilinear_form(t)?;
    let mut tuples = Vec::new();
    for fam in training {
        fam.check(t)?;
        for (a, b) in fam.xs.vectors().iter().zip(fam.ystars.vectors()) {
            tuples.push(vec![a.clone(), b.clone()]);
        }
    }
    if tuples.is_empty() {
        return input("no training pairs");
    }
    let xs: Vec<Vec<f64>> = tuples.iter().map(|t| t[0].clone()).collect();
    let ys: Vec<Vec<f64>> = tuples.iter().map(|t| t[1].clone()).collect();
    let cands = vec![
        candidates(&x, exps.p1, &opts.families, &xs, opts.seed)?,
        candidates(&yd, exps.p2, &opts.families, &ys, opts.seed.wrapping_add(1))?,
    ];
    let dexps = DominationExponents::new(vec![exps.p1, exps.p2], vec![exps.q1, exps.q2])?;
    let cert = fit_domination_lp_with(&bil, &cands, &tuples, &dexps, &opts.fit)?;
    let fitted_constant = cert.constant();
    let aug = cert.augmented(&[x.clone(), yd.clone()])?;
    factor_with(t, &aug, exps, fitted_constant, opts)
}

fn factor_with(
    t: &MultilinearOperator,
    cert: &DominationCertificate,
    exps: LinearExponents,
    fitted_constant: f64,
    opts: &LinearFactorOptions,
) -> Result<LinearFactorization> {
    let x = t.domains()[0].clone();
    let yd = codomain_dual(t)?;
    let (nu1, nu2) = (cert.measures()[0].clone(), cert.measures()[1].clone());
    let e = build_factor_space(&x, exps.p1, exps.q1, &nu1)?;
    let f = build_factor_space(&yd, exps.p2, exps.q2, &nu2)?;
    let t0 = t.remeasured(vec![e.clone()], t.codomain().clone())?;
    let c = cert.constant();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x7f4a_7c15);
    let mut report = LinearFactorization {
        certificate: BilinearCertificate { c, nu1, nu2, exponents: exps },
        fitted_constant,
        t0: matrix_of(&t0)?,
        e: e.clone(),
        f: f.clone(),
        reconstruction_exact: t0.tensor() == t.tensor(),
        probes: opts.probes,
        t0_bound: 0.0,
        bound_holds: true,
        inclusion_x: 0.0,
        inclusion_y: 0.0,
        inclusions_hold: true,
    };
    let mu = t.codomain().space().weights();
    for _ in 0..opts.probes {
        let u: Vec<f64> = (0..x.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..yd.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let tu = t.apply(&[&u])?;
        let t0u = t0.apply(&[&u])?;
        let direct: f64 = tu.iter().zip(&w).zip(mu).map(|((a, b), m)| a * b * m).sum();
        let through: f64 = t0u.iter().zip(&w).zip(mu).map(|((a, b), m)| a * b * m).sum();
        report.reconstruction_exact &= direct == through;
        let ne = e.norm(&u)?;
        let nf = f_dual_norm(&f, &t0u)?;
        if ne > 0.0 {
            report.t0_bound = report.t0_bound.max(nf / ne);
        } else if nf > 0.0 {
            return Err(Error::Invariant("T_0 is nonzero on a vector of zero E-norm".into()));
        }
        let nx = x.norm(&u)?;
        if nx > 0.0 {
            report.inclusion_x = report.inclusion_x.max(ne / nx);
        }
        let ny = yd.norm(&w)?;
        if ny > 0.0 {
            report.inclusion_y = report.inclusion_y.max(f.norm(&w)? / ny);
        }
    }
    report.bound_holds = report.t0_bound <= c * (1.0 + T0_SLACK) || (c == 0.0 && report.t0_bound == 0.0);
    report.inclusions_hold = report.inclusion_x <= 1.0 + PAIRING_SLACK && report.inclusion_y <= 1.0 + PAIRING_SLACK;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::AtomicMeasureSpace;

    fn fam(v: Vec<Vec<f64>>) -> VectorFamily {
        VectorFamily::new(v).unwrap()
    }

    #[test]
    fn identity_basis_pairing() {
        let x = LatticeSpec::ls(2, 2.0).unwrap();
        let t = MultilinearOperator::identity(x).unwrap();
        let pf = PairingFamily::new(fam(vec![vec![1.0, 0.0]]), fam(vec![vec![1.0, 0.0]])).unwrap();
        let exps = LinearExponents::new(1.0, 2.0, 1.0).unwrap();
        let r = pairing_check(&t, &pf, exps, &StrongOptions::default()).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-12 && (r.rhs - 1.0).abs() < 1e-9 && (r.ratio - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exponent_identities() {
        assert!(matches!(LinearExponents::with_q2(1.0, 2.0, 1.0, 3.0), Err(Error::Config(_))));
        assert!(matches!(LinearExponents::new(1.0, 1.0, 1.0), Err(Error::Config(_))));
        let e = LinearExponents::new(1.0, 3.0, 1.0).unwrap();
        assert!((e.q2() - 1.5).abs() < 1e-15);
        let js = serde_json::to_value(e).unwrap();
        assert!((js["r1"].as_f64().unwrap() - 1.5).abs() < 1e-12);
        let back: LinearExponents = serde_json::from_value(js).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn duality_single_vector_is_the_norm() {
        let e = LatticeSpec::ls(3, 3.0).unwrap();
        let f = fam(vec![vec![1.0, -2.0, 0.5]]);
        let r = prop_duality_check(&f, 2.0, &e, 3, 0).unwrap();
        assert!((r.lhs - e.norm(&[1.0, -2.0, 0.5]).unwrap()).abs() < 1e-12);
        assert!(r.best_rhs <= r.lhs + 1e-9 && r.best_rhs >= 0.99 * r.lhs);
    }

    #[test]
    fn duality_attains_sum_of_moduli_at_p_one() {
        // F = |x_1| + |x_2| = (2, 1)
        let e = LatticeSpec::ls(2, 2.0).unwrap();
        let r = prop_duality_check(&fam(vec![vec![1.0, 0.0], vec![-1.0, 1.0]]), 1.0, &e, 2, 0).unwrap();
        assert!((r.lhs - 5f64.sqrt()).abs() < 1e-12);
        assert!((r.best_rhs - 5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn duality_zero_family() {
        let e = LatticeSpec::ls(2, 2.0).unwrap();
        let r = prop_duality_check(&fam(vec![vec![0.0, 0.0]; 2]), 2.0, &e, 2, 0).unwrap();
        assert_eq!((r.lhs, r.best_rhs), (0.0, 0.0));
    }

    #[test]
    fn quotient_of_one_vector() {
        let x = LatticeSpec::ls(2, 1.0).unwrap();
        let t = MultilinearOperator::linear(x, LatticeSpec::ls(2, f64::INFINITY).unwrap(), &[vec![1.0, 2.0], vec![0.0, 1.0]])
            .unwrap();
        let q = inf_quotient_norm(&t, &fam(vec![vec![1.0, 1.0]]), f64::INFINITY, 2.0, 2.0, None).unwrap();
        assert!((q.value - 3.0).abs() < 1e-12);
        assert!((q.alpha[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quotient_of_identical_vectors() {
        // all alpha_k equal, value n^{1/q2'} ||Tx||
        let x = LatticeSpec::ls(3, 2.0).unwrap();
        let t = MultilinearOperator::identity(x).unwrap();
        let v = vec![0.3, -1.0, 0.7];
        let n = 3;
        let (p2, q2) = (1.5, 3.0);
        let r2 = 1.0 / (1.0 / p2 - 1.0 / q2);
        let init = [0.9, 0.3, 0.2];
        let q = inf_quotient_norm(&t, &fam(vec![v.clone(); n]), conjugate(p2), r2, q2, Some(&init)).unwrap();
        let closed = t.codomain().norm(&v).unwrap() * (n as f64).powf(1.0 / conjugate(q2));
        assert!((q.value - closed).abs() < 1e-3 * closed, "{} vs {closed}", q.value);
    }

    #[test]
    fn quotient_drops_null_images() {
        let x = LatticeSpec::ls(2, 1.0).unwrap();
        let t = MultilinearOperator::linear(x.clone(), x, &[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let q = inf_quotient_norm(&t, &fam(vec![vec![0.0, 1.0], vec![2.0, 0.0]]), 2.0, 2.0, 2.0, None).unwrap();
        assert_eq!(q.alpha[0], 0.0);
        assert!((q.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn zero_operator_factors_with_zero() {
        let x = LatticeSpec::ls(2, 2.0).unwrap();
        let t = MultilinearOperator::zero(vec![x.clone()], x).unwrap();
        let pf = PairingFamily::new(fam(vec![vec![1.0, 0.5]]), fam(vec![vec![0.2, 1.0]])).unwrap();
        let exps = LinearExponents::new(1.0, 2.0, 1.0).unwrap();
        let opts = LinearFactorOptions { probes: 10, ..Default::default() };
        let r = fit_bilinear_and_factorize(&t, &[pf], exps, &opts).unwrap();
        assert_eq!(r.certificate.c, 0.0);
        assert!(r.t0.iter().flatten().all(|v| *v == 0.0));
        assert!(r.reconstruction_exact && r.bound_holds && r.inclusions_hold);
    }

    #[test]
    fn bilinear_form_uses_the_codomain_measure() {
        let x = LatticeSpec::ls(2, 2.0).unwrap();
        let y = LatticeSpec::weighted_ls(AtomicMeasureSpace::new(vec![0.5, 2.0]).unwrap(), 2.0).unwrap();
        let t = MultilinearOperator::linear(x, y, &[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = bilinear_form(&t).unwrap();
        let (u, w) = (vec![1.0, -1.0], vec![2.0, 1.0]);
        let tu = t.apply(&[&u]).unwrap();
        let expect = t.codomain().space().pairing(&tu, &w);
        assert!((b.apply(&[u, w]).unwrap()[0] - expect).abs() < 1e-12);
    }
}
