use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::measure::{augment_measure, f_seminorm, uniform_strict};
use super::operator::MultilinearOperator;
use crate::error::{config, input, Error, Result};
use crate::lattice::support::linear_max;
use crate::lattice::{exponent, AtomicMeasureSpace, DiscreteDualMeasure, DualFunctional, LatticeSpec};
use crate::lp::{Cmp, LinearProgram};
use crate::vector_norms::le_slack;

/// Per-coordinate exponents `(p_j, q_j)` with `1/r_j = 1/p_j - 1/q_j` and `1/q = sum_j 1/q_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawExponents", into = "RawExponents")]
pub struct DominationExponents {
    p: Vec<f64>,
    q: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawExponents {
    p: Vec<f64>,
    q: Vec<f64>,
    #[serde(default, skip_deserializing)]
    r: Vec<Exp>,
}

#[derive(Serialize, Deserialize, Default)]
#[serde(transparent)]
struct Exp(#[serde(with = "exponent")] f64);

impl TryFrom<RawExponents> for DominationExponents {
    type Error = Error;

    fn try_from(r: RawExponents) -> Result<Self> {
        Self::new(r.p, r.q)
    }
}

impl From<DominationExponents> for RawExponents {
    fn from(e: DominationExponents) -> Self {
        let r = e.r().into_iter().map(Exp).collect();
        RawExponents { p: e.p, q: e.q, r }
    }
}

impl DominationExponents {
    pub fn new(p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if p.is_empty() || p.len() != q.len() {
            return config("exponent lists must be nonempty and of equal length");
        }
        for (pj, qj) in p.iter().zip(&q) {
            if !(pj.is_finite() && *pj >= 1.0 && qj.is_finite() && qj >= pj) {
                return config(format!("need 1 <= p_j <= q_j < inf, got p_j = {pj}, q_j = {qj}"));
            }
        }
        Ok(Self { p, q })
    }

    /// The same `(p, q)` in each of `m` coordinates.
    pub fn uniform(m: usize, p: f64, q: f64) -> Result<Self> {
        Self::new(vec![p; m], vec![q; m])
    }

    pub fn arity(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn r(&self) -> Vec<f64> {
        self.p
            .iter()
            .zip(&self.q)
            .map(|(p, q)| if p == q { f64::INFINITY } else { 1.0 / (1.0 / p - 1.0 / q) })
            .collect()
    }

    /// `q` with `1/q = sum_j 1/q_j`.
    pub fn total_q(&self) -> f64 {
        1.0 / self.q.iter().map(|q| 1.0 / q).sum::<f64>()
    }
}

/// Families of candidate dual functionals for the measure supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CandidateFamily {
    /// Normalized indicator densities of single atoms.
    Basis,
    /// The normalized constant density.
    Uniform,
    /// For each training vector `x`, a density attaining `||x||_X`.
    Norming,
    /// Normalized random densities.
    Random(usize),
}

impl FromStr for CandidateFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "basis" => Ok(Self::Basis),
            "uniform" => Ok(Self::Uniform),
            "norming" => Ok(Self::Norming),
            "random" => Ok(Self::Random(8)),
            other => match other.strip_prefix("random:").map(str::parse) {
                Some(Ok(k)) => Ok(Self::Random(k)),
                _ => config(format!("unknown candidate family '{other}' (basis, uniform, norming, random[:k])")),
            },
        }
    }
}

impl TryFrom<String> for CandidateFamily {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<CandidateFamily> for String {
    fn from(c: CandidateFamily) -> Self {
        match c {
            CandidateFamily::Basis => "basis".into(),
            CandidateFamily::Uniform => "uniform".into(),
            CandidateFamily::Norming => "norming".into(),
            CandidateFamily::Random(k) => format!("random:{k}"),
        }
    }
}

/// The default candidate set: basis, uniform and norming densities.
pub const DEFAULT_CANDIDATES: [CandidateFamily; 3] =
    [CandidateFamily::Basis, CandidateFamily::Uniform, CandidateFamily::Norming];

/// Candidate densities in the nonnegative unit ball of `(X_p)'`.
pub fn candidates(
    x: &LatticeSpec,
    p: f64,
    families: &[CandidateFamily],
    training: &[Vec<f64>],
    seed: u64,
) -> Result<Vec<DualFunctional>> {
    let ball = x.concavified_dual(p)?;
    let n = x.dim();
    let mut out: Vec<DualFunctional> = Vec::new();
    let mut push = |h: DualFunctional| {
        if !out.iter().any(|g| g.density() == h.density()) {
            out.push(h);
        }
    };
    for fam in families {
        match fam {
            CandidateFamily::Basis => {
                for i in 0..n {
                    let mut e = vec![0.0; n];
                    e[i] = 1.0;
                    push(DualFunctional::normalized(e, &ball)?);
                }
            }
            CandidateFamily::Uniform => push(DualFunctional::normalized(vec![1.0; n], &ball)?),
            CandidateFamily::Norming => {
                for v in training {
                    if v.len() != n {
                        return input("training vector length differs from the space");
                    }
                    let g: Vec<f64> = v.iter().map(|a| a.abs().powf(p)).collect();
                    if g.iter().all(|a| *a == 0.0) {
                        continue;
                    }
                    push(DualFunctional::normalized(linear_max(&ball, &g)?.argmax, &ball)?);
                }
            }
            CandidateFamily::Random(k) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for _ in 0..*k {
                    let d: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0_f64..1.0).powi(2)).collect();
                    if d.iter().any(|v| *v > 0.0) {
                        push(DualFunctional::normalized(d, &ball)?);
                    }
                }
            }
        }
    }
    if out.is_empty() {
        return config("candidate set is empty");
    }
    Ok(out)
}

/// Data of a domination bound `||T(x_1..x_m)|| <= C prod_j ||x_j||_{p_j,q_j,nu_j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCertificate", into = "RawCertificate")]
pub struct DominationCertificate {
    c: f64,
    measures: Vec<DiscreteDualMeasure>,
    exponents: DominationExponents,
    fitted_on: String,
    verified_on: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RawCertificate {
    #[serde(rename = "C")]
    c: f64,
    q: f64,
    measures: Vec<DiscreteDualMeasure>,
    exponents: DominationExponents,
    #[serde(default)]
    fitted_on: String,
    #[serde(default)]
    verified_on: Vec<String>,
}

impl TryFrom<RawCertificate> for DominationCertificate {
    type Error = Error;

    fn try_from(r: RawCertificate) -> Result<Self> {
        if (r.q - r.exponents.total_q()).abs() > 1e-12 * r.q.max(1.0) {
            return config(format!("q = {} does not match 1/q = sum 1/q_j", r.q));
        }
        let mut cert = Self::new(r.c, r.measures, r.exponents, r.fitted_on)?;
        cert.verified_on = r.verified_on;
        Ok(cert)
    }
}

impl From<DominationCertificate> for RawCertificate {
    fn from(c: DominationCertificate) -> Self {
        RawCertificate {
            c: c.c,
            q: c.exponents.total_q(),
            measures: c.measures,
            exponents: c.exponents,
            fitted_on: c.fitted_on,
            verified_on: c.verified_on,
        }
    }
}

impl DominationCertificate {
    pub fn new(
        c: f64,
        measures: Vec<DiscreteDualMeasure>,
        exponents: DominationExponents,
        fitted_on: impl Into<String>,
    ) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return config(format!("certificate constant {c} must be finite and nonnegative"));
        }
        if measures.len() != exponents.arity() {
            return input("one measure per coordinate is required");
        }
        Ok(Self { c, measures, exponents, fitted_on: fitted_on.into(), verified_on: Vec::new() })
    }

    pub fn constant(&self) -> f64 {
        self.c
    }

    pub fn q(&self) -> f64 {
        self.exponents.total_q()
    }

    pub fn measures(&self) -> &[DiscreteDualMeasure] {
        &self.measures
    }

    pub fn exponents(&self) -> &DominationExponents {
        &self.exponents
    }

    pub fn fitted_on(&self) -> &str {
        &self.fitted_on
    }

    pub fn verified_on(&self) -> &[String] {
        &self.verified_on
    }

    pub fn mark_verified(&mut self, label: impl Into<String>) {
        self.verified_on.push(label.into());
    }

    /// Makes every measure definite by mixing in the uniform density of `(X_j)_{p_j}'`.
    ///
    /// Since `||x||_{nu} <= 2^{1/q_j} ||x||_{(nu + delta)/2}`, the constant grows by
    /// that factor for each coordinate that needed it.
    pub fn augmented(&self, domains: &[LatticeSpec]) -> Result<Self> {
        if domains.len() != self.measures.len() {
            return input("one domain per coordinate is required");
        }
        let mut out = self.clone();
        for (j, x) in domains.iter().enumerate() {
            if !out.measures[j].is_definite() {
                let strict = uniform_strict(x, self.exponents.p[j])?;
                out.measures[j] = augment_measure(&out.measures[j], &strict)?;
                out.c *= 2f64.powf(1.0 / self.exponents.q[j]);
            }
        }
        Ok(out)
    }

    /// `A_j = ||x_j||_{p_j,q_j,nu_j}` for each coordinate.
    pub fn seminorms<V: AsRef<[f64]>>(&self, xs: &[V]) -> Result<Vec<f64>> {
        if xs.len() != self.measures.len() {
            return input("tuple arity differs from the certificate");
        }
        xs.iter()
            .zip(&self.measures)
            .enumerate()
            .map(|(j, (x, nu))| f_seminorm(x.as_ref(), self.exponents.p[j], self.exponents.q[j], nu))
            .collect()
    }
}

/// Tuning for [`fit_domination_lp_with`].
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Rounds of constraint generation at rescaled tuples.
    pub max_rounds: usize,
    /// Relative tolerance of the product bound on training tuples.
    pub tol: f64,
    /// Rounds in which worst-case tuples found by local search join the training set.
    pub separation_rounds: usize,
    /// Training tuples (highest ratio first) used as local-search starts per round.
    pub separation_starts: usize,
    /// Seed of the extra random local-search starts.
    pub seed: u64,
    pub label: String,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_rounds: 30, tol: 1e-7, separation_rounds: 12, separation_starts: 8, seed: 0, label: "training".into() }
    }
}

pub fn fit_domination_lp(
    t: &MultilinearOperator,
    candidates: &[Vec<DualFunctional>],
    training: &[Vec<Vec<f64>>],
    exps: &DominationExponents,
) -> Result<DominationCertificate> {
    fit_domination_lp_with(t, candidates, training, exps, &FitOptions::default())
}

/// Fits measures on finite candidate sets by linear programming.
///
/// Variables are `v_{j,s} = C^q w_{j,s}` and `t = C^q`; each coordinate's weights sum
/// to `t`, and each training tuple contributes the sum-form constraint
/// `||T x||^q <= sum_j (q/q_j) sum_s v_{j,s} <|x_j|^{p_j}, h_{j,s}>^{q_j/p_j}`.
/// For `m >= 2` the sum form is not scale invariant, so constraints at the rescaled
/// tuples `x_j / A_j` are added until the product bound holds on every training tuple.
pub fn fit_domination_lp_with(
    t: &MultilinearOperator,
    candidates: &[Vec<DualFunctional>],
    training: &[Vec<Vec<f64>>],
    exps: &DominationExponents,
    opts: &FitOptions,
) -> Result<DominationCertificate> {
    if exps.arity() != t.arity() {
        return config(format!("operator has {} arguments, exponents {}", t.arity(), exps.arity()));
    }
    let mut tuples = training.to_vec();
    let mut values = Vec::with_capacity(training.len());
    for tuple in training {
        values.push(t.value_norm(tuple)?);
    }
    let spaces: Vec<&AtomicMeasureSpace> = t.domains().iter().map(|d| d.space()).collect();
    let mut round = 0;
    loop {
        let (c, measures) = fit_from_values(&spaces, candidates, &tuples, &values, exps, opts)?;
        if c == 0.0 {
            return DominationCertificate::new(c, measures, exps.clone(), opts.label.clone());
        }
        let cert = DominationCertificate::new(c, measures, exps.clone(), opts.label.clone())?;
        let found = worst_tuples(t, &cert, &tuples, &values, opts, round as u64)?;
        let worst = found.iter().fold(0.0_f64, |a, s| a.max(s.ratio));
        if worst <= c * (1.0 + opts.tol) {
            return Ok(cert);
        }
        if round == opts.separation_rounds {
            if !worst.is_finite() {
                return Err(Error::Numeric(
                    "fitted measures vanish where T does not; enrich the candidates".into(),
                ));
            }
            // local search still beats the LP constant: report the larger, attained value
            let mut cert = cert;
            cert.c = worst;
            return Ok(cert);
        }
        for s in found.into_iter().filter(|s| s.ratio > c * (1.0 + opts.tol)) {
            values.push(t.value_norm(&s.tuple)?);
            tuples.push(s.tuple);
        }
        round += 1;
    }
}

struct Separation {
    ratio: f64,
    tuple: Vec<Vec<f64>>,
}

/// `||T(x)|| / prod_j A_j(x_j)`, infinite when a seminorm vanishes under a nonzero value.
fn ratio_at(t: &MultilinearOperator, cert: &DominationCertificate, x: &[Vec<f64>]) -> Result<f64> {
    let v = t.value_norm(x)?;
    if v == 0.0 {
        return Ok(0.0);
    }
    let prod: f64 = cert.seminorms(x)?.iter().product();
    Ok(if prod > 0.0 { v / prod } else { f64::INFINITY })
}

/// Local maxima of the certificate ratio, started from the worst training tuples.
fn worst_tuples(
    t: &MultilinearOperator,
    cert: &DominationCertificate,
    tuples: &[Vec<Vec<f64>>],
    values: &[f64],
    opts: &FitOptions,
    round: u64,
) -> Result<Vec<Separation>> {
    let mut ranked: Vec<(f64, usize)> = Vec::new();
    for (i, tuple) in tuples.iter().enumerate() {
        if values[i] > 0.0 {
            ranked.push((ratio_at(t, cert, tuple)?, i));
        }
    }
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut starts: Vec<Vec<Vec<f64>>> =
        ranked.into_iter().take(opts.separation_starts).map(|(_, i)| tuples[i].clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(round));
    for _ in 0..opts.separation_starts {
        starts.push(t.domains().iter().map(|d| (0..d.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect());
    }
    starts.iter().map(|s| separate(t, cert, s)).collect()
}

/// Alternating maximization of `|<T(x), y*>| / prod_j A_j(x_j)`: each step is an exact
/// linear maximization, over `B(Y')` for `y*` and over the seminorm ball for `x_j`.
fn separate(t: &MultilinearOperator, cert: &DominationCertificate, start: &[Vec<f64>]) -> Result<Separation> {
    let m = t.arity();
    let e = cert.exponents();
    let balls = (0..m)
        .map(|j| LatticeSpec::s_measure(t.domains()[j].space().clone(), e.p()[j], e.q()[j], cert.measures[j].clone()))
        .collect::<Result<Vec<_>>>()?;
    let ydual = t.codomain().kothe_dual()?;
    let muy = t.codomain().space().weights();
    let mut x = start.to_vec();
    let mut best = Separation { ratio: ratio_at(t, cert, &x)?, tuple: x.clone() };
    for _ in 0..50 {
        let u = t.apply(&x)?;
        if u.iter().all(|v| *v == 0.0) {
            break;
        }
        let ua: Vec<f64> = u.iter().map(|v| v.abs()).collect();
        let ys: Vec<f64> = linear_max(&ydual, &ua)?.argmax.iter().zip(&u).map(|(h, v)| h * v.signum()).collect();
        for j in 0..m {
            let d = x[j].len();
            let mut c = vec![0.0; d];
            for (a, ca) in c.iter_mut().enumerate() {
                let mut xa = x.clone();
                xa[j] = vec![0.0; d];
                xa[j][a] = 1.0;
                *ca = t.apply(&xa)?.iter().zip(&ys).zip(muy).map(|((v, y), w)| v * y * w).sum();
            }
            let mu = balls[j].space().weights();
            let g: Vec<f64> = c.iter().zip(mu).map(|(c, w)| c.abs() / w).collect();
            if g.iter().all(|v| *v == 0.0) {
                continue;
            }
            let nu = &cert.measures[j];
            let uncharged = (0..d).find(|&a| {
                g[a] > 0.0 && !nu.weights().iter().zip(nu.support()).any(|(w, h)| *w > 0.0 && h.density()[a] > 0.0)
            });
            if let Some(a) = uncharged {
                x[j] = vec![0.0; d];
                x[j][a] = 1.0;
                return Ok(Separation { ratio: f64::INFINITY, tuple: x });
            }
            x[j] = linear_max(&balls[j], &g)?.argmax.iter().zip(&c).map(|(h, c)| h * c.signum()).collect();
        }
        let r = ratio_at(t, cert, &x)?;
        if r <= best.ratio * (1.0 + 1e-12) {
            break;
        }
        best = Separation { ratio: r, tuple: x.clone() };
    }
    Ok(best)
}

/// The LP fit given precomputed `||T(tuple)||` values; multilinearity is used for rescaling.
pub(crate) fn fit_from_values(
    spaces: &[&AtomicMeasureSpace],
    candidates: &[Vec<DualFunctional>],
    tuples: &[Vec<Vec<f64>>],
    values: &[f64],
    exps: &DominationExponents,
    opts: &FitOptions,
) -> Result<(f64, Vec<DiscreteDualMeasure>)> {
    let m = spaces.len();
    if candidates.len() != m {
        return input(format!("{} candidate lists for {m} coordinates", candidates.len()));
    }
    for (j, (cands, sp)) in candidates.iter().zip(spaces).enumerate() {
        if cands.is_empty() {
            return config(format!("coordinate {j} has no candidates"));
        }
        if cands.iter().any(|h| h.density().len() != sp.len()) {
            return input(format!("coordinate {j} candidate lives on a different space"));
        }
    }
    let q = exps.total_q();
    let (pj, qj) = (exps.p(), exps.q());

    // a[i][j][s] = <|x_j|^{p_j}, h_{j,s}>^{q_j/p_j}
    let mut a: Vec<Vec<Vec<f64>>> = Vec::with_capacity(tuples.len());
    for tuple in tuples {
        if tuple.len() != m {
            return input("training tuple arity differs from the operator");
        }
        let row: Vec<Vec<f64>> = (0..m)
            .map(|j| {
                let xp: Vec<f64> = tuple[j].iter().map(|v| v.abs().powf(pj[j])).collect();
                candidates[j]
                    .iter()
                    .map(|h| spaces[j].pairing(&xp, h.density()).powf(qj[j] / pj[j]))
                    .collect()
            })
            .collect();
        a.push(row);
    }

    let offsets: Vec<usize> = candidates
        .iter()
        .scan(0, |acc, c| {
            let o = *acc;
            *acc += c.len();
            Some(o)
        })
        .collect();
    let tvar = offsets[m - 1] + candidates[m - 1].len();
    let mut objective = vec![0.0; tvar + 1];
    objective[tvar] = 1.0;
    let mut lp = LinearProgram::new(objective);
    for j in 0..m {
        let mut row: Vec<(usize, f64)> = (0..candidates[j].len()).map(|s| (offsets[j] + s, 1.0)).collect();
        row.push((tvar, -1.0));
        lp.constrain(row, Cmp::Eq, 0.0);
    }
    let add_row = |lp: &mut LinearProgram, i: usize, scale: &[f64]| {
        let mut row = Vec::new();
        for j in 0..m {
            let f = q / qj[j] * scale[j].powf(qj[j]);
            for (s, aij) in a[i][j].iter().enumerate() {
                row.push((offsets[j] + s, f * aij));
            }
        }
        let rhs = (scale.iter().product::<f64>() * values[i]).powf(q);
        lp.constrain(row, Cmp::Ge, rhs);
    };

    let mut active = Vec::new();
    for i in 0..tuples.len() {
        if values[i] == 0.0 {
            continue;
        }
        let peak: Vec<f64> = (0..m).map(|j| a[i][j].iter().fold(0.0_f64, |x, y| x.max(*y))).collect();
        if let Some(j) = peak.iter().position(|v| *v == 0.0) {
            return Err(Error::Precondition(format!(
                "no candidate of coordinate {j} charges training tuple {i}, yet T does not vanish on it"
            )));
        }
        add_row(&mut lp, i, &vec![1.0; m]);
        let scale: Vec<f64> = (0..m).map(|j| peak[j].powf(-1.0 / qj[j])).collect();
        add_row(&mut lp, i, &scale);
        active.push((i, peak));
    }
    if active.is_empty() {
        let measures = uniform_measures(spaces, candidates)?;
        return Ok((0.0, measures));
    }

    let mut round = 0;
    loop {
        let sol = lp.solve()?;
        let t = sol.x[tvar];
        if !(t > 0.0) {
            return Err(Error::Numeric(format!("LP returned C^q = {t} with a nonzero training value")));
        }
        let w: Vec<Vec<f64>> = (0..m)
            .map(|j| (0..candidates[j].len()).map(|s| sol.x[offsets[j] + s] / t).collect())
            .collect();
        let c_lp = t.powf(1.0 / q);
        let mut c_needed = c_lp;
        let mut violated = Vec::new();
        for (i, peak) in &active {
            let amp: Vec<f64> = (0..m)
                .map(|j| w[j].iter().zip(&a[*i][j]).map(|(w, a)| w * a).sum::<f64>().powf(1.0 / qj[j]))
                .collect();
            let prod: f64 = amp.iter().product();
            let need = if prod > 0.0 { values[*i] / prod } else { f64::INFINITY };
            if need > c_lp * (1.0 + opts.tol) {
                let floor: Vec<f64> = (0..m).map(|j| 1e-6 * peak[j].powf(1.0 / qj[j])).collect();
                violated.push((*i, (0..m).map(|j| 1.0 / amp[j].max(floor[j])).collect::<Vec<_>>()));
            }
            c_needed = c_needed.max(need);
        }
        if violated.is_empty() || round >= opts.max_rounds {
            if !c_needed.is_finite() {
                return Err(Error::Numeric(
                    "fitted measures vanish on a training tuple where T does not; enrich the candidates".into(),
                ));
            }
            let measures = (0..m)
                .map(|j| measure_from_weights(spaces[j], &candidates[j], &w[j]))
                .collect::<Result<Vec<_>>>()?;
            return Ok((c_needed, measures));
        }
        for (i, scale) in violated {
            add_row(&mut lp, i, &scale);
        }
        round += 1;
    }
}

fn uniform_measures(spaces: &[&AtomicMeasureSpace], candidates: &[Vec<DualFunctional>]) -> Result<Vec<DiscreteDualMeasure>> {
    spaces.iter().zip(candidates).map(|(sp, c)| DiscreteDualMeasure::uniform(sp, c.clone())).collect()
}

fn measure_from_weights(space: &AtomicMeasureSpace, cands: &[DualFunctional], w: &[f64]) -> Result<DiscreteDualMeasure> {
    let total: f64 = w.iter().sum();
    let keep: Vec<usize> = (0..w.len()).filter(|&s| w[s] > 1e-14 * total).collect();
    let kept: f64 = keep.iter().map(|&s| w[s]).sum();
    DiscreteDualMeasure::new(
        space,
        keep.iter().map(|&s| cands[s].clone()).collect(),
        keep.iter().map(|&s| w[s] / kept).collect(),
    )
}

/// The product bound at one tuple.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductCheck {
    pub value: f64,
    pub bound: f64,
    pub seminorms: Vec<f64>,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

/// Slack of product-bound checks.
pub const PRODUCT_SLACK: f64 = 1e-9;

/// Converts the certificate into the bound `C prod_j A_j` at `inputs` and tests `T` against it.
pub fn sum_to_product<V: AsRef<[f64]>>(
    cert: &DominationCertificate,
    t: &MultilinearOperator,
    inputs: &[V],
) -> Result<ProductCheck> {
    let seminorms = cert.seminorms(inputs)?;
    let value = t.value_norm(inputs)?;
    if seminorms.iter().all(|a| *a > 0.0) {
        let bound = cert.c * seminorms.iter().product::<f64>();
        let holds = le_slack(value, bound, PRODUCT_SLACK);
        return Ok(ProductCheck { value, bound, seminorms, holds, diagnostic: None });
    }
    let holds = value <= PRODUCT_SLACK;
    let diagnostic = (!holds).then(|| "measure not strictly positive: a seminorm vanishes where T does not".to_string());
    Ok(ProductCheck { value, bound: 0.0, seminorms, holds, diagnostic })
}

/// `(||T x||^q, C^q sum_j (q/q_j) A_j^{q_j})`, the two sides of the sum-form bound.
pub fn sum_form<V: AsRef<[f64]>>(cert: &DominationCertificate, t: &MultilinearOperator, inputs: &[V]) -> Result<(f64, f64)> {
    let q = cert.q();
    let a = cert.seminorms(inputs)?;
    let rhs = cert.c.powf(q) * a.iter().zip(cert.exponents.q()).map(|(a, qj)| q / qj * a.powf(*qj)).sum::<f64>();
    Ok((t.value_norm(inputs)?.powf(q), rhs))
}

/// Product-bound statistics over a probe set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub probes: usize,
    pub violations: usize,
    /// Largest `value / bound` over probes with a positive bound.
    pub worst_ratio: f64,
    pub diagnostics: Vec<String>,
}

pub fn verify_certificate(
    cert: &DominationCertificate,
    t: &MultilinearOperator,
    probes: &[Vec<Vec<f64>>],
) -> Result<VerifyReport> {
    let mut report = VerifyReport { probes: probes.len(), violations: 0, worst_ratio: 0.0, diagnostics: Vec::new() };
    for (i, tuple) in probes.iter().enumerate() {
        let chk = sum_to_product(cert, t, tuple)?;
        if chk.bound > 0.0 {
            report.worst_ratio = report.worst_ratio.max(chk.value / chk.bound);
        }
        if !chk.holds {
            report.violations += 1;
            report.diagnostics.push(format!(
                "probe {i}: ||T|| = {} > bound {}{}",
                chk.value,
                chk.bound,
                chk.diagnostic.map(|d| format!(" ({d})")).unwrap_or_default()
            ));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l1_identity() -> (LatticeSpec, MultilinearOperator) {
        let x = LatticeSpec::ls(2, 1.0).unwrap();
        (x.clone(), MultilinearOperator::identity(x).unwrap())
    }

    #[test]
    fn l1_identity_with_constant_one() {
        let (x, t) = l1_identity();
        let cands = vec![candidates(&x, 1.0, &[CandidateFamily::Uniform], &[], 0).unwrap()];
        assert_eq!(cands[0][0].density(), &[1.0, 1.0]);
        let training: Vec<Vec<Vec<f64>>> = vec![vec![vec![1.0, -2.0]], vec![vec![0.5, 0.0]], vec![vec![-3.0, 1.0]]];
        let exps = DominationExponents::uniform(1, 1.0, 1.0).unwrap();
        let cert = fit_domination_lp(&t, &cands, &training, &exps).unwrap();
        assert!((cert.constant() - 1.0).abs() < 1e-9);
        assert_eq!(cert.measures()[0].len(), 1);
    }

    #[test]
    fn zero_operator_fits_constant_zero() {
        let x = LatticeSpec::ls(2, 2.0).unwrap();
        let t = MultilinearOperator::zero(vec![x.clone()], x.clone()).unwrap();
        let cands = vec![candidates(&x, 1.0, &DEFAULT_CANDIDATES, &[vec![1.0, 2.0]], 0).unwrap()];
        let exps = DominationExponents::uniform(1, 1.0, 2.0).unwrap();
        let cert = fit_domination_lp(&t, &cands, &[vec![vec![1.0, 2.0]]], &exps).unwrap();
        assert_eq!(cert.constant(), 0.0);
    }

    #[test]
    fn basis_candidates_alone_give_two() {
        // with only basis densities, x = e_1 and x = e_2 force C w_i >= 1 for both weights
        let (x, t) = l1_identity();
        let cands = vec![candidates(&x, 1.0, &[CandidateFamily::Basis], &[], 0).unwrap()];
        let training = vec![vec![vec![1.0, 1.0]], vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]];
        let exps = DominationExponents::uniform(1, 1.0, 1.0).unwrap();
        let cert = fit_domination_lp(&t, &cands, &training, &exps).unwrap();
        assert!((cert.constant() - 2.0).abs() < 1e-9, "{}", cert.constant());
    }

    #[test]
    fn exponents_and_json() {
        let e = DominationExponents::new(vec![1.0, 2.0], vec![2.0, 2.0]).unwrap();
        assert_eq!(e.total_q(), 1.0);
        assert_eq!(e.r(), vec![2.0, f64::INFINITY]);
        assert!(DominationExponents::new(vec![2.0], vec![1.0]).is_err());
        let js = serde_json::to_string(&e).unwrap();
        assert_eq!(js, r#"{"p":[1.0,2.0],"q":[2.0,2.0],"r":[2.0,"inf"]}"#);
        assert_eq!(serde_json::from_str::<DominationExponents>(&js).unwrap(), e);
    }

    #[test]
    fn candidate_family_parsing() {
        assert_eq!("random:3".parse::<CandidateFamily>().unwrap(), CandidateFamily::Random(3));
        assert_eq!("basis".parse::<CandidateFamily>().unwrap(), CandidateFamily::Basis);
        assert!("bogus".parse::<CandidateFamily>().is_err());
    }

    #[test]
    fn zero_input_gives_zero_bound_that_holds() {
        let (x, t) = l1_identity();
        let cands = vec![candidates(&x, 1.0, &[CandidateFamily::Uniform], &[], 0).unwrap()];
        let exps = DominationExponents::uniform(1, 1.0, 1.0).unwrap();
        let cert = fit_domination_lp(&t, &cands, &[vec![vec![1.0, 1.0]]], &exps).unwrap();
        let chk = sum_to_product(&cert, &t, &[[0.0, 0.0]]).unwrap();
        assert_eq!(chk.bound, 0.0);
        assert!(chk.holds);
    }

    #[test]
    fn certificate_json_shape() {
        let (x, t) = l1_identity();
        let cands = vec![candidates(&x, 1.0, &[CandidateFamily::Uniform], &[], 0).unwrap()];
        let exps = DominationExponents::uniform(1, 1.0, 1.0).unwrap();
        let cert = fit_domination_lp(&t, &cands, &[vec![vec![1.0, 1.0]]], &exps).unwrap();
        let v: serde_json::Value = serde_json::to_value(&cert).unwrap();
        assert_eq!(v["C"], 1.0);
        assert_eq!(v["q"], 1.0);
        assert_eq!(v["measures"][0]["support"][0], serde_json::json!([1.0, 1.0]));
        let back: DominationCertificate = serde_json::from_value(v).unwrap();
        assert_eq!(back, cert);
    }
}
