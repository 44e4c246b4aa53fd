//! Pointwise tensors on product atom spaces and the positive-projective norm.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::domination::{verify_certificate, DominationCertificate, MultilinearOperator, VerifyReport};
use crate::error::{input, Error, Result};
use crate::lattice::{AtomicMeasureSpace, LatticeSpec};
use crate::vector_norms::{
    le_slack, strong_norm_dual_with, strong_norm_primal_with, ExponentTriple, StrongOptions, VectorFamily,
};

/// A real array over `Omega_1 x ... x Omega_m`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct TensorGrid {
    factors: Vec<AtomicMeasureSpace>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    factors: Vec<AtomicMeasureSpace>,
    values: Value,
}

impl TryFrom<RawGrid> for TensorGrid {
    type Error = Error;

    fn try_from(r: RawGrid) -> Result<Self> {
        let shape: Vec<usize> = r.factors.iter().map(|f| f.len()).collect();
        let mut values = Vec::new();
        flatten(&r.values, &shape, &mut values)?;
        Self::new(r.factors, values)
    }
}

impl From<TensorGrid> for RawGrid {
    fn from(g: TensorGrid) -> Self {
        let shape = g.shape();
        let values = nest(&g.values, &shape);
        RawGrid { factors: g.factors, values }
    }
}

fn flatten(v: &Value, shape: &[usize], out: &mut Vec<f64>) -> Result<()> {
    match (shape.split_first(), v) {
        (None, Value::Number(n)) => {
            out.push(n.as_f64().ok_or_else(|| Error::Input("grid entry is not a real number".into()))?);
            Ok(())
        }
        (Some((d, rest)), Value::Array(items)) if items.len() == *d => {
            items.iter().try_for_each(|item| flatten(item, rest, out))
        }
        _ => input("grid values do not match the factor shapes"),
    }
}

fn nest(values: &[f64], shape: &[usize]) -> Value {
    match shape.split_first() {
        None => serde_json::json!(values[0]),
        Some((d, rest)) => {
            let stride = values.len() / d;
            Value::Array((0..*d).map(|i| nest(&values[i * stride..(i + 1) * stride], rest)).collect())
        }
    }
}

impl TensorGrid {
    pub fn new(factors: Vec<AtomicMeasureSpace>, values: Vec<f64>) -> Result<Self> {
        if factors.is_empty() {
            return input("a tensor grid needs at least one factor");
        }
        let size: usize = factors.iter().map(|f| f.len()).product();
        if values.len() != size {
            return input(format!("grid has {} values, factor shapes need {size}", values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return input("grid has a non-finite value");
        }
        Ok(Self { factors, values })
    }

    pub fn zeros(factors: Vec<AtomicMeasureSpace>) -> Result<Self> {
        let size = factors.iter().map(|f| f.len()).product();
        Self::new(factors, vec![0.0; size])
    }

    /// `(x_1 . ... . x_m)(w_1, ..., w_m) = x_1(w_1) ... x_m(w_m)`.
    pub fn odot<V: AsRef<[f64]>>(factors: &[AtomicMeasureSpace], xs: &[V]) -> Result<Self> {
        if xs.len() != factors.len() {
            return input(format!("{} vectors for {} factors", xs.len(), factors.len()));
        }
        let mut values = vec![1.0];
        for (j, (x, f)) in xs.iter().zip(factors).enumerate() {
            let x = x.as_ref();
            if x.len() != f.len() {
                return input(format!("vector {j} has {} entries, factor has {} atoms", x.len(), f.len()));
            }
            values = values.iter().flat_map(|a| x.iter().map(move |b| a * b)).collect();
        }
        Self::new(factors.to_vec(), values)
    }

    pub fn factors(&self) -> &[AtomicMeasureSpace] {
        &self.factors
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.len()).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, index: &[usize]) -> Option<f64> {
        if index.len() != self.factors.len() {
            return None;
        }
        let mut flat = 0;
        for (i, f) in index.iter().zip(&self.factors) {
            if *i >= f.len() {
                return None;
            }
            flat = flat * f.len() + i;
        }
        Some(self.values[flat])
    }

    /// The product measure space carrying the grid.
    pub fn product_space(&self) -> Result<AtomicMeasureSpace> {
        AtomicMeasureSpace::product(&self.factors)
    }

    pub fn abs(&self) -> Self {
        Self { factors: self.factors.clone(), values: self.values.iter().map(|v| v.abs()).collect() }
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self { factors: self.factors.clone(), values: self.values.iter().map(|v| t * v).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.factors != other.factors {
            return input("grids live on different factor spaces");
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Self::new(self.factors.clone(), values)
    }

    /// `sum_k lambda_k g_k` over grids on the same factors.
    pub fn combination(terms: &[(f64, TensorGrid)]) -> Result<Self> {
        let Some((_, first)) = terms.first() else {
            return input("empty combination");
        };
        let mut acc = Self::zeros(first.factors.clone())?;
        for (l, g) in terms {
            acc = acc.add(&g.scaled(*l))?;
        }
        Ok(acc)
    }
}

/// `odot` on the given factor spaces.
pub fn odot<V: AsRef<[f64]>>(factors: &[AtomicMeasureSpace], xs: &[V]) -> Result<TensorGrid> {
    TensorGrid::odot(factors, xs)
}

/// How a peeling step turns the pivot fiber `y` into the coefficients of the other modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverRule {
    /// Largest multiple of `y` under the residual; subtracts exactly.
    Peel,
    /// Smallest multiple of the pivot fiber over the residual, in one term when it exists.
    Envelope,
    /// Smallest multiple of the fiberwise maxima over the residual.
    Marginal,
    /// The pivot fiber alone, one fiber per term.
    Fiber,
}

const RULES: [CoverRule; 4] = [CoverRule::Peel, CoverRule::Envelope, CoverRule::Marginal, CoverRule::Fiber];

/// Best cover found by [`projective_norm_upper`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectiveBound {
    /// `sum_i prod_j ||x_{i,j}||` of the best cover; an upper bound on `||u||_{|pi|}`.
    pub value: f64,
    pub terms: usize,
    pub rule: CoverRule,
    /// Factor order of the best cover, innermost fiber last.
    pub mode_order: Vec<usize>,
    pub starts_tried: usize,
    /// False when `rounds` stopped the multi-start before every start was tried.
    pub complete: bool,
}

struct Cover {
    value: f64,
    terms: usize,
}

/// Residual peeling of a nonnegative array; `norms[j]` measures vectors of mode `j`.
fn cover(r: &[f64], shape: &[usize], norms: &[&LatticeSpec], rule: CoverRule, skip: usize) -> Result<Cover> {
    let Some((&d, outer)) = shape.split_last() else {
        return input("empty shape");
    };
    let (&spec, outer_norms) = norms.split_last().expect("norms match shape");
    if outer.is_empty() {
        let terms = usize::from(r.iter().any(|v| *v > 0.0));
        return Ok(Cover { value: spec.norm(r)?, terms });
    }
    let rows = r.len() / d;
    let mut r = r.to_vec();
    let mut out = Cover { value: 0.0, terms: 0 };
    let mut first = true;
    loop {
        let mut order: Vec<usize> = (0..r.len()).filter(|i| r[*i] > 0.0).collect();
        if order.is_empty() {
            return Ok(out);
        }
        order.sort_by(|a, b| r[*b].total_cmp(&r[*a]).then(a.cmp(b)));
        let pivot = if first { order[skip % order.len()] } else { order[0] };
        first = false;
        let i = pivot / d;
        let y: Vec<f64> = match rule {
            CoverRule::Marginal => (0..d).map(|b| (0..rows).map(|j| r[j * d + b]).fold(0.0, f64::max)).collect(),
            _ => r[i * d..(i + 1) * d].to_vec(),
        };
        let ratio = |j: usize, init: f64, pick: fn(f64, f64) -> f64| {
            (0..d).filter(|b| y[*b] > 0.0).map(|b| r[j * d + b] / y[b]).fold(init, pick)
        };
        let mut x = vec![0.0; rows];
        let mut one_shot = false;
        match rule {
            CoverRule::Peel => {
                for (j, xj) in x.iter_mut().enumerate() {
                    *xj = ratio(j, f64::INFINITY, f64::min);
                }
            }
            CoverRule::Fiber => x[i] = 1.0,
            CoverRule::Envelope | CoverRule::Marginal => {
                let uncovered = (0..rows).any(|j| (0..d).any(|b| y[b] == 0.0 && r[j * d + b] > 0.0));
                if uncovered {
                    for (j, xj) in x.iter_mut().enumerate() {
                        *xj = ratio(j, f64::INFINITY, f64::min);
                    }
                } else {
                    for (j, xj) in x.iter_mut().enumerate() {
                        *xj = ratio(j, 0.0, f64::max);
                    }
                    one_shot = true;
                }
            }
        }
        for v in x.iter_mut() {
            if !v.is_finite() {
                *v = 0.0;
            }
        }
        x[i] = x[i].max(if matches!(rule, CoverRule::Marginal) { 0.0 } else { 1.0 });
        let inner = cover(&x, outer, outer_norms, rule, 0)?;
        out.value += inner.value * spec.norm(&y)?;
        out.terms += inner.terms;
        if one_shot {
            return Ok(out);
        }
        for j in 0..rows {
            for b in 0..d {
                let c = &mut r[j * d + b];
                *c = if j == i && rule != CoverRule::Marginal { 0.0 } else { (*c - x[j] * y[b]).max(0.0) };
            }
        }
    }
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m > 4 {
        return (0..m).map(|s| (0..m).map(|k| (k + s) % m).collect()).collect();
    }
    let mut out = vec![vec![]];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|p: Vec<usize>| {
                (0..m).filter(|k| !p.contains(k)).map(|k| [p.clone(), vec![k]].concat()).collect::<Vec<_>>()
            })
            .collect();
    }
    out
}

fn transpose(values: &[f64], shape: &[usize], order: &[usize]) -> Vec<f64> {
    let new_shape: Vec<usize> = order.iter().map(|k| shape[*k]).collect();
    let mut strides = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * shape[k + 1];
    }
    let mut out = Vec::with_capacity(values.len());
    let mut idx = vec![0; shape.len()];
    for _ in 0..values.len() {
        out.push(values[idx.iter().zip(order).map(|(i, k)| i * strides[*k]).sum::<usize>()]);
        for k in (0..idx.len()).rev() {
            idx[k] += 1;
            if idx[k] < new_shape[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    out
}

/// Upper bound on `||u||_{|pi|}` from greedy positive rank-one covers of `|u|`.
///
/// Starts range over factor orders, cover rules and the first pivot (the k-th largest
/// cell); `rounds` caps how many first pivots are tried per order and rule.
pub fn projective_norm_upper(u: &TensorGrid, factor_specs: &[LatticeSpec], rounds: usize) -> Result<ProjectiveBound> {
    if rounds == 0 {
        return crate::error::config("rounds must be at least 1");
    }
    if factor_specs.len() != u.factors.len()
        || factor_specs.iter().zip(&u.factors).any(|(s, f)| s.space().len() != f.len())
    {
        return input("factor lattices must match the grid's factor spaces");
    }
    let modulus = u.abs();
    let shape = u.shape();
    let positive = modulus.values.iter().filter(|v| **v > 0.0).count();
    let mut best: Option<ProjectiveBound> = None;
    let mut tried = 0;
    for order in permutations(shape.len()) {
        let values = transpose(&modulus.values, &shape, &order);
        let sub_shape: Vec<usize> = order.iter().map(|k| shape[*k]).collect();
        let norms: Vec<&LatticeSpec> = order.iter().map(|k| &factor_specs[*k]).collect();
        for rule in RULES {
            for skip in 0..rounds.min(positive.max(1)) {
                tried += 1;
                let c = cover(&values, &sub_shape, &norms, rule, skip)?;
                if !c.value.is_finite() {
                    return Err(Error::Numeric("cover value is not finite".into()));
                }
                // near-ties go to the cover with fewer terms
                let better = best.as_ref().is_none_or(|b| {
                    c.value < b.value * (1.0 - 1e-12) || (c.value <= b.value * (1.0 + 1e-12) && c.terms < b.terms)
                });
                if better {
                    best = Some(ProjectiveBound {
                        value: c.value,
                        terms: c.terms,
                        rule,
                        mode_order: order.clone(),
                        starts_tried: 0,
                        complete: true,
                    });
                }
            }
        }
    }
    let mut best = best.expect("at least one start");
    best.starts_tried = tried;
    best.complete = rounds >= positive.max(1);
    Ok(best)
}

/// Tuning for [`tensor_domination_check`].
#[derive(Debug, Clone, Default)]
pub struct TensorCheckOptions {
    pub strong: StrongOptions,
}

/// Both sides of the tensor-family inequality through a superlattice `E` of the product.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorReport {
    /// `(sum_i ||T(x_i^1, ..., x_i^m)||^q)^{1/q}`.
    pub lhs: f64,
    /// Strong norm over `E` of the tensor family.
    pub strong: f64,
    /// `lhs / strong`, the empirical constant.
    pub ratio: f64,
    /// The certificate constant when supplied, otherwise `ratio`.
    pub c_est: f64,
    pub rhs: f64,
    pub holds: bool,
    /// Largest `||x_1 . ... . x_m||_E / prod_j ||x_j||` seen, when factor lattices are given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embedding_ratio: Option<f64>,
    /// Single-measure bound `||T z|| <= C ||z||_nu` at every tensor of the family.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<VerifyReport>,
}

/// `T` viewed as a linear map on the product lattice `E`.
pub fn linearize(t: &MultilinearOperator, e: &LatticeSpec) -> Result<MultilinearOperator> {
    let size: usize = t.domains().iter().map(|d| d.dim()).product();
    if e.dim() != size {
        return input(format!("E has {} atoms, the product of the domains {size}", e.dim()));
    }
    MultilinearOperator::new(vec![e.clone()], t.codomain().clone(), t.tensor().to_vec())
}

fn check_product(e: &LatticeSpec, factors: &[AtomicMeasureSpace]) -> Result<()> {
    let product = AtomicMeasureSpace::product(factors)?;
    let fits = product.len() == e.dim()
        && product.weights().iter().zip(e.space().weights()).all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()));
    if !fits {
        return input("tensor lies outside E's atom space");
    }
    Ok(())
}

/// The check on elementary tensors `x_i^1 . ... . x_i^m`.
pub fn tensor_domination_check(
    t: &MultilinearOperator,
    e: &LatticeSpec,
    tuples: &[Vec<Vec<f64>>],
    exps: ExponentTriple,
    cert: Option<&DominationCertificate>,
    opts: &TensorCheckOptions,
) -> Result<TensorReport> {
    let factors: Vec<AtomicMeasureSpace> = t.domains().iter().map(|d| d.space().clone()).collect();
    let mut grids = Vec::with_capacity(tuples.len());
    let mut embedding: Option<f64> = None;
    for tuple in tuples {
        t.check_tuple(tuple)?;
        let g = odot(&factors, tuple)?;
        let mut denom = 1.0;
        for (x, d) in tuple.iter().zip(t.domains()) {
            denom *= d.norm(x)?;
        }
        if denom > 0.0 {
            let r = e.norm(g.values())? / denom;
            embedding = Some(embedding.map_or(r, |m| m.max(r)));
        }
        grids.push(g);
    }
    let mut report = grid_domination_check(t, e, &grids, exps, cert, opts)?;
    report.embedding_ratio = embedding;
    Ok(report)
}

/// The check on arbitrary grids, e.g. finite combinations of elementary tensors.
pub fn grid_domination_check(
    t: &MultilinearOperator,
    e: &LatticeSpec,
    grids: &[TensorGrid],
    exps: ExponentTriple,
    cert: Option<&DominationCertificate>,
    opts: &TensorCheckOptions,
) -> Result<TensorReport> {
    e.require_p_convex(exps.p)?;
    let lin = linearize(t, e)?;
    for g in grids {
        check_product(e, g.factors())?;
    }
    let vectors: Vec<Vec<f64>> = grids.iter().map(|g| g.values().to_vec()).collect();
    let mut lhs_q = 0.0;
    for v in &vectors {
        lhs_q += lin.value_norm(&[v])?.powf(exps.q);
    }
    let lhs = lhs_q.powf(1.0 / exps.q);
    let fam = VectorFamily::new(vectors.clone())?;
    let primal = strong_norm_primal_with(&fam, exps, e, &opts.strong, &[])?.value;
    let dual = strong_norm_dual_with(&fam, exps, e, &opts.strong)?.value;
    let mut strong = primal.max(dual);
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / strong };
    let (c_est, certificate) = match cert {
        None => (ratio, None),
        Some(c) => {
            if c.exponents().arity() != 1 || c.exponents().p()[0] != exps.p || c.exponents().q()[0] != exps.q {
                return crate::error::config("certificate exponents differ from the check's (p, q)");
            }
            for h in c.measures()[0].support() {
                let s: f64 = vectors
                    .iter()
                    .map(|v| {
                        let pair: f64 = v
                            .iter()
                            .zip(h.density())
                            .zip(e.space().weights())
                            .map(|((a, d), w)| a.abs().powf(exps.p) * d * w)
                            .sum();
                        pair.powf(exps.q / exps.p)
                    })
                    .sum();
                strong = strong.max(s.powf(1.0 / exps.q));
            }
            let probes: Vec<Vec<Vec<f64>>> = vectors.iter().map(|v| vec![v.clone()]).collect();
            (c.constant(), Some(verify_certificate(c, &lin, &probes)?))
        }
    };
    let rhs = c_est * strong;
    let holds = le_slack(lhs, rhs, 1e-9) && certificate.as_ref().is_none_or(|v| v.violations == 0);
    Ok(TensorReport { lhs, strong, ratio, c_est, rhs, holds, embedding_ratio: None, certificate })
}
