//! Maximization of convex functions over the nonnegative unit ball of a lattice.
//!
//! Polytope balls of small dimension are handled by enumerating extreme points.
//! Otherwise a conditional-gradient ascent runs from several starts: at `h` the
//! next iterate maximizes `<grad F(h), .>` over the ball, which never decreases a
//! convex `F`. Reported values are attained at feasible witnesses and so are
//! lower bounds on the true supremum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dual::DualFunctional;
use super::spec::{Closed, LatticeSpec};
use super::support::{closed_norm_of, linear_max, numeric_gradient};
use crate::error::{numeric, Error, Result};

/// Dimension cap for extreme-point enumeration.
pub const VERTEX_DIM_CAP: usize = 16;

/// Largest simplex grid the sweep will evaluate.
pub const GRID_POINT_CAP: usize = 250_000;

/// A real function on nonnegative densities.
pub trait Objective {
    fn value(&self, h: &[f64]) -> f64;

    /// Euclidean gradient; central differences unless overridden.
    fn gradient(&self, h: &[f64]) -> Vec<f64> {
        numeric_gradient(&|x: &[f64]| self.value(x), h)
    }
}

/// Adapts a closure into an [`Objective`] with numerical gradients.
pub struct FnObjective<F>(pub F);

impl<F: Fn(&[f64]) -> f64> Objective for FnObjective<F> {
    fn value(&self, h: &[f64]) -> f64 {
        (self.0)(h)
    }
}

/// `h -> sum_k |<a_k, h>|^e` with pairing against the atom masses, `e >= 1`.
#[derive(Debug, Clone)]
pub struct PowerSum {
    /// Rows premultiplied by the atom masses, so `<a_k, h>` is a plain dot product.
    rows: Vec<Vec<f64>>,
    exponent: f64,
}

impl PowerSum {
    pub fn new(mu: &[f64], rows: &[Vec<f64>], exponent: f64) -> Self {
        let rows = rows
            .iter()
            .map(|r| r.iter().zip(mu).map(|(a, m)| a * m).collect())
            .collect();
        Self { rows, exponent }
    }

    fn pairs(&self, h: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().zip(h).map(|(a, b)| a * b).sum()).collect()
    }
}

impl Objective for PowerSum {
    fn value(&self, h: &[f64]) -> f64 {
        self.pairs(h).iter().map(|c| c.abs().powf(self.exponent)).sum()
    }

    fn gradient(&self, h: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; h.len()];
        for (c, row) in self.pairs(h).iter().zip(&self.rows) {
            let coef = self.exponent * c.abs().powf(self.exponent - 1.0) * c.signum();
            if coef != 0.0 {
                for (gi, a) in g.iter_mut().zip(row) {
                    *gi += coef * a;
                }
            }
        }
        g
    }
}

/// Tuning for [`support_maximize_with`].
#[derive(Debug, Clone)]
pub struct MaximizeOptions {
    pub starts: usize,
    pub seed: u64,
    /// Extra starting densities (rescaled onto the unit sphere before use).
    pub warm_starts: Vec<Vec<f64>>,
    /// Resolution of an exhaustive sweep over sphere directions; skipped when the grid would exceed [`GRID_POINT_CAP`] points.
    pub grid_budget: Option<usize>,
    /// A value known to dominate the supremum; exceeding it is reported as a numeric error.
    pub upper_bound: Option<f64>,
    pub max_iter: usize,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        Self { starts: 8, seed: 0, warm_starts: Vec::new(), grid_budget: None, upper_bound: None, max_iter: 500 }
    }
}

/// Result of a support maximization.
#[derive(Debug, Clone)]
pub struct SupportMax {
    pub value: f64,
    pub witness: DualFunctional,
    /// True when every extreme point was enumerated; otherwise `value` is a lower bound.
    pub exact: bool,
}

pub fn support_maximize(ball: &LatticeSpec, objective: &dyn Objective, starts: usize, seed: u64) -> Result<SupportMax> {
    support_maximize_with(ball, objective, &MaximizeOptions { starts, seed, ..Default::default() })
}

pub fn support_maximize_with(ball: &LatticeSpec, objective: &dyn Objective, opts: &MaximizeOptions) -> Result<SupportMax> {
    let result = if let Some(vertices) = extreme_points(ball)? {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for v in vertices {
            let val = checked(objective.value(&v))?;
            if best.as_ref().map_or(true, |(b, _)| val > *b) {
                best = Some((val, v));
            }
        }
        let (value, h) = best.expect("a polytope ball has at least one vertex");
        finish(ball, objective, value, h, true)?
    } else {
        ascend(ball, objective, opts)?
    };
    if let Some(ub) = opts.upper_bound {
        if result.value > ub * (1.0 + 1e-12) + 1e-300 {
            return numeric(format!("maximized value {} exceeds the known bound {ub}", result.value));
        }
    }
    Ok(result)
}

fn checked(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numeric(format!("objective evaluated to {v} at a feasible point")))
    }
}

fn finish(ball: &LatticeSpec, objective: &dyn Objective, value: f64, h: Vec<f64>, exact: bool) -> Result<SupportMax> {
    let norm = ball.norm(&h)?;
    if norm > 1.0 {
        // rounding in the closed-form maximizers can leave the witness a few ulps outside
        let h: Vec<f64> = h.iter().map(|v| v / norm).collect();
        let value = checked(objective.value(&h))?;
        return Ok(SupportMax { value, witness: DualFunctional::from_parts(h, 1.0), exact });
    }
    Ok(SupportMax { value, witness: DualFunctional::from_parts(h, norm), exact })
}

/// Extreme points of the nonnegative unit ball, when it is a polytope of small dimension.
fn extreme_points(ball: &LatticeSpec) -> Result<Option<Vec<Vec<f64>>>> {
    let n = ball.dim();
    if n == 1 {
        let e = ball.norm(&[1.0])?;
        if e == 0.0 {
            return numeric("one-atom ball with zero norm");
        }
        return Ok(Some(vec![vec![1.0 / e]]));
    }
    if n > VERTEX_DIM_CAP {
        return Ok(None);
    }
    let Some(c) = ball.closed() else { return Ok(None) };
    let w = ball.space().weights();
    let simplex = || (0..n).map(|i| unit(n, i, 1.0 / w[i])).collect::<Vec<_>>();
    let cube = |atoms: &[usize]| -> Vec<Vec<f64>> {
        (1u32..(1 << atoms.len()))
            .map(|mask| {
                let mut h = vec![0.0; n];
                for (b, &i) in atoms.iter().enumerate() {
                    if mask & (1 << b) != 0 {
                        h[i] = 1.0;
                    }
                }
                h
            })
            .collect()
    };
    let all: Vec<usize> = (0..n).collect();
    let v = match c {
        Closed::Ls(s) if s == 1.0 => simplex(),
        Closed::Ls(s) if s.is_infinite() => cube(&all),
        Closed::Mixed(a, b) if a == 1.0 && b == 1.0 => simplex(),
        Closed::Mixed(a, b) if a.is_infinite() && b.is_infinite() => cube(&all),
        Closed::Mixed(a, b) if a.is_infinite() && b == 1.0 => {
            let blocks = ball.space().blocks().expect("mixed space has blocks");
            blocks.iter().flat_map(|blk| cube(blk)).collect()
        }
        Closed::Mixed(a, b) if a == 1.0 && b.is_infinite() => {
            let blocks = ball.space().blocks().expect("mixed space has blocks");
            let mut acc = vec![vec![0.0; n]];
            for blk in blocks {
                let mut next = Vec::with_capacity(acc.len() * (blk.len() + 1));
                for h in &acc {
                    next.push(h.clone());
                    for &i in blk {
                        let mut g = h.clone();
                        g[i] = 1.0 / w[i];
                        next.push(g);
                    }
                }
                acc = next;
            }
            acc.into_iter().filter(|h| h.iter().any(|v| *v > 0.0)).collect()
        }
        _ => return Ok(None),
    };
    debug_assert!(v.iter().all(|h| (closed_norm_of(ball, c, h) - 1.0).abs() < 1e-12));
    Ok(Some(v))
}

fn unit(n: usize, i: usize, v: f64) -> Vec<f64> {
    let mut h = vec![0.0; n];
    h[i] = v;
    h
}

fn to_sphere(ball: &LatticeSpec, h: &[f64]) -> Result<Option<Vec<f64>>> {
    let h: Vec<f64> = h.iter().map(|v| v.max(0.0)).collect();
    let n = ball.norm(&h)?;
    if n == 0.0 || !n.is_finite() {
        return Ok(None);
    }
    Ok(Some(h.iter().map(|v| v / n).collect()))
}

fn ascend(ball: &LatticeSpec, objective: &dyn Objective, opts: &MaximizeOptions) -> Result<SupportMax> {
    let n = ball.dim();
    let mu = ball.space().weights();
    let mut starts: Vec<Vec<f64>> = vec![vec![1.0; n]];
    starts.extend(opts.warm_starts.iter().cloned());
    if let Some(budget) = opts.grid_budget.filter(|b| grid_size(n, *b) <= GRID_POINT_CAP) {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for u in simplex_grid(n, budget) {
            if let Some(h) = to_sphere(ball, &u)? {
                let val = checked(objective.value(&h))?;
                if best.as_ref().map_or(true, |(b, _)| val > *b) {
                    best = Some((val, h));
                }
            }
        }
        if let Some((_, h)) = best {
            starts.push(h);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.starts {
        let sharpen: f64 = rng.gen_range(1.0..6.0);
        starts.push((0..n).map(|_| rng.gen_range(0.0_f64..1.0).powf(sharpen)).collect());
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in starts {
        let Some(mut h) = to_sphere(ball, &start)? else { continue };
        let mut f = checked(objective.value(&h))?;
        for _ in 0..opts.max_iter {
            let grad = objective.gradient(&h);
            let g: Vec<f64> = grad.iter().zip(mu).map(|(d, m)| (d / m).max(0.0)).collect();
            if g.iter().all(|v| *v == 0.0) {
                break;
            }
            let step = linear_max(ball, &g)?;
            let fnext = checked(objective.value(&step.argmax))?;
            if fnext <= f * (1.0 + 1e-15) {
                if fnext > f {
                    h = step.argmax;
                    f = fnext;
                }
                break;
            }
            h = step.argmax;
            f = fnext;
        }
        if best.as_ref().map_or(true, |(b, _)| f > *b) {
            best = Some((f, h));
        }
    }
    let (value, h) = best.ok_or_else(|| Error::Numeric("no usable starting point".into()))?;
    finish(ball, objective, value, h, false)
}

/// Number of points in `simplex_grid(n, budget)`, saturating.
pub(crate) fn grid_size(n: usize, budget: usize) -> usize {
    // C(budget + n - 1, n - 1)
    let mut c: u128 = 1;
    for i in 1..n as u128 {
        c = c * (budget as u128 + i) / i;
        if c > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    c as usize
}

/// All nonnegative integer compositions of `budget` into `n` parts, scaled by `1/budget`.
pub(crate) fn simplex_grid(n: usize, budget: usize) -> Vec<Vec<f64>> {
    fn rec(n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() + 1 == n {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(n, left - k, cur, out);
            cur.pop();
        }
    }
    let mut raw = Vec::new();
    rec(n, budget, &mut Vec::with_capacity(n), &mut raw);
    let b = budget.max(1) as f64;
    raw.into_iter().map(|c| c.into_iter().map(|k| k as f64 / b).collect()).collect()
}
