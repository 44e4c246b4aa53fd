//! Linear maximization over the nonnegative unit ball of a lattice norm.
//!
//! For the closed-form kinds the maximizer is explicit (Hölder equality). For
//! everything else `sup { <f, g> : ||f|| <= 1, f >= 0 }` is rewritten as
//! `1 / min { ||f(u)|| : u in simplex }` with `f_i(u) = u_i / (mu_i g_i)`,
//! a convex minimization solved by projected gradient.

use super::exponent::conjugate;
use super::spec::{closed_norm, ls_norm, Closed, LatticeKind, LatticeSpec};
use crate::error::{numeric, Result};

/// Value of a linear maximization and the point attaining it.
#[derive(Debug, Clone)]
pub(crate) struct LinearMax {
    pub value: f64,
    pub argmax: Vec<f64>,
}

/// `sup { <f, g> : ||f||_spec <= 1, f >= 0 }` for nonnegative `g`.
pub(crate) fn linear_max(spec: &LatticeSpec, g: &[f64]) -> Result<LinearMax> {
    match spec.closed() {
        Some(c) => Ok(closed_linear_max(c, spec, g)),
        None => linear_max_numeric(spec, g),
    }
}

pub(crate) fn closed_linear_max(c: Closed, spec: &LatticeSpec, g: &[f64]) -> LinearMax {
    let w = spec.space().weights();
    match c {
        Closed::Ls(s) => {
            let (value, argmax) = ls_argmax(w, g, s);
            LinearMax { value, argmax }
        }
        Closed::Mixed(a, b) => {
            let blocks = spec.space().blocks().expect("mixed_block space has blocks");
            let inner: Vec<(f64, Vec<f64>)> = blocks
                .iter()
                .map(|block| {
                    let wb: Vec<f64> = block.iter().map(|&i| w[i]).collect();
                    let gb: Vec<f64> = block.iter().map(|&i| g[i]).collect();
                    ls_argmax(&wb, &gb, a)
                })
                .collect();
            let outer_g: Vec<f64> = inner.iter().map(|(v, _)| *v).collect();
            let (value, t) = ls_argmax(&vec![1.0; outer_g.len()], &outer_g, b);
            let mut argmax = vec![0.0; g.len()];
            for ((block, (_, u)), tk) in blocks.iter().zip(&inner).zip(&t) {
                for (&i, ui) in block.iter().zip(u) {
                    argmax[i] = tk * ui;
                }
            }
            LinearMax { value, argmax }
        }
    }
}

/// Hölder-equality maximizer of `sum_i w_i g_i h_i` over the nonnegative unit ball of weighted `l^s`.
/// Atoms with `g_i = 0` get `h_i = 0`.
pub(crate) fn ls_argmax(w: &[f64], g: &[f64], s: f64) -> (f64, Vec<f64>) {
    let n = g.len();
    if g.iter().all(|v| *v <= 0.0) {
        return (0.0, vec![0.0; n]);
    }
    if s == 1.0 {
        let (i, gi) = g
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
        let mut h = vec![0.0; n];
        h[i] = 1.0 / w[i];
        return (gi, h);
    }
    if s.is_infinite() {
        let h: Vec<f64> = g.iter().map(|v| if *v > 0.0 { 1.0 } else { 0.0 }).collect();
        let value = w.iter().zip(g).zip(&h).map(|((w, g), h)| w * g * h).sum();
        return (value, h);
    }
    let sc = conjugate(s);
    let value = ls_norm(w, g, sc);
    let h = g.iter().map(|v| (v.max(0.0) / value).powf(sc - 1.0)).collect();
    (value, h)
}

/// Numerical linear maximization, usable for any lattice norm.
pub(crate) fn linear_max_numeric(spec: &LatticeSpec, g: &[f64]) -> Result<LinearMax> {
    let scale = g.iter().fold(0.0_f64, |a, v| a.max(*v));
    if scale > 0.0 && scale != 1.0 {
        let unit: Vec<f64> = g.iter().map(|v| v / scale).collect();
        let r = linear_max_numeric(spec, &unit)?;
        return Ok(LinearMax { value: r.value * scale, argmax: r.argmax });
    }
    let mu = spec.space().weights();
    let active: Vec<usize> = (0..g.len()).filter(|&i| g[i] > 0.0).collect();
    let n = g.len();
    if active.is_empty() {
        return Ok(LinearMax { value: 0.0, argmax: vec![0.0; n] });
    }
    let lift = |u: &[f64]| -> Vec<f64> {
        let mut f = vec![0.0; n];
        for (k, &i) in active.iter().enumerate() {
            f[i] = u[k].max(0.0) / (mu[i] * g[i]);
        }
        f
    };
    for (k, &i) in active.iter().enumerate() {
        let mut u = vec![0.0; active.len()];
        u[k] = 1.0;
        if spec.norm(&lift(&u))? == 0.0 {
            return numeric(format!("norm vanishes on atom {i}; the dual norm is unbounded"));
        }
    }
    let objective = |u: &[f64]| spec.norm(&lift(u)).unwrap_or(f64::INFINITY);
    let gradient = |u: &[f64]| -> Vec<f64> {
        let f = lift(u);
        let df = match spec.kind() {
            LatticeKind::SMeasure { p, q, measure } => s_measure_gradient(measure, mu, &f, *p, *q),
            _ => numeric_gradient(&|x: &[f64]| spec.norm(x).unwrap_or(f64::INFINITY), &f),
        };
        active.iter().map(|&i| df[i] / (mu[i] * g[i])).collect()
    };
    let m = active.len();
    let start = vec![1.0 / m as f64; m];
    let (u, best) = minimize_on_simplex(&objective, &gradient, start, 20_000);
    if !(best.is_finite() && best > 0.0) {
        return numeric(format!("simplex minimization returned {best}"));
    }
    let argmax: Vec<f64> = lift(&u).iter().map(|v| v / best).collect();
    Ok(LinearMax { value: 1.0 / best, argmax })
}

fn s_measure_gradient(
    measure: &super::dual::DiscreteDualMeasure,
    mu: &[f64],
    f: &[f64],
    p: f64,
    q: f64,
) -> Vec<f64> {
    let fp: Vec<f64> = f.iter().map(|v| v.abs().powf(p)).collect();
    let pairs: Vec<f64> = measure
        .support()
        .iter()
        .map(|h| mu.iter().zip(&fp).zip(h.density()).map(|((m, a), b)| m * a * b).sum())
        .collect();
    let total: f64 = measure.weights().iter().zip(&pairs).map(|(w, l)| w * l.powf(q / p)).sum();
    let norm = total.powf(1.0 / q);
    if norm == 0.0 {
        return vec![0.0; f.len()];
    }
    let scale = norm.powf(1.0 - q);
    (0..f.len())
        .map(|i| {
            let fi = if p == 1.0 { 1.0 } else { f[i].abs().powf(p - 1.0) };
            let s: f64 = measure
                .weights()
                .iter()
                .zip(&pairs)
                .zip(measure.support())
                .map(|((w, l), h)| if *l > 0.0 { w * l.powf(q / p - 1.0) * h.density()[i] } else { 0.0 })
                .sum();
            scale * s * mu[i] * fi
        })
        .collect()
}

/// Central differences, falling back to forward differences next to the orthant boundary.
pub(crate) fn numeric_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut x = x.to_vec();
    let mut out = vec![0.0; x.len()];
    for i in 0..x.len() {
        let xi = x[i];
        let h = 1e-6 * xi.abs().max(1e-3);
        if xi - h >= 0.0 {
            x[i] = xi + h;
            let up = f(&x);
            x[i] = xi - h;
            let down = f(&x);
            out[i] = (up - down) / (2.0 * h);
        } else {
            let base = f(&x);
            x[i] = xi + h;
            out[i] = (f(&x) - base) / h;
        }
        x[i] = xi;
    }
    out
}

/// Euclidean projection onto the probability simplex.
pub(crate) fn project_simplex(v: &[f64]) -> Vec<f64> {
    // the projection commutes with constant shifts; shifting by the max keeps huge steps exact
    let top = v.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
    let v: Vec<f64> = v.iter().map(|x| x - top).collect();
    let mut sorted = v.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, s) in sorted.iter().enumerate() {
        cum += s;
        let t = (cum - 1.0) / (k + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Projected gradient with Barzilai–Borwein steps and Armijo backtracking on the simplex.
pub(crate) fn minimize_on_simplex(
    f: &dyn Fn(&[f64]) -> f64,
    grad: &dyn Fn(&[f64]) -> Vec<f64>,
    start: Vec<f64>,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let mut x = project_simplex(&start);
    let mut fx = f(&x);
    let mut gx = grad(&x);
    let ginf = gx.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let mut alpha = if ginf > 0.0 { 1.0 / ginf } else { 1.0 };
    let mut stalled = 0;
    for _ in 0..max_iter {
        let trial: Vec<f64> = x.iter().zip(&gx).map(|(a, g)| a - alpha * g).collect();
        let d: Vec<f64> = project_simplex(&trial).iter().zip(&x).map(|(p, a)| p - a).collect();
        let dinf = d.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if dinf < 1e-16 {
            break;
        }
        let slope: f64 = gx.iter().zip(&d).map(|(g, d)| g * d).sum();
        let mut lambda = 1.0;
        let (xn, fxn) = loop {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, d)| (a + lambda * d).max(0.0)).collect();
            let fxn = f(&xn);
            if fxn <= fx + 1e-4 * lambda * slope || lambda < 1e-12 {
                break (xn, fxn);
            }
            lambda *= 0.5;
        };
        if !(fxn <= fx) {
            break;
        }
        let gn = grad(&xn);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&gx).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ss: f64 = s.iter().map(|a| a * a).sum();
        alpha = if sy > 0.0 { (ss / sy).clamp(1e-14, 1e14) } else { alpha * 4.0 };
        if fx - fxn <= 1e-16 * fx.abs() {
            stalled += 1;
            if stalled > 30 {
                x = xn;
                fx = fxn;
                break;
            }
        } else {
            stalled = 0;
        }
        x = xn;
        fx = fxn;
        gx = gn;
    }
    (x, fx)
}

/// Evaluates a closed-form norm; exposed for the vertex enumeration in `maximize`.
pub(crate) fn closed_norm_of(spec: &LatticeSpec, c: Closed, f: &[f64]) -> f64 {
    closed_norm(c, spec.space(), f)
}
