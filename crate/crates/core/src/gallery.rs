//! Worked examples checked end to end: a block space, identities on `L^p`, and dyadic integrals.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::dominated_linear::{inf_quotient_norm, pairing_check, LinearExponents, PairingFamily};
use crate::domination::{f_seminorm, MultilinearOperator};
use crate::error::{config, Result};
use crate::lattice::{AtomicMeasureSpace, DiscreteDualMeasure, DualFunctional, LatticeKind, LatticeSpec};
use crate::vector_norms::{le_slack, strong_norm_primal_with, ExponentTriple, StrongOptions, VectorFamily};

/// One named inequality or identity tested over a number of trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub formula: String,
    pub trials: usize,
    pub violations: usize,
    /// Largest `lhs / rhs` (inequalities) or absolute error (identities) seen.
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl Check {
    pub fn new(name: &str, formula: &str, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            formula: formula.into(),
            trials: 0,
            violations: 0,
            worst: 0.0,
            tolerance,
            passed: true,
            diagnostic: None,
        }
    }

    /// Records `lhs <= rhs` up to the relative slack.
    pub fn record_le(&mut self, lhs: f64, rhs: f64, what: impl FnOnce() -> String) {
        self.trials += 1;
        if rhs > 0.0 {
            self.worst = self.worst.max(lhs / rhs);
        }
        if !le_slack(lhs, rhs, self.tolerance) {
            self.fail(format!("{} > {}: {}", lhs, rhs, what()));
        }
    }

    /// Records `|a - b| <= tolerance`.
    pub fn record_eq(&mut self, a: f64, b: f64, what: impl FnOnce() -> String) {
        self.trials += 1;
        let err = (a - b).abs();
        self.worst = self.worst.max(err);
        if !(err <= self.tolerance) {
            self.fail(format!("{a} != {b}: {}", what()));
        }
    }

    /// Records a boolean outcome.
    pub fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.trials += 1;
        if !ok {
            self.fail(what());
        }
    }

    pub fn fail(&mut self, msg: String) {
        self.violations += 1;
        self.passed = false;
        if self.diagnostic.is_none() {
            self.diagnostic = Some(msg);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GalleryReport {
    pub scenario: String,
    pub inputs: Value,
    pub values: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
}

impl GalleryReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    // sparse entries keep single-block and zero cases in the sample
    (0..n).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(-1.0..1.0) }).collect()
}

fn random_family(rng: &mut ChaCha8Rng, n_max: usize, dim: usize) -> Vec<Vec<f64>> {
    let n = rng.gen_range(1..=n_max);
    (0..n).map(|_| random_vec(rng, dim)).collect()
}

/// The block space: `K` blocks of unit mass, `||f|| = (sum_k (int_{A_k} |f|^p)^{q/p})^{1/q}`.
pub struct BlockSpace {
    pub y: LatticeSpec,
    /// `R f = (2^{-k/q} int_{A_k} f)_k` into `l^q(K)`.
    pub r: MultilinearOperator,
    /// `sum_{k <= K} 2^{-k} delta_{chi_{A_k}}`, with the remaining `2^{-K}` on the zero functional.
    pub nu: DiscreteDualMeasure,
    pub p: f64,
    pub q: f64,
}

impl BlockSpace {
    pub fn new(k: usize, atoms_per_block: usize, p: f64, q: f64) -> Result<Self> {
        if k < 2 || atoms_per_block == 0 {
            return config("the block space needs K >= 2 blocks of at least one atom");
        }
        if !(1.0 < p && p < q && q.is_finite()) {
            return config(format!("the block space needs 1 < p < q < inf, got p = {p}, q = {q}"));
        }
        let space = AtomicMeasureSpace::uniform_blocks(k, atoms_per_block, 1.0 / atoms_per_block as f64)?;
        let y = LatticeSpec::mixed_block(space.clone(), p, q)?;
        let lq = LatticeSpec::ls(k, q)?;
        let matrix: Vec<Vec<f64>> = (0..k)
            .map(|b| {
                let c = 2f64.powf(-((b + 1) as f64) / q);
                (0..space.len()).map(|a| if a / atoms_per_block == b { c * space.weights()[a] } else { 0.0 }).collect()
            })
            .collect();
        let r = MultilinearOperator::linear(y.clone(), lq, &matrix)?;
        let ball = y.concavified_dual(p)?;
        let mut support = Vec::with_capacity(k + 1);
        let mut weights = Vec::with_capacity(k + 1);
        for b in 0..k {
            support.push(DualFunctional::new(block_indicator(&space, atoms_per_block, b), &ball)?);
            weights.push(2f64.powi(-(b as i32 + 1)));
        }
        support.push(DualFunctional::new(vec![0.0; space.len()], &ball)?);
        weights.push(2f64.powi(-(k as i32)));
        let nu = DiscreteDualMeasure::new(&space, support, weights)?;
        Ok(Self { y, r, nu, p, q })
    }

    pub fn blocks(&self) -> usize {
        self.r.codomain().dim()
    }

    /// `(sum_k 2^{-k} (int_{A_k} |f|^p)^{q/p})^{1/q}`.
    pub fn seminorm_closed_form(&self, f: &[f64]) -> f64 {
        let space = self.y.space();
        let blocks = space.blocks().expect("block space");
        let s: f64 = blocks
            .iter()
            .enumerate()
            .map(|(k, block)| {
                let int: f64 = block.iter().map(|&a| space.weights()[a] * f[a].abs().powf(self.p)).sum();
                2f64.powi(-(k as i32 + 1)) * int.powf(self.q / self.p)
            })
            .sum();
        s.powf(1.0 / self.q)
    }
}

fn block_indicator(space: &AtomicMeasureSpace, per: usize, b: usize) -> Vec<f64> {
    (0..space.len()).map(|a| if a / per == b { 1.0 } else { 0.0 }).collect()
}

pub fn gallery_block_space(
    k: usize,
    atoms_per_block: usize,
    p: f64,
    q: f64,
    trials: usize,
    seed: u64,
) -> Result<GalleryReport> {
    let bs = BlockSpace::new(k, atoms_per_block, p, q)?;
    let space = bs.y.space().clone();
    let dim = space.len();
    let yp = bs.y.concavified(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = BTreeMap::new();

    let mut unit = Check::new("indicator_dual_norm", "||chi_{A_k}||_{(Y_p)'} = 1", 1e-9);
    let mut unit_numeric = Check::new("indicator_dual_norm_numeric", "||chi_{A_k}||_{(Y_p)'} = 1 (numerical support)", 1e-6);
    for b in 0..k {
        let chi = block_indicator(&space, atoms_per_block, b);
        unit.record_eq(yp.kothe_dual_norm(&chi)?, 1.0, || format!("block {}", b + 1));
        unit_numeric.record_eq(yp.kothe_dual_norm_numeric(&chi)?, 1.0, || format!("block {}", b + 1));
    }

    let ones = vec![1.0; dim];
    values.insert("norm_Y_of_one".into(), bs.y.norm(&ones)?);
    values.insert("norm_Rf_of_one".into(), bs.r.value_norm(&[&ones])?);
    values.insert("truncated_mass".into(), 1.0 - 2f64.powi(-(k as i32)));

    let mut bounded = Check::new("R_bounded", "||R f||_{l^q} <= ||f||_Y", 1e-9);
    let mut closed = Check::new("seminorm_closed_form", "||f||_{p,q,nu} = (sum_k 2^{-k} (int_{A_k} |f|^p)^{q/p})^{1/q}", 1e-12);
    let mut extension = Check::new("R_on_S_space", "||R f||_{l^q} <= ||f||_{p,q,nu} <= ||f||_Y", 1e-9);
    for i in 0..trials {
        let f = random_vec(&mut rng, dim);
        let rf = bs.r.value_norm(&[&f])?;
        let fy = bs.y.norm(&f)?;
        let generic = f_seminorm(&f, p, q, &bs.nu)?;
        bounded.record_le(rf, fy, || format!("trial {i}"));
        closed.record_eq(generic, bs.seminorm_closed_form(&f), || format!("trial {i}"));
        extension.record_le(rf, generic, || format!("trial {i}"));
        extension.record_le(generic, fy, || format!("trial {i}"));
    }

    // sum_i ||R f_i||^q <= int sum_i <|f_i|^p, y*>^{q/p} dnu <= (1 - 2^{-K}) sup_{A_k} ... <= strong^q
    let mut chain = Check::new(
        "strong_concavity_chain",
        "sum_i ||R f_i||^q <= int sum_i <|f_i|^p, y*>^{q/p} dnu <= sup_{beta in B_r} ||(sum_i |beta_i f_i|^p)^{1/p}||_Y^q",
        1e-9,
    );
    let e = ExponentTriple::new(p, q)?;
    let opts = StrongOptions { seed, ..Default::default() };
    let fam_trials = (trials / 10).max(1);
    for i in 0..fam_trials {
        let fam = random_family(&mut rng, 3, dim);
        let lhs: f64 = fam.iter().map(|f| bs.r.value_norm(&[f]).map(|v| v.powf(q))).sum::<Result<f64>>()?;
        let mid: f64 = fam.iter().map(|f| f_seminorm(f, p, q, &bs.nu).map(|v| v.powf(q))).sum::<Result<f64>>()?;
        let atom_max = bs
            .nu
            .support()
            .iter()
            .map(|h| {
                fam.iter()
                    .map(|f| {
                        let pair: f64 = (0..dim).map(|a| space.weights()[a] * f[a].abs().powf(p) * h.density()[a]).sum();
                        pair.powf(q / p)
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        let vf = VectorFamily::new(fam.clone())?;
        let strong = strong_norm_primal_with(&vf, e, &bs.y, &opts, &[])?.value.powf(q).max(atom_max);
        chain.record_le(lhs, mid, || format!("family {i}: first step"));
        chain.record_le(mid, (1.0 - 2f64.powi(-(k as i32))) * atom_max, || format!("family {i}: measure step"));
        chain.record_le(atom_max, strong, || format!("family {i}: support step"));
    }

    Ok(GalleryReport {
        scenario: "block_space".into(),
        inputs: json!({"K": k, "atoms_per_block": atoms_per_block, "p": p, "q": q, "trials": trials, "seed": seed}),
        values,
        checks: vec![unit, unit_numeric, bounded, closed, extension, chain],
    })
}

/// `alpha_k = ||x_k||^{q/r} / (sum_k ||x_k||^q)^{1/r}`, all ones when `r = inf`.
pub fn identity_witness(norms: &[f64], q: f64, r: f64) -> Vec<f64> {
    if r.is_infinite() {
        return vec![1.0; norms.len()];
    }
    let total: f64 = norms.iter().map(|v| v.powf(q)).sum();
    if total == 0.0 {
        return vec![0.0; norms.len()];
    }
    norms.iter().map(|v| v.powf(q / r) / total.powf(1.0 / r)).collect()
}

pub fn gallery_identity_concave(
    x: &LatticeSpec,
    p: f64,
    q: f64,
    n_max: usize,
    trials: usize,
    seed: u64,
) -> Result<GalleryReport> {
    match x.kind() {
        LatticeKind::WeightedLs { s } if *s == p => {}
        _ => return config("the identity example needs X = WeightedLs with s = p"),
    }
    let e = ExponentTriple::new(p, q)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let opts = StrongOptions { seed, ..Default::default() };
    let mut strong_check = Check::new("identity_strongly_concave", "(sum_k ||x_k||^q)^{1/q} <= sup_{beta in B_r} ||(sum_k |beta_k x_k|^p)^{1/p}||", 1e-9);
    let mut witness_check = Check::new(
        "explicit_witness",
        "(sum_k ||x_k||^q)^{1/q} <= ||(sum_k |alpha_k x_k|^p)^{1/p}||, alpha_k = ||x_k||^{q/r} / (sum ||x_k||^q)^{1/r}",
        1e-9,
    );
    let mut witness_in_ball = Check::new("witness_in_ball", "sum_k alpha_k^r = 1", 1e-12);
    let mut worst_gap: f64 = 0.0;
    for i in 0..trials {
        let fam = random_family(&mut rng, n_max.max(1), x.dim());
        let norms: Vec<f64> = fam.iter().map(|v| x.norm(v)).collect::<Result<_>>()?;
        let lhs = norms.iter().map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q);
        let alpha = identity_witness(&norms, q, e.r);
        let scaled: Vec<Vec<f64>> = fam.iter().zip(&alpha).map(|(v, a)| v.iter().map(|c| c * a).collect()).collect();
        let pointwise: Vec<f64> =
            (0..x.dim()).map(|a| scaled.iter().map(|v| v[a].abs().powf(p)).sum::<f64>().powf(1.0 / p)).collect();
        let witness = x.norm(&pointwise)?;
        let strong = strong_norm_primal_with(&VectorFamily::new(fam.clone())?, e, x, &opts, &[])?.value;
        witness_check.record_le(lhs, witness, || format!("family {i}: {fam:?}"));
        strong_check.record_le(lhs, strong.max(witness), || format!("family {i}: {fam:?}"));
        if lhs > 0.0 && e.r.is_finite() {
            witness_in_ball.record_eq(alpha.iter().map(|a| a.powf(e.r)).sum(), 1.0, || format!("family {i}"));
        }
        worst_gap = worst_gap.max(lhs - strong);
    }
    let mut values = BTreeMap::new();
    values.insert("constant".into(), 1.0);
    values.insert("largest_optimizer_shortfall".into(), worst_gap.max(0.0));
    Ok(GalleryReport {
        scenario: "identity_concave".into(),
        inputs: json!({"X": x, "p": p, "q": q, "n_max": n_max, "trials": trials, "seed": seed}),
        values,
        checks: vec![strong_check, witness_check, witness_in_ball],
    })
}

/// `T x = (int_{A_k} x)_k` from `L^1` on `2^depth` dyadic atoms into `l^inf(depth)`,
/// with `A_k` the first `2^{depth - k + 1}` atoms.
pub fn integral_evaluation_operator(depth: usize) -> Result<MultilinearOperator> {
    if !(1..=20).contains(&depth) {
        return config("depth must lie in 1..=20");
    }
    let n = 1usize << depth;
    let space = AtomicMeasureSpace::uniform(n, 1.0 / n as f64)?;
    let x = LatticeSpec::weighted_ls(space.clone(), 1.0)?;
    let y = LatticeSpec::ls(depth, f64::INFINITY)?;
    let matrix: Vec<Vec<f64>> = (0..depth)
        .map(|k| {
            let len = 1usize << (depth - k);
            (0..n).map(|a| if a < len { space.weights()[a] } else { 0.0 }).collect()
        })
        .collect();
    MultilinearOperator::linear(x, y, &matrix)
}

pub fn gallery_integral_evaluation(depth: usize, n_max: usize, trials: usize, seed: u64) -> Result<GalleryReport> {
    let t = integral_evaluation_operator(depth)?;
    let x = t.domains()[0].clone();
    let dim = x.dim();
    let exps = LinearExponents::new(1.0, 2.0, 1.0)?;
    let (p2c, r2, q2) = (f64::INFINITY, 2.0, 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = BTreeMap::new();

    let chi = vec![1.0; dim];
    let tchi = t.apply(&[&chi])?;
    values.insert("norm_T_chi".into(), t.codomain().norm(&tchi)?);
    values.insert("norm_chi_L1".into(), x.norm(&chi)?);
    let doubleton = VectorFamily::new(vec![chi.clone(), chi.clone()])?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let q0 = inf_quotient_norm(&t, &doubleton, p2c, r2, q2, Some(&[h, h]))?;
    values.insert("doubleton_quotient".into(), q0.value);
    values.insert("doubleton_rhs".into(), (2.0 * x.norm(&chi)?.powi(2)).sqrt());
    let mut doubleton_check = Check::new("doubleton_sqrt2", "inf_alpha ||sup_i |T x_i / alpha_i| ||_inf = sqrt(2) = sup_{beta in B_2} ||sum |beta_i x_i| ||_1", 1e-12);
    doubleton_check.record_eq(q0.value, 2f64.sqrt(), || "quotient".into());
    doubleton_check.record_eq(q0.initial, 2f64.sqrt(), || "quotient at alpha_0".into());
    doubleton_check.record_eq(values["doubleton_rhs"], 2f64.sqrt(), || "rhs".into());

    let mut hypothesis = Check::new(
        "inf_form_hypothesis",
        "inf_{alpha in B_2} ||sup_i |T x_i / alpha_i| ||_inf <= (sum_i (int |x_i|)^2)^{1/2} = sup_{beta in B_2} ||sum_i |beta_i x_i| ||_{L^1}",
        1e-9,
    );
    let mut initializer = Check::new(
        "closed_form_initializer",
        "||sup_i |T x_i / alpha_{0,i}| ||_inf <= (sum_i (int |x_i|)^2)^{1/2}, alpha_{0,i} = int |x_i| / (sum (int |x_i|)^2)^{1/2}",
        1e-9,
    );
    let mut pairing = Check::new("pairing_ratio", "|sum_k <T x_k, y*_k>| <= C * strong(x) * strong(y*), C = 1", 1e-6);
    let opts = StrongOptions { seed, ..Default::default() };
    let pairing_every = (trials / 50).max(1);
    for i in 0..trials {
        let fam = random_family(&mut rng, n_max.max(1), dim);
        let ints: Vec<f64> = fam.iter().map(|v| x.norm(v)).collect::<Result<_>>()?;
        let rhs = ints.iter().map(|v| v * v).sum::<f64>().sqrt();
        let vf = VectorFamily::new(fam.clone())?;
        let alpha0: Vec<f64> = if rhs > 0.0 { ints.iter().map(|v| v / rhs).collect() } else { vec![1.0; ints.len()] };
        let q = inf_quotient_norm(&t, &vf, p2c, r2, q2, Some(&alpha0))?;
        hypothesis.record_le(q.value, rhs, || format!("family {i}"));
        initializer.record_le(q.initial, rhs, || format!("family {i}"));
        if i % pairing_every == 0 {
            let ys: Vec<Vec<f64>> = (0..fam.len()).map(|_| random_vec(&mut rng, depth)).collect();
            let pf = PairingFamily::new(vf, VectorFamily::new(ys)?)?;
            let r = pairing_check(&t, &pf, exps, &opts)?;
            pairing.record_le(r.lhs, r.rhs, || format!("family {i}"));
        }
    }
    Ok(GalleryReport {
        scenario: "integral_evaluation".into(),
        inputs: json!({"depth": depth, "n_max": n_max, "trials": trials, "seed": seed}),
        values,
        checks: vec![doubleton_check, hypothesis, initializer, pairing],
    })
}
