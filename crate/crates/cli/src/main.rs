//! `sconcave`: batch driver with JSON and CSV reports.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use sconcave::dominated_linear::{fit_bilinear_and_factorize, LinearExponents, LinearFactorOptions};
use sconcave::domination::{
    candidates, factorize_multilinear, fit_domination_lp_with, sum_to_product, CandidateFamily, DominationExponents,
    FitOptions, FACTOR_SLACK, PRODUCT_SLACK,
};
use sconcave::fremlin::{projective_norm_upper, tensor_domination_check, TensorCheckOptions};
use sconcave::gallery::{
    gallery_block_space, gallery_identity_concave, gallery_integral_evaluation, Check, GalleryReport,
};
use sconcave::vector_norms::{
    q_concave_rhs, strong_norm_dual_with, strong_norm_primal_with, weak_q_sum, StrongOptions, CHAIN_SLACK,
};
use sconcave::{
    sample, AtomicMeasureSpace, DominationCertificate, Error, ExponentTriple, LatticeSpec, MultilinearOperator,
    TensorGrid, VectorFamily,
};

#[derive(Parser, Debug)]
#[command(name = "sconcave", version, about = "Strongly concave operators on finite Banach lattices")]
struct Cli {
    /// Seed of every random draw.
    #[arg(long, global = true, env = "SCONCAVE_SEED", default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write the result table as CSV.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Weak, strong and concave norms of a vector family.
    Norms(NormsArgs),
    /// Fit a domination certificate by linear programming.
    Fit(FitArgs),
    /// Check a certificate's product bound on random probes.
    Verify(VerifyArgs),
    /// Factor a multilinear operator through the spaces of a certificate.
    Factorize(FactorizeArgs),
    /// Fit a two-measure certificate for a linear operator and factor it.
    FactorizeLinear(FactorizeLinearArgs),
    /// Tensor-family domination through a product lattice.
    Tensor(TensorArgs),
    /// Run one of the worked examples.
    Gallery(GalleryArgs),
    /// Run an experiment config file.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct NormsArgs {
    /// Lattice spec (JSON file or inline JSON).
    #[arg(long)]
    lattice: String,
    /// Vector family as a JSON array of arrays.
    #[arg(long)]
    family: String,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
    #[arg(long, default_value_t = 48)]
    budget: usize,
    #[arg(long, default_value_t = 8)]
    starts: usize,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Operator (JSON file or inline JSON).
    #[arg(long)]
    operator: String,
    /// Candidate families: basis, uniform, norming, random[:k].
    #[arg(long, value_delimiter = ',', default_value = "basis,uniform,norming")]
    candidates: Vec<CandidateFamily>,
    /// One exponent per argument, or one for all.
    #[arg(long, value_delimiter = ',', required = true)]
    p: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    q: Vec<f64>,
    /// Training tuples as JSON; random tuples otherwise.
    #[arg(long)]
    training: Option<String>,
    #[arg(long, default_value_t = 64)]
    train: usize,
    #[arg(long, default_value_t = 200)]
    probes: usize,
    /// Write the fitted certificate here.
    #[arg(long)]
    certificate_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    operator: String,
    #[arg(long)]
    certificate: String,
    #[arg(long, default_value_t = 200)]
    probes: usize,
}

#[derive(Args, Debug)]
struct FactorizeArgs {
    #[arg(long)]
    operator: String,
    #[arg(long)]
    certificate: String,
    #[arg(long, default_value_t = 200)]
    probes: usize,
}

#[derive(Args, Debug)]
struct FactorizeLinearArgs {
    #[arg(long)]
    operator: String,
    #[arg(long)]
    p1: f64,
    #[arg(long)]
    q1: f64,
    #[arg(long)]
    p2: f64,
    #[arg(long, value_delimiter = ',', default_value = "basis,uniform,norming")]
    candidates: Vec<CandidateFamily>,
    /// Number of random training families.
    #[arg(long, default_value_t = 24)]
    families: usize,
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    probes: usize,
    #[arg(long)]
    certificate_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TensorArgs {
    #[arg(long)]
    operator: String,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
    /// Lattice on the product space; weighted l^p by default.
    #[arg(long)]
    e: Option<String>,
    /// Certificate with arity one on the product space.
    #[arg(long)]
    certificate: Option<String>,
    #[arg(long, default_value_t = 20)]
    families: usize,
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Rounds of the projective-norm multi-start.
    #[arg(long, default_value_t = 8)]
    rounds: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
enum Scenario {
    BlockSpace,
    IdentityConcave,
    IntegralEvaluation,
    #[value(skip)]
    Custom,
}

#[derive(Args, Debug)]
struct GalleryArgs {
    #[arg(long, value_enum)]
    scenario: Scenario,
    /// Number of blocks.
    #[arg(long = "K", alias = "k", default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 4)]
    atoms_per_block: usize,
    /// Dyadic depth of the integral example.
    #[arg(long, default_value_t = 8)]
    depth: usize,
    /// Largest family size.
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// Dimension of the identity example.
    #[arg(long, default_value_t = 4)]
    dim: usize,
    /// Inner exponent; 2 for block_space, 1 for identity_concave.
    #[arg(long)]
    p: Option<f64>,
    /// Outer exponent; 4 for block_space, 2 for identity_concave.
    #[arg(long)]
    q: Option<f64>,
    /// Lattice of the identity example; weighted l^p of `dim` atoms by default.
    #[arg(long)]
    lattice: Option<String>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long)]
    config: PathBuf,
}

/// Experiment config read by `report`.
#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct ExperimentConfig {
    seed: Option<u64>,
    scenario: Scenario,
    #[serde(rename = "K")]
    k: Option<usize>,
    atoms_per_block: Option<usize>,
    depth: Option<usize>,
    n: Option<usize>,
    trials: Option<usize>,
    dim: Option<usize>,
    p: Option<f64>,
    q: Option<f64>,
    lattice: Option<Value>,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
    /// Command line of a `custom` run, without the program name.
    #[serde(default)]
    args: Vec<String>,
}

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Core(Error::Input(_) | Error::Config(_)) => 2,
            Failure::Core(Error::Numeric(_)) => 3,
            Failure::Core(Error::Precondition(_) | Error::Invariant(_)) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => format!("config error: {m}"),
            Failure::Core(e) => e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

#[derive(Serialize)]
struct Timing {
    seconds: f64,
}

#[derive(Serialize)]
struct Report {
    command: String,
    inputs: Value,
    values: BTreeMap<String, Value>,
    tolerances: BTreeMap<String, f64>,
    checks: Vec<Check>,
    passed: bool,
    timing: Timing,
}

/// Report under construction plus the CSV table.
struct Run {
    command: String,
    inputs: Value,
    values: BTreeMap<String, Value>,
    checks: Vec<Check>,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Run {
    fn new(command: &str, inputs: Value, header: Vec<&'static str>) -> Self {
        Self { command: command.into(), inputs, values: BTreeMap::new(), checks: Vec::new(), header, rows: Vec::new() }
    }

    fn value(&mut self, key: &str, v: impl Serialize) {
        self.values.insert(key.into(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    fn from_gallery(g: GalleryReport) -> Self {
        let mut run = Run::new("gallery", g.inputs, vec!["check", "trials", "violations", "worst", "tolerance", "passed"]);
        run.inputs["scenario"] = json!(g.scenario);
        for (k, v) in g.values {
            run.value(&k, v);
        }
        for c in &g.checks {
            run.row(vec![
                c.name.clone(),
                c.trials.to_string(),
                c.violations.to_string(),
                c.worst.to_string(),
                c.tolerance.to_string(),
                c.passed.to_string(),
            ]);
        }
        run.checks = g.checks;
        run
    }
}

fn load<T: DeserializeOwned>(arg: &str, what: &str) -> CliResult<T> {
    let trimmed = arg.trim_start();
    let text = if trimmed.starts_with('{') || trimmed.starts_with('[') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).or_else(|e| usage(format!("cannot read {what} '{arg}': {e}")))?
    };
    serde_json::from_str(&text).or_else(|e| usage(format!("invalid {what} JSON: {e}")))
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).or_else(|e| usage(format!("cannot write '{}': {e}", path.display())))
}

fn per_argument(v: &[f64], m: usize, name: &str) -> CliResult<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; m]),
        n if n == m => Ok(v.to_vec()),
        n => usage(format!("--{name} has {n} entries for an operator with {m} arguments")),
    }
}

fn positive(v: usize, name: &str) -> CliResult<usize> {
    if v == 0 {
        return usage(format!("{name} must be positive"));
    }
    Ok(v)
}

fn norms(a: &NormsArgs, seed: u64) -> CliResult<Run> {
    let x: LatticeSpec = load(&a.lattice, "lattice")?;
    let vectors: Vec<Vec<f64>> = load(&a.family, "family")?;
    let fam = VectorFamily::new(vectors)?;
    let e = ExponentTriple::new(a.p, a.q)?;
    let opts = StrongOptions { budget: a.budget, starts: a.starts, seed };
    let mut run = Run::new("norms", json!({"p": a.p, "q": a.q, "budget": a.budget, "starts": a.starts}), vec![]);
    let weak = weak_q_sum(&fam, a.q, &x, &opts)?.value;
    let primal = strong_norm_primal_with(&fam, e, &x, &opts, &[])?;
    let dual = strong_norm_dual_with(&fam, e, &x, &opts)?;
    let concave = q_concave_rhs(&fam, a.q, &x)?;
    let strong = primal.value.max(dual.value);
    run.value("weak_q_sum", weak);
    run.value("strong_primal", primal.value);
    run.value("strong_dual", dual.value);
    run.value("q_concave_rhs", concave);
    let mut chain = Check::new("chain_ordering", "weak_q_sum <= strong <= ||(sum |x_k|^q)^{1/q}||_X", CHAIN_SLACK);
    chain.record_le(weak, strong, || "weak above strong".into());
    chain.record_le(strong, concave, || "strong above concave".into());
    let mut agree = Check::new("primal_dual_agree", "|primal - dual| <= 1e-3 * max(primal, dual)", 1e-3);
    agree.record(
        (primal.value - dual.value).abs() <= 1e-3 * strong.max(f64::MIN_POSITIVE),
        || format!("primal {} vs dual {}", primal.value, dual.value),
    );
    run.checks = vec![chain, agree];
    Ok(run)
}

fn product_rows(run: &mut Run, check: &mut Check, set: &str, cert: &DominationCertificate, t: &MultilinearOperator, tuples: &[Vec<Vec<f64>>]) -> CliResult<()> {
    for (i, tuple) in tuples.iter().enumerate() {
        let chk = sum_to_product(cert, t, tuple)?;
        if chk.bound > 0.0 {
            check.worst = check.worst.max(chk.value / chk.bound);
        }
        check.record(chk.holds, || {
            format!("{set} tuple {i}: ||T x|| = {} > {}{}", chk.value, chk.bound, chk.diagnostic.clone().unwrap_or_default())
        });
        run.row(vec![set.into(), i.to_string(), chk.value.to_string(), chk.bound.to_string(), chk.holds.to_string()]);
    }
    Ok(())
}

const PRODUCT_FORMULA: &str = "||T(x_1..x_m)|| <= C prod_j ||x_j||_{p_j,q_j,nu_j}";

fn fit(a: &FitArgs, seed: u64) -> CliResult<Run> {
    let t: MultilinearOperator = load(&a.operator, "operator")?;
    let m = t.arity();
    let exps = DominationExponents::new(per_argument(&a.p, m, "p")?, per_argument(&a.q, m, "q")?)?;
    let training: Vec<Vec<Vec<f64>>> = match &a.training {
        Some(s) => load(s, "training")?,
        None => sample::tuples(t.domains(), positive(a.train, "--train")?, seed),
    };
    let mut cands = Vec::with_capacity(m);
    for (j, x) in t.domains().iter().enumerate() {
        let col: Vec<Vec<f64>> = training.iter().filter_map(|tu| tu.get(j).cloned()).collect();
        cands.push(candidates(x, exps.p()[j], &a.candidates, &col, seed.wrapping_add(j as u64))?);
    }
    let opts = FitOptions { seed, ..FitOptions::default() };
    let cert = fit_domination_lp_with(&t, &cands, &training, &exps, &opts)?;
    let probes = sample::tuples(t.domains(), a.probes, seed.wrapping_add(0x5eed));
    let names: Vec<String> = a.candidates.iter().map(|c| String::from(*c)).collect();
    let mut run = Run::new(
        "fit",
        json!({"candidates": names, "p": exps.p(), "q": exps.q(), "training": training.len(), "probes": a.probes}),
        vec!["set", "index", "value", "bound", "holds"],
    );
    run.value("C", cert.constant());
    run.value("support_sizes", cert.measures().iter().map(|nu| nu.len()).collect::<Vec<_>>());
    run.value("certificate", &cert);
    let mut train_chk = Check::new("training_bound", PRODUCT_FORMULA, PRODUCT_SLACK);
    product_rows(&mut run, &mut train_chk, "training", &cert, &t, &training)?;
    let mut held = Check::new("heldout_bound", PRODUCT_FORMULA, PRODUCT_SLACK);
    product_rows(&mut run, &mut held, "heldout", &cert, &t, &probes)?;
    run.checks = vec![train_chk, held];
    if let Some(path) = &a.certificate_out {
        write_file(path, &to_pretty(&cert))?;
    }
    Ok(run)
}

fn verify(a: &VerifyArgs, seed: u64) -> CliResult<Run> {
    let t: MultilinearOperator = load(&a.operator, "operator")?;
    let cert: DominationCertificate = load(&a.certificate, "certificate")?;
    if cert.exponents().arity() != t.arity() {
        return usage("certificate arity differs from the operator");
    }
    let probes = sample::tuples(t.domains(), positive(a.probes, "--probes")?, seed);
    let mut run = Run::new("verify", json!({"probes": a.probes}), vec!["set", "index", "value", "bound", "holds"]);
    run.value("C", cert.constant());
    let mut chk = Check::new("product_bound", PRODUCT_FORMULA, PRODUCT_SLACK);
    product_rows(&mut run, &mut chk, "probe", &cert, &t, &probes)?;
    run.value("worst_ratio", chk.worst);
    run.checks = vec![chk];
    Ok(run)
}

fn factorize(a: &FactorizeArgs, seed: u64) -> CliResult<Run> {
    let t: MultilinearOperator = load(&a.operator, "operator")?;
    let mut cert: DominationCertificate = load(&a.certificate, "certificate")?;
    let augmented = !cert.measures().iter().all(|nu| nu.is_definite());
    if augmented {
        cert = cert.augmented(t.domains())?;
    }
    let probes = sample::tuples(t.domains(), positive(a.probes, "--probes")?, seed);
    let f = factorize_multilinear(&t, &cert, &probes)?;
    let mut run = Run::new("factorize", json!({"probes": a.probes, "augmented": augmented}), vec![]);
    run.value("C", f.constant);
    run.value("bound", f.bound);
    run.value("inclusion_ratio", f.inclusion_ratio);
    run.value("factor_spaces", &f.factor_spaces);
    let mut rec = Check::new("reconstruction_exact", "T = S o (i_1 x ... x i_m)", 0.0);
    rec.record(f.reconstruction_exact, || "S differs from T".into());
    let mut bound = Check::new("factor_bound", "||S(u)|| <= C prod_j ||u_j||_{S_j}", FACTOR_SLACK);
    bound.record_le(f.bound, f.constant, || "probe bound".into());
    let mut incl = Check::new("inclusions", "||x_j||_{S_j} <= ||x_j||_{X_j}", 1e-9);
    incl.record_le(f.inclusion_ratio, 1.0, || "inclusion ratio".into());
    run.checks = vec![rec, bound, incl];
    Ok(run)
}

fn factorize_linear(a: &FactorizeLinearArgs, seed: u64) -> CliResult<Run> {
    let t: MultilinearOperator = load(&a.operator, "operator")?;
    if t.arity() != 1 {
        return usage("factorize-linear needs a linear operator");
    }
    let exps = LinearExponents::new(a.p1, a.q1, a.p2)?;
    let dx = t.domains()[0].dim();
    let dy = t.codomain().dim();
    let training = sample::pairing_families(dx, dy, positive(a.families, "--families")?, positive(a.n, "--n")?, seed)?;
    let opts = LinearFactorOptions {
        families: a.candidates.clone(),
        fit: FitOptions { seed, ..FitOptions::default() },
        probes: positive(a.probes, "--probes")?,
        seed,
    };
    let lf = fit_bilinear_and_factorize(&t, &training, exps, &opts)?;
    let mut run = Run::new("factorize-linear", json!({"exponents": exps, "families": a.families, "n": a.n, "probes": a.probes}), vec![]);
    run.value("C", lf.certificate.c);
    run.value("fitted_constant", lf.fitted_constant);
    run.value("t0_bound", lf.t0_bound);
    run.value("inclusion_x", lf.inclusion_x);
    run.value("inclusion_y", lf.inclusion_y);
    run.value("certificate", &lf.certificate);
    let mut rec = Check::new("reconstruction_exact", "T = j o T_0 o i", 0.0);
    rec.record(lf.reconstruction_exact, || "T_0 differs from T".into());
    let mut bound = Check::new("t0_bound", "||T_0 u||_{F'} <= C ||u||_E", sconcave::dominated_linear::T0_SLACK);
    bound.record_le(lf.t0_bound, lf.certificate.c, || "probe bound".into());
    let mut incl = Check::new("inclusions", "||x||_E <= ||x||_X, ||y'||_F <= ||y'||_{Y'}", 1e-9);
    incl.record_le(lf.inclusion_x.max(lf.inclusion_y), 1.0, || "inclusion ratio".into());
    run.checks = vec![rec, bound, incl];
    if let Some(path) = &a.certificate_out {
        write_file(path, &to_pretty(&lf.certificate))?;
    }
    Ok(run)
}

fn tensor(a: &TensorArgs, seed: u64) -> CliResult<Run> {
    let t: MultilinearOperator = load(&a.operator, "operator")?;
    let factors: Vec<AtomicMeasureSpace> = t.domains().iter().map(|d| d.space().clone()).collect();
    let e: LatticeSpec = match &a.e {
        Some(s) => load(s, "lattice")?,
        None => LatticeSpec::weighted_ls(AtomicMeasureSpace::product(&factors)?, a.p)?,
    };
    let cert: Option<DominationCertificate> = a.certificate.as_deref().map(|s| load(s, "certificate")).transpose()?;
    let exps = ExponentTriple::new(a.p, a.q)?;
    let opts = TensorCheckOptions { strong: StrongOptions { seed, ..StrongOptions::default() } };
    let mut rng = sample::rng(seed);
    let mut run = Run::new(
        "tensor",
        json!({"p": a.p, "q": a.q, "families": a.families, "n": a.n, "rounds": a.rounds, "certificate": cert.is_some()}),
        vec!["family", "lhs", "strong", "ratio", "rhs", "holds"],
    );
    let mut dom = Check::new("tensor_domination", "(sum_i ||T(x_i)||^q)^{1/q} <= C ||(x_i^1 . ... . x_i^m)_i||_{E,p,q}", 1e-9);
    let mut modulus = Check::new("modulus_identity", "|x_1 . ... . x_m| = |x_1| . ... . |x_m|", 0.0);
    let mut elem = Check::new("elementary_projective", "||x_1 . ... . x_m||_{|pi|} <= prod_j ||x_j||", 1e-12);
    let (mut worst_ratio, mut worst_embed) = (0.0_f64, 0.0_f64);
    for f in 0..positive(a.families, "--families")? {
        let tuples = sample::tuple_family(&mut rng, t.domains(), a.n);
        for tuple in &tuples {
            let g = TensorGrid::odot(&factors, tuple)?;
            let abs: Vec<Vec<f64>> = tuple.iter().map(|x| x.iter().map(|v| v.abs()).collect()).collect();
            modulus.record(g.abs() == TensorGrid::odot(&factors, &abs)?, || format!("family {f}"));
            let bound = projective_norm_upper(&g, t.domains(), a.rounds)?;
            let mut prod = 1.0;
            for (x, d) in tuple.iter().zip(t.domains()) {
                prod *= d.norm(x)?;
            }
            elem.record_le(bound.value, prod, || format!("family {f}"));
        }
        let rep = tensor_domination_check(&t, &e, &tuples, exps, cert.as_ref(), &opts)?;
        worst_ratio = worst_ratio.max(rep.ratio);
        worst_embed = worst_embed.max(rep.embedding_ratio.unwrap_or(0.0));
        if cert.is_some() {
            dom.record_le(rep.lhs, rep.rhs, || format!("family {f}"));
        }
        run.row(vec![
            f.to_string(),
            rep.lhs.to_string(),
            rep.strong.to_string(),
            rep.ratio.to_string(),
            rep.rhs.to_string(),
            rep.holds.to_string(),
        ]);
    }
    run.value("worst_ratio", worst_ratio);
    run.value("embedding_ratio", worst_embed);
    run.checks = vec![modulus, elem];
    if cert.is_some() {
        run.checks.push(dom);
    }
    Ok(run)
}

fn gallery(a: &GalleryArgs, seed: u64) -> CliResult<Run> {
    let trials = positive(a.trials, "--trials")?;
    let report = match a.scenario {
        Scenario::BlockSpace => gallery_block_space(
            positive(a.k, "--K")?,
            positive(a.atoms_per_block, "--atoms-per-block")?,
            a.p.unwrap_or(2.0),
            a.q.unwrap_or(4.0),
            trials,
            seed,
        )?,
        Scenario::IdentityConcave => {
            let p = a.p.unwrap_or(1.0);
            let x = match &a.lattice {
                Some(s) => load(s, "lattice")?,
                None => LatticeSpec::ls(positive(a.dim, "--dim")?, p)?,
            };
            gallery_identity_concave(&x, p, a.q.unwrap_or(2.0), positive(a.n, "--n")?, trials, seed)?
        }
        Scenario::IntegralEvaluation => {
            gallery_integral_evaluation(positive(a.depth, "--depth")?, positive(a.n, "--n")?, trials, seed)?
        }
        Scenario::Custom => return usage("the custom scenario runs only from a config file"),
    };
    Ok(Run::from_gallery(report))
}

fn report(a: &ReportArgs) -> CliResult<(Run, u64, Option<PathBuf>, Option<PathBuf>)> {
    let cfg: ExperimentConfig = load(&a.config.to_string_lossy(), "config")?;
    let seed = cfg.seed.unwrap_or(0);
    if cfg.scenario == Scenario::Custom {
        let argv = std::iter::once("sconcave".to_string()).chain(cfg.args.iter().cloned());
        let cli = Cli::try_parse_from(argv).or_else(|e| usage(format!("custom args: {e}")))?;
        if matches!(cli.command, Command::Report(_)) {
            return usage("a custom config cannot run report");
        }
        let seed = cfg.seed.unwrap_or(cli.seed);
        let run = dispatch(&cli.command, seed)?;
        return Ok((run, seed, cfg.out.or(cli.out), cfg.csv.or(cli.csv)));
    }
    let lattice = cfg.lattice.as_ref().map(|v| v.to_string());
    let g = GalleryArgs {
        scenario: cfg.scenario,
        k: cfg.k.unwrap_or(4),
        atoms_per_block: cfg.atoms_per_block.unwrap_or(4),
        depth: cfg.depth.unwrap_or(8),
        n: cfg.n.unwrap_or(4),
        trials: cfg.trials.unwrap_or(200),
        dim: cfg.dim.unwrap_or(4),
        p: cfg.p,
        q: cfg.q,
        lattice,
    };
    Ok((gallery(&g, seed)?, seed, cfg.out, cfg.csv))
}

fn dispatch(cmd: &Command, seed: u64) -> CliResult<Run> {
    match cmd {
        Command::Norms(a) => norms(a, seed),
        Command::Fit(a) => fit(a, seed),
        Command::Verify(a) => verify(a, seed),
        Command::Factorize(a) => factorize(a, seed),
        Command::FactorizeLinear(a) => factorize_linear(a, seed),
        Command::Tensor(a) => tensor(a, seed),
        Command::Gallery(a) => gallery(a, seed),
        Command::Report(_) => usage("nested report"),
    }
}

fn to_pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report values serialize");
    s.push('\n');
    s
}

fn write_csv(path: &Path, run: &Run) -> CliResult<()> {
    let err = |e: csv::Error| Failure::Usage(format!("cannot write '{}': {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    if !run.header.is_empty() {
        w.write_record(&run.header).map_err(err)?;
    }
    for r in &run.rows {
        w.write_record(r).map_err(err)?;
    }
    w.flush().map_err(|e| Failure::Usage(format!("cannot write '{}': {e}", path.display())))
}

fn execute(cli: Cli) -> CliResult<bool> {
    let start = Instant::now();
    let (mut run, seed, out, csv) = match &cli.command {
        Command::Report(a) => {
            let (run, seed, out, csv) = report(a)?;
            (run, seed, cli.out.clone().or(out), cli.csv.clone().or(csv))
        }
        cmd => (dispatch(cmd, cli.seed)?, cli.seed, cli.out.clone(), cli.csv.clone()),
    };
    run.inputs["seed"] = json!(seed);
    let passed = run.checks.iter().all(|c| c.passed);
    let tolerances = run.checks.iter().map(|c| (c.name.clone(), c.tolerance)).collect();
    if let Some(path) = &csv {
        write_csv(path, &run)?;
    }
    let report = Report {
        command: run.command,
        inputs: run.inputs,
        values: run.values,
        tolerances,
        checks: run.checks,
        passed,
        timing: Timing { seconds: start.elapsed().as_secs_f64() },
    };
    let text = to_pretty(&report);
    match &out {
        Some(path) => {
            write_file(path, &text)?;
            println!("{}: {}", report.command, if passed { "all checks passed" } else { "check failure" });
        }
        None => print!("{text}"),
    }
    for c in report.checks.iter().filter(|c| !c.passed) {
        eprintln!("FAIL {}: {}", c.name, c.diagnostic.as_deref().unwrap_or("violation"));
    }
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("{}", f.message());
            ExitCode::from(f.code())
        }
    }
}
