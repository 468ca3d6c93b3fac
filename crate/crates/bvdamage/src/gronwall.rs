//! Executable discrete Gronwall lemmas: hypothesis checks, concluded bounds,
//! saturating recursions and random admissible instances.

use rand::Rng;

use crate::error::{Error, Result};

/// Result of a checker.
#[derive(Debug, Clone, PartialEq)]
pub struct GronwallOutcome {
    pub hypotheses_ok: bool,
    pub violations: Vec<String>,
    /// Right-hand side of the conclusion, per index (a single entry for the summed lemma).
    pub bound: Vec<f64>,
    /// Smallest `bound - lhs`.
    pub slack: f64,
    pub holds: bool,
}

fn outcome(violations: Vec<String>, bound: Vec<f64>, lhs: &[f64]) -> GronwallOutcome {
    let slack = bound.iter().zip(lhs).map(|(b, a)| b - a).fold(f64::INFINITY, f64::min);
    // Relative slack absorbs roundoff in the saturating constructions.
    let holds = bound.iter().zip(lhs).all(|(b, a)| *a <= *b + 1e-12 * b.abs().max(1.0));
    GronwallOutcome { hypotheses_ok: violations.is_empty(), violations, bound, slack, holds }
}

fn nonneg(name: &str, v: &[f64], out: &mut Vec<String>) {
    if let Some(i) = v.iter().position(|x| !(*x >= 0.0)) {
        out.push(format!("{name}[{i}] = {} is negative", v[i]));
    }
}

/// `a_k <= B + sum_{j<k} a_j b_j` implies `a_k <= B exp(sum_{j<k} b_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicInstance {
    /// `a_0, ..., a_N`.
    pub a: Vec<f64>,
    /// `b_0, ..., b_N` (the last entry is unused).
    pub b: Vec<f64>,
    pub big_b: f64,
}

/// `a_k <= Lambda + b sum_{j<=k} a_j` with `1 - b >= 1/lambda > 0` implies `a_k <= lambda Lambda exp(lambda b k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineInstance {
    /// `a_1, ..., a_N`.
    pub a: Vec<f64>,
    pub b: f64,
    pub lambda: f64,
    pub big_lambda: f64,
}

/// Summed estimate for the viscous a priori bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ViscousInstance {
    /// `a_0, ..., a_N`.
    pub a: Vec<f64>,
    /// `M_1, ..., M_N`.
    pub m: Vec<f64>,
    /// `r_1, ..., r_N`.
    pub r: Vec<f64>,
    /// `c_1, ..., c_N`.
    pub c: Vec<f64>,
    pub rho: f64,
    pub eta: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub tau: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GronwallInstance {
    Classic(ClassicInstance),
    Affine(AffineInstance),
    Viscous(ViscousInstance),
}

pub fn check_gronwall_classic(inst: &ClassicInstance) -> Result<GronwallOutcome> {
    let n = inst.a.len();
    if n == 0 || inst.b.len() != n {
        return Err(Error::LengthMismatch(format!("a has {} entries, b has {}", n, inst.b.len())));
    }
    let mut v = Vec::new();
    nonneg("a", &inst.a, &mut v);
    nonneg("b", &inst.b, &mut v);
    if !(inst.big_b > 0.0) {
        v.push("B must be positive".into());
    }
    // k = 0 is the empty-sum case of the hypothesis.
    if inst.a[0] > inst.big_b {
        v.push(format!("a_0 = {} exceeds B", inst.a[0]));
    }
    let mut acc = 0.0;
    let mut bsum = 0.0;
    let mut bound = Vec::with_capacity(n - 1);
    for k in 1..n {
        acc += inst.a[k - 1] * inst.b[k - 1];
        bsum += inst.b[k - 1];
        if inst.a[k] > (inst.big_b + acc) * (1.0 + 1e-14) {
            v.push(format!("hypothesis fails at k = {k}"));
        }
        bound.push(inst.big_b * bsum.exp());
    }
    Ok(outcome(v, bound, &inst.a[1..]))
}

pub fn check_gronwall_affine(inst: &AffineInstance) -> Result<GronwallOutcome> {
    if inst.a.is_empty() {
        return Err(Error::LengthMismatch("a is empty".into()));
    }
    let mut v = Vec::new();
    nonneg("a", &inst.a, &mut v);
    if !(inst.b > 0.0 && inst.lambda > 0.0 && inst.big_lambda > 0.0) {
        v.push("b, lambda, Lambda must be positive".into());
    }
    if !(1.0 - inst.b >= 1.0 / inst.lambda - 1e-15) {
        v.push(format!("1 - b = {} < 1/lambda = {}", 1.0 - inst.b, 1.0 / inst.lambda));
    }
    let mut acc = 0.0;
    let mut bound = Vec::with_capacity(inst.a.len());
    for (i, &ak) in inst.a.iter().enumerate() {
        let k = i + 1;
        acc += ak;
        if ak > (inst.big_lambda + inst.b * acc) * (1.0 + 1e-14) {
            v.push(format!("hypothesis fails at k = {k}"));
        }
        bound.push(inst.lambda * inst.big_lambda * (inst.lambda * inst.b * k as f64).exp());
    }
    Ok(outcome(v, bound, &inst.a))
}

/// Explicit constants `(A_T, A_rho, A_c, A_r)` of the viscous estimate:
/// `sum tau M_k <= A_T T + A_rho rho + A_c sum tau c_k^2 + A_r sum tau r_k`.
pub fn viscous_coefficients(eta: f64, horizon: f64, kappa1: f64, kappa2: f64, eps: f64) -> [f64; 4] {
    let se = eps.sqrt() / (2.0 * kappa1).sqrt();
    let a_t = 1.0 + 0.5 * eta * eta + 1.5 * eta + eta * se * (1.0 / horizon.sqrt() + 0.5 / horizon);
    let a_rho = eta / (2.0 * kappa1 * kappa2).sqrt() + eta / (2.0 * kappa1).sqrt();
    let a_c = (0.5 * eta + 0.5 * eta * se).max(0.5 * eta * eta);
    [a_t, a_rho, a_c, 0.5]
}

/// The constant `C` exhibited by the checker.
pub fn viscous_constant(eta: f64, horizon: f64, kappa1: f64, kappa2: f64, eps: f64) -> f64 {
    viscous_coefficients(eta, horizon, kappa1, kappa2, eps).iter().cloned().fold(0.0, f64::max)
}

fn viscous_lhs_rhs(inst: &ViscousInstance, k: usize) -> (f64, f64) {
    let gamma = inst.kappa1 * inst.tau / inst.eps;
    let a = inst.a[k];
    let ap = inst.a[k - 1];
    let m = inst.m[k - 1];
    let extra = if k == 1 { inst.rho * inst.rho / (inst.tau * inst.eps) } else { 0.0 };
    let lhs = a * (a - ap) + gamma * a * a + gamma * m * m;
    let rhs = inst.eta * inst.eta * gamma * (1.0 + inst.c[k - 1].powi(2) + extra) + gamma * a * inst.r[k - 1];
    (lhs, rhs)
}

pub fn check_gronwall_viscous(inst: &ViscousInstance) -> Result<GronwallOutcome> {
    let n = inst.m.len();
    if inst.a.len() != n + 1 || inst.r.len() != n || inst.c.len() != n || n == 0 {
        return Err(Error::LengthMismatch(format!(
            "need a of length N+1 and M, r, c of length N (a {}, M {}, r {}, c {})",
            inst.a.len(),
            n,
            inst.r.len(),
            inst.c.len()
        )));
    }
    let mut v = Vec::new();
    for (name, s) in [("a", &inst.a), ("M", &inst.m), ("r", &inst.r), ("c", &inst.c)] {
        nonneg(name, s, &mut v);
    }
    if !(inst.rho >= 0.0 && inst.eta >= 0.0) {
        v.push("rho and eta must be nonnegative".into());
    }
    if !(inst.tau > 0.0 && inst.eps > 0.0 && inst.kappa1 > 0.0) {
        v.push("tau, eps, kappa1 must be positive".into());
    }
    if !(inst.kappa2 > 1.0) {
        v.push("kappa2 must exceed 1".into());
    }
    if inst.a[0] != 0.0 {
        v.push("a_0 must vanish".into());
    }
    let gamma = inst.kappa1 * inst.tau / inst.eps;
    if !(gamma <= 1.0 / (2.0 * inst.kappa2) * (1.0 + 1e-14)) {
        v.push(format!("gamma = {gamma} exceeds 1/(2 kappa2)"));
    }
    for k in 1..=n {
        if inst.r[k - 1] > inst.kappa2 * inst.a[k] * (1.0 + 1e-14) {
            v.push(format!("r_{k} > kappa2 a_{k}"));
        }
        let (l, r) = viscous_lhs_rhs(inst, k);
        if l > r + 1e-12 * r.abs().max(1.0) {
            v.push(format!("recursive inequality fails at k = {k}"));
        }
    }
    let horizon = n as f64 * inst.tau;
    let sum_m: f64 = inst.m.iter().map(|m| inst.tau * m).sum();
    let sum_c: f64 = inst.c.iter().map(|c| inst.tau * c * c).sum();
    let sum_r: f64 = inst.r.iter().map(|r| inst.tau * r).sum();
    let cst = viscous_constant(inst.eta, horizon, inst.kappa1, inst.kappa2, inst.eps);
    let bound = cst * (horizon + inst.rho + sum_c + sum_r);
    Ok(outcome(v, vec![bound], &[sum_m]))
}

pub fn check(inst: &GronwallInstance) -> Result<GronwallOutcome> {
    match inst {
        GronwallInstance::Classic(i) => check_gronwall_classic(i),
        GronwallInstance::Affine(i) => check_gronwall_affine(i),
        GronwallInstance::Viscous(i) => check_gronwall_viscous(i),
    }
}

/// `a_0 = B`, `a_k = B + sum_{j<k} a_j b_j`.
pub fn saturating_classic(big_b: f64, b: &[f64]) -> ClassicInstance {
    let mut a = vec![big_b];
    let mut acc = 0.0;
    for k in 1..b.len() {
        acc += a[k - 1] * b[k - 1];
        a.push(big_b + acc);
    }
    ClassicInstance { a, b: b.to_vec(), big_b }
}

/// `a_k (1 - b) = Lambda + b sum_{j<k} a_j`.
pub fn saturating_affine(n: usize, b: f64, lambda: f64, big_lambda: f64) -> AffineInstance {
    let mut a = Vec::with_capacity(n);
    let mut acc = 0.0;
    for _ in 0..n {
        let ak = (big_lambda + b * acc) / (1.0 - b);
        acc += ak;
        a.push(ak);
    }
    AffineInstance { a, b, lambda, big_lambda }
}

/// `M = c = rho = 0`, `r_k = kappa2 a_k`, equality in the recursive inequality.
pub fn saturating_viscous(n: usize, eta: f64, kappa1: f64, kappa2: f64, tau: f64, eps: f64) -> ViscousInstance {
    let gamma = kappa1 * tau / eps;
    let q = 1.0 + gamma - gamma * kappa2;
    let mut a = vec![0.0];
    for k in 1..=n {
        let ap: f64 = a[k - 1];
        a.push((ap + (ap * ap + 4.0 * q * eta * eta * gamma).sqrt()) / (2.0 * q));
    }
    let r = a[1..].iter().map(|x| kappa2 * x).collect();
    ViscousInstance { a, m: vec![0.0; n], r, c: vec![0.0; n], rho: 0.0, eta, kappa1, kappa2, tau, eps }
}

pub fn random_classic<R: Rng>(rng: &mut R) -> ClassicInstance {
    let n = rng.gen_range(1..=30);
    let big_b = rng.gen_range(0.01..10.0);
    let b: Vec<f64> = (0..=n).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..0.5) }).collect();
    let mut a = vec![big_b * rng.gen::<f64>()];
    let mut acc = 0.0;
    for k in 1..=n {
        acc += a[k - 1] * b[k - 1];
        let u: f64 = if rng.gen_bool(0.3) { 1.0 } else { rng.gen() };
        a.push(u * (big_b + acc));
    }
    ClassicInstance { a, b, big_b }
}

pub fn random_affine<R: Rng>(rng: &mut R) -> AffineInstance {
    let n = rng.gen_range(1..=30);
    let b = rng.gen_range(0.001..0.9);
    // lambda >= 1/(1-b).
    let lambda = (1.0 / (1.0 - b)) * rng.gen_range(1.0..3.0);
    let big_lambda = rng.gen_range(0.01..10.0);
    let mut a = Vec::with_capacity(n);
    let mut acc = 0.0;
    for _ in 0..n {
        let cap = (big_lambda + b * acc) / (1.0 - b);
        let u: f64 = if rng.gen_bool(0.3) { 1.0 } else { rng.gen() };
        let ak = u * cap;
        acc += ak;
        a.push(ak);
    }
    AffineInstance { a, b, lambda, big_lambda }
}

pub fn random_viscous<R: Rng>(rng: &mut R) -> ViscousInstance {
    let n = rng.gen_range(1..=30);
    let kappa2 = rng.gen_range(1.01..5.0);
    let kappa1 = rng.gen_range(0.1..3.0);
    let eps = 10f64.powf(rng.gen_range(-3.0..0.0));
    let gamma = rng.gen_range(0.01..1.0) / (2.0 * kappa2);
    let tau = gamma * eps / kappa1;
    let eta = rng.gen_range(0.0..3.0);
    let rho = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..1.0) * (tau * eps).sqrt() * 10.0 };
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..5.0)).collect();
    let mut a = vec![0.0];
    let mut r = Vec::with_capacity(n);
    let mut m = Vec::with_capacity(n);
    for k in 1..=n {
        let ap = a[k - 1];
        let ur: f64 = if rng.gen_bool(0.3) { 1.0 } else { rng.gen() };
        let extra = if k == 1 { rho * rho / (tau * eps) } else { 0.0 };
        let g = eta * eta * gamma * (1.0 + c[k - 1].powi(2) + extra);
        // a (a - ap) + gamma a^2 (1 - ur kappa2) <= g
        let q = 1.0 + gamma - gamma * ur * kappa2;
        let amax = (ap + (ap * ap + 4.0 * q * g).sqrt()) / (2.0 * q);
        let ua: f64 = if rng.gen_bool(0.3) { 0.0 } else { rng.gen() };
        let ak = ua * amax;
        let rk = ur * kappa2 * ak;
        let slack = (g + gamma * ak * rk - ak * (ak - ap) - gamma * ak * ak).max(0.0);
        let um: f64 = if rng.gen_bool(0.5) { 1.0 } else { rng.gen() };
        a.push(ak);
        r.push(rk);
        m.push(um * (slack / gamma).sqrt() * (1.0 - 1e-12));
    }
    ViscousInstance { a, m, r, c, rho, eta, kappa1, kappa2, tau, eps }
}

/// Counts of (admissible, held) over `trials` random instances per lemma.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SuiteCounts {
    pub trials: usize,
    pub admissible: usize,
    pub held: usize,
}

pub fn random_suite<R: Rng>(rng: &mut R, trials: usize) -> Result<[SuiteCounts; 3]> {
    let mut out = [SuiteCounts::default(); 3];
    for _ in 0..trials {
        let res = [
            check_gronwall_classic(&random_classic(rng))?,
            check_gronwall_affine(&random_affine(rng))?,
            check_gronwall_viscous(&random_viscous(rng))?,
        ];
        for (o, r) in out.iter_mut().zip(res.iter()) {
            o.trials += 1;
            if r.hypotheses_ok {
                o.admissible += 1;
                if r.holds {
                    o.held += 1;
                }
            }
        }
    }
    Ok(out)
}
