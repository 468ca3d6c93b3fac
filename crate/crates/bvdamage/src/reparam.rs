//! Arclength reparameterization, contact potentials, jump detection and
//! vanishing-parameter sweeps.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::constitutive::{EnergyParams, Gradient, Model};
use crate::discretization::{State, SymTensor2};
use crate::dissipation::{d_nu, d_nu_up, d_up, dual_diagnostics, h_total, r_total, DistZConvention, DualDiagnostics, Extended, Rate};
use crate::driver::{elastic_strain, run_viscous, DriverOptions, Trajectory};
use crate::constitutive::yield_radius;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcLength {
    Standard,
    EnergyDissipation,
}

/// Which arguments enter `D_nu` in the Energy-Dissipation arclength.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DnuArgs {
    /// `(u', z', p')`.
    Full,
    /// `(u', p')` only.
    Two,
}

impl DnuArgs {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "full" => Some(DnuArgs::Full),
            "two" => Some(DnuArgs::Two),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DnuArgs::Full => "full",
            DnuArgs::Two => "two",
        }
    }
}

/// Parameter regimes of the contact potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Viscous, `eps > 0`.
    Visc,
    /// `eps -> 0` with `nu, mu` fixed.
    Eps0,
    /// `eps, nu -> 0` with `mu` fixed.
    EpsNu0,
    /// `eps, nu, mu -> 0`.
    All0,
}

impl Regime {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "visc" => Some(Regime::Visc),
            "eps0" => Some(Regime::Eps0),
            "eps-nu0" => Some(Regime::EpsNu0),
            "all0" => Some(Regime::All0),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regime::Visc => "visc",
            Regime::Eps0 => "eps0",
            Regime::EpsNu0 => "eps-nu0",
            Regime::All0 => "all0",
        }
    }

    pub fn arclength(&self) -> ArcLength {
        match self {
            Regime::All0 => ArcLength::EnergyDissipation,
            _ => ArcLength::Standard,
        }
    }

    pub fn multi_rate(&self) -> bool {
        matches!(self, Regime::EpsNu0 | Regime::All0)
    }
}

/// A viscous trajectory on its arclength grid. Knot 0 carries zero rates and `t' = 1`.
#[derive(Debug, Clone)]
pub struct ParamTrajectory {
    pub kind: ArcLength,
    pub dnu_args: DnuArgs,
    pub eps: f64,
    pub nu: f64,
    pub mu: f64,
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub states: Vec<State>,
    pub t_rate: Vec<f64>,
    pub rates: Vec<Rate>,
    /// `|e'|_{L2}` per knot.
    pub e_rate_l2: Vec<f64>,
    pub diag: Vec<DualDiagnostics>,
    pub normalization: Vec<f64>,
}

impl ParamTrajectory {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        *self.s.last().unwrap_or(&0.0)
    }
}

fn arc_integrand(model: &Model, kind: ArcLength, args: DnuArgs, nu: f64, mu: f64, rate: &Rate, e_rate: f64, dstar: f64) -> f64 {
    match kind {
        ArcLength::Standard => model.norm_kd(&rate.u) + model.norm_hm(&rate.z) + model.norm_l2(&rate.p),
        ArcLength::EnergyDissipation => {
            let sm = mu.sqrt();
            let dn = match args {
                DnuArgs::Full => d_nu(model, rate, nu),
                DnuArgs::Two => d_nu_up(model, rate, nu),
            };
            sm * model.norm_kd(&rate.u) + model.norm_hm(&rate.z) + model.norm_l1(&rate.p) + sm * model.norm_l2(&rate.p) + e_rate + dn * dstar
        }
    }
}

fn reparam(model: &Model, traj: &Trajectory, kind: ArcLength, args: DnuArgs) -> Result<ParamTrajectory> {
    let n = traj.times.len();
    if n == 0 {
        return Err(Error::LengthMismatch("empty trajectory".into()));
    }
    let p = &traj.params;
    let mut out = ParamTrajectory {
        kind,
        dnu_args: args,
        eps: p.eps,
        nu: p.nu,
        mu: p.mu,
        s: vec![0.0],
        t: vec![traj.times[0]],
        states: vec![traj.states[0].clone()],
        t_rate: vec![1.0],
        rates: vec![Rate::zero(&model.grid)],
        e_rate_l2: vec![0.0],
        diag: vec![traj.records[0].dual],
        normalization: vec![1.0],
    };
    let mut e_prev = elastic_strain(model, traj.times[0], &traj.states[0])?;
    for k in 1..n {
        let dt = traj.times[k] - traj.times[k - 1];
        if !(dt > 0.0) {
            return Err(Error::InvalidParam { name: "times", reason: format!("zero-length step at {k}") });
        }
        let qdot = traj.rate(model, k);
        let e = elastic_strain(model, traj.times[k], &traj.states[k])?;
        let edot: Vec<SymTensor2> = e.iter().zip(&e_prev).map(|(a, b)| (1.0 / dt) * (*a - *b)).collect();
        let edot_n = model.norm_l2(&edot);
        let dstar = traj.records[k].dual.dstar_nu_mu;
        let ds = dt * (1.0 + arc_integrand(model, kind, args, p.nu, p.mu, &qdot, edot_n, dstar));
        let tr = dt / ds;
        let qp = qdot.scaled(tr);
        let ep = edot_n * tr;
        out.normalization.push(tr + arc_integrand(model, kind, args, p.nu, p.mu, &qp, ep, dstar));
        out.s.push(out.s[k - 1] + ds);
        out.t.push(traj.times[k]);
        out.states.push(traj.states[k].clone());
        out.t_rate.push(tr);
        out.rates.push(qp);
        out.e_rate_l2.push(ep);
        out.diag.push(traj.records[k].dual);
        e_prev = e;
    }
    Ok(out)
}

/// Reparameterization by `1 + |u'|_H1 + |z'|_Hm + |p'|_L2`.
pub fn reparam_standard(model: &Model, traj: &Trajectory) -> Result<ParamTrajectory> {
    reparam(model, traj, ArcLength::Standard, DnuArgs::Full)
}

/// Energy-Dissipation arclength.
pub fn reparam_ed(model: &Model, traj: &Trajectory, args: DnuArgs) -> Result<ParamTrajectory> {
    reparam(model, traj, ArcLength::EnergyDissipation, args)
}

/// Recomputes `t' + |q'|` at every knot from the stored rescaled rates.
pub fn normalization_values(model: &Model, pt: &ParamTrajectory) -> Vec<f64> {
    (0..pt.len())
        .map(|k| pt.t_rate[k] + arc_integrand(model, pt.kind, pt.dnu_args, pt.nu, pt.mu, &pt.rates[k], pt.e_rate_l2[k], pt.diag[k].dstar_nu_mu))
        .collect()
}

/// Removes degenerate pieces of a parameterization: knots whose segment has
/// `t' + |q'| <= tol` are dropped and every other segment is stretched to
/// unit speed, so the result is normalized again. The identity on curves that
/// are already normalized.
pub fn make_nondegenerate(model: &Model, pt: &ParamTrajectory, tol: f64) -> ParamTrajectory {
    let m = normalization_values(model, pt);
    let mut out = ParamTrajectory {
        s: vec![pt.s[0]],
        t: vec![pt.t[0]],
        states: vec![pt.states[0].clone()],
        t_rate: vec![pt.t_rate[0]],
        rates: vec![pt.rates[0].clone()],
        e_rate_l2: vec![pt.e_rate_l2[0]],
        diag: vec![pt.diag[0]],
        normalization: vec![pt.normalization[0]],
        ..pt.clone()
    };
    for k in 1..pt.len() {
        if !(m[k] > tol) {
            continue;
        }
        let ds = (pt.s[k] - pt.s[k - 1]) * m[k];
        let last = *out.s.last().unwrap();
        out.s.push(last + ds);
        out.t.push(pt.t[k]);
        out.states.push(pt.states[k].clone());
        out.t_rate.push(pt.t_rate[k] / m[k]);
        out.rates.push(pt.rates[k].scaled(1.0 / m[k]));
        out.e_rate_l2.push(pt.e_rate_l2[k] / m[k]);
        out.diag.push(pt.diag[k]);
        out.normalization.push(1.0);
    }
    let fresh = normalization_values(model, &out);
    out.normalization = fresh;
    out
}

/// Parameters of the contact potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactParams {
    pub eps: f64,
    pub nu: f64,
    pub mu: f64,
    /// `t'` below this counts as a jump.
    pub tol_jump: f64,
    /// Stability magnitudes and `|z'|` below this count as zero.
    pub tol_zero: f64,
}

/// Regime-appropriate stability magnitude.
pub fn stability_magnitude(regime: Regime, d: &DualDiagnostics) -> f64 {
    match regime {
        Regime::Visc | Regime::Eps0 => d.dstar_nu_mu,
        Regime::EpsNu0 => d.dstar_mu + d.dist_z,
        Regime::All0 => d.dstar0 + d.dist_z,
    }
}

fn contact_from_diag(
    model: &Model,
    regime: Regime,
    z: &[f64],
    d: &DualDiagnostics,
    t_rate: f64,
    rate: &Rate,
    cp: &ContactParams,
) -> Result<Extended> {
    let base = r_total(model, &rate.z).plus(Extended::Finite(h_total(model, z, &rate.p)));
    let red = match regime {
        Regime::Visc => {
            if !(cp.eps > 0.0 && cp.nu > 0.0) {
                return Err(Error::Regime("regime visc needs eps > 0 and nu > 0".into()));
            }
            if !(t_rate > 0.0) {
                return Err(Error::Regime("regime visc needs t' > 0".into()));
            }
            let dn = d_nu(model, rate, cp.nu);
            Extended::Finite(cp.eps / (2.0 * t_rate) * dn * dn + t_rate / (2.0 * cp.eps) * d.dstar_nu_mu.powi(2))
        }
        Regime::Eps0 => {
            if !(cp.nu > 0.0) {
                return Err(Error::Regime("regime eps0 needs nu > 0".into()));
            }
            if t_rate >= cp.tol_jump {
                if d.dstar_nu_mu <= cp.tol_zero {
                    Extended::Finite(0.0)
                } else {
                    Extended::PlusInfinity
                }
            } else {
                Extended::Finite(d_nu(model, rate, cp.nu) * d.dstar_nu_mu)
            }
        }
        Regime::EpsNu0 | Regime::All0 => {
            let dstar = if regime == Regime::EpsNu0 { d.dstar_mu } else { d.dstar0 };
            if t_rate >= cp.tol_jump {
                if dstar + d.dist_z <= cp.tol_zero {
                    Extended::Finite(0.0)
                } else {
                    Extended::PlusInfinity
                }
            } else {
                let zn = model.norm_m(&rate.z);
                if zn <= cp.tol_zero {
                    Extended::Finite(d_up(model, rate) * dstar)
                } else if dstar <= cp.tol_zero {
                    Extended::Finite(zn * d.dist_z)
                } else {
                    Extended::PlusInfinity
                }
            }
        }
    };
    Ok(base.plus(red))
}

/// Contact potential `M(t, q, t', q')` of `regime`.
pub fn contact_potential(
    model: &Model,
    regime: Regime,
    t: f64,
    state: &State,
    t_rate: f64,
    rate: &Rate,
    cp: &ContactParams,
    conv: DistZConvention,
) -> Result<Extended> {
    let nu = if cp.nu > 0.0 { cp.nu } else { 1.0 };
    let mu = if regime == Regime::All0 { 0.0 } else { cp.mu };
    let mut d = dual_diagnostics(model, t, state, None, mu, nu, conv)?;
    if cp.nu <= 0.0 {
        d.dstar_nu_mu = f64::INFINITY;
    }
    contact_from_diag(model, regime, &state.z, &d, t_rate, rate, cp)
}

/// Maximal knot range with `t' < tol_jump`, covering `s` in `[s_start, s_end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpInterval {
    pub first_knot: usize,
    pub last_knot: usize,
    pub s_start: f64,
    pub s_end: f64,
}

pub fn detect_jumps(pt: &ParamTrajectory, tol_jump: f64) -> Vec<JumpInterval> {
    let mut out = Vec::new();
    let mut k = 1;
    while k < pt.len() {
        if pt.t_rate[k] < tol_jump {
            let a = k;
            while k + 1 < pt.len() && pt.t_rate[k + 1] < tol_jump {
                k += 1;
            }
            out.push(JumpInterval { first_knot: a, last_knot: k, s_start: pt.s[a - 1], s_end: pt.s[k] });
        }
        k += 1;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityEntry {
    pub knot: usize,
    pub magnitude: f64,
    pub in_jump: bool,
    pub stable: bool,
}

/// Per-knot stability; knots inside jumps are reported but never required stable.
pub fn stability_check(pt: &ParamTrajectory, regime: Regime, tol_stab: f64, tol_jump: f64) -> Vec<StabilityEntry> {
    (0..pt.len())
        .map(|k| {
            let magnitude = stability_magnitude(regime, &pt.diag[k]);
            let in_jump = k > 0 && pt.t_rate[k] < tol_jump;
            StabilityEntry { knot: k, magnitude, in_jump, stable: in_jump || magnitude <= tol_stab }
        })
        .collect()
}

/// Largest stability magnitude over non-jump knots `k >= 1`.
pub fn max_nonjump_magnitude(pt: &ParamTrajectory, regime: Regime, tol_jump: f64) -> f64 {
    stability_check(pt, regime, f64::INFINITY, tol_jump).iter().skip(1).filter(|e| !e.in_jump).map(|e| e.magnitude).fold(0.0, f64::max)
}

/// `sum ds M` and the limit-candidate balance residual along `pt`.
pub fn contact_balance(model: &Model, pt: &ParamTrajectory, regime: Regime, cp: &ContactParams, conv: DistZConvention) -> Result<(Extended, f64)> {
    let mu_e = if regime == Regime::All0 { 0.0 } else { cp.mu };
    let mut integral = Extended::Finite(0.0);
    let mut work = 0.0;
    let mut p_prev = model.energy_time_derivative(pt.t[0], &pt.states[0])?;
    for k in 1..pt.len() {
        let ds = pt.s[k] - pt.s[k - 1];
        let m = if regime == Regime::Visc {
            contact_from_diag(model, regime, &pt.states[k].z, &pt.diag[k], pt.t_rate[k], &pt.rates[k], cp)?
        } else {
            contact_potential(model, regime, pt.t[k], &pt.states[k], pt.t_rate[k], &pt.rates[k], cp, conv)?
        };
        integral = integral.plus(match m {
            Extended::Finite(v) => Extended::Finite(ds * v),
            Extended::PlusInfinity => Extended::PlusInfinity,
        });
        let p = model.energy_time_derivative(pt.t[k], &pt.states[k])?;
        work += 0.5 * (pt.t[k] - pt.t[k - 1]) * (p_prev + p);
        p_prev = p;
    }
    let e0 = model.energy(pt.t[0], &pt.states[0], mu_e)?;
    let e1 = model.energy(*pt.t.last().unwrap(), pt.states.last().unwrap(), mu_e)?;
    let res = match integral {
        Extended::Finite(v) => (e1 + v - e0 - work).abs(),
        Extended::PlusInfinity => f64::INFINITY,
    };
    Ok((integral, res))
}

/// One rung of a vanishing-parameter ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderLevel {
    pub eps: f64,
    pub nu: f64,
    pub mu: f64,
}

/// Builds the `(eps, nu, mu)` ladder of `regime` and checks its constraints.
pub fn build_ladder(regime: Regime, eps: &[f64], nu: f64, mu: f64, nu_factor: f64) -> Result<Vec<LadderLevel>> {
    if eps.is_empty() {
        return Err(Error::Regime("empty ladder".into()));
    }
    if eps.windows(2).any(|w| !(w[1] < w[0])) || eps.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Regime("ladder must be positive and strictly decreasing".into()));
    }
    let levels: Vec<LadderLevel> = eps
        .iter()
        .map(|&e| match regime {
            Regime::Visc | Regime::Eps0 => LadderLevel { eps: e, nu, mu },
            Regime::EpsNu0 => LadderLevel { eps: e, nu: nu_factor * e, mu },
            Regime::All0 => LadderLevel { eps: e, nu: e, mu: e },
        })
        .collect();
    if regime == Regime::Visc {
        return Err(Error::Regime("regime visc has no vanishing parameter".into()));
    }
    for l in &levels {
        if !(l.nu > 0.0) {
            return Err(Error::Regime(format!("nu = {} must be positive", l.nu)));
        }
        if regime != Regime::Eps0 && l.nu > l.mu * (1.0 + 1e-12) {
            return Err(Error::Regime(format!("nu = {} exceeds mu = {}", l.nu, l.mu)));
        }
    }
    Ok(levels)
}

#[derive(Debug, Clone)]
pub struct SweepProblem<'a> {
    pub model: &'a Model,
    pub regime: Regime,
    pub ladder: Vec<LadderLevel>,
    pub horizon: f64,
    pub n_steps: usize,
    pub driver: DriverOptions,
    pub tol_jump: f64,
    /// `tol_stab = factor * eps` at each level.
    pub tol_stab_factor: f64,
    pub dnu_args: DnuArgs,
}

#[derive(Debug, Clone)]
pub struct LevelReport {
    pub level: LadderLevel,
    pub balance_residual: f64,
    pub max_nonjump_magnitude: f64,
    pub max_nonjump_dstar: f64,
    pub tol_stab: f64,
    pub all_stable: bool,
    pub jumps: Vec<JumpInterval>,
    pub contact_integral: Extended,
    pub ed_residual: f64,
    pub total_length: f64,
    pub min_z: f64,
    pub enhanced_estimate: f64,
    pub max_normalization_dev: f64,
    pub max_switch_violation: f64,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub regime: Regime,
    pub levels: Vec<LevelReport>,
    /// Sup-distance between consecutive levels, full state.
    pub distances: Vec<f64>,
    /// Same, damage only.
    pub z_distances: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
    pub param_trajectories: Vec<ParamTrajectory>,
}

/// Curve sample on normalized arclength: `t`, free `u`, `z`, `p`.
fn sample(pt: &ParamTrajectory, model: &Model, sigma: f64) -> (f64, DVector<f64>, Vec<f64>, Vec<SymTensor2>) {
    let total = pt.total_length();
    let s = sigma * total;
    let k = match pt.s.iter().position(|&v| v >= s) {
        Some(0) => 1.min(pt.len() - 1),
        Some(k) => k,
        None => pt.len() - 1,
    };
    let g = &model.grid;
    if pt.len() == 1 {
        let st = &pt.states[0];
        return (pt.t[0], DVector::from_vec(g.restrict(&st.u)), st.z.clone(), st.p.clone());
    }
    let (s0, s1) = (pt.s[k - 1], pt.s[k]);
    let a = if s1 > s0 { ((s - s0) / (s1 - s0)).clamp(0.0, 1.0) } else { 1.0 };
    let (q0, q1) = (&pt.states[k - 1], &pt.states[k]);
    let lerp = |x: f64, y: f64| (1.0 - a) * x + a * y;
    let t = lerp(pt.t[k - 1], pt.t[k]);
    let u0 = DVector::from_vec(g.restrict(&q0.u));
    let u1 = DVector::from_vec(g.restrict(&q1.u));
    let u = (1.0 - a) * u0 + a * u1;
    let z = q0.z.iter().zip(&q1.z).map(|(x, y)| lerp(*x, *y)).collect();
    let p = q0.p.iter().zip(&q1.p).map(|(x, y)| (1.0 - a) * *x + a * *y).collect();
    (t, u, z, p)
}

/// Sup over the knots of `grid_pt` (normalized) of the distance between two curves;
/// returns (full, damage-only).
pub fn curve_distance(model: &Model, a: &ParamTrajectory, b: &ParamTrajectory, grid_pt: &ParamTrajectory) -> (f64, f64) {
    let total = grid_pt.total_length();
    let mut full: f64 = 0.0;
    let mut zonly: f64 = 0.0;
    for &s in &grid_pt.s {
        let sig = if total > 0.0 { s / total } else { 0.0 };
        let (ta, ua, za, pa) = sample(a, model, sig);
        let (tb, ub, zb, pb) = sample(b, model, sig);
        let dz: Vec<f64> = za.iter().zip(&zb).map(|(x, y)| x - y).collect();
        let dp: Vec<SymTensor2> = pa.iter().zip(&pb).map(|(x, y)| *x - *y).collect();
        let zn = model.norm_m(&dz);
        zonly = zonly.max(zn);
        full = full.max((ta - tb).abs() + zn + model.norm_kd(&(ua - ub)) + model.norm_l2(&dp));
    }
    (full, zonly)
}

fn run_level(prob: &SweepProblem, level: &LadderLevel) -> Result<(Trajectory, ParamTrajectory, LevelReport)> {
    let model = prob.model;
    let params = EnergyParams { eps: level.eps, nu: level.nu, mu: level.mu, tau: prob.horizon / prob.n_steps as f64, horizon: prob.horizon };
    let conv = prob.driver.solver.dist_z_convention;
    let traj = run_viscous(model, &params, &State::initial(&model.grid), &prob.driver)?;
    let pt = match prob.regime.arclength() {
        ArcLength::Standard => reparam_standard(model, &traj)?,
        ArcLength::EnergyDissipation => reparam_ed(model, &traj, prob.dnu_args)?,
    };
    let tol_stab = prob.tol_stab_factor * level.eps;
    let stab = stability_check(&pt, prob.regime, tol_stab, prob.tol_jump);
    let cp = ContactParams { eps: level.eps, nu: level.nu, mu: level.mu, tol_jump: prob.tol_jump, tol_zero: tol_stab };
    let (integral, ed_residual) = contact_balance(model, &pt, prob.regime, &cp, conv)?;
    let fits = recover_switching(model, &pt, prob.regime, conv)?;
    let rep = LevelReport {
        level: *level,
        balance_residual: traj.final_balance_residual(),
        max_nonjump_magnitude: max_nonjump_magnitude(&pt, prob.regime, prob.tol_jump),
        max_nonjump_dstar: max_nonjump_magnitude(&pt, Regime::Eps0, prob.tol_jump),
        tol_stab,
        all_stable: stab.iter().skip(1).all(|e| e.stable),
        jumps: detect_jumps(&pt, prob.tol_jump),
        contact_integral: integral,
        ed_residual,
        total_length: pt.total_length(),
        min_z: traj.records.iter().map(|r| r.min_z).fold(f64::INFINITY, f64::min),
        enhanced_estimate: traj.enhanced_estimate(),
        max_normalization_dev: pt.normalization.iter().skip(1).map(|v| (v - 1.0).abs()).fold(0.0, f64::max),
        max_switch_violation: fits.iter().map(|f| f.t_lambda.max(f.multi_violation)).fold(0.0, f64::max),
    };
    Ok((traj, pt, rep))
}

/// Runs every ladder level (up to `level_parallelism` at once) and compares the curves.
pub fn bv_sweep(prob: &SweepProblem, level_parallelism: usize) -> Result<SweepReport> {
    if prob.regime == Regime::Visc {
        return Err(Error::Regime("sweep needs a vanishing-parameter regime".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(level_parallelism.max(1))
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    let results: Vec<Result<(Trajectory, ParamTrajectory, LevelReport)>> =
        pool.install(|| prob.ladder.par_iter().map(|l| run_level(prob, l)).collect());
    let mut trajectories = Vec::new();
    let mut pts = Vec::new();
    let mut levels = Vec::new();
    for r in results {
        let (t, p, l) = r?;
        trajectories.push(t);
        pts.push(p);
        levels.push(l);
    }
    let finest = pts.last().expect("nonempty ladder");
    let mut distances = Vec::new();
    let mut z_distances = Vec::new();
    for w in pts.windows(2) {
        let (d, dz) = curve_distance(prob.model, &w[0], &w[1], finest);
        distances.push(d);
        z_distances.push(dz);
    }
    Ok(SweepReport { regime: prob.regime, levels, distances, z_distances, trajectories, param_trajectories: pts })
}

/// Data of the switching system at one knot.
#[derive(Debug, Clone)]
pub struct KnotData {
    pub grad: Gradient,
    pub z: Vec<f64>,
    pub rate: Rate,
    pub nu: f64,
    pub t_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingFit {
    pub lambda: f64,
    pub lambda_up: f64,
    pub lambda_z: f64,
    pub residual: f64,
    /// `t' lambda` (max over both multipliers in the multi-rate case).
    pub t_lambda: f64,
    /// `lambda_up (1 - lambda_z)`.
    pub multi_violation: f64,
}

fn residual_u(model: &Model, k: &KnotData, lam: f64, single: bool) -> f64 {
    let c = if single { k.nu } else { 1.0 };
    let r = lam * c * (&model.k_d * &k.rate.u) + (1.0 - lam) * &k.grad.u;
    model.dual_norm_kd(&r).powi(2)
}

fn residual_z(model: &Model, k: &KnotData, lam: f64) -> f64 {
    let g = &model.grid;
    let kappa = model.material.kappa;
    let zn = model.norm_m(&k.rate.z).max(1e-300);
    let mut acc = 0.0;
    for v in 0..g.n_nodes() {
        let zr = k.rate.z[v];
        let target = -(lam * zr + (1.0 - lam) * k.grad.z[v]);
        let bound = -(1.0 - lam) * kappa;
        let d = if zr.abs() <= 1e-12 * zn.max(1.0) { (bound - target).max(0.0) } else { target - bound };
        acc += g.node_weights[v] * d * d;
    }
    acc
}

fn residual_p(model: &Model, k: &KnotData, lam: f64, single: bool) -> f64 {
    let g = &model.grid;
    let c = if single { k.nu } else { 1.0 };
    let pn = model.norm_l2(&k.rate.p).max(1e-300);
    let mut acc = 0.0;
    for cell in 0..g.n_cells() {
        let pr = k.rate.p[cell];
        let target = -(lam * c * pr + (1.0 - lam) * k.grad.p[cell]);
        let v = (1.0 - lam) * yield_radius(&model.material, g.cell_average(&k.z, cell));
        let nr = pr.norm();
        let d = if nr <= 1e-12 * pn.max(1.0) { (target.norm() - v).max(0.0) } else { (target - (v / nr) * pr).norm() };
        acc += g.cell_weight * d * d;
    }
    acc
}

/// Minimizes a convex function on `[0, 1]`, preferring `0` on ties or when `f(0) <= floor`.
fn minimize_unit(f: impl Fn(f64) -> f64, floor: f64) -> f64 {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
        if b - a < 1e-14 {
            break;
        }
    }
    let mut best = 0.5 * (a + b);
    let mut fbest = f(best);
    let f1 = f(1.0);
    if f1 < fbest {
        best = 1.0;
        fbest = f1;
    }
    let f0 = f(0.0);
    if f0 <= floor || f0 <= fbest + 1e-14 * fbest.abs() {
        best = 0.0;
    }
    best
}

/// Least-squares fit of the switching multipliers at one knot.
pub fn fit_switching(model: &Model, k: &KnotData, multi_rate: bool) -> SwitchingFit {
    // Squared residuals at roundoff level count as an exact fit at lambda = 0.
    let floor = (1e-10 * model.scale()).powi(2);
    if !multi_rate {
        let f = |l: f64| residual_u(model, k, l, true) + residual_z(model, k, l) + residual_p(model, k, l, true);
        let lam = minimize_unit(f, floor);
        let res = f(lam).sqrt();
        SwitchingFit { lambda: lam, lambda_up: lam, lambda_z: lam, residual: res, t_lambda: k.t_rate * lam, multi_violation: 0.0 }
    } else {
        let fup = |l: f64| residual_u(model, k, l, false) + residual_p(model, k, l, false);
        let fz = |l: f64| residual_z(model, k, l);
        let lup = minimize_unit(fup, floor);
        let lz = minimize_unit(fz, floor);
        let res = (fup(lup) + fz(lz)).sqrt();
        SwitchingFit {
            lambda: lup.max(lz),
            lambda_up: lup,
            lambda_z: lz,
            residual: res,
            t_lambda: k.t_rate * lup.max(lz),
            multi_violation: lup * (1.0 - lz),
        }
    }
}

/// Switching multipliers at every knot `k >= 1` of `pt`.
pub fn recover_switching(model: &Model, pt: &ParamTrajectory, regime: Regime, _conv: DistZConvention) -> Result<Vec<SwitchingFit>> {
    let mu = if regime == Regime::All0 { 0.0 } else { pt.mu };
    (1..pt.len())
        .map(|k| {
            let grad = model.energy_gradients(pt.t[k], &pt.states[k], mu)?;
            let kd = KnotData { grad, z: pt.states[k].z.clone(), rate: pt.rates[k].clone(), nu: pt.nu, t_rate: pt.t_rate[k] };
            Ok(fit_switching(model, &kd, regime.multi_rate()))
        })
        .collect()
}
