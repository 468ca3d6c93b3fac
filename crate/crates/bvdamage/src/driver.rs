//! Viscous trajectories on a uniform partition and their Energy-Dissipation bookkeeping.

use crate::constitutive::{EnergyParams, Model};
use crate::discretization::{State, SymTensor2};
use crate::dissipation::{d_nu, dual_diagnostics, h_total, r_total, DistZConvention, DualDiagnostics, Rate};
use crate::error::{Error, Result};
use crate::solver::{incremental_step, prerelax, ElResiduals, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverOptions {
    pub solver: SolverOptions,
    /// Relax `u` to equilibrium at `t = 0` before stepping.
    pub prerelax: bool,
}

impl Default for DriverOptions {
    fn default() -> Self {
        DriverOptions { solver: SolverOptions::default(), prerelax: true }
    }
}

/// Per-knot record; entry 0 describes the initial state with zero rates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepRecord {
    pub t: f64,
    pub energy: f64,
    /// `N` at `(t_k, q_k, (q_k - q_{k-1})/tau)`.
    pub n_value: f64,
    /// `d/dt E_mu(t_k, q_k)`.
    pub power: f64,
    pub psi_value: f64,
    pub dual: DualDiagnostics,
    pub el: ElResiduals,
    pub balance_residual_cum: f64,
    /// Signed cumulative balance defect.
    pub balance_defect: f64,
    pub work_cum: f64,
    pub dissipation_cum: f64,
    /// One-step slack `J(q_{k-1}) - J(q_k)` of the incremental functional.
    pub slack: f64,
    pub min_z: f64,
    pub norm_u_h1: f64,
    pub norm_z_hm: f64,
    pub norm_p_l1: f64,
    pub norm_p_l2: f64,
    pub norm_e_l2: f64,
    pub iterations: usize,
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: EnergyParams,
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub records: Vec<StepRecord>,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn n_steps(&self) -> usize {
        self.times.len().saturating_sub(1)
    }

    pub fn final_state(&self) -> &State {
        self.states.last().expect("trajectory has an initial state")
    }

    /// Cumulative balance residual at the final time.
    pub fn final_balance_residual(&self) -> f64 {
        self.records.last().map(|r| r.balance_residual_cum).unwrap_or(0.0)
    }

    /// Backward-difference rate at knot `k >= 1`.
    pub fn rate(&self, model: &Model, k: usize) -> Rate {
        Rate::between(&model.grid, &self.states[k - 1], &self.states[k], self.times[k] - self.times[k - 1])
    }

    /// `sum tau (|e'| + |z'|_Hm + sqrt(mu) |u'|_H1 + sqrt(mu) |p'|)`.
    pub fn enhanced_estimate(&self) -> f64 {
        let sm = self.params.mu.sqrt();
        (1..self.records.len())
            .map(|k| {
                let r = &self.records[k];
                (self.times[k] - self.times[k - 1]) * (r.norm_e_l2 + r.norm_z_hm + sm * r.norm_u_h1 + sm * r.norm_p_l2)
            })
            .sum()
    }
}

/// Elastic strain `B(u + w(t)) - p` per cell.
pub fn elastic_strain(model: &Model, t: f64, state: &State) -> Result<Vec<SymTensor2>> {
    let load = model.load(t)?;
    let e = model.b.apply(&model.grid, &crate::discretization::add_fields(&state.u, &load.w));
    Ok(e.iter().zip(&state.p).map(|(a, b)| *a - *b).collect())
}

/// `N = R(z') + H(z, p') + eps D_nu(q')^2`.
pub fn n_value(model: &Model, state: &State, rate: &Rate, eps: f64, nu: f64) -> f64 {
    let r = r_total(model, &rate.z).value();
    r + h_total(model, &state.z, &rate.p) + eps * d_nu(model, rate, nu).powi(2)
}

fn rate_norms(model: &Model, rate: &Rate, e_rate: &[SymTensor2], rec: &mut StepRecord) {
    rec.norm_u_h1 = model.norm_kd(&rate.u);
    rec.norm_z_hm = model.norm_hm(&rate.z);
    rec.norm_p_l1 = model.norm_l1(&rate.p);
    rec.norm_p_l2 = model.norm_l2(&rate.p);
    rec.norm_e_l2 = model.norm_l2(e_rate);
}

/// Runs `n_steps` incremental steps on `[0, T]` from `init`.
pub fn run_viscous(model: &Model, params: &EnergyParams, init: &State, opts: &DriverOptions) -> Result<Trajectory> {
    params.validate(false)?;
    init.validate(&model.grid)?;
    let conv = opts.solver.dist_z_convention;
    let n = params.n_steps();
    let tau = params.horizon / n as f64;
    let q0 = if opts.prerelax { prerelax(model, init, 0.0, params.mu)? } else { init.clone() };
    let e0 = model.energy(0.0, &q0, params.mu)?;
    let p0 = model.energy_time_derivative(0.0, &q0)?;
    let first = StepRecord {
        t: 0.0,
        energy: e0,
        power: p0,
        dual: dual_diagnostics(model, 0.0, &q0, None, params.mu, params.nu, conv)?,
        min_z: q0.z.iter().cloned().fold(f64::INFINITY, f64::min),
        accepted: true,
        ..StepRecord::default()
    };
    let mut traj = Trajectory { params: *params, times: vec![0.0], states: vec![q0], records: vec![first], warnings: Vec::new() };
    let mut strain_prev = elastic_strain(model, 0.0, &traj.states[0])?;
    for k in 1..=n {
        // Avoid drift in t_N by recomputing from k.
        let t_k = if k == n { params.horizon } else { k as f64 * tau };
        let prev = traj.states[k - 1].clone();
        let step = incremental_step(model, t_k, &prev, &EnergyParams { tau, ..*params }, &opts.solver)?;
        for w in &step.warnings {
            traj.warnings.push(format!("step {k}: {w}"));
        }
        if !step.accepted {
            return Err(Error::StepRejected {
                step: k,
                reason: format!("EL residual {:.3e} after {} sweeps", step.el_residuals.max(), step.iterations),
            });
        }
        let q = step.new_state;
        let rate = Rate::between(&model.grid, &prev, &q, t_k - traj.times[k - 1]);
        let strain = elastic_strain(model, t_k, &q)?;
        let e_rate: Vec<SymTensor2> = strain.iter().zip(&strain_prev).map(|(a, b)| (1.0 / tau) * (*a - *b)).collect();
        let last = traj.records[k - 1];
        let mut rec = StepRecord {
            t: t_k,
            energy: model.energy(t_k, &q, params.mu)?,
            n_value: n_value(model, &q, &rate, params.eps, params.nu),
            power: model.energy_time_derivative(t_k, &q)?,
            dual: dual_diagnostics(model, t_k, &q, Some(&rate), params.mu, params.nu, conv)?,
            el: step.el_residuals,
            slack: step.decrease,
            min_z: q.z.iter().cloned().fold(f64::INFINITY, f64::min),
            iterations: step.iterations,
            accepted: true,
            ..StepRecord::default()
        };
        rec.psi_value = crate::dissipation::psi_total(model, &q, &rate, params.eps, params.nu).value();
        rate_norms(model, &rate, &e_rate, &mut rec);
        let dt = t_k - last.t;
        rec.work_cum = last.work_cum + 0.5 * dt * (last.power + rec.power);
        rec.dissipation_cum = last.dissipation_cum + dt * rec.n_value;
        rec.balance_defect = rec.energy + rec.dissipation_cum - e0 - rec.work_cum;
        rec.balance_residual_cum = rec.balance_defect.abs();
        traj.times.push(t_k);
        traj.states.push(q);
        traj.records.push(rec);
        strain_prev = strain;
    }
    Ok(traj)
}

/// Per-step and cumulative balance residuals recomputed from the stored states.
pub fn balance_residual(model: &Model, traj: &Trajectory) -> Result<(Vec<f64>, f64)> {
    let params = &traj.params;
    let e0 = model.energy(0.0, &traj.states[0], params.mu)?;
    let mut diss = 0.0;
    let mut work = 0.0;
    let mut p_prev = model.energy_time_derivative(0.0, &traj.states[0])?;
    let mut per_step = vec![0.0];
    let mut cum = 0.0;
    for k in 1..traj.times.len() {
        let dt = traj.times[k] - traj.times[k - 1];
        let rate = traj.rate(model, k);
        diss += dt * n_value(model, &traj.states[k], &rate, params.eps, params.nu);
        let p = model.energy_time_derivative(traj.times[k], &traj.states[k])?;
        work += 0.5 * dt * (p_prev + p);
        p_prev = p;
        cum = (model.energy(traj.times[k], &traj.states[k], params.mu)? + diss - e0 - work).abs();
        per_step.push(cum);
    }
    Ok((per_step, cum))
}

/// Convenience wrapper used by sweeps and the CLI: default convention, uniform steps.
pub fn run_with_convention(model: &Model, params: &EnergyParams, opts: &DriverOptions, conv: DistZConvention) -> Result<Trajectory> {
    let mut o = *opts;
    o.solver.dist_z_convention = conv;
    run_viscous(model, params, &State::initial(&model.grid), &o)
}
