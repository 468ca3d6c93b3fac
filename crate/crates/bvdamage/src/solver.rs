//! One step of the time-incremental scheme, solved by alternating
//! u -> p -> z sweeps.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::constitutive::{damage_potential, damage_potential_second, yield_radius, yield_radius_slope, EnergyParams, Model};
use crate::discretization::{LoadEval, State, SymTensor2};
use crate::dissipation::{h_total, prox_plastic, DistZConvention};
use crate::error::{Error, Result};

/// Tolerances and limits of the incremental solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stationarity tolerance relative to `Model::scale`.
    pub tol_stat: f64,
    pub max_iter: usize,
    /// Lower guard for the damage variable.
    pub z_floor: f64,
    pub dist_z_convention: DistZConvention,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol_stat: 1e-8, max_iter: 500, z_floor: 1e-8, dist_z_convention: DistZConvention::Lemma }
    }
}

/// Residuals of the discrete Euler-Lagrange system.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ElResiduals {
    pub r_u: f64,
    pub r_z: f64,
    pub r_p: f64,
}

impl ElResiduals {
    pub fn max(&self) -> f64 {
        self.r_u.max(self.r_z).max(self.r_p)
    }
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub new_state: State,
    pub iterations: usize,
    pub functional_value: f64,
    pub el_residuals: ElResiduals,
    /// Functional at the competitor `q_{k-1}` minus the final value.
    pub decrease: f64,
    /// Functional decrease achieved by each sweep.
    pub sweep_decreases: Vec<f64>,
    pub accepted: bool,
    pub warnings: Vec<String>,
}

/// Incremental functional `E(t_k, q) + tau Psi(q, (q - q_prev)/tau)`; `+inf` if `z > z_prev`.
pub fn incremental_functional(model: &Model, t_k: f64, prev: &State, q: &State, params: &EnergyParams) -> Result<f64> {
    let g = &model.grid;
    let mut r = 0.0;
    let mut zz = 0.0;
    for v in 0..g.n_nodes() {
        let dz = q.z[v] - prev.z[v];
        if dz > 0.0 {
            return Ok(f64::INFINITY);
        }
        r += g.node_weights[v] * model.material.kappa * (-dz);
        zz += g.node_weights[v] * dz * dz;
    }
    let du = DVector::from_vec(g.free_dofs.iter().map(|&d| q.u[d / 2][d % 2] - prev.u[d / 2][d % 2]).collect());
    let dp: Vec<SymTensor2> = q.p.iter().zip(&prev.p).map(|(a, b)| *a - *b).collect();
    let (eps, nu, tau) = (params.eps, params.nu, params.tau);
    let visc = eps / (2.0 * tau) * (nu * model.norm_kd(&du).powi(2) + zz + nu * model.norm_l2(&dp).powi(2));
    let h = h_total(model, &q.z, &dp);
    Ok(model.energy(t_k, q, params.mu)? + visc + r + h)
}

/// Solves the `u`-subproblem exactly for fixed `(z, p)`.
pub fn solve_u_step(model: &Model, state: &State, prev: &State, load: &LoadEval, params: &EnergyParams) -> Result<Vec<[f64; 2]>> {
    let g = &model.grid;
    if g.n_free() == 0 {
        return Ok(vec![[0.0; 2]; g.n_nodes()]);
    }
    let mat = &model.material;
    let coef: Vec<f64> = (0..g.n_cells()).map(|c| g.cell_weight * mat.stiffness_coef(g.cell_average(&state.z, c))).collect();
    let visc = params.eps * params.nu / params.tau;
    let mut k = model.b.assemble_free(g, &mat.c0_form(), &coef);
    if visc > 0.0 {
        k += visc * &model.k_d;
    }
    let bw = model.b.apply(g, &load.w);
    let sig: Vec<SymTensor2> = state.p.iter().zip(&bw).map(|(p, e)| mat.c0_apply(&(*p - *e))).collect();
    let bt = model.b.apply_transpose(g, &sig, &coef);
    let mut rhs = DVector::from_vec(g.restrict(&bt)) + DVector::from_vec(g.restrict(&load.f));
    if visc > 0.0 {
        let up = DVector::from_vec(g.restrict(&prev.u));
        rhs += visc * (&model.k_d * up);
    }
    let ch = Cholesky::new(k).ok_or_else(|| Error::Factorization("displacement system is not SPD".into()))?;
    let sol = ch.solve(&rhs);
    Ok(g.extend(sol.as_slice()))
}

/// Cellwise plastic update by the exact proximal map.
pub fn solve_p_step(model: &Model, state: &State, prev: &State, load: &LoadEval, params: &EnergyParams) -> Result<Vec<SymTensor2>> {
    let g = &model.grid;
    let mat = &model.material;
    let uw: Vec<[f64; 2]> = state.u.iter().zip(&load.w).map(|(a, b)| [a[0] + b[0], a[1] + b[1]]).collect();
    let b = params.eps * params.nu / params.tau;
    (0..g.n_cells())
        .map(|c| {
            let ebar = model.b.apply_cell(g, &uw, c);
            let zc = g.cell_average(&state.z, c);
            let cq = 2.0 * mat.lame_mu * mat.stiffness_coef(zc);
            prox_plastic(&prev.p[c], &ebar.dev(), yield_radius(mat, zc), b, params.mu, cq)
        })
        .collect()
}

/// Outcome of the damage subproblem.
#[derive(Debug, Clone)]
pub struct ZStep {
    pub z: Vec<f64>,
    pub iterations: usize,
    /// `|z - P(z - g)|_M` with `g` the density gradient.
    pub stationarity: f64,
    pub converged: bool,
    pub floor_active: bool,
}

/// Convex damage subproblem with `(u, p)` frozen.
#[derive(Debug, Clone)]
pub struct ZProblem<'a> {
    model: &'a Model,
    z_prev: Vec<f64>,
    lo: f64,
    /// `C0 e : e` per cell.
    s: Vec<f64>,
    /// `|p - p_prev|` per cell.
    hp: Vec<f64>,
    eps_tau: f64,
}

impl<'a> ZProblem<'a> {
    pub fn new(model: &'a Model, state: &State, prev: &State, load: &LoadEval, params: &EnergyParams, z_floor: f64) -> Self {
        let g = &model.grid;
        let uw: Vec<[f64; 2]> = state.u.iter().zip(&load.w).map(|(a, b)| [a[0] + b[0], a[1] + b[1]]).collect();
        let s = (0..g.n_cells()).map(|c| model.material.c0_energy(&(model.b.apply_cell(g, &uw, c) - state.p[c]))).collect();
        let hp = state.p.iter().zip(&prev.p).map(|(a, b)| (*a - *b).norm()).collect();
        ZProblem { model, z_prev: prev.z.clone(), lo: z_floor, s, hp, eps_tau: params.eps / params.tau }
    }

    pub fn upper(&self) -> &[f64] {
        &self.z_prev
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        let g = &self.model.grid;
        let mat = &self.model.material;
        let mut j = 0.0;
        for v in 0..g.n_nodes() {
            let dz = z[v] - self.z_prev[v];
            let m = g.node_weights[v];
            j += m * (0.5 * self.eps_tau * dz * dz - mat.kappa * dz);
            j += m * damage_potential(mat, z[v]).map(|w| w.0).unwrap_or(f64::INFINITY);
        }
        let zv = DVector::from_column_slice(z);
        j += 0.5 * zv.dot(&(&self.model.a_m * &zv));
        for c in 0..g.n_cells() {
            let zc = g.cell_average(z, c);
            j += g.cell_weight * (0.5 * mat.stiffness_coef(zc) * self.s[c] + yield_radius(mat, zc) * self.hp[c]);
        }
        j
    }

    /// Euclidean gradient.
    pub fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let g = &self.model.grid;
        let mat = &self.model.material;
        let zv = DVector::from_column_slice(z);
        let az = &self.model.a_m * &zv;
        let mut out = vec![0.0; g.n_nodes()];
        for v in 0..g.n_nodes() {
            let m = g.node_weights[v];
            let dw = damage_potential(mat, z[v]).map(|w| w.1).unwrap_or(f64::NEG_INFINITY);
            out[v] = az[v] + m * (self.eps_tau * (z[v] - self.z_prev[v]) - mat.kappa + dw);
        }
        for (c, cell) in g.cells.iter().enumerate() {
            let zc = g.cell_average(z, c);
            let d = 0.5 * mat.stiffness_coef_deriv(zc) * self.s[c] + yield_radius_slope(mat, zc) * self.hp[c];
            for &v in cell {
                out[v] += 0.25 * g.cell_weight * d;
            }
        }
        out
    }

    pub fn hessian(&self, z: &[f64]) -> DMatrix<f64> {
        let g = &self.model.grid;
        let mat = &self.model.material;
        let mut h = self.model.a_m.clone();
        for v in 0..g.n_nodes() {
            h[(v, v)] += g.node_weights[v] * (self.eps_tau + damage_potential_second(mat, z[v]));
        }
        for (c, cell) in g.cells.iter().enumerate() {
            let zc = g.cell_average(z, c);
            let k = g.cell_weight / 16.0 * 0.5 * mat.stiffness_coef_second(zc) * self.s[c];
            for &a in cell {
                for &b in cell {
                    h[(a, b)] += k;
                }
            }
        }
        h
    }

    fn project(&self, z: &mut [f64]) {
        for (v, zi) in z.iter_mut().enumerate() {
            *zi = zi.clamp(self.lo, self.z_prev[v].max(self.lo));
        }
    }

    /// Projected-gradient stationarity in the lumped norm.
    pub fn stationarity(&self, z: &[f64], grad: &[f64]) -> f64 {
        let g = &self.model.grid;
        let mut acc = 0.0;
        for v in 0..g.n_nodes() {
            let m = g.node_weights[v];
            let trial = (z[v] - grad[v] / m).clamp(self.lo, self.z_prev[v].max(self.lo));
            acc += m * (z[v] - trial).powi(2);
        }
        acc.sqrt()
    }

    /// Bertsekas-type projected Newton method on the box `[z_floor, z_prev]`.
    pub fn solve(&self, z0: &[f64], tol: f64, max_iter: usize) -> ZStep {
        let g = &self.model.grid;
        let nn = g.n_nodes();
        let mut z = z0.to_vec();
        self.project(&mut z);
        let mut grad = self.gradient(&z);
        let mut stat = self.stationarity(&z, &grad);
        let mut val = self.value(&z);
        let mut it = 0;
        while stat > tol && it < max_iter {
            it += 1;
            let delta = stat.min(1e-6);
            let active: Vec<bool> = (0..nn)
                .map(|v| {
                    let hi = self.z_prev[v].max(self.lo);
                    (z[v] - self.lo <= delta && grad[v] > 0.0) || (hi - z[v] <= delta && grad[v] < 0.0)
                })
                .collect();
            let free: Vec<usize> = (0..nn).filter(|&v| !active[v]).collect();
            let hess = self.hessian(&z);
            let mut dir = vec![0.0; nn];
            for v in 0..nn {
                if active[v] {
                    dir[v] = -grad[v] / hess[(v, v)].max(1e-300);
                }
            }
            if !free.is_empty() {
                let nf = free.len();
                let hf = DMatrix::from_fn(nf, nf, |a, b| hess[(free[a], free[b])]);
                let gf = DVector::from_fn(nf, |a, _| -grad[free[a]]);
                let sol = match Cholesky::new(hf.clone()) {
                    Some(ch) => ch.solve(&gf),
                    None => {
                        let shift = 1e-12 * hf.diagonal().amax().max(1.0);
                        let hs = hf + DMatrix::identity(nf, nf) * shift;
                        match Cholesky::new(hs) {
                            Some(ch) => ch.solve(&gf),
                            None => DVector::from_fn(nf, |a, _| gf[a] / hess[(free[a], free[a])].max(1e-300)),
                        }
                    }
                };
                for (a, &v) in free.iter().enumerate() {
                    dir[v] = sol[a];
                }
            }
            let mut alpha = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let mut trial: Vec<f64> = z.iter().zip(&dir).map(|(a, d)| a + alpha * d).collect();
                self.project(&mut trial);
                let slope: f64 = grad.iter().zip(trial.iter().zip(&z)).map(|(g, (t, a))| g * (t - a)).sum();
                let tv = self.value(&trial);
                let armijo = slope < 0.0 && tv <= val + 1e-4 * slope;
                // Near the solution value differences drown in roundoff; fall back on stationarity.
                let flat = (tv - val).abs() <= 1e-13 * val.abs().max(1.0)
                    && self.stationarity(&trial, &self.gradient(&trial)) < 0.5 * stat;
                if armijo || flat {
                    z = trial;
                    val = tv;
                    moved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !moved {
                // Fall back to a plain projected-gradient step.
                let mut step = 1.0;
                for _ in 0..80 {
                    let mut trial: Vec<f64> = (0..nn).map(|v| z[v] - step * grad[v] / g.node_weights[v]).collect();
                    self.project(&mut trial);
                    let slope: f64 = grad.iter().zip(trial.iter().zip(&z)).map(|(g, (t, a))| g * (t - a)).sum();
                    let tv = self.value(&trial);
                    if slope < 0.0 && tv <= val + 1e-4 * slope {
                        z = trial;
                        val = tv;
                        moved = true;
                        break;
                    }
                    step *= 0.5;
                }
            }
            grad = self.gradient(&z);
            stat = self.stationarity(&z, &grad);
            if !moved {
                break;
            }
        }
        let floor_active = z.iter().any(|&v| v <= self.lo);
        ZStep { z, iterations: it, stationarity: stat, converged: stat <= tol, floor_active }
    }
}

/// Solves the damage subproblem for fixed `(u, p)`.
pub fn solve_z_step(model: &Model, state: &State, prev: &State, load: &LoadEval, params: &EnergyParams, opts: &SolverOptions) -> ZStep {
    let zp = ZProblem::new(model, state, prev, load, params, opts.z_floor);
    zp.solve(&state.z, 0.1 * opts.tol_stat * model.scale(), 200)
}

/// Residual of the displacement equation in the dual `K_D` norm.
pub fn residual_u(model: &Model, state: &State, prev: &State, load: &LoadEval, params: &EnergyParams) -> f64 {
    let cf = model.cell_fields(state, load);
    let grad = model.gradients_from_fields(state, load, &cf, params.mu);
    let g = &model.grid;
    let du = DVector::from_vec(g.restrict(&state.u)) - DVector::from_vec(g.restrict(&prev.u));
    let visc = params.eps * params.nu / params.tau;
    let r = grad.u + visc * (&model.k_d * du);
    model.dual_norm_kd(&r)
}

/// Fixed-point gap of the plastic prox, in stress units.
pub fn residual_p(model: &Model, state: &State, prev: &State, load: &LoadEval, params: &EnergyParams) -> Result<f64> {
    let g = &model.grid;
    let pstar = solve_p_step(model, state, prev, load, params)?;
    let b = params.eps * params.nu / params.tau;
    let mut acc = 0.0;
    for c in 0..g.n_cells() {
        let zc = g.cell_average(&state.z, c);
        let k = b + params.mu + 2.0 * model.material.lame_mu * model.material.stiffness_coef(zc);
        acc += g.cell_weight * (k * (state.p[c] - pstar[c]).norm()).powi(2);
    }
    Ok(acc.sqrt())
}

/// Relaxes `u` to equilibrium at time `t` with `(z, p)` frozen and no viscosity.
pub fn prerelax(model: &Model, state: &State, t: f64, mu: f64) -> Result<State> {
    let load = model.load(t)?;
    let params = EnergyParams { eps: 0.0, nu: 0.0, mu, tau: 1.0, horizon: model.loading.horizon };
    let u = solve_u_step(model, state, state, &load, &params)?;
    Ok(State { u, ..state.clone() })
}

/// One incremental step from `(t_k - tau, prev)` to `t_k`.
pub fn incremental_step(model: &Model, t_k: f64, prev: &State, params: &EnergyParams, opts: &SolverOptions) -> Result<StepResult> {
    let load = model.load(t_k)?;
    let tol = opts.tol_stat * model.scale();
    let mut q = prev.clone();
    let j0 = incremental_functional(model, t_k, prev, &q, params)?;
    let mut j_old = j0;
    let mut decreases = Vec::new();
    let mut warnings = Vec::new();
    let mut res = ElResiduals::default();
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=opts.max_iter {
        iterations = it;
        q.u = solve_u_step(model, &q, prev, &load, params)?;
        q.p = solve_p_step(model, &q, prev, &load, params)?;
        let zs = solve_z_step(model, &q, prev, &load, params, opts);
        if zs.floor_active && !warnings.iter().any(|w: &String| w.starts_with("z_floor")) {
            warnings.push(format!("z_floor active at t = {t_k}"));
        }
        q.z = zs.z;
        let j_new = incremental_functional(model, t_k, prev, &q, params)?;
        decreases.push(j_old - j_new);
        j_old = j_new;
        res = ElResiduals {
            r_u: residual_u(model, &q, prev, &load, params),
            r_z: zs.stationarity,
            r_p: residual_p(model, &q, prev, &load, params)?,
        };
        if res.max() <= tol {
            converged = true;
            break;
        }
    }
    let decrease = j0 - j_old;
    let monotone = decreases.iter().all(|&d| d >= -1e-10 * model.scale().max(j0.abs()));
    if !monotone {
        warnings.push("non-monotone sweep".into());
    }
    Ok(StepResult {
        new_state: q,
        iterations,
        functional_value: j_old,
        el_residuals: res,
        decrease,
        sweep_decreases: decreases,
        accepted: converged && monotone,
        warnings,
    })
}
