//! Brute-force reference computations used by `selftest` and the acceptance run.
//!
//! Each oracle avoids the closed forms of the production code: grid search for
//! the prox (polar) and the stress distance, half-space projection for the damage
//! distance, conjugate gradients for the displacement conjugate and central
//! differences for the gradients.

use nalgebra::DVector;
use rand::Rng;

use crate::constitutive::{yield_radius, MaterialParams, Model};
use crate::discretization::{DirichletEdges, Grid, LoadingSpec, Profile, State, SymTensor2};
use crate::dissipation::{conj_visc_u, dist_h, dist_r, prox_plastic, DistZConvention};
use crate::error::Result;

/// Nested grid search for the minimizer of `f` on `[c - r, c + r]^2`.
///
/// Each level evaluates a `(2m+1)^2` lattice and recenters on the best point
/// with the box halved; the wide margin tolerates anisotropic objectives.
pub fn grid_argmin_2d(f: impl Fn(f64, f64) -> f64, center: [f64; 2], radius: f64, levels: usize) -> [f64; 2] {
    const M: i32 = 20;
    let mut c = center;
    let mut r = radius;
    for _ in 0..levels {
        let h = r / M as f64;
        let mut best = (f64::INFINITY, c);
        for i in -M..=M {
            for j in -M..=M {
                let x = [c[0] + i as f64 * h, c[1] + j as f64 * h];
                let v = f(x[0], x[1]);
                if v < best.0 {
                    best = (v, x);
                }
            }
        }
        c = best.1;
        r *= 0.5;
    }
    c
}

/// Objective of the cellwise plastic prox.
pub fn prox_objective(pi: &SymTensor2, p0: &SymTensor2, e_dev: &SymTensor2, a: f64, b: f64, mu_w: f64, c_q: f64) -> f64 {
    let d = *pi - *p0;
    let r = *e_dev - *pi;
    a * d.norm() + 0.5 * b * d.norm_sq() + 0.5 * mu_w * pi.norm_sq() + 0.5 * c_q * r.norm_sq()
}

/// Golden-section minimizer of a convex `f` on `[lo, hi]`.
fn golden_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    for _ in 0..90 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if f(c) <= f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let x = 0.5 * (a + b);
    // Endpoints win ties so a minimizer at the kink is found exactly.
    [(f(x), x), (f(lo), lo), (f(hi), hi)].into_iter().fold((f64::INFINITY, x), |m, v| if v.0 < m.0 { v } else { m })
}

/// Prox minimizer by search in polar coordinates around `p0`.
///
/// The radius is minimized exactly for each direction, so the cone at `p0`
/// sits on the boundary `rho = 0` instead of inside the search box.
pub fn prox_oracle(p0: &SymTensor2, e_dev: &SymTensor2, a: f64, b: f64, mu_w: f64, c_q: f64) -> SymTensor2 {
    // The minimizer lies in the hull of p0, 0 and e_dev.
    let rmax = 1.1 * (p0.norm() + (*e_dev - *p0).norm()) + 1e-3;
    let unit = std::f64::consts::FRAC_1_SQRT_2;
    let point = |th: f64, rho: f64| *p0 + SymTensor2::deviatoric(rho * unit * th.cos(), rho * unit * th.sin());
    let along = |th: f64| golden_1d(|rho| prox_objective(&point(th, rho), p0, e_dev, a, b, mu_w, c_q), 0.0, rmax);
    let mut best = (f64::INFINITY, 0.0, 0.0);
    let n0 = 180;
    for i in 0..n0 {
        let th = std::f64::consts::TAU * i as f64 / n0 as f64;
        let (v, rho) = along(th);
        if v < best.0 {
            best = (v, th, rho);
        }
    }
    let mut w = std::f64::consts::TAU / n0 as f64;
    for _ in 0..36 {
        let c = best.1;
        for j in -10..=10 {
            let th = c + w * j as f64 / 10.0;
            let (v, rho) = along(th);
            if v < best.0 {
                best = (v, th, rho);
            }
        }
        w *= 0.5;
    }
    point(best.1, best.2)
}

/// Distance of `chi` to the damage stable set by projection onto its half-spaces.
///
/// The set is read off the support function: `R` is finite only on rates with
/// `z'_i <= 0`, so each extreme ray `-e_i` contributes `-m_i gamma_i <= m_i kappa`.
pub fn dist_r_oracle(node_weights: &[f64], kappa: f64, chi: &[f64], conv: DistZConvention) -> f64 {
    let support = match conv {
        DistZConvention::Lemma => kappa,
        DistZConvention::PlusKappa => -kappa,
    };
    let mut gamma = chi.to_vec();
    // Dykstra over the half-spaces {gamma : <gamma, -e_i>_M <= m_i support}.
    let mut incr = vec![0.0; chi.len()];
    for _ in 0..50 {
        for i in 0..gamma.len() {
            let y = gamma[i] + incr[i];
            let proj = if -y <= support { y } else { -support };
            incr[i] = y - proj;
            gamma[i] = proj;
        }
    }
    gamma.iter().zip(chi).zip(node_weights).map(|((g, c), m)| m * (g - c).powi(2)).sum::<f64>().sqrt()
}

/// Cell-weighted stress distance by grid search over each disk.
pub fn dist_h_oracle(model: &Model, z: &[f64], omega: &[SymTensor2]) -> f64 {
    let g = &model.grid;
    let mut acc = 0.0;
    for (c, om) in omega.iter().enumerate() {
        let v = yield_radius(&model.material, g.cell_average(z, c));
        // Polar coordinates: the radius is boxed, the angle is left periodic.
        let at = |x: f64, y: f64| {
            let rho = 0.5 * v * (1.0 + x);
            let th = std::f64::consts::PI * (1.0 + y);
            let r = rho / std::f64::consts::SQRT_2;
            SymTensor2::deviatoric(r * th.cos(), r * th.sin())
        };
        let f = |x: f64, y: f64| if x.abs() > 1.0 { f64::INFINITY } else { (*om - at(x, y)).norm_sq() };
        let x = grid_argmin_2d(f, [0.0, 0.0], 1.0, 48);
        acc += g.cell_weight * (*om - at(x[0], x[1])).norm_sq();
    }
    acc.sqrt()
}

/// `sup_v <eta, v> - eps nu/2 v^T K_D v`, maximizer from conjugate gradients.
pub fn conj_visc_u_oracle(model: &Model, eta: &DVector<f64>, eps: f64, nu: f64) -> f64 {
    let k = &model.k_d;
    let en = eps * nu;
    let rhs = eta / en;
    let mut v = DVector::zeros(rhs.len());
    let mut r = rhs.clone();
    let mut d = r.clone();
    let mut rr = r.dot(&r);
    let stop = 1e-28 * rhs.dot(&rhs).max(1e-300);
    for _ in 0..10 * rhs.len().max(1) {
        if rr <= stop {
            break;
        }
        let kd = k * &d;
        let alpha = rr / d.dot(&kd);
        v += alpha * &d;
        r -= alpha * &kd;
        let rr_new = r.dot(&r);
        d = &r + (rr_new / rr) * &d;
        rr = rr_new;
    }
    eta.dot(&v) - 0.5 * en * v.dot(&(k * &v))
}

/// Max relative deviation of each analytic gradient from central differences.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GradientCheck {
    pub u: f64,
    pub z: f64,
    pub p: f64,
    pub t: f64,
}

impl GradientCheck {
    pub fn max(&self) -> f64 {
        self.u.max(self.z).max(self.p).max(self.t)
    }
}

fn rel_err(fd: &[f64], an: &[f64]) -> f64 {
    let scale = an.iter().chain(fd).fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    fd.iter().zip(an).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale
}

/// Compares all partial gradients and `d/dt E` with central differences of the energy.
pub fn gradient_check(model: &Model, t: f64, state: &State, mu: f64) -> Result<GradientCheck> {
    let g = &model.grid;
    let grad = model.energy_gradients(t, state, mu)?;
    let h = 1e-6;
    let e = |s: &State| model.energy(t, s, mu);

    let free = g.restrict(&state.u);
    let mut fd_u = Vec::with_capacity(free.len());
    for i in 0..free.len() {
        let mut a = free.clone();
        let mut b = free.clone();
        a[i] += h;
        b[i] -= h;
        let sa = State { u: g.extend(&a), ..state.clone() };
        let sb = State { u: g.extend(&b), ..state.clone() };
        fd_u.push((e(&sa)? - e(&sb)?) / (2.0 * h));
    }

    let mut fd_z = Vec::with_capacity(state.z.len());
    let mut an_z = Vec::with_capacity(state.z.len());
    for i in 0..state.z.len() {
        let mut sa = state.clone();
        let mut sb = state.clone();
        sa.z[i] += h;
        sb.z[i] -= h;
        fd_z.push((e(&sa)? - e(&sb)?) / (2.0 * h));
        an_z.push(g.node_weights[i] * grad.z[i]);
    }

    let mut fd_p = Vec::new();
    let mut an_p = Vec::new();
    for c in 0..state.p.len() {
        for dir in [SymTensor2::deviatoric(1.0, 0.0), SymTensor2::deviatoric(0.0, 1.0)] {
            let mut sa = state.clone();
            let mut sb = state.clone();
            sa.p[c] += h * dir;
            sb.p[c] = sb.p[c] - h * dir;
            fd_p.push((e(&sa)? - e(&sb)?) / (2.0 * h));
            an_p.push(g.cell_weight * grad.p[c].dot(&dir));
        }
    }

    let ht = h.min(0.5 * t).min(0.5 * (model.loading.horizon - t)).max(1e-9);
    let fd_t = (model.energy(t + ht, state, mu)? - model.energy(t - ht, state, mu)?) / (2.0 * ht);
    let an_t = model.energy_time_derivative(t, state)?;

    Ok(GradientCheck {
        u: rel_err(&fd_u, grad.u.as_slice()),
        z: rel_err(&fd_z, &an_z),
        p: rel_err(&fd_p, &an_p),
        t: rel_err(&[fd_t], &[an_t]),
    })
}

fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}

pub fn random_deviatoric<R: Rng>(rng: &mut R, r: f64) -> SymTensor2 {
    SymTensor2::deviatoric(uniform(rng, -r, r), uniform(rng, -r, r))
}

/// Loaded model on an `n x n` grid with random boundary data and nodal forces.
pub fn random_model<R: Rng>(rng: &mut R, n: usize) -> Result<Model> {
    let grid = Grid::new(n, DirichletEdges::LeftRight)?;
    let nn = grid.n_nodes();
    let mut gd = vec![[0.0; 2]; nn];
    let right = [uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)];
    for j in 0..n {
        gd[j * n + n - 1] = right;
    }
    let f0 = (0..nn)
        .map(|v| if grid.dirichlet[v] { [0.0; 2] } else { [uniform(rng, -0.1, 0.1), uniform(rng, -0.1, 0.1)] })
        .collect();
    let load = LoadingSpec::from_dirichlet(&grid, &gd, f0, Profile::Ramp, Profile::Sin, 1.0)?;
    let material = MaterialParams { kappa: uniform(rng, 0.05, 1.0), sigma_y: uniform(rng, 0.5, 2.0), ..MaterialParams::default() };
    Model::new(grid, material, load)
}

/// Random admissible state with `z` in `[0.2, 0.95]`.
pub fn random_state<R: Rng>(rng: &mut R, grid: &Grid) -> State {
    let free: Vec<f64> = (0..grid.n_free()).map(|_| uniform(rng, -0.3, 0.3)).collect();
    State {
        u: grid.extend(&free),
        z: (0..grid.n_nodes()).map(|_| uniform(rng, 0.2, 0.95)).collect(),
        p: (0..grid.n_cells()).map(|_| random_deviatoric(rng, 0.2)).collect(),
    }
}

/// Outcome of one oracle comparison suite.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub name: &'static str,
    pub trials: usize,
    pub max_error: f64,
    pub tol: f64,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tol
    }
}

pub fn prox_suite<R: Rng>(rng: &mut R, trials: usize) -> Result<OracleReport> {
    let mut max_error: f64 = 0.0;
    for i in 0..trials {
        let p0 = random_deviatoric(rng, 1.0);
        let e = random_deviatoric(rng, 1.0);
        let a = if i % 7 == 0 { 0.0 } else { uniform(rng, 0.0, 2.0) };
        let b = if i % 5 == 0 { 0.0 } else { uniform(rng, 0.0, 2.0) };
        let mu_w = uniform(rng, 0.0, 1.0);
        let c_q = uniform(rng, 0.1, 3.0);
        let fast = prox_plastic(&p0, &e, a, b, mu_w, c_q)?;
        let slow = prox_oracle(&p0, &e, a, b, mu_w, c_q);
        max_error = max_error.max((fast - slow).norm());
    }
    Ok(OracleReport { name: "prox_plastic", trials, max_error, tol: 1e-6 })
}

pub fn dist_r_suite<R: Rng>(rng: &mut R, trials: usize) -> OracleReport {
    let mut max_error: f64 = 0.0;
    for i in 0..trials {
        let n = rng.gen_range(1..20);
        let w: Vec<f64> = (0..n).map(|_| uniform(rng, 0.01, 1.0)).collect();
        let chi: Vec<f64> = (0..n).map(|_| uniform(rng, -3.0, 3.0)).collect();
        let kappa = uniform(rng, 0.0, 2.0);
        let conv = if i % 2 == 0 { DistZConvention::Lemma } else { DistZConvention::PlusKappa };
        max_error = max_error.max((dist_r(&w, kappa, &chi, conv) - dist_r_oracle(&w, kappa, &chi, conv)).abs());
    }
    OracleReport { name: "dist_r", trials, max_error, tol: 1e-6 }
}

pub fn dist_h_suite<R: Rng>(rng: &mut R, trials: usize) -> Result<OracleReport> {
    let model = random_model(rng, 3)?;
    let g = &model.grid;
    let mut max_error: f64 = 0.0;
    for _ in 0..trials {
        let z: Vec<f64> = (0..g.n_nodes()).map(|_| uniform(rng, 0.1, 1.0)).collect();
        let omega: Vec<SymTensor2> = (0..g.n_cells()).map(|_| random_deviatoric(rng, 2.0)).collect();
        max_error = max_error.max((dist_h(&model, &z, &omega)? - dist_h_oracle(&model, &z, &omega)).abs());
    }
    Ok(OracleReport { name: "dist_h", trials, max_error, tol: 1e-6 })
}

pub fn conj_suite<R: Rng>(rng: &mut R, trials: usize) -> Result<OracleReport> {
    let models = [random_model(rng, 3)?, random_model(rng, 4)?];
    let mut max_error: f64 = 0.0;
    for i in 0..trials {
        let model = &models[i % 2];
        let eta = DVector::from_fn(model.grid.n_free(), |_, _| uniform(rng, -1.0, 1.0));
        let eps = uniform(rng, 0.01, 1.0);
        let nu = uniform(rng, 0.01, 1.0);
        let fast = conj_visc_u(model, &eta, eps, nu).value();
        let slow = conj_visc_u_oracle(model, &eta, eps, nu);
        max_error = max_error.max((fast - slow).abs() / fast.abs().max(1.0));
    }
    Ok(OracleReport { name: "conj_visc_u", trials, max_error, tol: 1e-6 })
}

/// Gradient checks on `trials` random states for each grid size.
pub fn gradient_suite<R: Rng>(rng: &mut R, trials: usize, sizes: &[usize]) -> Result<OracleReport> {
    let mut max_error: f64 = 0.0;
    let mut count = 0;
    for &n in sizes {
        let model = random_model(rng, n)?;
        for _ in 0..trials {
            let state = random_state(rng, &model.grid);
            let t = uniform(rng, 0.05, 0.95);
            let mu = uniform(rng, 0.0, 1.0);
            max_error = max_error.max(gradient_check(&model, t, &state, mu)?.max());
            count += 1;
        }
    }
    Ok(OracleReport { name: "gradients", trials: count, max_error, tol: 1e-5 })
}

/// All oracle suites at selftest sizes.
pub fn selftest<R: Rng>(rng: &mut R) -> Result<Vec<OracleReport>> {
    Ok(vec![
        prox_suite(rng, 200)?,
        dist_r_suite(rng, 200),
        dist_h_suite(rng, 50)?,
        conj_suite(rng, 200)?,
        gradient_suite(rng, 20, &[3, 5])?,
    ])
}
