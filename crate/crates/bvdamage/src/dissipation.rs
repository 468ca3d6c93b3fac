//! Dissipation potentials, their conjugates, distances to the stable sets and
//! the plastic proximal map.

use nalgebra::DVector;

use crate::constitutive::{yield_radius, Gradient, Model};
use crate::discretization::{Grid, State, SymTensor2};
use crate::error::{Error, Result};

/// Value in `[0, +inf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    PlusInfinity,
}

impl Extended {
    pub fn is_finite(&self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    /// Value as `f64`, with `+inf` mapped to `f64::INFINITY`.
    pub fn value(&self) -> f64 {
        match self {
            Extended::Finite(v) => *v,
            Extended::PlusInfinity => f64::INFINITY,
        }
    }

    pub fn plus(self, o: Extended) -> Extended {
        match (self, o) {
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a + b),
            _ => Extended::PlusInfinity,
        }
    }
}

/// Which reading of the damage stability distance is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistZConvention {
    /// Distance of `chi` to `{gamma >= -kappa}`.
    Lemma,
    /// Distance of `chi` to `{gamma >= kappa}`.
    PlusKappa,
}

impl DistZConvention {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lemma" => Some(Self::Lemma),
            "plus_kappa" => Some(Self::PlusKappa),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Lemma => "lemma",
            Self::PlusKappa => "plus_kappa",
        }
    }
}

/// Rates `(u', z', p')`; `u` on free DOFs.
#[derive(Debug, Clone, PartialEq)]
pub struct Rate {
    pub u: DVector<f64>,
    pub z: Vec<f64>,
    pub p: Vec<SymTensor2>,
}

impl Rate {
    pub fn zero(grid: &Grid) -> Rate {
        Rate { u: DVector::zeros(grid.n_free()), z: vec![0.0; grid.n_nodes()], p: vec![SymTensor2::ZERO; grid.n_cells()] }
    }

    /// Backward difference `(next - prev) / dt`.
    pub fn between(grid: &Grid, prev: &State, next: &State, dt: f64) -> Rate {
        let du: Vec<f64> = grid.free_dofs.iter().map(|&g| (next.u[g / 2][g % 2] - prev.u[g / 2][g % 2]) / dt).collect();
        Rate {
            u: DVector::from_vec(du),
            z: next.z.iter().zip(&prev.z).map(|(a, b)| (a - b) / dt).collect(),
            p: next.p.iter().zip(&prev.p).map(|(a, b)| (1.0 / dt) * (*a - *b)).collect(),
        }
    }

    pub fn scaled(&self, a: f64) -> Rate {
        Rate { u: a * &self.u, z: self.z.iter().map(|v| a * v).collect(), p: self.p.iter().map(|t| a * *t).collect() }
    }
}

/// `R(z') = sum_i m_i kappa |z'_i|`, `+inf` if any `z'_i > 0`.
pub fn r_total(model: &Model, z_rate: &[f64]) -> Extended {
    let mut acc = 0.0;
    for (zr, m) in z_rate.iter().zip(&model.grid.node_weights) {
        if *zr > 0.0 {
            return Extended::PlusInfinity;
        }
        acc += m * model.material.kappa * zr.abs();
    }
    Extended::Finite(acc)
}

/// `H(z, p') = sum_c w_c V(z_c) |p'_c|`.
pub fn h_total(model: &Model, z: &[f64], p_rate: &[SymTensor2]) -> f64 {
    let g = &model.grid;
    (0..g.n_cells()).map(|c| g.cell_weight * yield_radius(&model.material, g.cell_average(z, c)) * p_rate[c].norm()).sum()
}

/// `D_nu(q') = sqrt(nu |u'|_KD^2 + |z'|_M^2 + nu |p'|^2)`.
pub fn d_nu(model: &Model, rate: &Rate, nu: f64) -> f64 {
    (nu * model.norm_kd(&rate.u).powi(2) + model.norm_m(&rate.z).powi(2) + nu * model.norm_l2(&rate.p).powi(2)).sqrt()
}

/// Two-argument reading `sqrt(nu |u'|_KD^2 + nu |p'|^2)`.
pub fn d_nu_up(model: &Model, rate: &Rate, nu: f64) -> f64 {
    (nu * model.norm_kd(&rate.u).powi(2) + nu * model.norm_l2(&rate.p).powi(2)).sqrt()
}

/// `D(u', p') = sqrt(|u'|_KD^2 + |p'|^2)`.
pub fn d_up(model: &Model, rate: &Rate) -> f64 {
    (model.norm_kd(&rate.u).powi(2) + model.norm_l2(&rate.p).powi(2)).sqrt()
}

/// `Psi_{eps,nu}(q, q')`.
pub fn psi_total(model: &Model, state: &State, rate: &Rate, eps: f64, nu: f64) -> Extended {
    let r = r_total(model, &rate.z);
    let h = h_total(model, &state.z, &rate.p);
    let visc = 0.5 * eps * d_nu(model, rate, nu).powi(2);
    r.plus(Extended::Finite(h + visc))
}

/// `V*_{eps,nu}(eta) = eta^T K_D^-1 eta / (2 eps nu)`.
pub fn conj_visc_u(model: &Model, eta: &DVector<f64>, eps: f64, nu: f64) -> Extended {
    let q = if eta.is_empty() { 0.0 } else { eta.dot(&model.k_d_solve(eta)).max(0.0) };
    let en = eps * nu;
    if en > 0.0 {
        Extended::Finite(q / (2.0 * en))
    } else if q == 0.0 {
        Extended::Finite(0.0)
    } else {
        Extended::PlusInfinity
    }
}

/// Lumped distance of `chi` to the damage stable set.
pub fn dist_r(node_weights: &[f64], kappa: f64, chi: &[f64], conv: DistZConvention) -> f64 {
    let bound = match conv {
        DistZConvention::Lemma => -kappa,
        DistZConvention::PlusKappa => kappa,
    };
    chi.iter().zip(node_weights).map(|(c, m)| m * (bound - c).max(0.0).powi(2)).sum::<f64>().sqrt()
}

/// Cell-weighted distance of `omega` to the balls of radius `V(z_c)`.
pub fn dist_h(model: &Model, z: &[f64], omega: &[SymTensor2]) -> Result<f64> {
    let g = &model.grid;
    let mut acc = 0.0;
    for (c, om) in omega.iter().enumerate() {
        if om.tr().abs() > 1e-10 {
            return Err(Error::TraceViolation(om.tr()));
        }
        let v = yield_radius(&model.material, g.cell_average(z, c));
        acc += g.cell_weight * (om.norm() - v).max(0.0).powi(2);
    }
    Ok(acc.sqrt())
}

/// Stability and rate functionals at one state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DualDiagnostics {
    pub dual_u: f64,
    pub dist_z: f64,
    pub dist_p: f64,
    pub d_nu: f64,
    pub dstar_nu_mu: f64,
    pub d_up: f64,
    pub dstar_mu: f64,
    pub dstar0: f64,
}

/// Diagnostics from a precomputed gradient; `sigma_dev` feeds the perfect-plasticity surrogate.
pub fn diagnostics_from_gradient(
    model: &Model,
    state: &State,
    grad: &Gradient,
    sigma_dev: &[SymTensor2],
    rate: Option<&Rate>,
    nu: f64,
    conv: DistZConvention,
) -> Result<DualDiagnostics> {
    if !(nu > 0.0) {
        return Err(Error::Regime("D_nu^{*,mu} needs nu > 0".into()));
    }
    let dual_u = model.dual_norm_kd(&grad.u);
    let chi: Vec<f64> = grad.z.iter().map(|g| -g).collect();
    let dist_z = dist_r(&model.grid.node_weights, model.material.kappa, &chi, conv);
    let omega: Vec<SymTensor2> = grad.p.iter().map(|g| -*g).collect();
    let dist_p = dist_h(model, &state.z, &omega)?;
    let dist_p0 = dist_h(model, &state.z, sigma_dev)?;
    let (dn, dup) = match rate {
        Some(r) => (d_nu(model, r, nu), d_up(model, r)),
        None => (0.0, 0.0),
    };
    Ok(DualDiagnostics {
        dual_u,
        dist_z,
        dist_p,
        d_nu: dn,
        dstar_nu_mu: (dual_u * dual_u / nu + dist_z * dist_z + dist_p * dist_p / nu).sqrt(),
        d_up: dup,
        dstar_mu: (dual_u * dual_u + dist_p * dist_p).sqrt(),
        dstar0: (dual_u * dual_u + dist_p0 * dist_p0).sqrt(),
    })
}

/// Computes all stability distances of `state` at time `t`.
pub fn dual_diagnostics(
    model: &Model,
    t: f64,
    state: &State,
    rate: Option<&Rate>,
    mu: f64,
    nu: f64,
    conv: DistZConvention,
) -> Result<DualDiagnostics> {
    let load = model.load(t)?;
    let cf = model.cell_fields(state, &load);
    let grad = model.gradients_from_fields(state, &load, &cf, mu);
    let sd: Vec<SymTensor2> = cf.sigma.iter().map(|s| s.dev()).collect();
    diagnostics_from_gradient(model, state, &grad, &sd, rate, nu, conv)
}

/// `Psi*_{eps,nu}(q, -DE)`: conjugate of the full dissipation at the negative gradient.
pub fn psi_conj(model: &Model, state: &State, grad: &Gradient, eps: f64, nu: f64, conv: DistZConvention) -> Result<Extended> {
    let vu = conj_visc_u(model, &(-&grad.u), eps, nu);
    let chi: Vec<f64> = grad.z.iter().map(|g| -g).collect();
    let dz = dist_r(&model.grid.node_weights, model.material.kappa, &chi, conv);
    let omega: Vec<SymTensor2> = grad.p.iter().map(|g| -*g).collect();
    let dp = dist_h(model, &state.z, &omega)?;
    let rz = if eps > 0.0 {
        Extended::Finite(dz * dz / (2.0 * eps))
    } else if dz == 0.0 {
        Extended::Finite(0.0)
    } else {
        Extended::PlusInfinity
    };
    let hp = if eps * nu > 0.0 {
        Extended::Finite(dp * dp / (2.0 * eps * nu))
    } else if dp == 0.0 {
        Extended::Finite(0.0)
    } else {
        Extended::PlusInfinity
    };
    Ok(vu.plus(rz).plus(hp))
}

/// Exact minimizer of
/// `a |pi - p0| + b/2 |pi - p0|^2 + mu_w/2 |pi|^2 + c_q/2 |e_dev - pi|^2`
/// over deviatoric `pi`.
pub fn prox_plastic(p0: &SymTensor2, e_dev: &SymTensor2, a: f64, b: f64, mu_w: f64, c_q: f64) -> Result<SymTensor2> {
    let k = b + mu_w + c_q;
    if !(k > 0.0) || b < 0.0 || mu_w < 0.0 || c_q < 0.0 {
        return Err(Error::InvalidParam { name: "prox modulus", reason: format!("b + mu + c_q = {k} must be positive") });
    }
    if !(a >= 0.0) {
        return Err(Error::InvalidParam { name: "prox radius", reason: format!("a = {a} must be nonnegative") });
    }
    if p0.tr().abs() > 1e-10 || e_dev.tr().abs() > 1e-10 {
        return Err(Error::TraceViolation(p0.tr() + e_dev.tr()));
    }
    let hat = (1.0 / k) * (b * *p0 + c_q * *e_dev);
    let d = hat - *p0;
    let nd = d.norm();
    if nd * k <= a {
        return Ok(*p0);
    }
    let shrink = 1.0 - a / (k * nd);
    Ok(*p0 + shrink * d)
}
