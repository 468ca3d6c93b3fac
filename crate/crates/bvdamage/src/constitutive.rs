//! Constitutive laws, the energy `E_mu` and its derivatives.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::discretization::{
    add_fields, assemble_nonlocal_form, assemble_sym_gradient, dot_fields, total_strain, Grid, LoadEval, LoadingSpec, State,
    SymGradOp, SymTensor2, FROBENIUS_FORM,
};
use crate::error::{Error, Result};

/// Material constants.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialParams {
    pub lame_lambda: f64,
    pub lame_mu: f64,
    /// Residual stiffness of the fully damaged material.
    pub delta_reg: f64,
    /// Yield radius of the undamaged material.
    pub sigma_y: f64,
    /// Yield softening floor, `V(0) = m_bar * sigma_y`.
    pub m_bar: f64,
    /// Damage toughness.
    pub kappa: f64,
    pub w0: f64,
    pub q_exp: f64,
    /// Order of the nonlocal damage regularization.
    pub m_order: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams {
            lame_lambda: 1.0,
            lame_mu: 1.0,
            delta_reg: 0.05,
            sigma_y: 1.0,
            m_bar: 0.5,
            kappa: 1.0,
            w0: 0.1,
            q_exp: 5.0,
            m_order: 1.5,
        }
    }
}

fn param_err(name: &'static str, reason: &str) -> Error {
    Error::InvalidParam { name, reason: reason.to_string() }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.lame_mu) {
            return Err(param_err("lame_mu", "must be positive"));
        }
        if !pos(self.lame_lambda) {
            return Err(param_err("lame_lambda", "must be positive"));
        }
        if !(self.delta_reg > 0.0 && self.delta_reg < 1.0) {
            return Err(param_err("delta_reg", "must lie in (0,1)"));
        }
        if !pos(self.sigma_y) {
            return Err(param_err("sigma_y", "must be positive"));
        }
        if !(self.m_bar > 0.0 && self.m_bar < 1.0) {
            return Err(param_err("m_bar", "must lie in (0,1)"));
        }
        if !pos(self.kappa) {
            return Err(param_err("kappa", "must be positive"));
        }
        if !pos(self.w0) {
            return Err(param_err("w0", "must be positive"));
        }
        if !(self.q_exp > 4.0) {
            return Err(param_err("q_exp", "must exceed 4"));
        }
        if !(self.m_order > 1.0) {
            return Err(param_err("m_order", "must exceed 1"));
        }
        if !(self.gamma1() > 0.0 && self.gamma2().is_finite()) {
            return Err(param_err("lame_lambda", "elastic tensor is not uniformly elliptic"));
        }
        Ok(())
    }

    /// Lower ellipticity constant of `C(z)`.
    pub fn gamma1(&self) -> f64 {
        self.delta_reg * (2.0 * self.lame_mu).min(2.0 * self.lame_mu + 2.0 * self.lame_lambda)
    }

    /// Upper ellipticity constant of `C(z)`.
    pub fn gamma2(&self) -> f64 {
        (1.0 + self.delta_reg) * (2.0 * self.lame_mu).max(2.0 * self.lame_mu + 2.0 * self.lame_lambda)
    }

    /// Lipschitz constant of the yield radius in `z`.
    pub fn c_k(&self) -> f64 {
        self.sigma_y * (1.0 - self.m_bar)
    }

    /// `delta_reg + min(z,1)^2`.
    pub fn stiffness_coef(&self, z: f64) -> f64 {
        let zc = z.min(1.0);
        self.delta_reg + zc * zc
    }

    /// Derivative of the stiffness coefficient; at `z = 1` the left derivative is used.
    pub fn stiffness_coef_deriv(&self, z: f64) -> f64 {
        if z <= 1.0 {
            2.0 * z
        } else {
            0.0
        }
    }

    pub fn stiffness_coef_second(&self, z: f64) -> f64 {
        if z <= 1.0 {
            2.0
        } else {
            0.0
        }
    }

    /// Undamaged isotropic tensor: `2 mu xi + lambda tr(xi) I`.
    pub fn c0_apply(&self, xi: &SymTensor2) -> SymTensor2 {
        2.0 * self.lame_mu * *xi + SymTensor2::iso(self.lame_lambda * xi.tr())
    }

    /// `C0 xi : xi`.
    pub fn c0_energy(&self, xi: &SymTensor2) -> f64 {
        let t = xi.tr();
        2.0 * self.lame_mu * xi.norm_sq() + self.lame_lambda * t * t
    }

    /// Quadratic form of `C0` in `(xx, yy, xy)` components.
    pub fn c0_form(&self) -> [[f64; 3]; 3] {
        let (l, m) = (self.lame_lambda, self.lame_mu);
        [[2.0 * m + l, l, 0.0], [l, 2.0 * m + l, 0.0], [0.0, 0.0, 4.0 * m]]
    }
}

/// `C(z) xi`.
pub fn elastic_tensor_apply(mat: &MaterialParams, z: f64, xi: &SymTensor2) -> Result<SymTensor2> {
    if z < 0.0 {
        return Err(Error::NegativeDamage(z));
    }
    Ok(mat.stiffness_coef(z) * mat.c0_apply(xi))
}

/// `C'(z) xi`.
pub fn elastic_tensor_deriv_apply(mat: &MaterialParams, z: f64, xi: &SymTensor2) -> Result<SymTensor2> {
    if z < 0.0 {
        return Err(Error::NegativeDamage(z));
    }
    Ok(mat.stiffness_coef_deriv(z) * mat.c0_apply(xi))
}

/// `(W(z), W'(z))` for `W = w0 z^-q`.
pub fn damage_potential(mat: &MaterialParams, z: f64) -> Result<(f64, f64)> {
    if z <= 0.0 {
        return Err(Error::DamageNonPositive { node: usize::MAX, value: z });
    }
    let w = mat.w0 * z.powf(-mat.q_exp);
    Ok((w, -mat.q_exp * w / z))
}

pub fn damage_potential_second(mat: &MaterialParams, z: f64) -> f64 {
    mat.q_exp * (mat.q_exp + 1.0) * mat.w0 * z.powf(-mat.q_exp - 2.0)
}

/// Radius `V(z)` of the admissible deviatoric stress ball.
pub fn yield_radius(mat: &MaterialParams, z: f64) -> f64 {
    mat.sigma_y * (mat.m_bar + (1.0 - mat.m_bar) * z.clamp(0.0, 1.0))
}

/// Slope of `V`; left derivative at `z = 1`.
pub fn yield_radius_slope(mat: &MaterialParams, z: f64) -> f64 {
    if (0.0..=1.0).contains(&z) {
        mat.c_k()
    } else {
        0.0
    }
}

/// Plastic dissipation density `H(z, pi) = V(z) |pi|`.
pub fn plastic_density(mat: &MaterialParams, z: f64, pi: &SymTensor2) -> Result<f64> {
    if pi.tr().abs() > 1e-10 {
        return Err(Error::TraceViolation(pi.tr()));
    }
    Ok(yield_radius(mat, z) * pi.norm())
}

/// Regularization parameters and time discretization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    pub eps: f64,
    pub nu: f64,
    pub mu: f64,
    pub tau: f64,
    pub horizon: f64,
}

impl EnergyParams {
    pub fn validate(&self, require_nu_le_mu: bool) -> Result<()> {
        if !(self.eps >= 0.0 && self.nu >= 0.0 && self.mu >= 0.0) {
            return Err(param_err("eps", "eps, nu, mu must be nonnegative"));
        }
        if !(self.tau > 0.0) {
            return Err(param_err("tau", "must be positive"));
        }
        if !(self.horizon > 0.0) {
            return Err(param_err("T", "must be positive"));
        }
        if require_nu_le_mu && self.nu > 0.0 && self.mu > 0.0 && self.nu > self.mu {
            return Err(param_err("nu", "nu <= mu is required in the uniform-estimate regime"));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon / self.tau).round() as usize
    }
}

/// Nodal/cell gradients of the energy.
///
/// `u` is the Euclidean gradient on free DOFs; `z` and `p` are densities with
/// respect to the lumped nodal and the cell quadrature weights.
#[derive(Debug, Clone)]
pub struct Gradient {
    pub u: DVector<f64>,
    pub z: Vec<f64>,
    pub p: Vec<SymTensor2>,
}

/// Individual energy contributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    pub elastic: f64,
    pub damage: f64,
    pub hardening: f64,
    pub nonlocal: f64,
    pub work: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.elastic + self.damage + self.hardening + self.nonlocal - self.work
    }
}

/// Cell-level fields derived from a state at one instant.
#[derive(Debug, Clone)]
pub struct CellFields {
    pub e: Vec<SymTensor2>,
    pub zc: Vec<f64>,
    pub sigma: Vec<SymTensor2>,
}

/// Assembled discrete model: grid, operators, material and loading.
#[derive(Debug, Clone)]
pub struct Model {
    pub grid: Grid,
    pub b: SymGradOp,
    pub a_m: DMatrix<f64>,
    /// `sum_c w_c B_c^T B_c` on free DOFs.
    pub k_d: DMatrix<f64>,
    pub k_d_chol: Option<Cholesky<f64, Dyn>>,
    pub material: MaterialParams,
    pub loading: LoadingSpec,
}

impl Model {
    pub fn new(grid: Grid, material: MaterialParams, loading: LoadingSpec) -> Result<Model> {
        material.validate()?;
        if !grid.dirichlet.iter().any(|&d| d) {
            return Err(Error::InvalidGrid("empty Dirichlet boundary".into()));
        }
        let b = assemble_sym_gradient(&grid);
        let a_m = assemble_nonlocal_form(&grid, material.m_order)?;
        let w = vec![grid.cell_weight; grid.n_cells()];
        let k_d = b.assemble_free(&grid, &FROBENIUS_FORM, &w);
        let k_d_chol = if grid.n_free() == 0 {
            None
        } else {
            Some(Cholesky::new(k_d.clone()).ok_or_else(|| Error::Factorization("viscous metric K_D is singular".into()))?)
        };
        Ok(Model { grid, b, a_m, k_d, k_d_chol, material, loading })
    }

    /// Problem scale used to normalize solver tolerances.
    pub fn scale(&self) -> f64 {
        self.material.gamma2().max(1.0)
    }

    pub fn load(&self, t: f64) -> Result<LoadEval> {
        self.loading.eval(t)
    }

    pub fn cell_fields(&self, state: &State, load: &LoadEval) -> CellFields {
        let e = total_strain(&self.grid, &self.b, state, &load.w);
        let zc: Vec<f64> = (0..self.grid.n_cells()).map(|c| self.grid.cell_average(&state.z, c)).collect();
        let sigma = e.iter().zip(&zc).map(|(e, &z)| self.material.stiffness_coef(z) * self.material.c0_apply(e)).collect();
        CellFields { e, zc, sigma }
    }

    fn check_z(&self, state: &State) -> Result<()> {
        for (v, &zi) in state.z.iter().enumerate() {
            if !(zi > 0.0) {
                return Err(Error::DamageNonPositive { node: v, value: zi });
            }
        }
        Ok(())
    }

    pub fn energy_parts(&self, t: f64, state: &State, mu: f64) -> Result<EnergyParts> {
        self.check_z(state)?;
        let load = self.load(t)?;
        let cf = self.cell_fields(state, &load);
        let wc = self.grid.cell_weight;
        let elastic: f64 = cf.e.iter().zip(&cf.sigma).map(|(e, s)| 0.5 * wc * s.dot(e)).sum();
        let mut damage = 0.0;
        for (zi, mi) in state.z.iter().zip(&self.grid.node_weights) {
            damage += mi * damage_potential(&self.material, *zi)?.0;
        }
        let hardening: f64 = state.p.iter().map(|p| 0.5 * mu * wc * p.norm_sq()).sum();
        let z = DVector::from_column_slice(&state.z);
        let nonlocal = 0.5 * z.dot(&(&self.a_m * &z));
        let work = dot_fields(&load.f, &add_fields(&state.u, &load.w));
        Ok(EnergyParts { elastic, damage, hardening, nonlocal, work })
    }

    /// `E_mu(t, q)`.
    pub fn energy(&self, t: f64, state: &State, mu: f64) -> Result<f64> {
        Ok(self.energy_parts(t, state, mu)?.total())
    }

    pub fn energy_gradients(&self, t: f64, state: &State, mu: f64) -> Result<Gradient> {
        self.check_z(state)?;
        let load = self.load(t)?;
        let cf = self.cell_fields(state, &load);
        Ok(self.gradients_from_fields(state, &load, &cf, mu))
    }

    pub(crate) fn gradients_from_fields(&self, state: &State, load: &LoadEval, cf: &CellFields, mu: f64) -> Gradient {
        let grid = &self.grid;
        let wc = vec![grid.cell_weight; grid.n_cells()];
        let bt = self.b.apply_transpose(grid, &cf.sigma, &wc);
        let gu_full: Vec<[f64; 2]> = bt.iter().zip(&load.f).map(|(a, f)| [a[0] - f[0], a[1] - f[1]]).collect();
        let gu = DVector::from_vec(grid.restrict(&gu_full));

        let z = DVector::from_column_slice(&state.z);
        let az = &self.a_m * &z;
        let mut gz_dual: Vec<f64> = (0..grid.n_nodes()).map(|v| az[v]).collect();
        for v in 0..grid.n_nodes() {
            let (_, dw) = damage_potential(&self.material, state.z[v]).expect("z checked positive");
            gz_dual[v] += grid.node_weights[v] * dw;
        }
        for (c, cell) in grid.cells.iter().enumerate() {
            let drive = 0.5 * self.material.stiffness_coef_deriv(cf.zc[c]) * self.material.c0_energy(&cf.e[c]);
            for &v in cell {
                gz_dual[v] += 0.25 * grid.cell_weight * drive;
            }
        }
        let gz = gz_dual.iter().zip(&grid.node_weights).map(|(g, m)| g / m).collect();
        let gp = state.p.iter().zip(&cf.sigma).map(|(p, s)| mu * *p - s.dev()).collect();
        Gradient { u: gu, z: gz, p: gp }
    }

    /// `d/dt E_mu(t, q)` at fixed `q`.
    pub fn energy_time_derivative(&self, t: f64, state: &State) -> Result<f64> {
        self.check_z(state)?;
        let load = self.load(t)?;
        let cf = self.cell_fields(state, &load);
        let ew = self.b.apply(&self.grid, &load.w_rate);
        let wc = self.grid.cell_weight;
        let stress_power: f64 = cf.sigma.iter().zip(&ew).map(|(s, e)| wc * s.dot(e)).sum();
        let uw = add_fields(&state.u, &load.w);
        Ok(stress_power - dot_fields(&load.f_rate, &uw) - dot_fields(&load.f, &load.w_rate))
    }

    /// Solves `K_D x = b` on free DOFs.
    pub fn k_d_solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        match &self.k_d_chol {
            Some(ch) => ch.solve(rhs),
            None => DVector::zeros(0),
        }
    }

    /// `sqrt(v^T K_D v)` for a free-DOF vector.
    pub fn norm_kd(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.k_d * v)).max(0.0).sqrt()
    }

    /// Dual norm `sqrt(g^T K_D^-1 g)`.
    pub fn dual_norm_kd(&self, g: &DVector<f64>) -> f64 {
        if g.is_empty() {
            return 0.0;
        }
        g.dot(&self.k_d_solve(g)).max(0.0).sqrt()
    }

    /// Lumped `L^2` norm of a nodal scalar.
    pub fn norm_m(&self, z: &[f64]) -> f64 {
        z.iter().zip(&self.grid.node_weights).map(|(v, m)| m * v * v).sum::<f64>().sqrt()
    }

    /// `sqrt(z^T M z + z^T A_m z)`.
    pub fn norm_hm(&self, z: &[f64]) -> f64 {
        let zv = DVector::from_column_slice(z);
        let nl = zv.dot(&(&self.a_m * &zv)).max(0.0);
        (self.norm_m(z).powi(2) + nl).sqrt()
    }

    /// Cell `L^2` norm of a tensor field.
    pub fn norm_l2(&self, p: &[SymTensor2]) -> f64 {
        (self.grid.cell_weight * p.iter().map(|t| t.norm_sq()).sum::<f64>()).sqrt()
    }

    /// Cell `L^1` norm of a tensor field.
    pub fn norm_l1(&self, p: &[SymTensor2]) -> f64 {
        self.grid.cell_weight * p.iter().map(|t| t.norm()).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{DirichletEdges, Profile};

    #[test]
    fn elastic_example() {
        let mat = MaterialParams::default();
        let r = elastic_tensor_apply(&mat, 1.0, &SymTensor2::new(1.0, 0.0, 0.0)).unwrap();
        assert!((r.xx - 1.05 * 3.0).abs() < 1e-14);
        assert!((r.yy - 1.05).abs() < 1e-14);
        assert_eq!(r.xy, 0.0);
        assert!(elastic_tensor_apply(&mat, -0.1, &r).is_err());
    }

    #[test]
    fn damage_potential_values() {
        let mat = MaterialParams::default();
        let (w, dw) = damage_potential(&mat, 1.0).unwrap();
        assert!((w - 0.1).abs() < 1e-15 && (dw + 0.5).abs() < 1e-15);
        let r = damage_potential(&mat, 0.25).unwrap().0 / damage_potential(&mat, 0.5).unwrap().0;
        assert!((r - 32.0).abs() < 1e-12);
        let h = 1e-6;
        let fd = (damage_potential(&mat, 1.0 + h).unwrap().0 - damage_potential(&mat, 1.0 - h).unwrap().0) / (2.0 * h);
        assert!((fd - dw).abs() < 1e-6);
        assert!(damage_potential(&mat, 0.0).is_err());
    }

    #[test]
    fn yield_radius_values() {
        let mat = MaterialParams { sigma_y: 1.0, m_bar: 0.5, ..Default::default() };
        assert_eq!(yield_radius(&mat, 1.0), 1.0);
        assert_eq!(yield_radius(&mat, 0.0), 0.5);
        assert_eq!(yield_radius(&mat, 2.0), 1.0);
    }

    #[test]
    fn energy_examples() {
        let grid = Grid::new(3, DirichletEdges::Left).unwrap();
        let nn = grid.n_nodes();
        let mat = MaterialParams::default();
        let lift: Vec<[f64; 2]> = grid.coords.iter().map(|x| [x[0], 0.0]).collect();
        let loading = LoadingSpec::with_lift(&grid, lift, vec![[0.0; 2]; nn], Profile::Const, Profile::Zero, 1.0).unwrap();
        let model = Model::new(grid.clone(), mat.clone(), LoadingSpec::zero(&grid, 1.0)).unwrap();
        let s = State::initial(&grid);
        assert!((model.energy(0.0, &s, 0.3).unwrap() - 0.1).abs() < 1e-14);
        let model = Model::new(grid, mat, loading).unwrap();
        assert!((model.energy(0.5, &s, 0.3).unwrap() - 1.675).abs() < 1e-12);
    }
}
