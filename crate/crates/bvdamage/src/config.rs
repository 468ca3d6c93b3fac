//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::constitutive::{EnergyParams, MaterialParams, Model};
use crate::discretization::{DirichletEdges, Grid, LoadingSpec, Profile};
use crate::dissipation::DistZConvention;
use crate::driver::DriverOptions;
use crate::error::{Error, Result};
use crate::reparam::{build_ladder, DnuArgs, LadderLevel, Regime, SweepProblem};
use crate::solver::SolverOptions;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub dirichlet: DirichletEdges,
    pub material: MaterialParams,
    pub eps: f64,
    pub nu: f64,
    pub mu: f64,
    pub horizon: f64,
    pub n_steps: usize,
    pub gd_left: [f64; 2],
    pub gd_right: [f64; 2],
    pub theta: Profile,
    pub phi: Profile,
    /// Body force density, lumped to the nodes.
    pub body_force: [f64; 2],
    /// Traction on the right edge.
    pub edge_force_right: [f64; 2],
    pub tol_stat: f64,
    pub max_iter: usize,
    pub z_floor: f64,
    pub prerelax: bool,
    pub dist_z_convention: DistZConvention,
    pub ed_dnu_args: DnuArgs,
    pub regime: Regime,
    pub ladder_eps: Vec<f64>,
    pub nu_factor: f64,
    pub tol_jump: f64,
    pub tol_stab_factor: f64,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 4,
            dirichlet: DirichletEdges::LeftRight,
            material: MaterialParams::default(),
            eps: 1e-2,
            nu: 1e-2,
            mu: 1e-2,
            horizon: 1.0,
            n_steps: 20,
            gd_left: [0.0; 2],
            gd_right: [1.0, 0.0],
            theta: Profile::Ramp,
            phi: Profile::Zero,
            body_force: [0.0; 2],
            edge_force_right: [0.0; 2],
            tol_stat: 1e-8,
            max_iter: 500,
            z_floor: 1e-8,
            prerelax: true,
            dist_z_convention: DistZConvention::Lemma,
            ed_dnu_args: DnuArgs::Full,
            regime: Regime::Eps0,
            ladder_eps: vec![1e-1, 1e-2, 1e-3],
            nu_factor: 1.0,
            tol_jump: 1e-3,
            tol_stab_factor: 10.0,
            out: None,
            seed: 0,
        }
    }
}

fn cfg_err(key: &str, msg: impl Into<String>) -> Error {
    Error::Config { key: key.to_string(), msg: msg.into() }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v.parse().map_err(|_| cfg_err(key, format!("`{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(cfg_err(key, "must be finite"));
    }
    Ok(x)
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| parse_f64(key, s.trim())).collect()
}

fn parse_vec2(key: &str, v: &str) -> Result<[f64; 2]> {
    let l = parse_list(key, v)?;
    if l.len() != 2 {
        return Err(cfg_err(key, "expected two comma-separated numbers"));
    }
    Ok([l[0], l[1]])
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse().map_err(|_| cfg_err(key, format!("`{v}` is not a nonnegative integer")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(cfg_err(key, "expected true or false")),
    }
}

/// Splits `key = value` lines; `#` starts a comment. Duplicate keys are rejected.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| cfg_err(&format!("line {}", lineno + 1), "expected `key = value`"))?;
        let (k, v) = (k.trim(), v.trim());
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(cfg_err(k, "duplicate key"));
        }
    }
    Ok(out)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut c = RunConfig::default();
        for (k, v) in parse_pairs(text)? {
            let key = k.as_str();
            let v = v.as_str();
            let m = &mut c.material;
            match key {
                "grid.n" => c.n = parse_usize(key, v)?,
                "dirichlet" => {
                    c.dirichlet = match v {
                        "left" => DirichletEdges::Left,
                        "left-right" => DirichletEdges::LeftRight,
                        _ => return Err(cfg_err(key, "expected left or left-right")),
                    }
                }
                "lame_lambda" => m.lame_lambda = parse_f64(key, v)?,
                "lame_mu" => m.lame_mu = parse_f64(key, v)?,
                "delta_reg" => m.delta_reg = parse_f64(key, v)?,
                "sigma_y" => m.sigma_y = parse_f64(key, v)?,
                "m_bar" => m.m_bar = parse_f64(key, v)?,
                "kappa" => m.kappa = parse_f64(key, v)?,
                "w0" => m.w0 = parse_f64(key, v)?,
                "q_exp" => m.q_exp = parse_f64(key, v)?,
                "m_order" => m.m_order = parse_f64(key, v)?,
                "eps" => c.eps = parse_f64(key, v)?,
                "nu" => c.nu = parse_f64(key, v)?,
                "mu" => c.mu = parse_f64(key, v)?,
                "T" => c.horizon = parse_f64(key, v)?,
                "n_steps" => c.n_steps = parse_usize(key, v)?,
                "gd_left" => c.gd_left = parse_vec2(key, v)?,
                "gd_right" => c.gd_right = parse_vec2(key, v)?,
                "theta" => c.theta = Profile::parse(v).ok_or_else(|| cfg_err(key, "expected ramp, sin, const or zero"))?,
                "phi" => c.phi = Profile::parse(v).ok_or_else(|| cfg_err(key, "expected ramp, sin, const or zero"))?,
                "body_force" => c.body_force = parse_vec2(key, v)?,
                "edge_force_right" => c.edge_force_right = parse_vec2(key, v)?,
                "tol_stat" => c.tol_stat = parse_f64(key, v)?,
                "max_iter" => c.max_iter = parse_usize(key, v)?,
                "z_floor" => c.z_floor = parse_f64(key, v)?,
                "prerelax" => c.prerelax = parse_bool(key, v)?,
                "dist_z_convention" => {
                    c.dist_z_convention = DistZConvention::parse(v).ok_or_else(|| cfg_err(key, "expected lemma or plus_kappa"))?
                }
                "ed_dnu_args" => c.ed_dnu_args = DnuArgs::parse(v).ok_or_else(|| cfg_err(key, "expected full or two"))?,
                "regime" => c.regime = Regime::parse(v).ok_or_else(|| cfg_err(key, "expected visc, eps0, eps-nu0 or all0"))?,
                "ladder_eps" => c.ladder_eps = parse_list(key, v)?,
                "nu_factor" => c.nu_factor = parse_f64(key, v)?,
                "tol_jump" => c.tol_jump = parse_f64(key, v)?,
                "tol_stab_factor" => c.tol_stab_factor = parse_f64(key, v)?,
                "out" => c.out = Some(PathBuf::from(v)),
                "seed" => c.seed = v.parse().map_err(|_| cfg_err(key, "expected an unsigned integer"))?,
                _ => return Err(cfg_err(key, "unknown key")),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: &std::path::Path) -> Result<RunConfig> {
        RunConfig::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(cfg_err("grid.n", "need at least 3 nodes per side"));
        }
        if self.n_steps == 0 {
            return Err(cfg_err("n_steps", "must be positive"));
        }
        if !(self.horizon > 0.0) {
            return Err(cfg_err("T", "must be positive"));
        }
        if !(self.eps >= 0.0 && self.nu >= 0.0 && self.mu >= 0.0) {
            return Err(cfg_err("eps", "eps, nu, mu must be nonnegative"));
        }
        if !(self.tol_stat > 0.0) {
            return Err(cfg_err("tol_stat", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(cfg_err("max_iter", "must be positive"));
        }
        if !(self.z_floor > 0.0 && self.z_floor < 1.0) {
            return Err(cfg_err("z_floor", "must lie in (0,1)"));
        }
        if !(self.tol_jump >= 0.0) {
            return Err(cfg_err("tol_jump", "must be nonnegative"));
        }
        if !(self.tol_stab_factor > 0.0) {
            return Err(cfg_err("tol_stab_factor", "must be positive"));
        }
        if !(self.nu_factor > 0.0) {
            return Err(cfg_err("nu_factor", "must be positive"));
        }
        self.material.validate().map_err(|e| cfg_err("material", e.to_string()))?;
        Ok(())
    }

    pub fn energy_params(&self) -> EnergyParams {
        EnergyParams { eps: self.eps, nu: self.nu, mu: self.mu, tau: self.horizon / self.n_steps as f64, horizon: self.horizon }
    }

    pub fn driver_options(&self) -> DriverOptions {
        DriverOptions {
            solver: SolverOptions {
                tol_stat: self.tol_stat,
                max_iter: self.max_iter,
                z_floor: self.z_floor,
                dist_z_convention: self.dist_z_convention,
            },
            prerelax: self.prerelax,
        }
    }

    pub fn build_model(&self) -> Result<Model> {
        let grid = Grid::new(self.n, self.dirichlet)?;
        let n = self.n;
        let nn = grid.n_nodes();
        let mut gd = vec![[0.0; 2]; nn];
        for j in 0..n {
            gd[j * n] = self.gd_left;
            gd[j * n + n - 1] = self.gd_right;
        }
        let mut f0 = vec![[0.0; 2]; nn];
        for v in 0..nn {
            for k in 0..2 {
                f0[v][k] = grid.node_weights[v] * self.body_force[k];
            }
        }
        for j in 0..n {
            let v = j * n + n - 1;
            let len = if j == 0 || j == n - 1 { 0.5 * grid.h } else { grid.h };
            for k in 0..2 {
                f0[v][k] += len * self.edge_force_right[k];
            }
        }
        for v in 0..nn {
            if grid.dirichlet[v] {
                f0[v] = [0.0; 2];
            }
        }
        let load = LoadingSpec::from_dirichlet(&grid, &gd, f0, self.theta, self.phi, self.horizon)?;
        Model::new(grid, self.material.clone(), load)
    }

    pub fn ladder(&self) -> Result<Vec<LadderLevel>> {
        build_ladder(self.regime, &self.ladder_eps, self.nu, self.mu, self.nu_factor)
            .map_err(|e| cfg_err("ladder_eps", e.to_string()))
    }

    pub fn sweep_problem<'a>(&self, model: &'a Model) -> Result<SweepProblem<'a>> {
        Ok(SweepProblem {
            model,
            regime: self.regime,
            ladder: self.ladder()?,
            horizon: self.horizon,
            n_steps: self.n_steps,
            driver: self.driver_options(),
            tol_jump: self.tol_jump,
            tol_stab_factor: self.tol_stab_factor,
            dnu_args: self.ed_dnu_args,
        })
    }

    /// Canonical `key = value` rendering; parsing it gives back `self`.
    pub fn to_text(&self) -> String {
        let m = &self.material;
        let v2 = |a: [f64; 2]| format!("{:?}, {:?}", a[0], a[1]);
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        put("grid.n", self.n.to_string());
        put("dirichlet", match self.dirichlet {
            DirichletEdges::Left => "left".into(),
            DirichletEdges::LeftRight => "left-right".into(),
        });
        put("lame_lambda", format!("{:?}", m.lame_lambda));
        put("lame_mu", format!("{:?}", m.lame_mu));
        put("delta_reg", format!("{:?}", m.delta_reg));
        put("sigma_y", format!("{:?}", m.sigma_y));
        put("m_bar", format!("{:?}", m.m_bar));
        put("kappa", format!("{:?}", m.kappa));
        put("w0", format!("{:?}", m.w0));
        put("q_exp", format!("{:?}", m.q_exp));
        put("m_order", format!("{:?}", m.m_order));
        put("eps", format!("{:?}", self.eps));
        put("nu", format!("{:?}", self.nu));
        put("mu", format!("{:?}", self.mu));
        put("T", format!("{:?}", self.horizon));
        put("n_steps", self.n_steps.to_string());
        put("gd_left", v2(self.gd_left));
        put("gd_right", v2(self.gd_right));
        put("theta", self.theta.name().into());
        put("phi", self.phi.name().into());
        put("body_force", v2(self.body_force));
        put("edge_force_right", v2(self.edge_force_right));
        put("tol_stat", format!("{:?}", self.tol_stat));
        put("max_iter", self.max_iter.to_string());
        put("z_floor", format!("{:?}", self.z_floor));
        put("prerelax", self.prerelax.to_string());
        put("dist_z_convention", self.dist_z_convention.name().into());
        put("ed_dnu_args", self.ed_dnu_args.name().into());
        put("regime", self.regime.name().into());
        put("ladder_eps", self.ladder_eps.iter().map(|e| format!("{e:?}")).collect::<Vec<_>>().join(", "));
        put("nu_factor", format!("{:?}", self.nu_factor));
        put("tol_jump", format!("{:?}", self.tol_jump));
        put("tol_stab_factor", format!("{:?}", self.tol_stab_factor));
        if let Some(o) = &self.out {
            put("out", o.display().to_string());
        }
        put("seed", self.seed.to_string());
        s
    }
}
