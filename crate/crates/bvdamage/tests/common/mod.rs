#![allow(dead_code)]

use bvdamage::config::RunConfig;
use bvdamage::constitutive::{MaterialParams, Model};
use bvdamage::discretization::{DirichletEdges, Profile};

/// Ramp-loaded bar clamped on both vertical edges, damage from t of about 0.5.
pub fn reference_config() -> RunConfig {
    RunConfig {
        n: 4,
        material: MaterialParams { kappa: 0.2, sigma_y: 1.5, ..MaterialParams::default() },
        gd_right: [1.0, 0.0],
        theta: Profile::Ramp,
        phi: Profile::Zero,
        eps: 1e-2,
        nu: 1e-2,
        mu: 1e-2,
        n_steps: 20,
        ..RunConfig::default()
    }
}

pub fn reference_model() -> Model {
    reference_config().build_model().unwrap()
}

pub fn trivial_config() -> RunConfig {
    RunConfig { gd_right: [0.0, 0.0], theta: Profile::Zero, phi: Profile::Zero, n_steps: 10, ..RunConfig::default() }
}

/// Force-controlled bar with weak damage barrier; softens and snaps.
pub fn snap_config() -> RunConfig {
    RunConfig {
        n: 3,
        dirichlet: DirichletEdges::Left,
        material: MaterialParams { kappa: 0.05, w0: 1e-4, q_exp: 4.2, sigma_y: 50.0, ..MaterialParams::default() },
        eps: 1e-3,
        nu: 1e-3,
        mu: 0.1,
        gd_right: [0.0, 0.0],
        theta: Profile::Zero,
        phi: Profile::Ramp,
        edge_force_right: [1.0, 0.0],
        n_steps: 100,
        ..RunConfig::default()
    }
}

pub fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}
