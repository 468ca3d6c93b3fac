mod common;

use bvdamage::discretization::State;
use bvdamage::driver::*;

fn run(cfg: &bvdamage::config::RunConfig) -> (bvdamage::constitutive::Model, Trajectory) {
    let model = cfg.build_model().unwrap();
    let traj = run_viscous(&model, &cfg.energy_params(), &State::initial(&model.grid), &cfg.driver_options()).unwrap();
    (model, traj)
}

#[test]
fn zero_loading_gives_constant_trajectory() {
    let (_, traj) = run(&common::trivial_config());
    assert_eq!(traj.states.len(), 11);
    for s in &traj.states {
        assert_eq!(s, &traj.states[0]);
    }
    for r in &traj.records {
        assert_eq!(r.energy, traj.records[0].energy);
        assert_eq!(r.balance_residual_cum, 0.0);
        assert!(r.accepted);
    }
}

#[test]
fn ramp_on_small_grid_balances() {
    let mut cfg = common::reference_config();
    cfg.n = 3;
    let (model, traj) = run(&cfg);
    let tau = cfg.horizon / cfg.n_steps as f64;
    for w in traj.states.windows(2) {
        assert!(w[1].z.iter().zip(&w[0].z).all(|(a, b)| a <= b));
    }
    assert!(traj.final_state().z.iter().any(|&z| z < 0.99));
    assert!(traj.final_balance_residual() <= tau * model.scale(), "{}", traj.final_balance_residual());
    assert!(traj.records.iter().all(|r| r.slack >= -1e-9));
    assert!((traj.times[cfg.n_steps] - cfg.horizon).abs() == 0.0);
}

#[test]
fn recomputed_balance_matches_records() {
    let (model, traj) = run(&common::reference_config());
    let (per, cum) = balance_residual(&model, &traj).unwrap();
    for (a, r) in per.iter().zip(&traj.records) {
        assert!((a - r.balance_residual_cum).abs() <= 1e-12 * model.scale());
    }
    assert!((cum - traj.final_balance_residual()).abs() <= 1e-12 * model.scale());
}

#[test]
fn halving_the_step_shrinks_the_balance_residual() {
    let mut res = Vec::new();
    for n in [20, 40, 80] {
        let mut cfg = common::reference_config();
        cfg.n_steps = n;
        let (_, traj) = run(&cfg);
        res.push(traj.final_balance_residual());
    }
    for w in res.windows(2) {
        assert!(w[0] / w[1] >= 1.5, "{res:?}");
    }
}

#[test]
fn self_convergence_in_tau() {
    // final states at tau, tau/2, tau/4: successive differences contract
    let mut fin = Vec::new();
    for n in [20, 40, 80] {
        let mut cfg = common::reference_config();
        cfg.n_steps = n;
        fin.push(run(&cfg).1.final_state().clone());
    }
    let diff = |a: &State, b: &State| {
        let du = common::max_abs(a.u.iter().zip(&b.u).flat_map(|(x, y)| [x[0] - y[0], x[1] - y[1]]));
        let dz = common::max_abs(a.z.iter().zip(&b.z).map(|(x, y)| x - y));
        du.max(dz)
    };
    let d1 = diff(&fin[0], &fin[1]);
    let d2 = diff(&fin[1], &fin[2]);
    assert!(d2 < d1, "{d1} {d2}");
}

#[test]
fn records_are_consistent_with_states() {
    let cfg = common::reference_config();
    let (model, traj) = run(&cfg);
    for k in 1..traj.states.len() {
        let r = &traj.records[k];
        let rate = traj.rate(&model, k);
        let n = n_value(&model, &traj.states[k], &rate, cfg.eps, cfg.nu);
        assert_eq!(r.n_value, n);
        assert_eq!(r.energy, model.energy(traj.times[k], &traj.states[k], cfg.mu).unwrap());
        let mz = traj.states[k].z.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(r.min_z, mz);
    }
    assert!(traj.enhanced_estimate() > 0.0);
}
