mod common;

use bvdamage::constitutive::{EnergyParams, MaterialParams};
use bvdamage::discretization::{State, SymTensor2};
use bvdamage::driver::run_viscous;
use bvdamage::oracles::random_deviatoric;
use bvdamage::solver::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Reference run plus the knot index where damage is evolving.
fn damaging_step() -> (bvdamage::constitutive::Model, EnergyParams, State, f64) {
    let cfg = common::reference_config();
    let model = cfg.build_model().unwrap();
    let params = cfg.energy_params();
    let traj = run_viscous(&model, &params, &State::initial(&model.grid), &cfg.driver_options()).unwrap();
    let k = (1..traj.states.len()).find(|&k| traj.records[k].min_z < 0.95).expect("reference run damages");
    (model, params, traj.states[k - 1].clone(), traj.times[k])
}

fn perturb(rng: &mut impl Rng, fixed: &[bool], s: &State, prev: &State, r: f64) -> State {
    State {
        u: s.u.iter().zip(fixed).map(|(x, &f)| if f { *x } else { [x[0] + rng.gen_range(-r..r), x[1] + rng.gen_range(-r..r)] }).collect(),
        z: s.z.iter().zip(&prev.z).map(|(z, zp)| (z + rng.gen_range(-r..r)).clamp(1e-3, *zp)).collect(),
        p: s.p.iter().map(|p| *p + random_deviatoric(&mut *rng, r)).collect(),
    }
}

#[test]
fn u_step_trivial_and_frozen_limits() {
    let model = common::trivial_config().build_model().unwrap();
    let s = State::initial(&model.grid);
    let load = model.load(0.5).unwrap();
    let params = EnergyParams { eps: 0.1, nu: 0.1, mu: 0.0, tau: 0.1, horizon: 1.0 };
    let u = solve_u_step(&model, &s, &s, &load, &params).unwrap();
    assert!(common::max_abs(u.iter().flatten().cloned()) == 0.0);

    // eps nu / tau = 1e8 pins u to the previous displacement.
    let model = common::reference_model();
    let mut prev = State::initial(&model.grid);
    for (i, u) in prev.u.iter_mut().enumerate() {
        if !model.grid.dirichlet[i] {
            *u = [0.01 * i as f64, -0.02];
        }
    }
    let params = EnergyParams { eps: 1e4, nu: 1.0, mu: 0.0, tau: 1e-4, horizon: 1.0 };
    let load = model.load(0.8).unwrap();
    let u = solve_u_step(&model, &prev, &prev, &load, &params).unwrap();
    let d = common::max_abs(u.iter().zip(&prev.u).flat_map(|(a, b)| [a[0] - b[0], a[1] - b[1]]));
    assert!(d < 1e-6, "{d}");
    let q = State { u, ..prev.clone() };
    assert!(residual_u(&model, &q, &prev, &load, &params) < 1e-6 * model.scale());
}

#[test]
fn z_step_is_coordinatewise_optimal() {
    let (model, params, prev, t) = damaging_step();
    let load = model.load(t).unwrap();
    let params = EnergyParams { tau: 1.0 / 20.0, ..params };
    let mut q = prev.clone();
    q.u = solve_u_step(&model, &q, &prev, &load, &params).unwrap();
    q.p = solve_p_step(&model, &q, &prev, &load, &params).unwrap();
    let zp = ZProblem::new(&model, &q, &prev, &load, &params, 1e-8);
    let zs = zp.solve(&q.z, 1e-12, 200);
    assert!(zs.converged);
    // golden section on each coordinate of the convex problem
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut moved = 0;
    for v in 0..model.grid.n_nodes() {
        let f = |x: f64| {
            let mut z = zs.z.clone();
            z[v] = x;
            zp.value(&z)
        };
        let (mut a, mut b) = (1e-8, zp.upper()[v]);
        for _ in 0..200 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if f(c) < f(d) { b = d } else { a = c }
        }
        let x = 0.5 * (a + b);
        assert!((x - zs.z[v]).abs() < 1e-6, "node {v}: {x} vs {}", zs.z[v]);
        if zs.z[v] < prev.z[v] - 1e-6 {
            moved += 1;
        }
    }
    assert!(moved > 0);
}

#[test]
fn p_step_elastic_and_brute_force() {
    let (model, params, prev, t) = damaging_step();
    let load = model.load(t).unwrap();
    let params = EnergyParams { tau: 1.0 / 20.0, ..params };
    let q = State { u: solve_u_step(&model, &prev, &prev, &load, &params).unwrap(), ..prev.clone() };
    let p = solve_p_step(&model, &q, &prev, &load, &params).unwrap();
    let with_p = State { p: p.clone(), ..q.clone() };
    let j = incremental_functional(&model, t, &prev, &with_p, &params).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..2000 {
        let c = rng.gen_range(0..model.grid.n_cells());
        let mut trial = with_p.clone();
        trial.p[c] += random_deviatoric(&mut rng, 0.05);
        assert!(incremental_functional(&model, t, &prev, &trial, &params).unwrap() >= j - 1e-12);
    }

    // A huge yield stress leaves p at its previous value.
    let mut m2 = model.clone();
    m2.material = MaterialParams { sigma_y: 1e6, ..m2.material };
    let p = solve_p_step(&m2, &q, &prev, &load, &params).unwrap();
    assert_eq!(p, prev.p);
}

#[test]
fn step_beats_random_competitors() {
    let mut cfg = common::reference_config();
    cfg.n = 3;
    let model = cfg.build_model().unwrap();
    let params = cfg.energy_params();
    let traj = run_viscous(&model, &params, &State::initial(&model.grid), &cfg.driver_options()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in [5, 12, 18] {
        let (prev, q, t) = (&traj.states[k - 1], &traj.states[k], traj.times[k]);
        let p = EnergyParams { tau: t - traj.times[k - 1], ..params };
        let j = incremental_functional(&model, t, prev, q, &p).unwrap();
        for i in 0..10_000 {
            let r = [1e-1, 1e-2, 1e-3][i % 3];
            let c = perturb(&mut rng, &model.grid.dirichlet, q, prev, r);
            let jc = incremental_functional(&model, t, prev, &c, &p).unwrap();
            assert!(jc >= j - 1e-10, "knot {k}: competitor {jc} < {j}");
        }
    }
}

#[test]
fn zero_loading_is_a_fixed_point() {
    let cfg = common::trivial_config();
    let model = cfg.build_model().unwrap();
    let s = State::initial(&model.grid);
    let step = incremental_step(&model, 0.1, &s, &cfg.energy_params(), &cfg.driver_options().solver).unwrap();
    assert!(step.accepted);
    assert_eq!(step.iterations, 1);
    assert_eq!(step.new_state, s);
    assert_eq!(step.decrease, 0.0);
}

#[test]
fn sweeps_decrease_and_discrete_energy_inequality() {
    let cfg = common::reference_config();
    let model = cfg.build_model().unwrap();
    let params = cfg.energy_params();
    let traj = run_viscous(&model, &params, &State::initial(&model.grid), &cfg.driver_options()).unwrap();
    let opts = cfg.driver_options().solver;
    // 4-point Gauss-Legendre on each step
    let gx = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
    let gw = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
    for k in 1..traj.states.len() {
        let (t0, t1) = (traj.times[k - 1], traj.times[k]);
        let prev = &traj.states[k - 1];
        let p = EnergyParams { tau: t1 - t0, ..params };
        let step = incremental_step(&model, t1, prev, &p, &opts).unwrap();
        assert!(step.sweep_decreases.iter().all(|&d| d >= -1e-10 * model.scale()));
        assert!(step.decrease >= 0.0);
        // E(t_k, q_k) + tau Psi <= E(t_{k-1}, q_{k-1}) + int dE/dt(s, q_{k-1}) ds
        let work: f64 = gx
            .iter()
            .zip(&gw)
            .map(|(x, w)| 0.5 * (t1 - t0) * w * model.energy_time_derivative(0.5 * (t0 + t1) + 0.5 * (t1 - t0) * x, prev).unwrap())
            .sum();
        let lhs = step.functional_value;
        let rhs = model.energy(t0, prev, params.mu).unwrap() + work;
        assert!(lhs <= rhs + 1e-9 * model.scale(), "step {k}: {lhs} > {rhs}");
        assert!(step.new_state.p.iter().all(|p: &SymTensor2| p.tr().abs() < 1e-12));
    }
}
