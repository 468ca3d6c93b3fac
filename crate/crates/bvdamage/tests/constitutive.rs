mod common;

use bvdamage::constitutive::*;
use bvdamage::discretization::{DirichletEdges, Grid, LoadingSpec, Profile, State, SymTensor2};
use bvdamage::oracles::{random_model, random_state};
use bvdamage::solver::prerelax;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn elastic_tensor_of_zero() {
    let mat = MaterialParams::default();
    for z in [0.0, 0.3, 1.0, 1.7] {
        assert_eq!(elastic_tensor_apply(&mat, z, &SymTensor2::ZERO).unwrap(), SymTensor2::ZERO);
    }
}

#[test]
fn plastic_density_matches_sampled_support_function() {
    let mat = MaterialParams { sigma_y: 1.0, m_bar: 0.5, ..MaterialParams::default() };
    let pi = SymTensor2::deviatoric(1.2, 0.8);
    let pi = (2.0 / pi.norm()) * pi;
    assert!((plastic_density(&mat, 1.0, &pi).unwrap() - 2.0).abs() < 1e-14);
    // max of sigma : pi over the radius-V deviatoric disk; the max sits on the rim.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let v = yield_radius(&mat, 1.0);
    let mut best: f64 = 0.0;
    for _ in 0..10_000 {
        let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let r = v * rng.gen_range(0.0f64..1.0).powf(0.001) / 2f64.sqrt();
        let s = SymTensor2::deviatoric(r * th.cos(), r * th.sin());
        best = best.max(s.dot(&pi));
    }
    assert!((best - 2.0).abs() < 1e-3, "{best}");
    assert_eq!(plastic_density(&mat, 0.4, &SymTensor2::ZERO).unwrap(), 0.0);
    assert!(plastic_density(&mat, 0.4, &SymTensor2::new(1.0, 0.0, 0.0)).is_err());
}

#[test]
fn stress_gradient_at_zero_plastic_strain() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let model = random_model(&mut rng, 4).unwrap();
    let mut s = random_state(&mut rng, &model.grid);
    s.p = vec![SymTensor2::ZERO; model.grid.n_cells()];
    let load = model.load(0.4).unwrap();
    let cf = model.cell_fields(&s, &load);
    for mu in [0.0, 0.7] {
        let g = model.energy_gradients(0.4, &s, mu).unwrap();
        for (gp, sig) in g.p.iter().zip(&cf.sigma) {
            assert!((*gp + sig.dev()).norm() < 1e-14);
        }
    }
}

#[test]
fn relaxed_state_is_stationary_in_u() {
    let model = common::reference_model();
    let s = prerelax(&model, &State::initial(&model.grid), 0.6, 0.01).unwrap();
    let g = model.energy_gradients(0.6, &s, 0.01).unwrap();
    assert!(g.u.amax() <= 1e-10, "{}", g.u.amax());
}

#[test]
fn time_derivative_examples() {
    let grid = Grid::new(3, DirichletEdges::LeftRight).unwrap();
    let mut gd = vec![[0.0; 2]; 9];
    for j in 0..3 {
        gd[3 * j + 2] = [0.4, 0.1];
    }
    let f0: Vec<[f64; 2]> = (0..9).map(|v| if grid.dirichlet[v] { [0.0; 2] } else { [0.2, 0.1] }).collect();
    let frozen = LoadingSpec::from_dirichlet(&grid, &gd, f0, Profile::Const, Profile::Const, 1.0).unwrap();
    let model = Model::new(grid.clone(), MaterialParams::default(), frozen).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = random_state(&mut rng, &grid);
    assert_eq!(model.energy_time_derivative(0.3, &s).unwrap(), 0.0);

    // F = 0, ramp lift: d/dt E = sum_c w_c sigma_c : B(lift)_c.
    let ramp = LoadingSpec::from_dirichlet(&grid, &gd, vec![[0.0; 2]; 9], Profile::Ramp, Profile::Zero, 1.0).unwrap();
    let model = Model::new(grid.clone(), MaterialParams::default(), ramp).unwrap();
    let t = 0.45;
    let cf = model.cell_fields(&s, &model.load(t).unwrap());
    let el = model.b.apply(&grid, &model.loading.lift);
    let direct: f64 = cf.sigma.iter().zip(&el).map(|(s, e)| grid.cell_weight * s.dot(e)).sum();
    let h = 1e-6;
    let fd = (model.energy(t + h, &s, 0.2).unwrap() - model.energy(t - h, &s, 0.2).unwrap()) / (2.0 * h);
    let an = model.energy_time_derivative(t, &s).unwrap();
    assert!((an - direct).abs() < 1e-13);
    assert!((an - fd).abs() < 1e-6 * an.abs().max(1.0));
}

proptest! {
    #[test]
    fn elastic_energy_monotone_in_z(z1 in 0.0f64..1.0, dz in 0.0f64..1.0, xx in -1.0f64..1.0, yy in -1.0f64..1.0, xy in -1.0f64..1.0) {
        let mat = MaterialParams::default();
        let xi = SymTensor2::new(xx, yy, xy);
        let z2 = (z1 + dz).min(1.0);
        let a = elastic_tensor_apply(&mat, z1, &xi).unwrap().dot(&xi);
        let b = elastic_tensor_apply(&mat, z2, &xi).unwrap().dot(&xi);
        prop_assert!(a <= b + 1e-14);
    }

    #[test]
    fn plastic_density_is_homogeneous(z in 0.0f64..1.5, d in -2.0f64..2.0, s in -2.0f64..2.0, lam in 0.0f64..10.0) {
        let mat = MaterialParams::default();
        let pi = SymTensor2::deviatoric(d, s);
        let a = plastic_density(&mat, z, &(lam * pi)).unwrap();
        let b = lam * plastic_density(&mat, z, &pi).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
    }

    #[test]
    fn directional_derivative_matches_gradient(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, 3).unwrap();
        let g = &model.grid;
        let s = random_state(&mut rng, g);
        let d = random_state(&mut rng, g);
        let t = rng.gen_range(0.1..0.9);
        let mu = rng.gen_range(0.0..1.0);
        let h = 1e-5;
        let shift = |a: f64| State {
            u: s.u.iter().zip(&d.u).map(|(x, y)| [x[0] + a * y[0], x[1] + a * y[1]]).collect(),
            z: s.z.iter().zip(&d.z).map(|(x, y)| x + a * (y - 0.5)).collect(),
            p: s.p.iter().zip(&d.p).map(|(x, y)| *x + a * *y).collect(),
        };
        let fd = (model.energy(t, &shift(h), mu).unwrap() - model.energy(t, &shift(-h), mu).unwrap()) / (2.0 * h);
        let gr = model.energy_gradients(t, &s, mu).unwrap();
        let du = nalgebra::DVector::from_vec(g.restrict(&d.u));
        let an = gr.u.dot(&du)
            + gr.z.iter().zip(&d.z).zip(&g.node_weights).map(|((a, b), m)| m * a * (b - 0.5)).sum::<f64>()
            + gr.p.iter().zip(&d.p).map(|(a, b)| g.cell_weight * a.dot(b)).sum::<f64>();
        prop_assert!((fd - an).abs() <= 1e-5 * an.abs().max(1.0), "fd {} an {}", fd, an);
    }
}
