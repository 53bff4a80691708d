mod common;

use common::*;
use num_complex::Complex64;
use slipflow::modes::{eigenmode_comb, normalized_seed, CombLayout, Cutoff};
use slipflow::simulator::*;
use slipflow::{critical_frequency, solve_principal_eigen, Error, Grid1D, ModeProblem};

#[test]
fn single_eigenmode_grows_at_lambda() {
    let c = cfg(1.0, 1.0, 0.4);
    let grid = Grid1D::new(96).unwrap();
    for xi2 in [0.3, 2.0] {
        let sp = solve_principal_eigen(&ModeProblem::new(c, xi2).unwrap(), &grid).unwrap();
        let mut st = eigenmode_state(&sp.psi.values, xi2.sqrt(), &grid, 8);
        let l0 = st.l2_norm();
        let dt = DT_FACTOR / sp.lambda.abs().max(1.2617);
        let mut it = Integrator::new(&c, &grid, st.period, 8, dt, StepMode::Linear).unwrap();
        let steps = (2.0 / sp.lambda.abs() / dt).round() as usize;
        for _ in 0..steps {
            it.step(&mut st).unwrap();
        }
        let want = (sp.lambda * st.time).exp();
        let got = st.l2_norm() / l0;
        assert!((got / want - 1.0).abs() < 1e-4, "xi2={xi2}: {got} vs {want}");
    }
}

#[test]
fn zero_state_stays_zero() {
    let c = cfg(1.0, 1.0, 0.4);
    let grid = Grid1D::new(48).unwrap();
    let s = FlowState::zeros(10.0, 4, &grid).unwrap();
    for mode in [StepMode::Linear, StepMode::Nonlinear] {
        let n = step(&s, &c, 0.01, mode).unwrap();
        assert!(n.is_zero());
        assert!((n.time - 0.01).abs() < 1e-15);
    }
}

#[test]
fn tiny_amplitude_nonlinear_matches_linear() {
    let c = cfg(1.0, 1.0, 0.4);
    let grid = Grid1D::new(64).unwrap();
    let mut r = rng(7);
    let s0 = random_state(&mut r, &grid, 12.0, 6).scaled(1e-8);
    let mut a = s0.clone();
    let mut b = s0.clone();
    let mut lin = Integrator::new(&c, &grid, 12.0, 6, 0.01, StepMode::Linear).unwrap();
    let mut non = Integrator::new(&c, &grid, 12.0, 6, 0.01, StepMode::Nonlinear).unwrap();
    for _ in 0..100 {
        lin.step(&mut a).unwrap();
        non.step(&mut b).unwrap();
    }
    assert!(a.relative_difference(&b).unwrap() < 1e-6);
}

#[test]
fn advection_exchanges_no_energy() {
    let c = cfg(0.5, -0.3, 0.2);
    let grid = Grid1D::new(48).unwrap();
    let mut r = rng(11);
    for _ in 0..5 {
        let s = random_state(&mut r, &grid, 7.0, 5);
        let lin = Integrator::new(&c, &grid, 7.0, 5, 0.01, StepMode::Linear).unwrap();
        let non = Integrator::new(&c, &grid, 7.0, 5, 0.01, StepMode::Nonlinear).unwrap();
        let dl = lin.time_derivative(&s).unwrap();
        let dn = non.time_derivative(&s).unwrap();
        // d/dt ½‖u‖² contributed by advection alone
        let mut transfer = 0.0;
        let mut size = 0.0;
        for n in 0..=5 {
            let m = grid.kinetic_form(s.xi(n).powi(2));
            let psi: Vec<Complex64> = if n == 0 {
                s.mean.iter().map(|v| Complex64::new(*v, 0.0)).collect()
            } else {
                s.modes[n - 1].clone()
            };
            let w = if n == 0 { 1.0 } else { 2.0 };
            for i in 0..psi.len() {
                for j in 0..psi.len() {
                    let f = dn[n][j] - dl[n][j];
                    transfer += w * m[(i, j)] * (psi[i].conj() * f).re;
                    size += w * (m[(i, j)] * psi[i].norm() * f.norm()).abs();
                }
            }
        }
        assert!(transfer.abs() < 1e-12 * size, "{transfer} vs {size}");
    }
}

fn unstable_seed() -> (slipflow::SlipConfig, FlowState) {
    let c = cfg(1.0, 1.0, 0.4);
    let grid = Grid1D::new(64).unwrap();
    let xc = critical_frequency(&c, &grid).unwrap().unwrap().xi_c2;
    (c, normalized_seed(&Cutoff::default_for(xc), &c, &grid).unwrap())
}

fn energy_residual(c: &slipflow::SlipConfig, seed: &FlowState, dt: f64, t: f64) -> (f64, f64) {
    let mut st = seed.clone();
    let mut it = Integrator::new(c, &st.grid, st.period, st.n_modes(), dt, StepMode::Nonlinear).unwrap();
    let mut b = LedgerBuilder::new(c).without_h2();
    b.push(&st);
    let mut slip: f64 = 0.0;
    for _ in 0..(t / dt).round() as usize {
        it.step(&mut st).unwrap();
        b.push(&st);
        slip = slip.max(st.slip_residual(c));
    }
    (b.finish().max_residual(), slip)
}

#[test]
fn energy_law_second_order_and_slip_preserved() {
    let (c, seed) = unstable_seed();
    let seed = seed.scaled(0.1);
    let (r1, s1) = energy_residual(&c, &seed, 0.02, 1.0);
    let (r2, s2) = energy_residual(&c, &seed, 0.01, 1.0);
    assert!(r1 < 1e-6 && r2 < 1e-6);
    let order = (r1 / r2).log2();
    assert!((1.8..2.3).contains(&order), "order {order}");
    assert!(s1.max(s2) < 1e-6);
}

#[test]
fn no_slip_walls_produce_nothing_and_energy_falls() {
    let c = cfg(0.0, 0.0, 0.1);
    let grid = Grid1D::new(48).unwrap();
    let mut r = rng(3);
    let mut st = random_state(&mut r, &grid, 6.0, 4).scaled(0.01);
    let mut it = Integrator::new(&c, &grid, 6.0, 4, 0.01, StepMode::Nonlinear).unwrap();
    let mut hist = vec![st.clone()];
    for _ in 0..50 {
        it.step(&mut st).unwrap();
        hist.push(st.clone());
    }
    let l = energy_audit(&hist, &c);
    assert_eq!(l.rows.len(), 51);
    assert!(l.rows.iter().all(|r| r.production == 0.0));
    assert!(l.rows.windows(2).all(|w| w[1].kinetic <= w[0].kinetic));
}

#[test]
fn zero_history_gives_zero_ledger() {
    let c = cfg(1.0, 1.0, 0.4);
    let grid = Grid1D::new(32).unwrap();
    let s = FlowState::zeros(5.0, 3, &grid).unwrap();
    let l = energy_audit(&[s.clone(), s], &c);
    for r in &l.rows {
        assert_eq!([r.kinetic, r.dissipation, r.production, r.l2, r.h1, r.h2, r.residual], [0.0; 7]);
    }
}

#[test]
fn structural_constraints_hold() {
    let grid = Grid1D::new(48).unwrap();
    let mut r = rng(5);
    let s = random_state(&mut r, &grid, 9.0, 4);
    assert!(s.divergence_residual() < 1e-10);
    assert!(s.wall_normal_velocity() < 1e-14);
    let (u1, u2) = s.velocity(&[0.0, 1.3]);
    assert_eq!(u1.len(), 2);
    assert!(u2.iter().all(|row| row[0].abs() < 1e-14 && row[grid.n() - 1].abs() < 1e-14));
}

#[test]
fn cfl_violation_is_reported() {
    let c = cfg(1.0, 1.0, 0.4);
    let grid = Grid1D::new(48).unwrap();
    let mut r = rng(9);
    let mut s = random_state(&mut r, &grid, 6.0, 4).scaled(1e3);
    let mut it = Integrator::new(&c, &grid, 6.0, 4, 0.1, StepMode::Nonlinear).unwrap();
    assert!(matches!(it.step(&mut s), Err(Error::Cfl { .. })));
}

#[test]
fn mismatched_state_is_rejected() {
    let c = cfg(1.0, 1.0, 0.4);
    let grid = Grid1D::new(48).unwrap();
    let mut s = FlowState::zeros(6.0, 3, &grid).unwrap();
    let mut it = Integrator::new(&c, &grid, 6.0, 4, 0.1, StepMode::Linear).unwrap();
    assert!(matches!(it.step(&mut s), Err(Error::StateMismatch(_))));
}

#[test]
fn eigenmode_pressure_matches_pi() {
    let grid = Grid1D::new(96).unwrap();
    for (c, xi2) in [(cfg(1.0, 1.0, 0.4), 0.5), (cfg(1.0, -0.5, 0.2), 3.0), (cfg(-1.0, -1.0, 0.1), 1.0)] {
        let sp = solve_principal_eigen(&ModeProblem::new(c, xi2).unwrap(), &grid).unwrap();
        let s = eigenmode_state(&sp.psi.values, xi2.sqrt(), &grid, 2);
        let p = recover_pressure(&s, StepMode::Linear, &c).unwrap();
        let pi = &sp.pi.as_ref().unwrap().values;
        let scale = pi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = p.modes[0].iter().zip(pi).fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        assert!(err < 1e-5 * scale, "{err:e}");
        assert!(p.residual < 1e-6, "{:e}", p.residual);
        assert!(p.modes[1].iter().all(|v| v.norm() == 0.0));
    }
}

#[test]
fn nonlinear_pressure_residual_small() {
    let (c, seed) = unstable_seed();
    let p = recover_pressure(&seed.scaled(0.05), StepMode::Nonlinear, &c).unwrap();
    assert!(p.residual < 1e-6, "{:e}", p.residual);
}

#[test]
fn zero_state_has_zero_pressure() {
    let c = cfg(1.0, 1.0, 0.4);
    let grid = Grid1D::new(48).unwrap();
    let s = FlowState::zeros(5.0, 3, &grid).unwrap();
    for mode in [StepMode::Linear, StepMode::Nonlinear] {
        let p = recover_pressure(&s, mode, &c).unwrap();
        assert!(p.modes.iter().flatten().all(|v| v.norm() == 0.0));
        assert!(p.mean.iter().all(|v| *v == 0.0));
        assert_eq!(p.mean_gradient, 0.0);
    }
}

#[test]
fn mean_only_state_has_no_periodic_x_gradient() {
    let c = cfg(1.0, 1.0, 0.4);
    let grid64 = Grid1D::new(64).unwrap();
    let mut s = FlowState::zeros(5.0, 3, &grid64).unwrap();
    s.mean = solve_principal_eigen(&ModeProblem::new(c, 0.0).unwrap(), &grid64).unwrap().psi.values;
    let p = recover_pressure(&s, StepMode::Linear, &c).unwrap();
    assert!(p.modes.iter().flatten().all(|v| v.norm() == 0.0));
    assert!(p.mean.iter().all(|v| v.abs() < 1e-12));
    assert!(p.residual < 1e-6);
}

#[test]
fn field_dump_round_trip() {
    let grid = Grid1D::new(40).unwrap();
    let mut r = rng(2);
    let mut s = random_state(&mut r, &grid, 3.7, 3);
    s.time = 1.25;
    let mut buf = Vec::new();
    write_field_dump(&s, &mut buf).unwrap();
    let back = read_field_dump(&buf[..]).unwrap();
    assert_eq!(back.period, s.period);
    assert_eq!(back.time, s.time);
    assert_eq!(back.modes, s.modes);
    assert_eq!(back.mean, s.mean);
    assert!(read_field_dump(&b"period_L 1\nn_modes x\n"[..]).is_err());
}

#[test]
fn stable_runs_contract_in_l2() {
    let grid = Grid1D::new(64).unwrap();
    let cut = Cutoff::new(0.6, 0.3, 1.0).unwrap();
    let layout = CombLayout::for_cutoff(&cut, 3);
    for c in [cfg(1.0, 1.0, 0.6), cfg(-1.0, 0.5, 0.3)] {
        let s = eigenmode_comb(&cut, &c, &grid, &layout, 0.0).unwrap();
        let seed = s.scaled(0.05 / s.h2_norm());
        let r = decay_experiment(&c, &seed, 3.0).unwrap();
        assert!(r.monotone(), "{:e}", r.max_l2_increase);
        assert!(r.capital_lambda < 0.0);
        assert!(r.l2_rate <= 0.9 * r.capital_lambda, "{} vs {}", r.l2_rate, r.capital_lambda);
        assert!(r.h1_rate <= 0.45 * r.capital_lambda, "{} vs {}", r.h1_rate, r.capital_lambda);
    }
}

#[test]
fn decay_zero_seed_and_precondition() {
    let grid = Grid1D::new(64).unwrap();
    let s = FlowState::zeros(10.0, 3, &grid).unwrap();
    let r = decay_experiment(&cfg(1.0, 1.0, 0.7), &s, 0.5).unwrap();
    assert!(r.ledger.rows.iter().all(|row| row.l2 == 0.0 && row.h2 == 0.0));
    assert!(decay_experiment(&cfg(1.0, 1.0, 0.3), &s, 0.5).is_err());
}

#[test]
fn fft_sizes_are_smooth() {
    assert_eq!(fft_size(25), 25);
    assert_eq!(fft_size(31), 32);
    assert_eq!(fft_size(97), 100);
}
