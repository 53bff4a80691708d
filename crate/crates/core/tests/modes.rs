mod common;

use common::*;
use slipflow::modes::*;
use slipflow::simulator::{Integrator, StepMode, DT_FACTOR};
use slipflow::{critical_frequency, Error, Grid1D};

fn setup() -> (slipflow::SlipConfig, Grid1D, f64) {
    let c = cfg(1.0, 1.0, 0.4);
    let grid = Grid1D::new(64).unwrap();
    let xc = critical_frequency(&c, &grid).unwrap().unwrap().xi_c2;
    (c, grid, xc)
}

#[test]
fn bump_is_smooth_and_compact() {
    let f = Cutoff::new(1.0, 0.5, 2.0).unwrap();
    assert_eq!(f.eval(1.0), 2.0);
    assert_eq!(f.eval(0.5), 0.0);
    assert_eq!(f.eval(1.6), 0.0);
    assert!(f.eval(0.51) > 0.0 && f.eval(0.51) < 1e-9);
    assert!(Cutoff::new(1.0, 0.0, 1.0).is_err());
}

#[test]
fn synthesized_field_is_real_and_solenoidal() {
    let (c, grid, xc) = setup();
    let m = SynthesizedMode::build_below(&Cutoff::default_for(xc), &c, &grid, xc).unwrap();
    assert!(m.quadrature_xi.iter().all(|(x, _)| {
        let (a, b) = m.cutoff.support();
        x * x >= a && x * x <= b
    }));
    let xs = [-3.0, 0.0, 0.7, 5.0];
    let f = m.fields(0.5, &xs);
    let scale = f.u1.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    assert!(f.max_imag < 1e-12 * scale.max(1.0), "{:e}", f.max_imag);
    assert!(f.divergence < 1e-8, "{:e}", f.divergence);
    // wall-normal velocity vanishes
    assert!(f.u2.iter().all(|row| row[0].abs() < 1e-12 && row[grid.n() - 1].abs() < 1e-12));
    assert!(m.lambda_f > 0.0 && m.lambda_f <= m.capital_lambda);
}

#[test]
fn synthesis_is_linear_in_amplitude() {
    let (c, grid, xc) = setup();
    let f = Cutoff::default_for(xc);
    let a = SynthesizedMode::build_below(&f, &c, &grid, xc).unwrap().fields(1.0, &[0.3, 2.0]);
    let b = SynthesizedMode::build_below(&f.scaled(2.0), &c, &grid, xc).unwrap().fields(1.0, &[0.3, 2.0]);
    for (ra, rb) in a.u1.iter().zip(&b.u1).chain(a.q.iter().zip(&b.q)) {
        for (x, y) in ra.iter().zip(rb) {
            assert!((2.0 * x - y).abs() <= 1e-14 * y.abs().max(1e-300) + 1e-300);
        }
    }
    let z = SynthesizedMode::build_below(&f.scaled(0.0), &c, &grid, xc).unwrap().fields(1.0, &[0.3]);
    assert!(z.u1.iter().chain(&z.u2).chain(&z.q).flatten().all(|v| *v == 0.0));
}

#[test]
fn support_must_sit_below_critical_frequency() {
    let (c, grid, xc) = setup();
    let bad = Cutoff::new(xc, 0.2, 1.0).unwrap();
    assert!(matches!(SynthesizedMode::build_below(&bad, &c, &grid, xc), Err(Error::Support { .. })));
    let stable = cfg(1.0, 1.0, 0.7);
    assert!(matches!(normalized_seed(&Cutoff::new(0.5, 0.1, 1.0).unwrap(), &stable, &grid), Err(Error::Support { .. })));
}

#[test]
fn continuous_norm_sandwich() {
    let (c, grid, xc) = setup();
    let m = SynthesizedMode::build_below(&Cutoff::default_for(xc), &c, &grid, xc).unwrap();
    let n0 = m.l2_squared(0.0).sqrt();
    for i in 0..16 {
        let t = 5.0 / m.capital_lambda * i as f64 / 15.0;
        let n = m.l2_squared(t).sqrt();
        assert!(n >= (m.lambda_f * t).exp() * n0 * (1.0 - 1e-3));
        assert!(n <= (m.capital_lambda * t).exp() * n0 * (1.0 + 1e-3));
    }
}

#[test]
fn seed_is_unit_h2_and_solenoidal() {
    let (c, grid, xc) = setup();
    let s = normalized_seed(&Cutoff::default_for(xc), &c, &grid).unwrap();
    assert!((s.h2_norm() - 1.0).abs() < 1e-10);
    assert!(s.divergence_residual() < 1e-8);
    assert!(s.slip_residual(&c) < 1e-6);
    assert!(s.mean.iter().all(|v| *v == 0.0));
    assert!(matches!(
        normalized_seed(&Cutoff::default_for(xc).scaled(0.0), &c, &grid),
        Err(Error::ZeroField)
    ));
}

#[test]
fn comb_matches_linear_evolution() {
    // the comb at time t is what the linear stepper produces from t = 0
    let (c, grid, xc) = setup();
    let f = Cutoff::default_for(xc);
    let layout = CombLayout::for_cutoff(&f, 3);
    let s0 = comb_state_below(&f, &c, &grid, &layout, 0.0, xc).unwrap();
    let s1 = comb_state_below(&f, &c, &grid, &layout, 1.0, xc).unwrap();
    let steps = (1.2617 / DT_FACTOR).ceil() as usize;
    let dt = 1.0 / steps as f64;
    let mut it = Integrator::new(&c, &grid, layout.period, layout.n_modes, dt, StepMode::Linear).unwrap();
    let mut s = s0.clone();
    for _ in 0..steps {
        it.step(&mut s).unwrap();
    }
    assert!(s.relative_difference(&s1).unwrap() < 1e-4);
}
