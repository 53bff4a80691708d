use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use slipflow::eigensolver::principal_dispersion;
use slipflow::functionals::maximize_z_on_sphere;
use slipflow::model::maximizer_residuals;
use slipflow::modes::eigenmode_comb;
use slipflow::simulator::{decay_experiment, key_inequality_gap, LedgerBuilder};
use slipflow::thresholds::{lambda_at, log_samples};
use slipflow::{
    constant_c0, critical_frequency, critical_viscosity, maximizer_cubic, n_star, recover_pressure,
    solve_principal_eigen, spectral_bound, CombLayout, Cutoff, FlowState, Grid1D, Integrator, ModeProblem, SlipConfig,
    StepMode,
};

use crate::bundle::{write_row, Bundle};
use crate::commands::grid;
use crate::error::CliError;
use crate::VerifyArgs;

type Outcome = Result<(bool, String), slipflow::Error>;

fn cfg(k0: f64, k1: f64, mu: f64) -> SlipConfig {
    SlipConfig::new(k0, k1, mu).expect("fixed test configuration")
}

fn critical_viscosity_variational(g: &Grid1D) -> Outcome {
    let mut worst: f64 = 0.0;
    for (k0, k1) in [(1.0, 1.0), (1.0, 0.0), (2.0, -0.5), (0.3, 1.7), (-1.0, 2.0)] {
        let c = cfg(k0, k1, 1.0);
        let (z, _) = maximize_z_on_sphere(&c, g)?;
        worst = worst.max((z - critical_viscosity(&c)).abs() / critical_viscosity(&c).max(1.0));
    }
    Ok((worst < 1e-8, format!("worst relative error {worst:.2e}")))
}

fn maximizer_equations() -> Outcome {
    let mut worst: f64 = 0.0;
    for (k0, k1) in [(1.0, 0.0), (2.0, -0.5), (0.3, 1.7), (-1.0, 2.0)] {
        let c = cfg(k0, k1, 1.0);
        let m = maximizer_cubic(&c)?;
        let (r1, r2) = maximizer_residuals(&c, m.b(), critical_viscosity(&c));
        worst = worst.max(r1).max(r2);
    }
    Ok((worst < 1e-12, format!("worst residual {worst:.2e}")))
}

fn discrete_matches_dispersion(g: &Grid1D) -> Outcome {
    let cases: [(f64, f64, f64, &[f64]); 3] = [
        (1.0, 1.0, 0.05, &[0.5, 1.0, 4.0, 20.0]),
        (1.0, 0.0, 0.1, &[1.0, 10.0, 30.0]),
        (-1.0, -1.0, 0.1, &[1.0, 5.0]),
    ];
    let mut worst: f64 = 0.0;
    for (k0, k1, mu, xs) in cases {
        let c = cfg(k0, k1, mu);
        for &x in xs {
            let a = lambda_at(&c, x, g)?;
            let b = principal_dispersion(&c, x)?.lambda;
            worst = worst.max((a - b).abs() / b.abs().max(1e-2));
        }
    }
    Ok((worst < 1e-6, format!("worst relative error {worst:.2e} over 9 points")))
}

fn sign_of_growth(g: &Grid1D) -> Outcome {
    let stable = spectral_bound(&cfg(1.0, 0.0, 0.5), g)?.1;
    let unstable = lambda_at(&cfg(1.0, 0.0, 0.1), 0.0, g)?;
    let walls = spectral_bound(&cfg(-1.0, -1.0, 0.1), g)?.1;
    Ok((
        stable < 0.0 && unstable > 0.0 && walls < 0.0,
        format!("sup lambda {stable:.4} (stable), lambda(0) {unstable:.4} (unstable), {walls:.4} (dissipative walls)"),
    ))
}

fn monotone_and_lipschitz(g: &Grid1D) -> Outcome {
    let c = cfg(1.0, 1.0, 0.05);
    let mut xs = vec![0.0];
    xs.extend(log_samples(1e-2, 1e2, 8));
    let ls = xs.par_iter().map(|&x| lambda_at(&c, x, g)).collect::<Result<Vec<_>, _>>()?;
    let lip = constant_c0(&c) + 2.0 * c.mu;
    let mut ok = true;
    for i in 1..xs.len() {
        ok &= ls[i] < ls[i - 1];
        ok &= (ls[i] - ls[i - 1]).abs() <= lip * (xs[i] - xs[i - 1]) * (1.0 + 1e-9);
    }
    Ok((ok, format!("{} samples, lambda(0) = {:.6}", xs.len(), ls[0])))
}

fn critical_frequency_neutral(g: &Grid1D) -> Outcome {
    let c = cfg(1.0, 0.0, 0.1);
    let Some(cf) = critical_frequency(&c, g)? else {
        return Ok((false, "no critical frequency below mu_c".into()));
    };
    let lam = lambda_at(&c, cf.xi_c2, g)?;
    let fixed = (cf.xi_c2 - cf.n_star_at_fixed_point).abs();
    let none_above = critical_frequency(&cfg(1.0, 0.0, 0.5), g)?.is_none();
    Ok((
        lam.abs() < 1e-6 && fixed < 1e-10 && none_above,
        format!("xi_c2 = {:.10}, lambda there {lam:.2e}", cf.xi_c2),
    ))
}

fn n_star_shape(g: &Grid1D) -> Outcome {
    let c = cfg(1.0, 0.0, 0.1);
    let ss = [0.1, 1.0, 10.0, 100.0];
    let v = ss.iter().map(|&s| n_star(s, &c, g)).collect::<Result<Vec<_>, _>>()?;
    let bound = constant_c0(&c) / (2.0 * c.mu);
    let ok = v.windows(2).all(|w| w[1] < w[0]) && v.iter().all(|&x| x > 0.0 && x <= bound);
    let above = n_star(1.0, &cfg(1.0, 0.0, 0.5), g)?;
    Ok((ok && above <= 0.0, format!("N* from {:.4} down to {:.4}, bound {bound:.4}", v[0], v[3])))
}

fn comb(c: &SlipConfig, g: &Grid1D) -> Result<FlowState, slipflow::Error> {
    let cutoff = Cutoff::new(0.6, 0.3, 1.0)?;
    let layout = CombLayout::for_cutoff(&cutoff, 3);
    let s = eigenmode_comb(&cutoff, c, g, &layout, 0.0)?;
    let h2 = s.h2_norm();
    Ok(s.scaled(1.0 / h2))
}

fn ledger_residual(c: &SlipConfig, seed: &FlowState, dt: f64, horizon: f64) -> Result<f64, slipflow::Error> {
    let mut st = seed.clone();
    let mut it = Integrator::new(c, &st.grid, st.period, st.n_modes(), dt, StepMode::Nonlinear)?;
    let mut b = LedgerBuilder::new(c).without_h2();
    b.push(&st);
    for _ in 0..(horizon / dt).round() as usize {
        it.step(&mut st)?;
        b.push(&st);
    }
    Ok(b.finish().max_residual())
}

fn energy_law(g: &Grid1D) -> Outcome {
    let c = cfg(1.0, 1.0, 0.4);
    let seed = comb(&c, g)?.scaled(0.1);
    let dt = 0.01;
    let r1 = ledger_residual(&c, &seed, dt, 1.0)?;
    let r2 = ledger_residual(&c, &seed, dt / 2.0, 1.0)?;
    let order = (r1 / r2).log2();
    Ok((
        r1 < 1e-6 && (1.8..=2.2).contains(&order),
        format!("residual {r1:.2e} at dt = {dt}, order {order:.2}"),
    ))
}

fn decay_rate(g: &Grid1D) -> Outcome {
    let c = cfg(1.0, 0.0, 1.0);
    let rep = decay_experiment(&c, &comb(&c, g)?.scaled(0.05), 2.0)?;
    let cap = rep.capital_lambda;
    Ok((
        rep.monotone() && cap < 0.0 && rep.l2_rate <= 0.9 * cap,
        format!("L2 rate {:.4}, sup lambda {cap:.4}", rep.l2_rate),
    ))
}

/// The ξ = 0 principal mode as mean flow plus a small comb: close to the
/// extremal case of the inequality.
fn near_extremal(c: &SlipConfig, g: &Grid1D) -> Result<FlowState, slipflow::Error> {
    let mut s = comb(c, g)?.scaled(1e-3);
    let psi = solve_principal_eigen(&ModeProblem::new(*c, 0.0)?, g)?.psi;
    s.mean.iter_mut().zip(&psi.values).for_each(|(m, p)| *m += p);
    Ok(s)
}

fn key_inequality(g: &Grid1D) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for (k0, k1, mu) in [(1.0, 0.0, 0.5), (1.0, 0.0, 0.1), (2.0, -0.5, 0.3)] {
        let c = cfg(k0, k1, mu);
        let lam = spectral_bound(&c, g)?.1;
        let s = near_extremal(&c, g)?;
        let scale = s.dissipation_rate(&c) + s.production_rate(&c).abs() + lam.abs() * s.l2_squared();
        worst = worst.max(key_inequality_gap(&s, &c, lam) / scale);
    }
    Ok((worst <= 1e-8, format!("largest gap/scale {worst:.2e}")))
}

/// Pressure of a single eigenmode against the amplitude from the mode
/// equations.
fn pressure(g: &Grid1D) -> Outcome {
    let mut worst: f64 = 0.0;
    for (c, xi2) in [(cfg(1.0, 1.0, 0.4), 0.5), (cfg(1.0, -0.5, 0.2), 3.0)] {
        let sp = solve_principal_eigen(&ModeProblem::new(c, xi2)?, g)?;
        let xi = xi2.sqrt();
        let mut s = FlowState::zeros(2.0 * std::f64::consts::PI / xi, 2, g)?;
        s.modes[0] = sp.psi.values.iter().map(|v| Complex64::new(0.0, v / xi)).collect();
        let p = recover_pressure(&s, StepMode::Linear, &c)?;
        let Some(pi) = sp.pi.as_ref() else {
            return Ok((false, "no pressure amplitude on the eigenmode".into()));
        };
        let scale = pi.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = p.modes[0].iter().zip(&pi.values).fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        worst = worst.max(err / scale);
    }
    Ok((worst < 1e-5, format!("worst relative error {worst:.2e}")))
}

pub fn run(out: &Path, a: &VerifyArgs) -> Result<PathBuf, CliError> {
    let mut b = Bundle::create(out, "verify")?;
    let g = grid(a.n)?;
    b.input("n", a.n);
    type Check<'a> = (&'static str, Box<dyn Fn() -> Outcome + Sync + 'a>);
    let checks: Vec<Check> = vec![
        ("critical viscosity is the variational maximum", Box::new(|| critical_viscosity_variational(&g))),
        ("maximizer solves its equations", Box::new(maximizer_equations)),
        ("discrete growth rate matches the dispersion root", Box::new(|| discrete_matches_dispersion(&g))),
        ("sign of the growth rate follows the regime", Box::new(|| sign_of_growth(&g))),
        ("growth rate decreasing and Lipschitz", Box::new(|| monotone_and_lipschitz(&g))),
        ("critical frequency is neutral", Box::new(|| critical_frequency_neutral(&g))),
        ("N* decreasing and bounded", Box::new(|| n_star_shape(&g))),
        ("energy law, second order in dt", Box::new(|| energy_law(&g))),
        ("stable runs decay at least at the spectral rate", Box::new(|| decay_rate(&g))),
        ("key inequality", Box::new(|| key_inequality(&g))),
        ("pressure recovery", Box::new(|| pressure(&g))),
    ];
    let results: Vec<(bool, String)> = checks
        .par_iter()
        .map(|(_, f)| f().unwrap_or_else(|e| (false, format!("error: {e}"))))
        .collect();
    let width = checks.iter().map(|(n, _)| n.len()).max().unwrap_or(0);
    let mut w = b.csv("verify.csv", &["check", "status", "detail"])?;
    let mut failed = 0;
    for ((name, _), (ok, detail)) in checks.iter().zip(&results) {
        let status = if *ok { "PASS" } else { "FAIL" };
        failed += usize::from(!ok);
        println!("{status}  {name:width$}  {detail}");
        write_row(&mut w, &[name.to_string(), status.to_string(), detail.clone()])?;
    }
    crate::bundle::flush(w)?;
    println!("{} passed, {failed} failed", results.len() - failed);
    let dir = b.finish()?;
    if failed > 0 {
        return Err(CliError::Failed(failed));
    }
    Ok(dir)
}
