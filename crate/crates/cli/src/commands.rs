use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use slipflow::eigensolver::{mode_residuals, neutral_determinant, principal_dispersion, sweep as eigen_sweep};
use slipflow::functionals::maximize_z_on_sphere;
use slipflow::modes::eigenmode_comb;
use slipflow::simulator::{
    decay_experiment_with, default_dt, escape_experiment_with, mode_rates, read_field_dump, write_field_dump,
    LedgerBuilder, RunOptions,
};
use slipflow::thresholds::lambda_at;
use slipflow::{
    critical_frequency, critical_viscosity, critical_viscosity_closed_form, maximizer_cubic, recover_mode,
    spectral_bound, CombLayout, CriticalFrequency, Cutoff, EnergyLedger, FlowState, Grid1D, Integrator, Maximizer,
    ModeProblem, Regime, SlipConfig, StepMode, SynthesizedMode,
};

use crate::bundle::{cell, num, flush, flush_file, write_row, Bundle, CsvOut};
use crate::error::{config, CliError};
use crate::{
    CriticalFrequencyArgs, CriticalViscosityArgs, CutoffArgs, DecayArgs, DispersionArgs, EscapeArgs, MethodArg,
    ModeArg, SeedArgs, SimulateArgs, SweepArgs, SynthesizeArgs, Walls,
};

const MIN_NODES: usize = 64;

pub fn grid(n: usize) -> Result<Grid1D, CliError> {
    if n < MIN_NODES {
        return Err(config(format!("--n must be at least {MIN_NODES}, got {n}")));
    }
    Ok(Grid1D::new(n)?)
}

fn slip(w: &Walls) -> Result<SlipConfig, CliError> {
    Ok(SlipConfig::new(w.k0, w.k1, w.mu)?)
}

fn record_walls(b: &mut Bundle, w: &Walls) {
    b.input("k0", w.k0);
    b.input("k1", w.k1);
    b.input("mu", w.mu);
}

fn s(v: f64) -> String {
    num(v)
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(config(format!("--{name} must be positive, got {v}")))
    }
}

fn xi_c2_of(cfg: &SlipConfig, grid: &Grid1D) -> Result<Option<CriticalFrequency>, CliError> {
    Ok(critical_frequency(cfg, grid)?)
}

pub fn critical_viscosity_cmd(out: &Path, a: &CriticalViscosityArgs) -> Result<PathBuf, CliError> {
    let mut b = Bundle::create(out, "critical-viscosity")?;
    let g = grid(a.n)?;
    b.input_list("k0", &a.k0.0);
    b.input_list("k1", &a.k1.0);
    b.input("n", a.n);
    let pairs: Vec<(f64, f64)> = a.k0.0.iter().flat_map(|&k0| a.k1.0.iter().map(move |&k1| (k0, k1))).collect();
    let rows = pairs
        .par_iter()
        .map(|&(k0, k1)| -> Result<Vec<String>, CliError> {
            // Z does not involve μ
            let cfg = SlipConfig::new(k0, k1, 1.0)?;
            let mu_c = critical_viscosity(&cfg);
            let (variational, _) = maximize_z_on_sphere(&cfg, &g)?;
            let (shape, mb, ma) = match maximizer_cubic(&cfg) {
                Ok(m @ Maximizer::Cubic { .. }) => ("cubic", Some(m.b()), Some(m.a())),
                Ok(m @ Maximizer::Parabola { .. }) => ("parabola", None, Some(m.a())),
                Err(_) => ("", None, None),
            };
            Ok(vec![
                s(k0),
                s(k1),
                s(critical_viscosity_closed_form(&cfg)),
                s(mu_c),
                s(variational),
                s((variational.max(0.0) - mu_c).abs()),
                shape.to_string(),
                cell(mb),
                cell(ma),
            ])
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut w = b.csv(
        "critical_viscosity.csv",
        &["k0", "k1", "closed_form", "mu_c", "variational", "variational_gap", "maximizer", "maximizer_b", "maximizer_a"],
    )?;
    for r in &rows {
        write_row(&mut w, r)?;
    }
    flush(w)?;
    b.finish()
}

pub const DISPERSION_COLUMNS: [&str; 9] =
    ["xi2", "lambda", "method", "dirichlet", "robin", "ode", "momentum", "divergence", "det_residual"];

pub fn dispersion(out: &Path, a: &DispersionArgs) -> Result<PathBuf, CliError> {
    let mut b = Bundle::create(out, "dispersion")?;
    let cfg = slip(&a.walls)?;
    let g = grid(a.n)?;
    if let Some(x) = a.xi2.0.iter().find(|x| **x < 0.0) {
        return Err(config(format!("--xi2 values must be nonnegative, got {x}")));
    }
    record_walls(&mut b, &a.walls);
    b.input_list("xi2", &a.xi2.0);
    b.input("method", format!("{:?}", a.method).to_lowercase());
    b.input("n", a.n);
    let xs = &a.xi2.0;
    let discrete = if a.method != MethodArg::Dispersion {
        let pts = eigen_sweep(&cfg, xs, &g)?;
        let rows = pts
            .par_iter()
            .map(|sp| -> Result<Vec<String>, CliError> {
                let sp = if sp.xi2 > 0.0 { recover_mode(sp, &ModeProblem::new(cfg, sp.xi2)?)? } else { sp.clone() };
                let r = mode_residuals(&sp, &cfg);
                Ok(vec![
                    s(sp.xi2),
                    s(sp.lambda),
                    "discrete".into(),
                    s(r.dirichlet),
                    s(r.robin),
                    s(r.ode),
                    cell(r.momentum),
                    cell(r.divergence),
                    String::new(),
                ])
            })
            .collect::<Result<Vec<_>, _>>()?;
        Some(rows)
    } else {
        None
    };
    let oracle = if a.method != MethodArg::Discrete {
        let rows = xs
            .par_iter()
            .map(|&x| -> Result<Option<Vec<String>>, CliError> {
                if x == 0.0 {
                    // the determinant needs ξ² > 0
                    return Ok(None);
                }
                let r = principal_dispersion(&cfg, x)?;
                let mut row = vec![s(x), s(r.lambda), "dispersion".into()];
                row.extend(vec![String::new(); 5]);
                row.push(s(r.det_residual));
                Ok(Some(row))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Some(rows)
    } else {
        None
    };
    let mut w = b.csv("dispersion.csv", &DISPERSION_COLUMNS)?;
    let mut crossings = 0;
    let mut prev: Option<f64> = None;
    for i in 0..xs.len() {
        if let Some(d) = &discrete {
            write_row(&mut w, &d[i])?;
            let lam: f64 = d[i][1].parse().unwrap_or(f64::NAN);
            if let Some(p) = prev {
                if (p > 0.0) != (lam > 0.0) {
                    crossings += 1;
                }
            }
            prev = Some(lam);
        }
        if let Some(Some(row)) = oracle.as_ref().map(|o| &o[i]) {
            write_row(&mut w, row)?;
        }
    }
    flush(w)?;
    if discrete.is_some() {
        println!("{} frequencies, lambda changes sign {crossings} time(s)", xs.len());
    }
    b.finish()
}

pub fn critical_frequency_cmd(out: &Path, a: &CriticalFrequencyArgs) -> Result<PathBuf, CliError> {
    let mut b = Bundle::create(out, "critical-frequency")?;
    let cfg = slip(&a.walls)?;
    let g = grid(a.n)?;
    record_walls(&mut b, &a.walls);
    b.input("n", a.n);
    let mu_c = critical_viscosity(&cfg);
    let regime = Regime::of(&cfg);
    let cf = xi_c2_of(&cfg, &g)?;
    let capital_lambda = lambda_at(&cfg, 0.0, &g)?;
    let (lam_c, det) = match &cf {
        Some(c) => (Some(lambda_at(&cfg, c.xi_c2, &g)?), Some(neutral_determinant(&cfg, c.xi_c2))),
        None => (None, None),
    };
    let mut w = b.csv(
        "critical_frequency.csv",
        &[
            "k0",
            "k1",
            "mu",
            "mu_c",
            "regime",
            "xi_c2",
            "n_star_at_fixed_point",
            "iterations",
            "lambda_at_xi_c2",
            "neutral_determinant",
            "capital_lambda",
        ],
    )?;
    write_row(
        &mut w,
        &[
            s(cfg.k0),
            s(cfg.k1),
            s(cfg.mu),
            s(mu_c),
            regime.as_str().into(),
            cell(cf.as_ref().map(|c| c.xi_c2)),
            cell(cf.as_ref().map(|c| c.n_star_at_fixed_point)),
            cf.as_ref().map(|c| c.iterations.to_string()).unwrap_or_default(),
            cell(lam_c),
            cell(det),
            s(capital_lambda),
        ],
    )?;
    flush(w)?;
    if let Some(c) = &cf {
        let mut h = b.csv("bracket.csv", &["step", "low", "high"])?;
        for (i, (lo, hi)) in c.bracket_history.iter().enumerate() {
            write_row(&mut h, &[i.to_string(), s(*lo), s(*hi)])?;
        }
        flush(h)?;
    } else {
        println!("mu = {} >= mu_c = {mu_c}: no critical frequency", cfg.mu);
    }
    b.finish()
}

/// Bump center used when there is no critical frequency to scale from.
const STABLE_CENTER: f64 = 1.0;

/// Cutoff from the flags, or the default bump at (ξ_c²/2, ξ_c²/4).
fn resolve_cutoff(c: &CutoffArgs, amplitude: f64, xi_c2: Option<f64>) -> Result<Cutoff, CliError> {
    let (center, halfwidth) = match (c.center, c.halfwidth, xi_c2) {
        (Some(ce), Some(h), _) => (ce, h),
        (Some(ce), None, _) => (ce, 0.5 * ce),
        (None, h, Some(x)) => (0.5 * x, h.unwrap_or(0.25 * x)),
        (None, h, None) => (STABLE_CENTER, h.unwrap_or(0.5 * STABLE_CENTER)),
    };
    Ok(Cutoff::new(center, halfwidth, amplitude)?)
}

fn record_cutoff(b: &mut Bundle, c: &Cutoff) {
    b.input("center", c.center);
    b.input("halfwidth", c.halfwidth);
    b.input("amplitude", c.amplitude);
}

pub fn synthesize(out: &Path, a: &SynthesizeArgs) -> Result<PathBuf, CliError> {
    let mut b = Bundle::create(out, "synthesize")?;
    let cfg = slip(&a.walls)?;
    let g = grid(a.n)?;
    let cf = xi_c2_of(&cfg, &g)?.ok_or_else(|| {
        config(format!("synthesize needs mu < mu_c = {}, got {}", critical_viscosity(&cfg), cfg.mu))
    })?;
    let cutoff = resolve_cutoff(&a.cutoff, a.amplitude, Some(cf.xi_c2))?;
    record_walls(&mut b, &a.walls);
    record_cutoff(&mut b, &cutoff);
    b.input_list("t", &a.t.0);
    b.input_list("x", &a.x.0);
    b.input("n", a.n);
    let mode = SynthesizedMode::build_below(&cutoff, &cfg, &g, cf.xi_c2)?;
    let samples: Vec<_> = a.t.0.par_iter().map(|&t| mode.fields(t, &a.x.0)).collect();
    let mut m = b.csv("mode.csv", &["xi_c2", "lambda_f", "capital_lambda", "support_low", "support_high"])?;
    let (lo, hi) = cutoff.support();
    write_row(&mut m, &[s(mode.xi_c2), s(mode.lambda_f), s(mode.capital_lambda), s(lo), s(hi)])?;
    flush(m)?;
    let mut sw = b.csv("synthesis.csv", &["t", "l2_squared", "max_imag", "divergence"])?;
    for f in &samples {
        write_row(&mut sw, &[s(f.t), s(mode.l2_squared(f.t)), s(f.max_imag), s(f.divergence)])?;
    }
    flush(sw)?;
    let mut fw = b.csv("fields.csv", &["t", "x", "y", "u1", "u2", "q"])?;
    for f in &samples {
        for (i, x) in f.x.iter().enumerate() {
            for (j, y) in f.y.iter().enumerate() {
                write_row(&mut fw, &[s(f.t), s(*x), s(*y), s(f.u1[i][j]), s(f.u2[i][j]), s(f.q[i][j])])?;
            }
        }
    }
    flush(fw)?;
    b.finish()
}

/// Initial state from a dump or from an eigenmode comb normalized to the
/// requested H² norm.
fn seed_state(b: &mut Bundle, a: &SeedArgs, cfg: &SlipConfig, g: &Grid1D) -> Result<FlowState, CliError> {
    if let Some(path) = &a.from {
        let f = File::open(path).map_err(|e| config(format!("{}: {e}", path.display())))?;
        let st = read_field_dump(BufReader::new(f))?;
        b.input("from", path.display());
        return Ok(st);
    }
    positive("amplitude", a.amplitude)?;
    if a.points == 0 {
        return Err(config("--points must be at least 1"));
    }
    let xi_c2 = if a.cutoff.center.is_some() { None } else { xi_c2_of(cfg, g)?.map(|c| c.xi_c2) };
    let cutoff = resolve_cutoff(&a.cutoff, 1.0, xi_c2)?;
    let layout = CombLayout::for_cutoff(&cutoff, a.points);
    record_cutoff(b, &cutoff);
    b.input("seed_h2", a.amplitude);
    b.input("points", a.points);
    b.input("period", layout.period);
    b.input("n_modes", layout.n_modes);
    let st = eigenmode_comb(&cutoff, cfg, g, &layout, 0.0)?;
    let h2 = st.h2_norm();
    if st.is_zero() || !(h2 > 0.0) {
        return Err(config("no comb frequency falls inside the cutoff support"));
    }
    Ok(st.scaled(a.amplitude / h2))
}

/// Default step from the growth rates, capped at half the CFL bound of the
/// initial state. Returns (Λ, dt).
fn auto_dt(cfg: &SlipConfig, state: &FlowState, mode: StepMode) -> Result<(f64, f64), CliError> {
    let (_, cl) = spectral_bound(cfg, &state.grid)?;
    let rates = mode_rates(state, cfg)?;
    let mut dt = default_dt(cl, &rates);
    if mode == StepMode::Nonlinear {
        let it = Integrator::new(cfg, &state.grid, state.period, state.n_modes(), dt, mode)?;
        dt = dt.min(0.5 * it.cfl_bound(state));
    }
    Ok((cl, dt))
}

fn write_ledger(b: &mut Bundle, ledger: &EnergyLedger) -> Result<(), CliError> {
    let mut w = b.csv("ledger.csv", &EnergyLedger::COLUMNS)?;
    for r in &ledger.rows {
        write_row(&mut w, &[r.time, r.kinetic, r.dissipation, r.production, r.l2, r.h1, r.h2, r.residual].map(s))?;
    }
    flush(w)
}

fn dump(b: &mut Bundle, name: &str, st: &FlowState) -> Result<(), CliError> {
    let mut f = b.file(name)?;
    write_field_dump(st, &mut f).map_err(|e| CliError::Io(e.to_string()))?;
    flush_file(f)
}

pub fn simulate(out: &Path, a: &SimulateArgs) -> Result<PathBuf, CliError> {
    let mut b = Bundle::create(out, "simulate")?;
    let cfg = slip(&a.walls)?;
    positive("horizon", a.horizon)?;
    let g = grid(a.n)?;
    record_walls(&mut b, &a.walls);
    b.input("n", a.n);
    b.input("horizon", a.horizon);
    let mode = match a.mode {
        ModeArg::Linear => StepMode::Linear,
        ModeArg::Nonlinear => StepMode::Nonlinear,
    };
    b.input("mode", mode.as_str());
    let mut state = seed_state(&mut b, &a.seed, &cfg, &g)?;
    let (capital_lambda, dt) = match a.dt {
        Some(dt) => (None, positive("dt", dt)?),
        None => {
            let (cl, dt) = auto_dt(&cfg, &state, mode)?;
            (Some(cl), dt)
        }
    };
    b.input("dt", dt);
    if let Some(k) = a.dump_every {
        if k == 0 {
            return Err(config("--dump-every must be at least 1"));
        }
        b.input("dump_every", k);
    }
    let steps = (a.horizon / dt).ceil() as usize;
    b.input("steps", steps);
    let mut it = Integrator::new(&cfg, &state.grid, state.period, state.n_modes(), dt, mode)?;
    let mut ledger = LedgerBuilder::new(&cfg);
    let first = ledger.push(&state);
    if a.dump_every.is_some() {
        dump(&mut b, "fields/step_000000.txt", &state)?;
    }
    for i in 1..=steps {
        it.step(&mut state).map_err(|e| CliError::Numerical(format!("step {i}: {e}")))?;
        let row = ledger.push(&state);
        if !row.l2.is_finite() {
            return Err(CliError::Numerical(format!("state is not finite at t = {}", row.time)));
        }
        if a.dump_every.is_some_and(|k| i % k == 0) {
            dump(&mut b, &format!("fields/step_{i:06}.txt"), &state)?;
        }
    }
    let ledger = ledger.finish();
    write_ledger(&mut b, &ledger)?;
    dump(&mut b, "fields/final.txt", &state)?;
    let last = ledger.last().copied().unwrap_or(first);
    let mut w = b.csv(
        "summary.csv",
        &["steps", "dt", "final_time", "l2_initial", "l2_final", "max_residual", "capital_lambda"],
    )?;
    write_row(
        &mut w,
        &[
            steps.to_string(),
            s(dt),
            s(last.time),
            s(first.l2),
            s(last.l2),
            s(ledger.max_residual()),
            cell(capital_lambda),
        ],
    )?;
    flush(w)?;
    b.finish()
}

pub fn escape(out: &Path, a: &EscapeArgs) -> Result<PathBuf, CliError> {
    let mut b = Bundle::create(out, "escape")?;
    let cfg = slip(&a.walls)?;
    positive("epsilon", a.epsilon)?;
    positive("horizon", a.horizon)?;
    for &d in &a.delta.0 {
        positive("delta", d)?;
    }
    let g = grid(a.n)?;
    let cf = xi_c2_of(&cfg, &g)?
        .ok_or_else(|| config(format!("escape needs mu < mu_c = {}, got {}", critical_viscosity(&cfg), cfg.mu)))?;
    let cutoff = resolve_cutoff(&a.cutoff, 1.0, Some(cf.xi_c2))?;
    record_walls(&mut b, &a.walls);
    record_cutoff(&mut b, &cutoff);
    b.input_list("delta", &a.delta.0);
    b.input("epsilon", a.epsilon);
    b.input("horizon", a.horizon);
    b.input("n", a.n);
    let mut opts = RunOptions::new(&g);
    if let Some(dt) = a.dt {
        opts = opts.with_dt(positive("dt", dt)?);
    }
    let reports = a
        .delta
        .0
        .par_iter()
        .map(|&d| escape_experiment_with(&cfg, &cutoff, d, a.epsilon, a.horizon, &opts))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(r) = reports.first() {
        b.input("dt", r.dt);
    }
    let mut w = b.csv(
        "escape.csv",
        &[
            "delta",
            "epsilon",
            "escape_time",
            "predicted_time",
            "principal_lambda",
            "growth_fit",
            "lambda_f",
            "capital_lambda",
            "dt",
            "period",
            "n_modes",
        ],
    )?;
    for r in &reports {
        write_row(
            &mut w,
            &[
                s(r.delta),
                s(r.epsilon),
                cell(r.escape_time),
                s(r.predicted_time),
                s(r.principal_lambda),
                s(r.growth_fit),
                s(r.lambda_f),
                s(r.capital_lambda),
                s(r.dt),
                s(r.period),
                r.n_modes.to_string(),
            ],
        )?;
    }
    flush(w)?;
    let mut h = b.csv("history.csv", &["delta", "t", "l2"])?;
    for r in &reports {
        for (t, l2) in &r.history {
            write_row(&mut h, &[s(r.delta), s(*t), s(*l2)])?;
        }
    }
    flush(h)?;
    b.finish()
}

pub fn decay(out: &Path, a: &DecayArgs) -> Result<PathBuf, CliError> {
    let mut b = Bundle::create(out, "decay")?;
    let cfg = slip(&a.walls)?;
    positive("horizon", a.horizon)?;
    let mu_c = critical_viscosity(&cfg);
    if cfg.mu < mu_c {
        return Err(config(format!("decay needs mu >= mu_c = {mu_c}, got {}", cfg.mu)));
    }
    let g = grid(a.n)?;
    record_walls(&mut b, &a.walls);
    b.input("n", a.n);
    b.input("horizon", a.horizon);
    let seed = seed_state(&mut b, &a.seed, &cfg, &g)?;
    let dt = match a.dt {
        Some(dt) => positive("dt", dt)?,
        None => auto_dt(&cfg, &seed, StepMode::Nonlinear)?.1,
    };
    let opts = RunOptions::new(&seed.grid).with_dt(dt);
    let rep = decay_experiment_with(&cfg, &seed, a.horizon, &opts)?;
    b.input("dt", rep.dt);
    write_ledger(&mut b, &rep.ledger)?;
    let mut w = b.csv(
        "decay.csv",
        &["l2_rate", "h1_rate", "h2_rate", "capital_lambda", "max_l2_increase", "monotone", "dt", "max_residual"],
    )?;
    write_row(
        &mut w,
        &[
            s(rep.l2_rate),
            s(rep.h1_rate),
            s(rep.h2_rate),
            s(rep.capital_lambda),
            s(rep.max_l2_increase),
            rep.monotone().to_string(),
            s(rep.dt),
            s(rep.ledger.max_residual()),
        ],
    )?;
    flush(w)?;
    b.finish()
}

pub const SWEEP_COLUMNS: [&str; 8] = ["k0", "k1", "mu", "mu_c", "stable_flag", "xi_c2", "lambda_max", "error"];

fn sweep_cell(k0: f64, k1: f64, mu: f64, g: &Grid1D) -> Vec<String> {
    let run = || -> Result<Vec<String>, CliError> {
        let cfg = SlipConfig::new(k0, k1, mu)?;
        let mu_c = critical_viscosity(&cfg);
        let regime = Regime::of(&cfg);
        let xi_c2 = if regime == Regime::Unstable { xi_c2_of(&cfg, g)?.map(|c| c.xi_c2) } else { None };
        let (_, lambda_max) = spectral_bound(&cfg, g)?;
        Ok(vec![s(k0), s(k1), s(mu), s(mu_c), regime.as_str().into(), cell(xi_c2), s(lambda_max), String::new()])
    };
    run().unwrap_or_else(|e| {
        let mut row = vec![s(k0), s(k1), s(mu)];
        row.extend(vec![String::new(); 4]);
        row.push(e.to_string());
        row
    })
}

pub fn sweep(out: &Path, a: &SweepArgs) -> Result<PathBuf, CliError> {
    let mut b = Bundle::create(out, "sweep")?;
    let g = grid(a.n)?;
    b.input_list("k0", &a.k0.0);
    b.input_list("k1", &a.k1.0);
    b.input_list("mu", &a.mu.0);
    b.input("n", a.n);
    let cells: Vec<(f64, f64, f64)> = a
        .k0
        .0
        .iter()
        .flat_map(|&k0| a.k1.0.iter().flat_map(move |&k1| a.mu.0.iter().map(move |&mu| (k0, k1, mu))))
        .collect();
    let mut w: CsvOut = b.csv("sweep.csv", &SWEEP_COLUMNS)?;
    // rows arrive in input order and go through this one writer
    let rows: Vec<Vec<String>> = cells.par_iter().map(|&(k0, k1, mu)| sweep_cell(k0, k1, mu, &g)).collect();
    let failed = rows.iter().filter(|r| !r[7].is_empty()).count();
    for r in &rows {
        write_row(&mut w, r)?;
    }
    flush(w)?;
    println!("{} cells, {failed} with errors", rows.len());
    b.finish()
}
