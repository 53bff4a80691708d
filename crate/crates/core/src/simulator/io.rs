use std::io::{BufRead, Write};

use num_complex::Complex64;

use super::state::FlowState;
use crate::error::{Error, Result};
use crate::functionals::Grid1D;

/// Plain-text snapshot: four header lines, one line per mode with
/// interleaved real/imag parts of ψ̂_n, then the mean streamfunction.
pub fn write_field_dump<W: Write>(state: &FlowState, mut w: W) -> std::io::Result<()> {
    writeln!(w, "period_L {:e}", state.period)?;
    writeln!(w, "n_modes {}", state.n_modes())?;
    writeln!(w, "grid_n {}", state.grid.n())?;
    writeln!(w, "time {:e}", state.time)?;
    for (i, m) in state.modes.iter().enumerate() {
        write!(w, "mode {}", i + 1)?;
        for c in m {
            write!(w, " {:e} {:e}", c.re, c.im)?;
        }
        writeln!(w)?;
    }
    write!(w, "mean")?;
    for v in &state.mean {
        write!(w, " {v:e}")?;
    }
    writeln!(w)
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(format!("field dump: {}", msg.into()))
}

pub fn read_field_dump<R: BufRead>(r: R) -> Result<FlowState> {
    let mut lines = r.lines();
    let mut next = |key: &str| -> Result<Vec<String>> {
        let line = lines.next().ok_or_else(|| bad(format!("missing {key}")))?.map_err(|e| bad(e.to_string()))?;
        let mut parts = line.split_whitespace().map(str::to_string);
        match parts.next() {
            Some(k) if k == key => Ok(parts.collect()),
            other => Err(bad(format!("expected {key}, found {other:?}"))),
        }
    };
    let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s}: {e}")));
    let one = |v: Vec<String>| v.into_iter().next().ok_or_else(|| bad("empty header"));
    let period = num(&one(next("period_L")?)?)?;
    let n_modes: usize = one(next("n_modes")?)?.parse().map_err(|_| bad("n_modes"))?;
    let n: usize = one(next("grid_n")?)?.parse().map_err(|_| bad("grid_n"))?;
    let time = num(&one(next("time")?)?)?;
    let grid = Grid1D::new(n)?;
    let mut state = FlowState::zeros(period, n_modes, &grid)?;
    state.time = time;
    for i in 0..n_modes {
        let v = next("mode")?;
        if v.len() != 1 + 2 * n || v[0] != (i + 1).to_string() {
            return Err(bad(format!("mode row {} malformed", i + 1)));
        }
        for j in 0..n {
            state.modes[i][j] = Complex64::new(num(&v[1 + 2 * j])?, num(&v[2 + 2 * j])?);
        }
    }
    let v = next("mean")?;
    if v.len() != n {
        return Err(bad("mean row length"));
    }
    for j in 0..n {
        state.mean[j] = num(&v[j])?;
    }
    Ok(state)
}
