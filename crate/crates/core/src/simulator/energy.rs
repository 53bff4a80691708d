use super::state::FlowState;
use crate::model::SlipConfig;

/// One row of the energy ledger. Dissipation and production are running
/// time integrals from the first row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerRow {
    pub time: f64,
    pub kinetic: f64,
    pub dissipation: f64,
    pub production: f64,
    pub l2: f64,
    pub h1: f64,
    pub h2: f64,
    /// |ℰ(t) − ℰ(0) + ∫dissipation − ∫production|
    pub residual: f64,
}

#[derive(Debug, Clone, Default)]
pub struct EnergyLedger {
    pub rows: Vec<LedgerRow>,
}

impl EnergyLedger {
    pub const COLUMNS: [&'static str; 8] = ["time", "kinetic", "dissipation", "production", "l2", "h1", "h2", "residual"];

    pub fn max_residual(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.residual))
    }

    pub fn last(&self) -> Option<&LedgerRow> {
        self.rows.last()
    }
}

/// Builds an [`EnergyLedger`] one state at a time, with trapezoid rule time
/// integrals.
#[derive(Debug, Clone)]
pub struct LedgerBuilder {
    cfg: SlipConfig,
    with_h2: bool,
    ledger: EnergyLedger,
    last_rates: Option<(f64, f64, f64)>,
    initial: f64,
}

impl LedgerBuilder {
    pub fn new(cfg: &SlipConfig) -> Self {
        Self { cfg: *cfg, with_h2: true, ledger: EnergyLedger::default(), last_rates: None, initial: 0.0 }
    }

    /// Skip the H² column (left as NaN); it is the costly one.
    pub fn without_h2(mut self) -> Self {
        self.with_h2 = false;
        self
    }

    pub fn push(&mut self, state: &FlowState) -> LedgerRow {
        let l2sq = state.l2_squared();
        let gsq = state.grad_squared();
        let kinetic = 0.5 * l2sq;
        let d = self.cfg.mu * gsq;
        let p = state.production_rate(&self.cfg);
        let h2 = if self.with_h2 { (l2sq + gsq + state.hessian_squared()).max(0.0).sqrt() } else { f64::NAN };
        let (dis, pro) = match (self.last_rates, self.ledger.rows.last()) {
            (Some((t0, d0, p0)), Some(prev)) => {
                let h = state.time - t0;
                (prev.dissipation + 0.5 * h * (d0 + d), prev.production + 0.5 * h * (p0 + p))
            }
            _ => {
                self.initial = kinetic;
                (0.0, 0.0)
            }
        };
        self.last_rates = Some((state.time, d, p));
        let row = LedgerRow {
            time: state.time,
            kinetic,
            dissipation: dis,
            production: pro,
            l2: l2sq.max(0.0).sqrt(),
            h1: (l2sq + gsq).max(0.0).sqrt(),
            h2,
            residual: (kinetic - self.initial + dis - pro).abs(),
        };
        self.ledger.rows.push(row);
        row
    }

    pub fn finish(self) -> EnergyLedger {
        self.ledger
    }

    pub fn ledger(&self) -> &EnergyLedger {
        &self.ledger
    }
}

/// Energy ledger of a stored trajectory.
pub fn energy_audit(history: &[FlowState], cfg: &SlipConfig) -> EnergyLedger {
    let mut b = LedgerBuilder::new(cfg);
    for s in history {
        b.push(s);
    }
    b.finish()
}
