//! Time integration on the x-periodic strip, energy bookkeeping, the
//! escape and decay experiments, and pressure recovery.

mod energy;
mod experiments;
mod io;
mod pressure;
mod state;
mod stepper;

pub use energy::{energy_audit, EnergyLedger, LedgerBuilder, LedgerRow};
pub use experiments::{
    decay_experiment, decay_experiment_with, default_dt, escape_experiment, escape_experiment_with, fit_rate,
    key_inequality_gap, mode_rates, DecayReport, EscapeReport, RunOptions, DT_FACTOR, FIT_FLOOR,
};
pub use io::{read_field_dump, write_field_dump};
pub use pressure::{recover_pressure, recover_pressure_with, PressureField};
pub use state::FlowState;
pub use stepper::{fft_size, step, Integrator, StepMode};
