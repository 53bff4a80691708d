//! Linear and nonlinear stability of the rest state for 2D incompressible
//! flow in a channel with Navier-slip walls.
//!
//! The channel is `y ∈ [0, 1]`, periodic or unbounded in `x`. The walls
//! satisfy `∂_y u¹ = (k1/μ) u¹` at `y = 1` and `∂_y u¹ = −(k0/μ) u¹` at
//! `y = 0`, with no flow through them.

pub mod eigensolver;
pub mod error;
pub mod functionals;
pub mod linalg;
pub mod model;
pub mod modes;
pub mod simulator;
pub mod thresholds;

pub use eigensolver::{
    dispersion_lambda, recover_mode, solve_principal_eigen, DispersionRoot, Method, ModeProblem,
    SpectrumPoint,
};
pub use error::{Error, Result};
pub use functionals::{Grid1D, Profile};
pub use modes::{normalized_seed, synthesize, CombLayout, Cutoff, FieldSamples, SynthesizedMode};
pub use model::{
    constant_c0, critical_viscosity, critical_viscosity_closed_form, maximizer_cubic,
    DerivedConstants, Maximizer, Regime, SlipConfig,
};
pub use simulator::{
    decay_experiment, energy_audit, escape_experiment, recover_pressure, step, DecayReport, EnergyLedger,
    EscapeReport, FlowState, Integrator, PressureField, StepMode,
};
pub use thresholds::{
    critical_frequency, growth_envelope, n_star, spectral_bound, CriticalFrequency, GrowthEnvelope,
};
