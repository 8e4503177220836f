//! The two-pointer simultaneous position-momentum measurement.

pub mod config;
pub mod errors;
pub mod posterior;
pub mod process;
pub mod wavefunction;

pub use config::{
    combined_widths, envelope_momentum_widths, envelope_widths, momentum_widths, optimal_pointer_widths, GridSpec,
    JointSampling, MeasurementConfig, StateEnvelope, WidthChoice,
};
pub use errors::{
    c_residual, commutator_expectation, d_residual, error_moment_operator, error_operators, error_vectors,
    report_from_operators, state_error_moments, worst_case_errors, ErrorOperators, ErrorPair, ErrorReport,
    ErrorVectors, Regime, StateErrorMoments,
};
pub use posterior::{condition_on_region, Posterior};
pub use process::{build_process, MeasurementProcess, OptimalityCertificate};
pub use wavefunction::JointWavefunction;
