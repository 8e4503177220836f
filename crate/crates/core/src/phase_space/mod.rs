//! Coherent states, Husimi functions, moment identities and the
//! measure-equality oracle.

pub mod coherent;
pub mod grid;
pub mod husimi;
pub mod mixture;
pub mod moments;
pub mod oracle;

pub use coherent::{
    coherent_amplitudes, coherent_fock_coefficients, coherent_state, coherent_wavefunction, complex_coordinate,
    CoherentLabel,
};
pub use grid::{profile_axes, PhaseSpaceGrid, Profile, Rect, SCHEMA};
pub use husimi::{coherent_overlap, husimi_q, husimi_support, husimi_value};
pub use mixture::p_mixture_density;
pub use moments::{
    characteristic_function, grid_moment, log_moment_growth_bound, moment_growth_bound, moment_table,
    q_moment_operator, MomentTable,
};
pub use oracle::{default_wavevectors, measure_equality_oracle, EqualityReport, OracleTolerances, Verdict};
