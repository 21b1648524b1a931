//! Numerical pipeline for an Unruh-DeWitt detector coupled to a massive Dirac
//! field confined to a 1+1 dimensional bag cavity.
//!
//! The crate is organized bottom-up:
//!
//! - [`spectrum`]: the bag-cavity mode spectrum and normalized spinor modes.
//! - [`coupling`]: detector configuration and the first-order amplitudes
//!   `W_n`, `V_n` along a worldline.
//! - [`vacuum`]: second-order channel for a vacuum field, heat and entropy.
//! - [`thermal`]: resonant-mode channel for a thermal field and the Landauer
//!   margin `ΔQ - T_R ΔS`.
//! - [`oracle`]: exact time-ordered evolution on a truncated fermionic Fock
//!   space, used to validate the perturbative channels.
//!
//! Units are natural (`ħ = c = k_B = 1`).

#![forbid(unsafe_code)]
// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupling;
pub mod entropy;
pub mod error;
pub mod oracle;
pub mod quadrature;
pub mod spectrum;
pub mod thermal;
pub mod vacuum;

pub use coupling::{
    closed_form_static, compute_coupling, compute_coupling_set, smear_amplitude, Amplitude,
    CouplingSet, DetectorConfig, ReferenceSpinor, SwitchingProfile, Worldline, WorldlineKind,
};
pub use entropy::binary_entropy;
pub use error::{Error, Result};
pub use spectrum::{
    boundary_residual, gram_matrix, solve_modes, CavityConfig, Mode, Species, Spinor,
};
pub use thermal::{
    apply_thermal_channel, landauer_margin, occupation_marginals, p_from_temperature,
    ResonanceSpec, TemperatureConvention, ThermalOccupancy,
};
pub use vacuum::{
    apply_vacuum_channel, convergence_report, ChannelResult, ConvergenceRow, FieldDiagonal,
    ModeContribution,
};
