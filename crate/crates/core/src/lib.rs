//! Self-similar spreading of thin circular drops of power-law fluids.
//!
//! A drop of shear-thinning fluid (effective viscosity μ = m|γ̇|^{1/λ-1},
//! λ > 1) spreading on a flat plate under capillarity admits a self-similar
//! description: the front radius grows as t^{1/(7λ+3)} and the height field
//! collapses onto a single profile H(η) after rescaling. This crate computes
//! that description end to end:
//!
//! - [`similarity`]: the profile ODE in similarity variables, its
//!   series-anchored adaptive integration, and front classification;
//! - [`shooting`]: the eigenvalue search for the critical center curvature
//!   κ_λ whose profile touches down with zero contact angle;
//! - [`scaling`]: spreading constants S_λ and Q_λ, the constants table, and
//!   the viscous dissipation integral;
//! - [`dimensional`]: physical-unit predictions (front radius, apparent
//!   contact angle, height profiles) and power-law fitting;
//! - [`pde`]: a direct finite-volume solver for the radial thin-film
//!   equation, used to cross-check the similarity predictions.
//!
//! Everything is deterministic: identical inputs produce identical bits.

// Validation deliberately uses negated comparisons (`!(x > 0.0)`) so that NaN
// arguments fail closed instead of slipping past an `x <= 0.0` test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![warn(missing_docs)]

pub mod dimensional;
pub mod error;
pub mod pde;
pub mod scaling;
pub mod shooting;
pub mod similarity;

pub use dimensional::{
    fit_spreading_exponent, make_setup, make_setup_with_capillary, DimensionalSetup, FluidParams,
    RadiusSeries,
};
pub use error::{Error, Result};
pub use pde::{init_drop, rescale_and_compare, run_until, InitialShape, PdeState, RadialGrid};
pub use scaling::{
    angle_prefactor, build_constants_table, critical_constants_row, dissipation_integral,
    similarity_exponent, spreading_prefactor, ConstantsRow, TABLE_LAMBDAS,
};
pub use shooting::{find_critical_kappa, solve_drop, CriticalSolution};
pub use similarity::{
    integrate_profile, Classification, IntegratorOptions, OdeParams, SimilarityProfile,
    SimilarityState,
};
