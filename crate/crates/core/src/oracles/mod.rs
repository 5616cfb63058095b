//! Independent estimators used to check the closed forms.

pub mod monte_carlo;
pub mod quadrature;

pub use monte_carlo::{mc_estimate, mc_estimate_with, mc_events, mc_z_region, EventEstimates, McConfig, McEstimate};
pub use quadrature::z_quadrature;
