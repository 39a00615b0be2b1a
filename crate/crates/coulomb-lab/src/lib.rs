//! Numerical laboratory for the linear and defocusing nonlinear wave equation
//! with a repulsive Coulomb potential in radial symmetry.
//!
//! The crate evolves the reduced field `w = r^{(d-1)/2} u` with an explicit
//! central-difference scheme and verifies, at desk scale, the quantitative
//! structure of the flow: energy conservation, inward/outward energy fluxes
//! and Morawetz identities, energy retraction into log-width shells near the
//! light cone, the Klein-Gordon scattering-profile transformation and its
//! norm identity, the radial Strichartz admissibility region, and scattering
//! indicators for the defocusing equation.

pub mod acceptance;
pub mod config;
pub mod csvout;
pub mod data;
pub mod energy;
pub mod error;
pub mod evolver;
pub mod grid;
pub mod harmonics;
pub mod kg;
pub mod norms;
pub mod sampler;
pub mod scattering;
pub mod special;
pub mod transform;

pub use error::{Error, Result};
pub use grid::{lift, reduce, RadialGrid, ReducedState, Trajectory};
