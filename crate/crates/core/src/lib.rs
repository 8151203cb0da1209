//! Closed qudit dynamics in the generalized Bloch representation.
//!
//! The crate builds generalized Gell-Mann bases, integrates the first and
//! second order Bloch equations, maps the dynamics onto generalized
//! Euler-Poinsot equations, and checks integrability and stability
//! properties against an exact operator-level propagator.

pub mod algebra;
pub mod cli;
pub mod composite;
pub mod dynamics;
pub mod elliptic;
pub mod error;
pub mod integrability;
pub mod linalg;
pub mod ode;
pub mod rigidbody;
pub mod stability;

pub use error::{Error, Result};
pub use linalg::{CMat, C64};
