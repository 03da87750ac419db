//! Numerical toolkit for the entanglement-assisted bosonic multiple-access
//! channel (EA-MAC): Gaussian covariance algebra, truncated Fock-space
//! oracles, achievable rate regions and covert throughput planning.
//!
//! Conventions used throughout the crate:
//!
//! * quadratures are ordered `(x_1, p_1, x_2, p_2, ...)` and the vacuum
//!   covariance is the identity, so a thermal mode with mean photon number
//!   `N` has covariance `(2N + 1) I` and symplectic eigenvalue `2N + 1`;
//! * all information quantities are in nats;
//! * phase modulation is `exp(i 2 theta n)`, which rotates the quadratures of
//!   the modulated mode by `2 theta`.

pub mod error;
pub mod fock;
pub mod gaussian;
pub mod io;
pub mod mac;
pub mod planner;
pub mod region;
pub mod validation;

pub use error::{Error, Result};

/// Crate version embedded in every emitted file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
