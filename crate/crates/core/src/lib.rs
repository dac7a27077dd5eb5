//! First Steklov–Dirichlet eigenpair on eccentric spherical annuli in ℝⁿ⁺².
//!
//! The eigenfunction is expanded in a Fourier–Gegenbauer series in
//! bispherical coordinates; its boundary coefficients satisfy a three-term
//! recurrence that is solved as a truncated Jacobi eigenproblem. A
//! finite-difference Steklov solver and the concentric closed form serve as
//! independent checks, and the `asymptotics` module exercises the
//! thin-gap behaviour of the recurrence.

pub mod asymptotics;
pub mod cli;
pub mod eigenfield;
pub mod error;
pub mod gegenbauer;
pub mod geometry;
pub mod oracle;
pub mod quadrature;
pub mod spectral;
pub mod tridiag;

pub use error::{Error, Result};
pub use geometry::{AnnulusGeometry, BisphericalPoint};
pub use spectral::{solve_sigma, SpectralSolution};
