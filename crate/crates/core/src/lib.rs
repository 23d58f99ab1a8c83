//! Aggregated ±1 random fields built from products of correlated random
//! walks, with the exact and limiting covariance theory needed to check
//! simulations against.
//!
//! * [`angular`]: angular measures on the simplex.
//! * [`persistence`]: laws of the persistence pair `q`.
//! * [`field`]: walk, single-copy and aggregated field simulation.
//! * [`theory`]: limit covariances, spectral densities and exact finite-size
//!   covariances.
//! * [`experiments`]: configuration, runners, validation suite and reports.

pub mod angular;
pub mod error;
pub mod experiments;
pub mod field;
pub mod persistence;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod theory;

pub use angular::{AngularMeasure, Atom};
pub use error::{Error, Result};
pub use persistence::{PersistenceLaw, PersistenceSample};
