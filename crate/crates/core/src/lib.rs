//! Orbit simulation and exact combinatorics for shrinking-target experiments
//! on interval maps.
//!
//! The crate is organised around the three maps it studies (the doubling map
//! on exact bit sequences, the Gauss map on certified continued-fraction
//! digits, and the Manneville--Pomeau family on fixed-precision reals),
//! together with the estimators built on top of them:
//!
//! * [`maps`] — the maps themselves, their invariant measures, and sampling;
//! * [`targets`] — shrinking-target schedules and threshold classification;
//! * [`hitting`] — hitting-time and eventually-always-hitting estimators;
//! * [`cf`] — continued-fraction max-digit experiments;
//! * [`symbolic`] — exact cylinder counting and box-dimension slopes for the
//!   doubling map;
//! * [`induced`] — first-return machinery for the Manneville--Pomeau map;
//! * [`mixing`] — empirical correlation decay and model fitting;
//! * [`lab`] — deterministic experiment orchestration and report emission.

pub mod cf;
pub mod error;
pub mod hitting;
pub mod induced;
pub mod lab;
pub mod maps;
pub mod mixing;
pub mod stats;
pub mod symbolic;
pub mod targets;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
