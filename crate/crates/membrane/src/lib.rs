//! Numerical laboratory for the relativistic membrane equation (RME) in graph
//! form: the scalar quasilinear wave equation □_{g(∂φ)}φ = 0 with
//! g(∂φ) = η + dφ⊗dφ on Minkowski space.
//!
//! The crate provides, at desk scale:
//!
//! - a pointwise geometry kernel (metric, null frames, causality, wave
//!   operator) — [`geometry`];
//! - null-form evaluation and the null-frame decomposition identities with
//!   their signature calculus — [`nullforms`];
//! - method-of-lines evolution of the RME in planar and radial symmetry, plus
//!   the rescaled equation used to manufacture short-pulse data — [`solver`];
//! - short-pulse Cauchy data at t = 1 (direct profiles and the rescaled-solve
//!   construction) with a constraint checker — [`shortpulse`];
//! - cone/slice energy fluxes, energy-identity residuals, commuted fields,
//!   pointwise decay tracking, and power-law exponent fits — [`diagnostics`];
//! - configuration, checkpointing, reports, and the invariant suites behind
//!   the `membrane` CLI — [`io`] and [`verify`].
//!
//! Everything is deterministic double precision: identical inputs produce
//! byte-identical outputs.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod io;
pub mod nullforms;
pub mod rng;
pub mod shortpulse;
pub mod solver;
pub mod verify;

pub use error::{MembraneError, Result};
