//! Embedding self-diffeomorphisms of model closed manifolds into flows.
//!
//! A diffeomorphism `f` is the time-one map of a flow exactly when it admits
//! a root system to the identity: maps `g_b` with `g_b^b = f` that commute,
//! reduce coherently under `gcd`, and tend to the identity. This crate builds
//! such systems, verifies their axioms on sample grids, assembles the flow on
//! dyadic times, extracts the generating vector field and integrates it back.

pub mod diffeo;
pub mod error;
pub mod field;
pub mod flow;
pub mod lift;
pub mod manifold;
pub mod quat;
pub mod report;
pub mod richardson;
pub mod rootsystem;
pub mod symmetry;

pub use error::{Error, Result};
