//! Finite-resolution expansivity analysis for symbolic systems and their
//! suspension flows.
//!
//! The crate builds compact systems presented at finite resolution
//! ([`systems`]), measures companion-orbit counts for the base map
//! ([`orbits`]), and will grow suspension flows, alignment, theorem
//! harnesses, sections and a config-driven runner on top.

pub mod align;
pub mod cliques;
pub mod error;
pub mod expansivity;
pub mod orbits;
pub mod suspension;
pub mod systems;

pub use error::{Error, Result};
