//! Symbolic calculator for birational geometry bookkeeping: exact lattice
//! algebra over the integers, a registry of variety classes with a
//! distinctness oracle, formal blow-up words and their motivic invariants,
//! truncated Grothendieck-group fragments, realization homomorphisms, a
//! brute-force point counter over small finite fields, and link-style
//! constructions built on top of all of it.

pub mod abgroup;
pub mod bircalc;
pub mod error;
pub mod grothendieck;
pub mod links;
pub mod loader;
pub mod pointcount;
pub mod realize;
pub mod report;
pub mod universe;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
