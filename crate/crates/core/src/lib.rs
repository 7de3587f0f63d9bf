//! Secure multiplex coding over broadcast/wiretap channels.
//!
//! The crate is organised bottom-up:
//!
//! * [`probability`] finite distributions, stochastic kernels and Shannon quantities,
//! * [`renyi`] Rényi entropies, the `ψ(ρ|Q‖P)` divergence family and finite-size entropy bounds,
//! * [`gallager`] the Gallager-type functionals `φ`, `ψ` over Markov chains and `φ_max`,
//! * [`exponents`] error/secrecy exponents and finite-blocklength leakage bounds,
//! * [`affine`] prime-field vector spaces and random invertible affine maps,
//! * [`codec`] superposition codebooks, both encoder constructions, ML decoders and the
//!   practical rate-allocation search,
//! * [`oracle`] exhaustive ground truth on tiny instances,
//! * [`capacity`] capacity-region evaluators and inner-bound samplers.
//!
//! All quantities are in nats. Tuples over product alphabets are indexed little-endian
//! (the first coordinate varies fastest) everywhere in the crate.

pub mod affine;
pub mod capacity;
pub mod codec;
mod error;
pub mod exec;
pub mod exponents;
pub mod gallager;
pub mod numeric;
pub mod oracle;
pub mod probability;
pub mod renyi;

pub use error::{Error, Result};

/// Default cap on the number of enumerated terms for exhaustive computations.
pub const DEFAULT_CAP: u64 = 10_000_000;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
