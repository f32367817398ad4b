//! Stochastic wavepacket laboratory.
//!
//! Particles are modeled as normalized wavepackets on a 1-D grid. The crate
//! evolves them with a spectral propagator, samples the effects they induce
//! in a medium, reconstructs spin directions from Stern-Gerlach counts,
//! simulates EPR pair correlations and their decay under splitting, and
//! recovers Bose-Einstein and Fermi-Dirac occupancies from single-quantum
//! balance moves. Every random draw is reproducible from a master seed.

// Range checks are written `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detection;
pub mod epr;
pub mod error;
pub mod evolution;
pub mod harness;
pub mod rng;
mod spectral;
pub mod spin;
pub mod statistics;
pub mod wavepacket;

pub use error::{Error, Result};
