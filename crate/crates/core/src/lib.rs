//! Finite-dimensional Markov dilations.
//!
//! Builds explicit factorizations `φ(u(x)y) = φ̃(π(x)ρ(y))` for real positive
//! Schur multipliers, Fourier multipliers on finite groups and second
//! quantized contractions on fermion algebras, together with the
//! associated Markov chains and Rota dilations, and certifies every
//! identity numerically.

pub mod chain;
pub mod cli;
pub mod condexp;
pub mod dilation;
pub mod error;
pub mod fock;
pub mod fourier;
pub mod matcore;
pub mod sample;
pub mod schaffer;
pub mod schur;
pub mod state;

pub use error::{Error, Result};
pub use matcore::{Matrix, Tolerances, C64};
