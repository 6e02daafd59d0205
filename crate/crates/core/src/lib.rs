//! Coherent and bicoherent states of graphene Landau levels, with and without a
//! PT-symmetric chemical potential, over truncated Fock spaces.

pub mod bicoherent;
pub mod checks;
pub mod cli;
pub mod coherent;
pub mod density;
pub mod error;
pub mod fock;
pub mod ladder;
pub mod pt;
pub mod quadrature;
pub mod sparse;
pub mod spinor;
pub mod state;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
