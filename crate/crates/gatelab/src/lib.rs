//! Local-unitary invariants of bipartite quantum gates and their
//! thermalization under random local dynamics.
//!
//! The central object is [`BipartiteOperator`]: a square matrix acting on
//! `C^n ⊗ C^m` with the composite basis index `i*m + α`. [`measures`]
//! computes operator entanglement, entangling power and gate typicality,
//! [`gates`] builds the standard gate families, [`thermal`] runs the
//! interlaced random-local evolution and [`spectra`] compares the evolved
//! operators against random-matrix laws.

pub mod bipartite;
pub mod error;
pub mod exec;
pub mod gates;
pub mod io;
pub mod linalg;
pub mod measures;
pub mod random;
pub mod spectra;
pub mod thermal;
pub mod verify;

pub use bipartite::{
    density_r, density_t, partial_transpose, reshuffle, schmidt_spectrum, swap_operator,
    BipartiteOperator, Dims, SchmidtSpectrum,
};
pub use error::{Error, ParseError, ParseErrorKind, Result};
pub use exec::{Estimate, Exec};
pub use gates::{CartanCoords, GateSpec};
pub use linalg::{c64, CMatrix};
pub use measures::GateMeasures;
pub use random::{derive_seed, haar_unitary, rng_from, GateRng};
