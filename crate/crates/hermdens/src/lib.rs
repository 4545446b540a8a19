//! Exact local densities of hermitian lattices over the unramified quadratic
//! extension of a p-adic field, together with brute-force counting oracles
//! that check every closed form independently.

pub mod cy;
pub mod error;
pub mod lattice_enum;
pub mod oracle;
pub mod padic;
pub mod qexact;
pub mod suites;

pub use error::{Error, Result};
pub use qexact::QRat;
