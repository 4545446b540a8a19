//! Profile constants C, M, D and the densities assembled from them.

pub mod constants;
pub mod density;

pub use constants::*;
pub use density::*;
