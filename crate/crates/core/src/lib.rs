//! Exact canonical forms, wildness encoders and brute-force equivalence
//! oracles for classical matrix problems: pencils, spatial matrices,
//! quiver and poset representations.

pub mod acceptance;
pub mod error;
pub mod exactalg;
pub mod oracle;
pub mod pencil;
pub mod reductions;
pub mod reps;
pub mod spatial;
pub mod summands;

pub use error::{Error, Result};
