//! p-adic L-invariants of Artin representations, from Galois data and p-adic logarithms of units.

pub mod engine;
pub mod fixtures;
pub mod galois;
pub mod linalg;
pub mod padic;
pub mod special;
pub mod synth;
