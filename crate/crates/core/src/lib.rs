//! Finite-depth containment certificates for Cantor sets.
//!
//! Lengths on the line are exact rationals. Boxes in higher dimension carry
//! dyadic bounds rounded outward, so every emitted inequality is pessimistic.

pub mod applications;
pub mod cantor1d;
pub mod containment1d;
pub mod containment_rd;
pub mod nested_rd;
pub mod interval;
pub mod rat;

pub use rat::Rat;
