//! Tempered holomorphic solutions of `z^N u' + A(z) u = g` near an
//! irregular singular point, on sectors and on their images under charts.

pub mod error;
pub mod expr;
pub mod geometry;
pub mod holo;
pub mod honda;
pub mod poly;
pub mod puiseux;
pub mod serde_float;
pub mod solver;
pub mod tempered;
pub mod turrittin;

pub use error::{Error, ErrorKind, Result};
pub use num_complex::Complex64;
