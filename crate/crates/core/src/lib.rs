//! Periodic orbits of hyperbolic rational maps and the thermodynamic
//! quantities built from them: pressure, Legendre data, Bowen dimension,
//! transfer operators, and orbit counts in shrinking multiplier windows.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod counting;
pub mod critical;
pub mod error;
pub mod map;
pub mod orbits;
pub mod poly;
pub mod probe;
pub mod report;
pub mod spatial;
pub mod thermo;
pub mod tolerances;
pub mod transfer;

pub use error::{Error, Result};
pub use map::{MapConfig, RationalMap};
pub use num_complex::Complex64;
