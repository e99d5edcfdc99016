//! Numerical thresholds shared across modules.

/// `|f'(z)|` below this is treated as a critical point.
pub const CRITICAL_FLOOR: f64 = 1e-12;

/// `|Q(z)|` below this is treated as a pole.
pub const POLE_FLOOR: f64 = 1e-12;

/// Two points closer than this (scaled by `max(1, |z|)`) are the same point.
pub const PAIRING_TOL: f64 = 1e-9;

/// Step size at which an inverse-branch word iteration is converged.
pub const CONTRACTION_TOL: f64 = 1e-13;

/// Relative gap `|f^n(z) − z|` accepted as "periodic".
pub const CLOSURE_TOL: f64 = 1e-8;

/// Largest implicit polynomial degree handed to the simultaneous root finder.
pub const ROOTS_DEGREE_LIMIT: usize = 4096;

/// Variances at or below this mark the circle/lattice case.
pub const DEGENERATE_VARIANCE: f64 = 1e-10;

/// Default enumeration budget on `d^n`.
pub const DEFAULT_BUDGET: usize = 1 << 17;
