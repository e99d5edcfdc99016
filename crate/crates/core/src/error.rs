use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("pole at z = {z} (|Q(z)| = {modulus:e}){}", index_suffix(*.index))]
    Pole {
        z: Complex64,
        modulus: f64,
        index: Option<usize>,
    },

    #[error("critical point at z = {z} (|f'(z)| = {modulus:e}){}", index_suffix(*.index))]
    CriticalPoint {
        z: Complex64,
        modulus: f64,
        index: Option<usize>,
    },

    #[error("z = {z} is not a fixed point of f^{n} (|f^n(z) - z| = {gap:e})")]
    NotPeriodic { z: Complex64, n: usize, gap: f64 },

    #[error("cycle through z = {z} of period {n} is superattracting (multiplier 0)")]
    Superattracting { z: Complex64, n: usize },

    #[error("inverse-branch word {word} of length {n} left its branch domain")]
    BranchCut { word: usize, n: usize },

    #[error("backward method needs a unicritical polynomial z^d + c map")]
    BackwardUnsupported,

    #[error("hyperbolicity evidence required: {0}")]
    NotHyperbolic(String),

    #[error("degree {degree} exceeds the root-solver limit {limit}")]
    DegreeOverflow { degree: usize, limit: usize },

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("forward image of {z} under f does not match any listed fixed point of f^{n}")]
    OrbitMatching { z: Complex64, n: usize },

    #[error("incomplete census at period {n}: {reason}")]
    IncompleteCensus { n: usize, reason: String },

    #[error("found {count} non-repelling cycles, more than the bound {bound}")]
    TooManyNonRepelling { count: usize, bound: usize },

    #[error("backward and roots methods disagree at period {n}: {unmatched} unmatched points")]
    MethodDisagreement { n: usize, unmatched: usize },

    #[error("orbit cache version mismatch: {0}")]
    VersionMismatch(String),

    #[error("orbit cache fingerprint {found} does not match map fingerprint {expected}")]
    FingerprintMismatch { expected: String, found: String },

    #[error("exponential sum overflow: {0}")]
    Overflow(String),

    #[error("alpha = {alpha} outside the admissible range ({lo}, {hi})")]
    AlphaOutOfRange { alpha: f64, lo: f64, hi: f64 },

    #[error("degenerate variance: {0}")]
    Degenerate(String),

    #[error("pressure does not change sign on the bracket: {0}")]
    Bracket(String),

    #[error("mesh point {z} is a critical value (preimages collide)")]
    CriticalValue { z: Complex64 },

    #[error("normalization residual {residual:e} exceeds 1e-6")]
    Normalization { residual: f64 },

    #[error("invalid window schedule: {0}")]
    Schedule(String),

    #[error("count at t = {t} is truncated: census complete to period {period} only")]
    Truncation { t: f64, period: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn index_suffix(index: Option<usize>) -> String {
    match index {
        Some(j) => format!(" at orbit index {j}"),
        None => String::new(),
    }
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::InvalidMap(_) | Error::Schedule(_) => 2,
            Error::IncompleteCensus { .. } | Error::Truncation { .. } => 4,
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => 1,
            Error::VersionMismatch(_) | Error::FingerprintMismatch { .. } => 1,
            _ => 3,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidMap(_) => "invalid_map",
            Error::Pole { .. } => "pole",
            Error::CriticalPoint { .. } => "critical_point",
            Error::NotPeriodic { .. } => "not_periodic",
            Error::Superattracting { .. } => "superattracting",
            Error::BranchCut { .. } => "branch_cut",
            Error::BackwardUnsupported => "backward_unsupported",
            Error::NotHyperbolic(_) => "not_hyperbolic",
            Error::DegreeOverflow { .. } => "degree_overflow",
            Error::NonConvergence(_) => "non_convergence",
            Error::OrbitMatching { .. } => "orbit_matching",
            Error::IncompleteCensus { .. } => "incomplete_census",
            Error::TooManyNonRepelling { .. } => "too_many_nonrepelling",
            Error::MethodDisagreement { .. } => "method_disagreement",
            Error::VersionMismatch(_) => "version_mismatch",
            Error::FingerprintMismatch { .. } => "fingerprint_mismatch",
            Error::Overflow(_) => "overflow",
            Error::AlphaOutOfRange { .. } => "alpha_out_of_range",
            Error::Degenerate(_) => "degenerate",
            Error::Bracket(_) => "bracket",
            Error::CriticalValue { .. } => "critical_value",
            Error::Normalization { .. } => "normalization",
            Error::Schedule(_) => "schedule",
            Error::Truncation { .. } => "truncation",
            Error::Domain(_) => "domain",
            Error::Config { .. } => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
