//! Offset logarithmic integral and the multiplier-ordered orbit count.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::orbits::OrbitDatabase;

/// `Li(x) = ∫₂ˣ du / log u`, relative error below `1e-10`.
pub fn logarithmic_integral(x: f64) -> Result<f64> {
    if !(x >= 2.0) || !x.is_finite() {
        return Err(Error::Domain(format!("Li needs a finite x >= 2, got {x}")));
    }
    if x == 2.0 {
        return Ok(0.0);
    }
    // Substituting u = e^v gives ∫ e^v / v dv; unit-length pieces in v keep
    // the integrand within a factor e of constant on each.
    let (a, b) = (2f64.ln(), x.ln());
    let pieces = ((b - a).ceil() as usize).max(1);
    let step = (b - a) / pieces as f64;
    let mut total = 0.0;
    for j in 0..pieces {
        let lo = a + step * j as f64;
        let hi = if j + 1 == pieces { b } else { lo + step };
        let scale = hi.exp() / lo * (hi - lo);
        let out = quadrature::integrate(|v: f64| v.exp() / v, lo, hi, 1e-14 * scale);
        total += out.integral;
    }
    Ok(total)
}

#[derive(Clone, Debug, Serialize)]
pub struct OwCount {
    pub t: f64,
    pub count: usize,
    /// Largest period `N` such that every period up to `N` is enumerated.
    pub complete_through: usize,
    /// Whether an orbit of period above `N` could still have `|λ| < t`.
    pub truncated: bool,
}

fn count_below(db: &OrbitDatabase, log_t: f64, through: usize) -> Result<usize> {
    let mut count = 0;
    for n in 1..=through {
        count += db
            .repelling(n)?
            .iter()
            .filter(|o| o.log_abs_multiplier < log_t)
            .count();
    }
    Ok(count)
}

fn min_log_multiplier(db: &OrbitDatabase, n: usize) -> Result<f64> {
    Ok(db
        .repelling(n)?
        .iter()
        .map(|o| o.log_abs_multiplier)
        .fold(f64::INFINITY, f64::min))
}

/// `#{τ primitive repelling : |λ(τ)| < t}`, refusing to answer when the
/// census may be truncated.
pub fn ow_count(db: &OrbitDatabase, t: f64) -> Result<usize> {
    let report = ow_count_report(db, t)?;
    if report.truncated {
        return Err(Error::Truncation {
            t,
            period: report.complete_through,
        });
    }
    Ok(report.count)
}

/// The same count over the enumerated periods, with the truncation flag
/// reported instead of raised.
pub fn ow_count_report(db: &OrbitDatabase, t: f64) -> Result<OwCount> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!(
            "threshold must be positive, got {t}"
        )));
    }
    let through = db.complete_through();
    if through == 0 {
        return Err(Error::IncompleteCensus {
            n: 1,
            reason: "no complete periods".into(),
        });
    }
    let log_t = t.ln();
    let truncated = min_log_multiplier(db, through)? <= log_t;
    Ok(OwCount {
        t,
        count: count_below(db, log_t, through)?,
        complete_through: through,
        truncated,
    })
}
