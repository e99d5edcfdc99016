//! Pressure, its derivatives and the Legendre data from periodic-orbit sums
//! `Z_n(s, k) = Σ_{fⁿx=x} exp(s·Rⁿ(x) + i·k·θⁿ(x))`, where `R = r − α`.
//!
//! Every exponential sum factors out its largest exponent first.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::orbits::OrbitDatabase;
use crate::tolerances::DEGENERATE_VARIANCE;

/// Default half-width of the `t` interval used to bracket `α`.
pub const DEFAULT_T_SPAN: f64 = 6.0;

/// Repelling fixed points of `fⁿ` grouped by cycle: each cycle of least
/// period `m | n` stands for `m` points sharing `rⁿ` and `θⁿ`.
#[derive(Clone, Debug)]
pub struct OrbitSums {
    pub n: usize,
    /// `rⁿ = (n/m)·log|λ_m|`.
    pub r: Vec<f64>,
    /// `θⁿ = (n/m)·arg λ_m`, unreduced.
    pub theta: Vec<f64>,
    /// Points per cycle, `m`.
    pub weight: Vec<f64>,
}

impl OrbitSums {
    pub fn new(db: &OrbitDatabase, n: usize) -> Result<Self> {
        let cycles = db.repelling_fixed_cycles(n)?;
        let mut out = Self {
            n,
            r: Vec::with_capacity(cycles.len()),
            theta: Vec::with_capacity(cycles.len()),
            weight: Vec::with_capacity(cycles.len()),
        };
        for o in cycles {
            let reps = (n / o.period) as f64;
            out.r.push(reps * o.log_abs_multiplier);
            out.theta.push(reps * o.holonomy_angle);
            out.weight.push(o.period as f64);
        }
        Ok(out)
    }

    /// Number of repelling fixed points of `fⁿ`.
    pub fn count(&self) -> f64 {
        self.weight.iter().sum()
    }

    fn big_r(&self, alpha: f64) -> impl Iterator<Item = f64> + '_ {
        let shift = self.n as f64 * alpha;
        self.r.iter().map(move |&r| r - shift)
    }

    /// `log Z_n(t, 0)` for real `t`.
    pub fn log_z(&self, t: f64, alpha: f64) -> Result<f64> {
        let expo: Vec<f64> = self.big_r(alpha).map(|x| t * x).collect();
        let max = expo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::Overflow(format!("exponent {max} at t = {t}")));
        }
        let s: f64 = expo
            .iter()
            .zip(&self.weight)
            .map(|(e, w)| w * (e - max).exp())
            .sum();
        Ok(max + s.ln())
    }

    /// `Z_n(s, k)` returned as `exp(shift) · value`.
    pub fn z_scaled(&self, s: Complex64, k: i64, alpha: f64) -> Result<(f64, Complex64)> {
        let re: Vec<f64> = self.big_r(alpha).map(|x| s.re * x).collect();
        let max = re.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::Overflow(format!("exponent {max} at s = {s}")));
        }
        let kf = k as f64;
        let sum: Complex64 = self
            .big_r(alpha)
            .zip(&re)
            .zip(self.theta.iter().zip(&self.weight))
            .map(|((x, &e), (&th, &w))| {
                let phase = s.im * x + kf * th;
                Complex64::from_polar(w * (e - max).exp(), phase)
            })
            .sum();
        Ok((max, sum))
    }

    /// Weighted mean and variance of `Rⁿ` under the tilt `e^{tRⁿ}`.
    pub fn tilted_moments(&self, t: f64, alpha: f64) -> Result<(f64, f64)> {
        let x: Vec<f64> = self.big_r(alpha).collect();
        let max = x.iter().map(|v| t * v).fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::Overflow(format!("exponent {max} at t = {t}")));
        }
        let (mut s0, mut s1) = (0.0, 0.0);
        let p: Vec<f64> = x
            .iter()
            .zip(&self.weight)
            .map(|(v, w)| w * (t * v - max).exp())
            .collect();
        for (pi, v) in p.iter().zip(&x) {
            s0 += pi;
            s1 += pi * v;
        }
        let mean = s1 / s0;
        // Centered second moment avoids cancellation.
        let var = p
            .iter()
            .zip(&x)
            .map(|(pi, v)| pi * (v - mean).powi(2))
            .sum::<f64>()
            / s0;
        Ok((mean, var))
    }
}

/// `Z_n(s, k)` with `R = r − α`.
pub fn zn_sum(db: &OrbitDatabase, n: usize, s: Complex64, k: i64, alpha: f64) -> Result<Complex64> {
    let (shift, value) = OrbitSums::new(db, n)?.z_scaled(s, k, alpha)?;
    let out = value * shift.exp();
    if !out.is_finite() {
        return Err(Error::Overflow(format!("Z_{n} overflows at s = {s}")));
    }
    Ok(out)
}

/// `q̂_n(t) = (1/n)·log Z_n(t, 0)`, or `log(Z_n/Z_{n−1})` when extrapolating.
pub fn pressure_estimate(
    db: &OrbitDatabase,
    t: f64,
    alpha: f64,
    n: usize,
    extrapolate: bool,
) -> Result<f64> {
    let here = OrbitSums::new(db, n)?.log_z(t, alpha)?;
    if extrapolate {
        if n < 2 {
            return Err(Error::Domain("extrapolation needs n >= 2".into()));
        }
        let prev = OrbitSums::new(db, n - 1)?.log_z(t, alpha)?;
        Ok(here - prev)
    } else {
        Ok(here / n as f64)
    }
}

/// `(q1, q2)`: tilted mean and variance of `Rⁿ`, each divided by `n`.
pub fn pressure_derivatives(
    db: &OrbitDatabase,
    t: f64,
    alpha: f64,
    n: usize,
) -> Result<(f64, f64)> {
    let (mean, var) = OrbitSums::new(db, n)?.tilted_moments(t, alpha)?;
    Ok((mean / n as f64, var / n as f64))
}

/// Mean of `rⁿ/n` over the repelling fixed points of `fⁿ`, i.e. `q1(0)` at `α = 0`.
pub fn maxent_mean(db: &OrbitDatabase, n: usize) -> Result<f64> {
    Ok(pressure_derivatives(db, 0.0, 0.0, n)?.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct PressureSample {
    pub t: f64,
    pub q: f64,
    pub q1: f64,
    pub q2: f64,
    pub n_used: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct PressureCurve {
    pub alpha: f64,
    pub extrapolated: bool,
    pub samples: Vec<PressureSample>,
}

pub fn pressure_curve(
    db: &OrbitDatabase,
    alpha: f64,
    ts: &[f64],
    n: usize,
    extrapolate: bool,
) -> Result<PressureCurve> {
    let sums = OrbitSums::new(db, n)?;
    let prev = if extrapolate {
        Some(OrbitSums::new(
            db,
            n.checked_sub(1)
                .filter(|&m| m > 0)
                .ok_or_else(|| Error::Domain("extrapolation needs n >= 2".into()))?,
        )?)
    } else {
        None
    };
    let nf = n as f64;
    let samples = ts
        .iter()
        .map(|&t| {
            let lz = sums.log_z(t, alpha)?;
            let q = match &prev {
                Some(p) => lz - p.log_z(t, alpha)?,
                None => lz / nf,
            };
            let (mean, var) = sums.tilted_moments(t, alpha)?;
            Ok(PressureSample {
                t,
                q,
                q1: mean / nf,
                q2: var / nf,
                n_used: n,
            })
        })
        .collect::<Result<_>>()?;
    Ok(PressureCurve {
        alpha,
        extrapolated: extrapolate,
        samples,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThermoProfile {
    pub alpha: f64,
    pub xi: f64,
    pub sigma2: f64,
    #[serde(rename = "H")]
    pub h: f64,
    pub residual: f64,
    pub n_used: usize,
}

/// `(q1(−t_span), q1(t_span))` at `α = 0`: an inner approximation of the
/// admissible range of `α`.
pub fn alpha_range(db: &OrbitDatabase, n: usize, t_span: f64) -> Result<(f64, f64)> {
    let sums = OrbitSums::new(db, n)?;
    let nf = n as f64;
    let lo = sums.tilted_moments(-t_span, 0.0)?.0 / nf;
    let hi = sums.tilted_moments(t_span, 0.0)?.0 / nf;
    Ok((lo, hi))
}

/// Solves `q1(ξ) = 0` and reports `σ² = q2(ξ)` and `H = q̂(ξ)`.
pub fn thermo_profile(db: &OrbitDatabase, alpha: f64, n: usize) -> Result<ThermoProfile> {
    thermo_profile_with(db, alpha, n, DEFAULT_T_SPAN)
}

pub fn thermo_profile_with(
    db: &OrbitDatabase,
    alpha: f64,
    n: usize,
    t_span: f64,
) -> Result<ThermoProfile> {
    let sums = OrbitSums::new(db, n)?;
    let nf = n as f64;
    let q = |t: f64| -> Result<(f64, f64)> {
        let (mean, var) = sums.tilted_moments(t, alpha)?;
        Ok((mean / nf, var / nf))
    };
    let (_, var0) = q(0.0)?;
    if var0 <= DEGENERATE_VARIANCE {
        return Err(Error::Degenerate(format!(
            "variance {var0:e} of the Birkhoff sums at t = 0 (multipliers lie on a lattice)"
        )));
    }
    let (lo_alpha, hi_alpha) = alpha_range(db, n, t_span)?;
    if !(alpha > lo_alpha && alpha < hi_alpha) {
        return Err(Error::AlphaOutOfRange {
            alpha,
            lo: lo_alpha,
            hi: hi_alpha,
        });
    }
    // q1 is increasing in t; keep a sign bracket and take Newton steps inside it.
    let (mut lo, mut hi) = (-t_span, t_span);
    let mut t = 0.0;
    let (mut g, mut dg) = q(t)?;
    for _ in 0..200 {
        if g.abs() < 1e-14 {
            break;
        }
        if g > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let newton = t - g / dg;
        t = if dg > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        (g, dg) = q(t)?;
        if hi - lo < 1e-15 {
            break;
        }
    }
    if !(g.abs() < 1e-8) {
        return Err(Error::NonConvergence(format!(
            "Legendre solve for alpha = {alpha}: residual {g:e}"
        )));
    }
    if dg <= DEGENERATE_VARIANCE {
        return Err(Error::Degenerate(format!("variance {dg:e} at the optimum")));
    }
    Ok(ThermoProfile {
        alpha,
        xi: t,
        sigma2: dg,
        h: sums.log_z(t, alpha)? / nf,
        residual: g.abs(),
        n_used: n,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DimensionMethod {
    OrbitSums,
    TransferOp,
    Both,
}

#[derive(Clone, Debug, Serialize)]
pub struct DimensionResult {
    pub delta: f64,
    pub residual: f64,
    pub n_used: usize,
    pub method: DimensionMethod,
}

/// Bisection for the sign change of a decreasing function on `(0, 2)`.
pub(crate) fn bisect_dimension(mut pressure: impl FnMut(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (0.0, 2.0);
    let (p_lo, p_hi) = (pressure(lo)?, pressure(hi)?);
    if !(p_lo > 0.0 && p_hi < 0.0) {
        return Err(Error::Bracket(format!(
            "pressure at t = 0 is {p_lo}, at t = 2 is {p_hi}; no sign change on (0, 2)"
        )));
    }
    let mut mid = 1.0;
    let mut p_mid = pressure(mid)?;
    for _ in 0..200 {
        if p_mid.abs() < 1e-10 && hi - lo < 1e-12 {
            break;
        }
        if p_mid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        mid = 0.5 * (lo + hi);
        p_mid = pressure(mid)?;
        if hi - lo <= f64::EPSILON * 2.0 {
            break;
        }
    }
    Ok((mid, p_mid.abs()))
}

/// Root `δ` of `t ↦ q̂(−t)` at `α = 0`.
pub fn bowen_dimension(db: &OrbitDatabase, n: usize) -> Result<DimensionResult> {
    let sums = OrbitSums::new(db, n)?;
    let nf = n as f64;
    let (delta, residual) = bisect_dimension(|t| Ok(sums.log_z(-t, 0.0)? / nf))?;
    if residual >= 1e-10 {
        return Err(Error::NonConvergence(format!(
            "dimension bisection residual {residual:e}"
        )));
    }
    Ok(DimensionResult {
        delta,
        residual,
        n_used: n,
        method: DimensionMethod::OrbitSums,
    })
}

/// Pressure from `Z_{n−3}, …, Z_n` fitted to `A·μ₁ᵐ + B·μ₂ᵐ`: returns
/// `log μ₁`. Cancels a subleading eigenvalue of either sign, which the
/// one- and two-point estimators only damp. Falls back to `log(Z_n/Z_{n−1})`
/// when the fit is singular or its roots are complex.
pub fn fitted_pressure(db: &OrbitDatabase, t: f64, alpha: f64, n: usize) -> Result<f64> {
    if n < 4 {
        return Err(Error::Domain("the two-exponential fit needs n >= 4".into()));
    }
    let logs = (n - 3..=n)
        .map(|m| OrbitSums::new(db, m)?.log_z(t, alpha))
        .collect::<Result<Vec<f64>>>()?;
    Ok(fit_two_exponentials(&logs))
}

fn fit_two_exponentials(logs: &[f64]) -> f64 {
    let ratio = logs[3] - logs[2];
    // Detrending keeps the four values near unity; the fitted roots scale back.
    let g = (logs[3] - logs[0]) / 3.0;
    let z: Vec<f64> = logs
        .iter()
        .enumerate()
        .map(|(i, l)| (l - g * i as f64 - logs[0]).exp())
        .collect();
    let det = z[2] * z[0] - z[1] * z[1];
    let scale = z[2] * z[0] + z[1] * z[1];
    if !(det.abs() > 1e-10 * scale) {
        return ratio;
    }
    let a = (z[3] * z[0] - z[1] * z[2]) / det;
    let b = (z[2] * z[2] - z[3] * z[1]) / det;
    let disc = a * a + 4.0 * b;
    let mu = 0.5 * (a + disc.max(0.0).sqrt());
    if !(disc >= 0.0 && mu > 0.0 && mu.is_finite()) {
        return ratio;
    }
    mu.ln() + g
}

/// Root `δ` of the fitted pressure at `α = 0`.
pub fn bowen_dimension_fitted(db: &OrbitDatabase, n: usize) -> Result<DimensionResult> {
    let sums = (n.saturating_sub(3)..=n)
        .map(|m| OrbitSums::new(db, m))
        .collect::<Result<Vec<_>>>()?;
    if n < 4 {
        return Err(Error::Domain("the two-exponential fit needs n >= 4".into()));
    }
    let (delta, residual) = bisect_dimension(|t| {
        let logs = sums
            .iter()
            .map(|s| s.log_z(-t, 0.0))
            .collect::<Result<Vec<f64>>>()?;
        Ok(fit_two_exponentials(&logs))
    })?;
    if residual >= 1e-10 {
        return Err(Error::NonConvergence(format!(
            "dimension bisection residual {residual:e}"
        )));
    }
    Ok(DimensionResult {
        delta,
        residual,
        n_used: n,
        method: DimensionMethod::OrbitSums,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpansionCheck {
    pub t: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Least-squares slope of `log residual` against `log|t|` over nonzero `t`.
    pub slope: f64,
}

/// Compares `exp q̂(ξ + it)` with `exp q̂(ξ)·(1 − σ²t²/2)` on `t_grid`.
pub fn expansion_check(
    db: &OrbitDatabase,
    profile: &ThermoProfile,
    t_grid: &[f64],
    n: usize,
) -> Result<ExpansionCheck> {
    let sums = OrbitSums::new(db, n)?;
    let nf = n as f64;
    let (shift0, z0) = sums.z_scaled(Complex64::new(profile.xi, 0.0), 0, profile.alpha)?;
    let q0 = (shift0 + z0.re.ln()) / nf;
    let residuals = t_grid
        .iter()
        .map(|&t| {
            let (shift, z) = sums.z_scaled(Complex64::new(profile.xi, t), 0, profile.alpha)?;
            let q = (Complex64::new(shift, 0.0) + z.ln()) / nf;
            let lhs = q.exp();
            let rhs = q0.exp() * (1.0 - profile.sigma2 * t * t / 2.0);
            Ok((lhs - rhs).norm())
        })
        .collect::<Result<Vec<f64>>>()?;
    let pts: Vec<(f64, f64)> = t_grid
        .iter()
        .zip(&residuals)
        .filter(|(t, r)| **t != 0.0 && **r > 0.0)
        .map(|(t, r)| (t.abs().ln(), r.ln()))
        .collect();
    Ok(ExpansionCheck {
        t: t_grid.to_vec(),
        residuals,
        slope: ls_slope(&pts),
    })
}

pub(crate) fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return f64::NAN;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::RationalMap;
    use std::f64::consts::LN_2;

    fn db_for(f: &RationalMap, n: usize) -> OrbitDatabase {
        let mut db = OrbitDatabase::new(f);
        db.ensure(f, 1..=n).unwrap();
        db
    }

    #[test]
    fn squaring_closed_forms() {
        let f = RationalMap::monomial(2);
        let db = db_for(&f, 6);
        for n in 1..=6 {
            let z = zn_sum(&db, n, Complex64::new(0.0, 0.0), 0, 0.0).unwrap();
            assert!((z.re - (2f64.powi(n as i32) - 1.0)).abs() < 1e-9);
            let t = 0.7;
            let alpha = 0.2;
            let z = zn_sum(&db, n, Complex64::new(t, 0.0), 3, alpha).unwrap();
            let expect = (2f64.powi(n as i32) - 1.0) * (t * n as f64 * (LN_2 - alpha)).exp();
            assert!((z - expect).norm() < 1e-9 * expect);
        }
        let (q1, q2) = pressure_derivatives(&db, 0.4, 0.1, 6).unwrap();
        assert!((q1 - (LN_2 - 0.1)).abs() < 1e-12);
        assert!(q2.abs() < 1e-20);
        assert!(matches!(
            thermo_profile(&db, 0.5, 6),
            Err(Error::Degenerate(_))
        ));
        let (lo, hi) = alpha_range(&db, 6, 2.0).unwrap();
        assert!((lo - LN_2).abs() < 1e-12 && (hi - LN_2).abs() < 1e-12);
        let dim = bowen_dimension(&db, 6).unwrap();
        let defect = (1.0 - 2f64.powi(-6)).ln() / (6.0 * LN_2);
        assert!((dim.delta - (1.0 + defect)).abs() < 1e-9);
        // (2ⁿ − 1)·2^{−nt} is exactly two exponentials.
        let fitted = bowen_dimension_fitted(&db, 6).unwrap();
        assert!((fitted.delta - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_exponential_fit_cancels_alternation() {
        let (mu1, mu2) = (1.7_f64, -1.3_f64);
        let logs: Vec<f64> = (5..9)
            .map(|m| (3.0 * mu1.powi(m) + 2.5 * mu2.powi(m)).ln())
            .collect();
        assert!((fit_two_exponentials(&logs) - mu1.ln()).abs() < 1e-10);
        // A single exponential is singular for the fit and takes the ratio.
        let single: Vec<f64> = (0..4).map(|m| 0.4 + 0.9 * m as f64).collect();
        assert!((fit_two_exponentials(&single) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn basilica_profile_and_consistency() {
        let f = RationalMap::quadratic(Complex64::new(-1.0, 0.0));
        let db = db_for(&f, 10);
        let n = 10;
        let alpha = maxent_mean(&db, n).unwrap();
        let p = thermo_profile(&db, alpha, n).unwrap();
        assert!(p.xi.abs() < 1e-9);
        // Legendre identity against the α = 0 curve.
        let p_hat = pressure_estimate(&db, p.xi, 0.0, n, false).unwrap();
        assert!((p.h - (p_hat - p.xi * alpha)).abs() < 1e-12);
        // Finite-difference oracle for q1.
        let h = 1e-3;
        for t in [-0.5, 0.0, 0.8] {
            let (q1, _) = pressure_derivatives(&db, t, 0.3, n).unwrap();
            let fd = (pressure_estimate(&db, t + h, 0.3, n, false).unwrap()
                - pressure_estimate(&db, t - h, 0.3, n, false).unwrap())
                / (2.0 * h);
            assert!((q1 - fd).abs() < 1e-5);
        }
        // Monotone ξ in α.
        let (lo, hi) = alpha_range(&db, n, 3.0).unwrap();
        let a1 = lo + 0.3 * (hi - lo);
        let a2 = lo + 0.6 * (hi - lo);
        let x1 = thermo_profile(&db, a1, n).unwrap().xi;
        let x2 = thermo_profile(&db, a2, n).unwrap().xi;
        assert!(x1 <= x2);
        assert!(matches!(
            thermo_profile(&db, hi + 10.0, n),
            Err(Error::AlphaOutOfRange { .. })
        ));
    }

    #[test]
    fn expansion_residuals_are_cubic_and_symmetric() {
        let f = RationalMap::quadratic(Complex64::new(-1.0, 0.0));
        let db = db_for(&f, 10);
        let alpha = maxent_mean(&db, 10).unwrap();
        let p = thermo_profile(&db, alpha, 10).unwrap();
        let chk = expansion_check(&db, &p, &[0.0, 0.02, -0.02, 0.04, 0.08], 10).unwrap();
        assert!(chk.residuals[0] < 1e-12);
        assert!((chk.residuals[1] - chk.residuals[2]).abs() < 1e-9);
        let grid = expansion_check(&db, &p, &[0.02, 0.04, 0.08], 10).unwrap();
        assert!(grid.slope >= 2.5, "slope {}", grid.slope);
    }
}
