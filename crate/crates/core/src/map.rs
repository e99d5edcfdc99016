//! Rational maps `f = P/Q` in floating point: evaluation, derivatives, the
//! distortion and rotation functions `r = log|f'|`, `θ = arg f'`, their
//! Birkhoff sums and cycle multipliers.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::poly;
use crate::tolerances::{CLOSURE_TOL, CRITICAL_FLOOR, PAIRING_TOL, POLE_FLOOR};

/// Complex coefficient lists in ascending degree; the denominator defaults
/// to the constant 1.
#[derive(Clone, Debug)]
pub struct RationalMap {
    numerator: Vec<Complex64>,
    denominator: Vec<Complex64>,
    num_deriv: Vec<Complex64>,
    den_deriv: Vec<Complex64>,
    degree: usize,
}

/// On-disk form: `{"numerator": [[re, im], ...], "denominator": [...]}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub numerator: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub denominator: Option<Vec<[f64; 2]>>,
}

/// Birkhoff sums of `r` and of the principal-value lift of `θ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BirkhoffSums {
    pub r: f64,
    pub theta_lifted: f64,
}

/// `log|λ|` and `arg λ ∈ [0, 2π)` of a cycle multiplier.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Multiplier {
    pub log_abs: f64,
    pub holonomy_angle: f64,
}

pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Representative of `theta` in `(-π, π]`.
pub fn principal_angle(theta: f64) -> f64 {
    let t = normalize_angle(theta);
    if t > PI {
        t - TAU
    } else {
        t
    }
}

impl RationalMap {
    pub fn new(numerator: Vec<Complex64>, denominator: Vec<Complex64>) -> Result<Self> {
        let numerator = poly::trim(&numerator);
        let denominator = poly::trim(&denominator);
        let dp = poly::degree(&numerator)
            .ok_or_else(|| Error::InvalidMap("numerator is identically zero".into()))?;
        let dq = poly::degree(&denominator)
            .ok_or_else(|| Error::InvalidMap("denominator is identically zero".into()))?;
        if numerator.iter().chain(&denominator).any(|c| !c.is_finite()) {
            return Err(Error::InvalidMap("non-finite coefficient".into()));
        }
        let degree = dp.max(dq);
        if degree < 2 {
            return Err(Error::InvalidMap(format!("degree {degree} < 2")));
        }
        if dq > 0 {
            for root in poly::roots(&denominator)? {
                let scale: f64 = numerator
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c.norm() * root.norm().powi(k as i32))
                    .sum();
                if poly::horner(&numerator, root).norm() <= PAIRING_TOL * scale.max(1.0) {
                    return Err(Error::InvalidMap(format!(
                        "numerator and denominator share the root {root}"
                    )));
                }
            }
        }
        Ok(Self {
            num_deriv: poly::derivative(&numerator),
            den_deriv: poly::derivative(&denominator),
            numerator,
            denominator,
            degree,
        })
    }

    pub fn polynomial(coeffs: Vec<Complex64>) -> Result<Self> {
        Self::new(coeffs, vec![Complex64::new(1.0, 0.0)])
    }

    /// `z ↦ z² + c`.
    pub fn quadratic(c: Complex64) -> Self {
        Self::unicritical(2, c)
    }

    /// `z ↦ z^d + c`.
    pub fn unicritical(d: usize, c: Complex64) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); d + 1];
        coeffs[0] = c;
        coeffs[d] = Complex64::new(1.0, 0.0);
        Self::polynomial(coeffs).expect("z^d + c with d >= 2 is a valid map")
    }

    pub fn monomial(d: usize) -> Self {
        Self::unicritical(d, Complex64::new(0.0, 0.0))
    }

    pub fn from_config(config: &MapConfig) -> Result<Self> {
        let to_c = |v: &[[f64; 2]]| v.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        let den = config
            .denominator
            .as_deref()
            .map(to_c)
            .unwrap_or_else(|| vec![Complex64::new(1.0, 0.0)]);
        Self::new(to_c(&config.numerator), den)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: MapConfig = serde_json::from_str(text)?;
        Self::from_config(&config)
    }

    pub fn to_config(&self) -> MapConfig {
        let to_pairs = |v: &[Complex64]| v.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>();
        MapConfig {
            numerator: to_pairs(&self.numerator),
            denominator: if self.is_polynomial() && self.denominator[0] == Complex64::new(1.0, 0.0)
            {
                None
            } else {
                Some(to_pairs(&self.denominator))
            },
        }
    }

    /// Hex SHA-256 over the exact bit patterns of the coefficients.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for (tag, list) in [(b'P', &self.numerator), (b'Q', &self.denominator)] {
            hasher.update([tag]);
            hasher.update((list.len() as u64).to_le_bytes());
            for c in list.iter() {
                hasher.update(c.re.to_bits().to_le_bytes());
                hasher.update(c.im.to_bits().to_le_bytes());
            }
        }
        hex::encode(hasher.finalize())
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn numerator(&self) -> &[Complex64] {
        &self.numerator
    }

    pub fn denominator(&self) -> &[Complex64] {
        &self.denominator
    }

    pub fn is_polynomial(&self) -> bool {
        self.denominator.len() == 1
    }

    /// `(a, c)` when the map is `a·z^d + c`.
    pub fn unicritical_form(&self) -> Option<(Complex64, Complex64)> {
        if !self.is_polynomial() {
            return None;
        }
        let d = self.degree;
        let inner_zero = self.numerator[1..d].iter().all(|c| c.norm() == 0.0);
        inner_zero.then(|| {
            (
                self.numerator[d] / self.denominator[0],
                self.numerator[0] / self.denominator[0],
            )
        })
    }

    pub fn evaluate(&self, z: Complex64) -> Result<Complex64> {
        let q = poly::horner(&self.denominator, z);
        if q.norm() < POLE_FLOOR {
            return Err(Error::Pole {
                z,
                modulus: q.norm(),
                index: None,
            });
        }
        Ok(poly::horner(&self.numerator, z) / q)
    }

    /// `f'(z)` from the quotient rule.
    pub fn derivative(&self, z: Complex64) -> Result<Complex64> {
        let q = poly::horner(&self.denominator, z);
        if q.norm() < POLE_FLOOR {
            return Err(Error::Pole {
                z,
                modulus: q.norm(),
                index: None,
            });
        }
        let p = poly::horner(&self.numerator, z);
        let dp = poly::horner(&self.num_deriv, z);
        let dq = poly::horner(&self.den_deriv, z);
        Ok((dp * q - p * dq) / (q * q))
    }

    /// `f^n(z)`.
    pub fn iterate(&self, mut z: Complex64, n: usize) -> Result<Complex64> {
        for j in 0..n {
            z = self.evaluate(z).map_err(|e| with_index(e, j))?;
        }
        Ok(z)
    }

    /// `(r(z), θ(z))` with `θ ∈ [0, 2π)`.
    pub fn distortion_rotation(&self, z: Complex64) -> Result<(f64, f64)> {
        let d = self.checked_derivative(z)?;
        Ok((d.norm().ln(), normalize_angle(d.arg())))
    }

    fn checked_derivative(&self, z: Complex64) -> Result<Complex64> {
        let d = self.derivative(z)?;
        if d.norm() < CRITICAL_FLOOR {
            return Err(Error::CriticalPoint {
                z,
                modulus: d.norm(),
                index: None,
            });
        }
        Ok(d)
    }

    /// `(rⁿ(z), θⁿ(z))` where each rotation summand is taken in `(-π, π]`.
    pub fn birkhoff_sums(&self, z: Complex64, n: usize) -> Result<BirkhoffSums> {
        if n == 0 {
            return Err(Error::Domain("Birkhoff sums need n >= 1".into()));
        }
        let mut sums = BirkhoffSums {
            r: 0.0,
            theta_lifted: 0.0,
        };
        let mut w = z;
        for j in 0..n {
            let d = self.checked_derivative(w).map_err(|e| with_index(e, j))?;
            sums.r += d.norm().ln();
            sums.theta_lifted += d.arg();
            if j + 1 < n {
                w = self.evaluate(w).map_err(|e| with_index(e, j))?;
            }
        }
        Ok(sums)
    }

    /// `Π_{j<n} f'(f^j z)` accumulated directly.
    pub fn chain_rule_product(&self, z: Complex64, n: usize) -> Result<Complex64> {
        let mut prod = Complex64::new(1.0, 0.0);
        let mut w = z;
        for j in 0..n {
            prod *= self.derivative(w).map_err(|e| with_index(e, j))?;
            w = self.evaluate(w).map_err(|e| with_index(e, j))?;
        }
        Ok(prod)
    }

    /// Multiplier of the period-`n` cycle through `z`.
    pub fn cycle_multiplier(&self, z: Complex64, n: usize) -> Result<Multiplier> {
        if n == 0 {
            return Err(Error::Domain("cycle period must be >= 1".into()));
        }
        let image = self.iterate(z, n)?;
        let gap = (image - z).norm();
        if gap > CLOSURE_TOL * z.norm().max(1.0) {
            return Err(Error::NotPeriodic { z, n, gap });
        }
        match self.birkhoff_sums(z, n) {
            Ok(s) => Ok(Multiplier {
                log_abs: s.r,
                holonomy_angle: normalize_angle(s.theta_lifted),
            }),
            Err(Error::CriticalPoint { .. }) => Err(Error::Superattracting { z, n }),
            Err(e) => Err(e),
        }
    }

    /// Finite critical points: zeros of `P'Q - PQ'`.
    pub fn critical_points(&self) -> Result<Vec<Complex64>> {
        let numer = poly::sub(
            &poly::mul(&self.num_deriv, &self.denominator),
            &poly::mul(&self.numerator, &self.den_deriv),
        );
        poly::roots(&numer)
    }

    /// The `d` (or fewer, for rational maps with a pole at infinity) solutions
    /// of `f(y) = x`, Newton-polished.
    pub fn preimages(&self, x: Complex64) -> Result<Vec<Complex64>> {
        let raw = if let Some((a, c)) = self.unicritical_form() {
            let d = self.degree;
            let base = ((x - c) / a).powf(1.0 / d as f64);
            (0..d)
                .map(|k| base * Complex64::from_polar(1.0, TAU * k as f64 / d as f64))
                .collect()
        } else {
            let scaled: Vec<Complex64> = self.denominator.iter().map(|&q| q * x).collect();
            poly::roots(&poly::sub(&self.numerator, &scaled))?
        };
        Ok(raw
            .into_iter()
            .map(|y| self.polish_preimage(y, x))
            .collect())
    }

    fn polish_preimage(&self, mut y: Complex64, x: Complex64) -> Complex64 {
        for _ in 0..6 {
            let (Ok(fy), Ok(dfy)) = (self.evaluate(y), self.derivative(y)) else {
                break;
            };
            if dfy.norm() < CRITICAL_FLOOR {
                break;
            }
            let step = (fy - x) / dfy;
            y -= step;
            if step.norm() <= 4.0 * f64::EPSILON * y.norm().max(1.0) {
                break;
            }
        }
        y
    }

    /// Newton ratio `N/N'` for `N(z) = X_n(z) − z·Y_n(z)`, where `f^n = X_n/Y_n`
    /// in homogeneous coordinates. The iteration is rescaled every step, so
    /// the ratio stays finite even where `f^n(z)` itself would overflow.
    pub fn fixed_point_newton_ratio(&self, z: Complex64, n: usize) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        let (mut x, mut y, mut dx, mut dy) = (z, one, one, Complex64::new(0.0, 0.0));
        for _ in 0..n {
            let (p, px, py) = homogeneous(&self.numerator, self.degree, x, y);
            let (q, qx, qy) = homogeneous(&self.denominator, self.degree, x, y);
            let ndx = px * dx + py * dy;
            let ndy = qx * dx + qy * dy;
            let scale = p.norm().max(q.norm());
            if !(scale > 0.0 && scale.is_finite()) {
                return Complex64::new(f64::NAN, f64::NAN);
            }
            let inv = 1.0 / scale;
            x = p * inv;
            y = q * inv;
            dx = ndx * inv;
            dy = ndy * inv;
        }
        let value = x - z * y;
        let slope = dx - y - z * dy;
        value / slope
    }

    /// Number of finite solutions of `f^n(z) = z`: the degree of
    /// `X_n − z·Y_n`, which is `dⁿ` when `f^n` fixes infinity and `dⁿ + 1`
    /// otherwise.
    pub fn fixed_point_count(&self, n: usize) -> usize {
        let (mut x, mut y) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        for _ in 0..n {
            let (p, _, _) = homogeneous(&self.numerator, self.degree, x, y);
            let (q, _, _) = homogeneous(&self.denominator, self.degree, x, y);
            let scale = p.norm().max(q.norm());
            x = p / scale;
            y = q / scale;
        }
        let base = self.degree.pow(n as u32);
        if y.norm() > PAIRING_TOL * x.norm() {
            base + 1
        } else {
            base
        }
    }
}

/// Homogenized `Σ c_k X^k Y^(d−k)` with both partial derivatives.
fn homogeneous(
    coeffs: &[Complex64],
    d: usize,
    x: Complex64,
    y: Complex64,
) -> (Complex64, Complex64, Complex64) {
    let zero = Complex64::new(0.0, 0.0);
    let (mut v, mut vx, mut vy) = (zero, zero, zero);
    // Powers of x and y up to d.
    let mut xp = vec![Complex64::new(1.0, 0.0); d + 1];
    let mut yp = vec![Complex64::new(1.0, 0.0); d + 1];
    for k in 1..=d {
        xp[k] = xp[k - 1] * x;
        yp[k] = yp[k - 1] * y;
    }
    for (k, &c) in coeffs.iter().enumerate() {
        if c == zero {
            continue;
        }
        let j = d - k;
        v += c * xp[k] * yp[j];
        if k > 0 {
            vx += c * (k as f64) * xp[k - 1] * yp[j];
        }
        if j > 0 {
            vy += c * (j as f64) * xp[k] * yp[j - 1];
        }
    }
    (v, vx, vy)
}

fn with_index(err: Error, j: usize) -> Error {
    match err {
        Error::Pole { z, modulus, .. } => Error::Pole {
            z,
            modulus,
            index: Some(j),
        },
        Error::CriticalPoint { z, modulus, .. } => Error::CriticalPoint {
            z,
            modulus,
            index: Some(j),
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn omega() -> Complex64 {
        Complex64::from_polar(1.0, TAU / 3.0)
    }

    #[test]
    fn evaluate_examples() {
        let sq = RationalMap::monomial(2);
        assert_eq!(sq.evaluate(c(2.0, 0.0)).unwrap(), c(4.0, 0.0));
        let basilica = RationalMap::quadratic(c(-1.0, 0.0));
        assert_eq!(basilica.evaluate(c(0.0, 0.0)).unwrap(), c(-1.0, 0.0));
        let rat = RationalMap::new(
            vec![c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(2.0, 0.0)],
        )
        .unwrap();
        assert!(rat.evaluate(c(0.0, 1.0)).unwrap().norm() < 1e-15);
        assert!(matches!(rat.evaluate(c(0.0, 0.0)), Err(Error::Pole { .. })));
    }

    #[test]
    fn construction_rejects_bad_maps() {
        assert!(RationalMap::polynomial(vec![c(1.0, 0.0), c(1.0, 0.0)]).is_err());
        // (z^2 - 1) / (z - 1) shares the root 1.
        assert!(RationalMap::new(
            vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(-1.0, 0.0), c(1.0, 0.0)]
        )
        .is_err());
    }

    #[test]
    fn distortion_rotation_examples() {
        let sq = RationalMap::monomial(2);
        let (r, t) = sq.distortion_rotation(c(1.0, 0.0)).unwrap();
        assert!((r - 2f64.ln()).abs() < 1e-15 && t.abs() < 1e-15);
        let (r, t) = sq.distortion_rotation(c(0.0, 1.0)).unwrap();
        assert!((r - 2f64.ln()).abs() < 1e-15 && (t - PI / 2.0).abs() < 1e-15);
        let basilica = RationalMap::quadratic(c(-1.0, 0.0));
        assert!(matches!(
            basilica.distortion_rotation(c(0.0, 0.0)),
            Err(Error::CriticalPoint { .. })
        ));
    }

    #[test]
    fn birkhoff_examples() {
        let sq = RationalMap::monomial(2);
        let s = sq.birkhoff_sums(c(1.0, 0.0), 5).unwrap();
        assert!((s.r - 5.0 * 2f64.ln()).abs() < 1e-14 && s.theta_lifted.abs() < 1e-14);
        let s = sq.birkhoff_sums(omega(), 2).unwrap();
        assert!((s.r - 2.0 * 2f64.ln()).abs() < 1e-14);
        assert!(normalize_angle(s.theta_lifted + 1e-12) < 1e-10);
        let z = c(0.3, 0.7);
        let one = sq.birkhoff_sums(z, 1).unwrap();
        let (r, t) = sq.distortion_rotation(z).unwrap();
        assert!((one.r - r).abs() < 1e-15);
        assert!((one.theta_lifted - principal_angle(t)).abs() < 1e-15);
    }

    #[test]
    fn birkhoff_reports_orbit_index() {
        let basilica = RationalMap::quadratic(c(-1.0, 0.0));
        match basilica.birkhoff_sums(c(-1.0, 0.0), 3) {
            Err(Error::CriticalPoint { index, .. }) => assert_eq!(index, Some(1)),
            other => panic!("expected critical point error, got {other:?}"),
        }
    }

    #[test]
    fn cycle_multiplier_examples() {
        let sq = RationalMap::monomial(2);
        let m = sq.cycle_multiplier(c(1.0, 0.0), 1).unwrap();
        assert!((m.log_abs - 2f64.ln()).abs() < 1e-15 && m.holonomy_angle.abs() < 1e-15);
        let m = sq.cycle_multiplier(omega(), 2).unwrap();
        assert!((m.log_abs - 4f64.ln()).abs() < 1e-14);
        assert!(m.holonomy_angle < 1e-12 || m.holonomy_angle > TAU - 1e-12);
        let basilica = RationalMap::quadratic(c(-1.0, 0.0));
        assert!(matches!(
            basilica.cycle_multiplier(c(0.0, 0.0), 2),
            Err(Error::Superattracting { .. })
        ));
        assert!(matches!(
            sq.cycle_multiplier(c(0.5, 0.1), 1),
            Err(Error::NotPeriodic { .. })
        ));
    }

    #[test]
    fn multiplier_matches_chain_rule_on_cycle() {
        // Period-3 point of z^2 - 1 found by Newton on the fixed-point ratio.
        let f = RationalMap::quadratic(c(-1.0, 0.0));
        let mut z = c(0.9, 0.6);
        for _ in 0..80 {
            z -= f.fixed_point_newton_ratio(z, 3);
        }
        let m = f.cycle_multiplier(z, 3).unwrap();
        let prod = f.chain_rule_product(z, 3).unwrap();
        let from_sums = Complex64::from_polar(m.log_abs.exp(), m.holonomy_angle);
        assert!((from_sums - prod).norm() <= 1e-9 * prod.norm());
    }

    #[test]
    fn critical_points_and_preimages() {
        let f = RationalMap::quadratic(c(-1.0, 0.0));
        let crit = f.critical_points().unwrap();
        assert_eq!(crit.len(), 1);
        assert!(crit[0].norm() < 1e-14);
        for y in f.preimages(c(0.4, 0.2)).unwrap() {
            assert!((f.evaluate(y).unwrap() - c(0.4, 0.2)).norm() < 1e-14);
        }
        let g = RationalMap::polynomial(vec![c(0.1, 0.0), c(0.2, 0.0), c(0.0, 0.0), c(1.0, 0.0)])
            .unwrap();
        let pre = g.preimages(c(0.5, -0.5)).unwrap();
        assert_eq!(pre.len(), 3);
        for y in pre {
            assert!((g.evaluate(y).unwrap() - c(0.5, -0.5)).norm() < 1e-13);
        }
    }

    #[test]
    fn fixed_point_count_polynomial_and_rational() {
        assert_eq!(RationalMap::monomial(2).fixed_point_count(5), 32);
        // f(z) = z^2 / (1 + 0.5 z^2) sends infinity to 2, so f^n does not fix it.
        let f = RationalMap::new(
            vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)],
        )
        .unwrap();
        assert_eq!(f.fixed_point_count(2), 5);
    }

    #[test]
    fn config_round_trip_and_fingerprint() {
        let f = RationalMap::quadratic(c(-1.0, 0.0));
        let json = serde_json::to_string(&f.to_config()).unwrap();
        assert_eq!(json, r#"{"numerator":[[-1.0,0.0],[0.0,0.0],[1.0,0.0]]}"#);
        let g = RationalMap::from_json(&json).unwrap();
        assert_eq!(f.fingerprint(), g.fingerprint());
        assert_ne!(
            f.fingerprint(),
            RationalMap::quadratic(c(0.1, 0.0)).fingerprint()
        );
        assert!(RationalMap::from_json(r#"{"numerator":[[1,0]],"extra":1}"#).is_err());
    }

    proptest! {
        #[test]
        fn birkhoff_additivity(re in -1.2f64..1.2, im in -1.2f64..1.2, n in 1usize..6, m in 1usize..6) {
            let f = RationalMap::quadratic(c(-0.3, 0.4));
            let z = c(re, im);
            prop_assume!(z.norm() > 1e-3);
            let total = f.birkhoff_sums(z, n + m);
            let head = f.birkhoff_sums(z, n);
            let fz = f.iterate(z, n).unwrap();
            let tail = f.birkhoff_sums(fz, m);
            if let (Ok(total), Ok(head), Ok(tail)) = (total, head, tail) {
                prop_assume!(fz.norm() < 1e6);
                let scale = total.r.abs().max(1.0);
                prop_assert!((total.r - head.r - tail.r).abs() < 1e-10 * scale);
                prop_assert!((total.theta_lifted - head.theta_lifted - tail.theta_lifted).abs() < 1e-10 * scale);
            }
        }
    }
}
