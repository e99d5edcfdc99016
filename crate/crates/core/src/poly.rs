//! Dense complex polynomials in ascending-degree order and an Aberth–Ehrlich
//! simultaneous root finder that only needs the Newton ratio `p/p'`.
//!
//! The root finder is deliberately coefficient-free: the fixed-point
//! polynomials of high iterates are evaluated by composition, never expanded.

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
}

/// Value and first derivative in one pass.
pub fn horner_with_derivative(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = ZERO;
    let mut dp = ZERO;
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

pub fn derivative(coeffs: &[Complex64]) -> Vec<Complex64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}

/// Drops exactly-zero high-order coefficients.
pub fn trim(coeffs: &[Complex64]) -> Vec<Complex64> {
    let len = coeffs.iter().rposition(|c| *c != ZERO).map_or(0, |i| i + 1);
    coeffs[..len].to_vec()
}

pub fn degree(coeffs: &[Complex64]) -> Option<usize> {
    coeffs.iter().rposition(|c| *c != ZERO)
}

pub fn mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![ZERO; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn sub(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![ZERO; a.len().max(b.len())];
    for (i, &x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, &y) in b.iter().enumerate() {
        out[i] -= y;
    }
    out
}

/// Outcome of a simultaneous iteration.
#[derive(Clone, Debug)]
pub struct AberthOutcome {
    pub roots: Vec<Complex64>,
    pub converged: Vec<bool>,
    pub sweeps: usize,
}

impl AberthOutcome {
    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }
}

/// Evenly spaced starting points on a circle, rotated off the real axis so
/// that conjugate-symmetric problems do not start on a symmetry line.
pub fn circle_guesses(count: usize, center: Complex64, radius: f64) -> Vec<Complex64> {
    let offset = 0.4;
    (0..count)
        .map(|k| {
            let angle = std::f64::consts::TAU * k as f64 / count as f64 + offset;
            center + Complex64::from_polar(radius, angle)
        })
        .collect()
}

/// Aberth–Ehrlich iteration (Gauss–Seidel ordering) for the roots of a
/// polynomial given only its Newton ratio. `fixed` holds roots that are
/// already known: they repel the moving roots but are never updated, which
/// deflates them out of the problem.
pub fn aberth<F>(
    ratio: F,
    mut roots: Vec<Complex64>,
    fixed: &[Complex64],
    max_sweeps: usize,
    tol: f64,
) -> AberthOutcome
where
    F: Fn(Complex64) -> Complex64,
{
    let n = roots.len();
    let mut converged = vec![false; n];
    let fixed_sum =
        |z: Complex64| -> Complex64 { fixed.iter().map(|&r| (z - r).inv()).sum::<Complex64>() };
    let mut sweeps = 0;
    while sweeps < max_sweeps && !converged.iter().all(|&c| c) {
        sweeps += 1;
        for i in 0..n {
            if converged[i] {
                continue;
            }
            let z = roots[i];
            let w = ratio(z);
            if !w.is_finite() {
                continue;
            }
            let mut s = fixed_sum(z);
            for (j, &r) in roots.iter().enumerate() {
                if j != i {
                    s += (z - r).inv();
                }
            }
            let denom = Complex64::new(1.0, 0.0) - w * s;
            let step = if denom.norm() > 0.0 && denom.is_finite() {
                w / denom
            } else {
                w
            };
            if !step.is_finite() {
                continue;
            }
            roots[i] = z - step;
            if step.norm() <= tol * roots[i].norm().max(1.0) {
                converged[i] = true;
            }
        }
    }
    AberthOutcome {
        roots,
        converged,
        sweeps,
    }
}

/// Newton polishing from `z` using the ratio `p/p'`.
pub fn newton_polish<F>(ratio: F, mut z: Complex64, max_steps: usize) -> Complex64
where
    F: Fn(Complex64) -> Complex64,
{
    for _ in 0..max_steps {
        let step = ratio(z);
        if !step.is_finite() {
            break;
        }
        z -= step;
        if step.norm() <= 4.0 * f64::EPSILON * z.norm().max(1.0) {
            break;
        }
    }
    z
}

/// All roots of an explicitly given polynomial (intended for small degree:
/// critical points, inverse images).
pub fn roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let coeffs = trim(coeffs);
    let deg = match degree(&coeffs) {
        Some(d) => d,
        None => {
            return Err(Error::Domain(
                "zero polynomial has no isolated roots".into(),
            ))
        }
    };
    match deg {
        0 => Ok(Vec::new()),
        1 => Ok(vec![-coeffs[0] / coeffs[1]]),
        _ => {
            let lead = coeffs[deg].norm();
            // Fujiwara-style bound on the root moduli.
            let bound = (0..deg)
                .map(|k| (coeffs[k].norm() / lead).powf(1.0 / (deg - k) as f64))
                .fold(0.0_f64, f64::max);
            let radius = bound.max(1e-3);
            let centroid = -coeffs[deg - 1] / (coeffs[deg] * deg as f64);
            let ratio = |z: Complex64| {
                let (p, dp) = horner_with_derivative(&coeffs, z);
                p / dp
            };
            let out = aberth(
                ratio,
                circle_guesses(deg, centroid, radius),
                &[],
                500,
                1e-15,
            );
            if !out.roots.iter().all(|r| r.is_finite()) {
                return Err(Error::NonConvergence("explicit polynomial roots".into()));
            }
            Ok(out
                .roots
                .into_iter()
                .map(|r| newton_polish(ratio, r, 8))
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn horner_matches_direct_sum() {
        let p = [c(1.0, 0.0), c(-2.0, 1.0), c(0.5, 0.0)];
        let z = c(0.3, -1.2);
        let direct = p[0] + p[1] * z + p[2] * z * z;
        assert!((horner(&p, z) - direct).norm() < 1e-14);
        let (v, dv) = horner_with_derivative(&p, z);
        assert!((v - direct).norm() < 1e-14);
        assert!((dv - (p[1] + p[2] * z * 2.0)).norm() < 1e-14);
    }

    #[test]
    fn roots_of_cubic() {
        // (z - 1)(z + 2)(z - i)
        let p = mul(
            &mul(&[c(-1.0, 0.0), c(1.0, 0.0)], &[c(2.0, 0.0), c(1.0, 0.0)]),
            &[c(0.0, -1.0), c(1.0, 0.0)],
        );
        let mut r = roots(&p).unwrap();
        r.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((r[0] - c(-2.0, 0.0)).norm() < 1e-12);
        assert!((r[1] - c(0.0, 1.0)).norm() < 1e-12);
        assert!((r[2] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn deflation_finds_remaining_roots() {
        // z^4 - 1 with the roots 1 and -1 held fixed.
        let p = [c(-1.0, 0.0), ZERO, ZERO, ZERO, c(1.0, 0.0)];
        let ratio = |z: Complex64| {
            let (v, dv) = horner_with_derivative(&p, z);
            v / dv
        };
        let out = aberth(
            ratio,
            vec![c(0.3, 0.8), c(-0.2, -0.9)],
            &[c(1.0, 0.0), c(-1.0, 0.0)],
            200,
            1e-15,
        );
        assert!(out.all_converged());
        let mut ims: Vec<f64> = out.roots.iter().map(|r| r.im).collect();
        ims.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ims[0] + 1.0).abs() < 1e-12 && (ims[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trim_and_degree() {
        let p = [c(1.0, 0.0), c(2.0, 0.0), ZERO];
        assert_eq!(trim(&p).len(), 2);
        assert_eq!(degree(&p), Some(1));
        assert_eq!(degree(&[ZERO]), None);
    }
}
