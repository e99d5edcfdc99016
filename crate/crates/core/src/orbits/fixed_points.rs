//! Solutions of `fⁿ(z) = z` by inverse-branch word iteration (backward) or by
//! simultaneous root finding on the fixed-point polynomial (roots).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::critical::{attracting_cycles, escape_radius};
use crate::error::{Error, Result};
use crate::map::RationalMap;
use crate::poly;
use crate::spatial::{dedupe, PointIndex};
use crate::tolerances::{CONTRACTION_TOL, PAIRING_TOL, ROOTS_DEGREE_LIMIT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Backward,
    Roots,
    Both,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "backward" => Ok(Method::Backward),
            "roots" => Ok(Method::Roots),
            "both" => Ok(Method::Both),
            other => Err(Error::Domain(format!("unknown method {other:?}"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Backward => "backward",
            Method::Roots => "roots",
            Method::Both => "both",
        })
    }
}

#[derive(Clone, Debug)]
pub struct EnumerationOptions {
    /// Run the backward method even without hyperbolicity evidence.
    pub override_hyperbolicity: bool,
    /// Iterations spent deciding each critical orbit.
    pub critical_max_iter: usize,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self {
            override_hyperbolicity: false,
            critical_max_iter: 2000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FixedPoints {
    pub n: usize,
    pub points: Vec<Complex64>,
    /// Number of finite solutions counted with multiplicity.
    pub expected: usize,
    /// `expected − points.len()`: roots lost to coincidence.
    pub deficiency: usize,
    pub method: Method,
}

pub fn fixed_points(map: &RationalMap, n: usize, method: Method) -> Result<FixedPoints> {
    fixed_points_with(map, n, method, &EnumerationOptions::default())
}

pub fn fixed_points_with(
    map: &RationalMap,
    n: usize,
    method: Method,
    opts: &EnumerationOptions,
) -> Result<FixedPoints> {
    if n == 0 {
        return Err(Error::Domain("period must be >= 1".into()));
    }
    match method {
        Method::Backward => backward(map, n, opts),
        Method::Roots => roots_method(map, n),
        Method::Both => {
            let back = backward(map, n, opts)?;
            let roots = roots_method(map, n)?;
            let unmatched = unmatched_pairs(&back.points, &roots.points);
            if unmatched > 0 {
                return Err(Error::MethodDisagreement { n, unmatched });
            }
            Ok(FixedPoints {
                method: Method::Both,
                ..back
            })
        }
    }
}

/// Points of either set with no partner in the other within pairing tolerance.
pub fn unmatched_pairs(a: &[Complex64], b: &[Complex64]) -> usize {
    let one_way = |from: &[Complex64], to: &[Complex64]| -> usize {
        let index = PointIndex::new(to.to_vec());
        from.iter()
            .filter(|&&z| {
                index
                    .nearest(z)
                    .is_none_or(|(_, d)| d > PAIRING_TOL * z.norm().max(1.0))
            })
            .count()
    };
    one_way(a, b) + one_way(b, a)
}

fn expected_count(map: &RationalMap, n: usize) -> Result<usize> {
    let d = map.degree();
    let exp = u32::try_from(n).map_err(|_| Error::Overflow(format!("period {n}")))?;
    d.checked_pow(exp)
        .ok_or_else(|| Error::Overflow(format!("{d}^{n} fixed points")))?;
    Ok(map.fixed_point_count(n))
}

fn roots_method(map: &RationalMap, n: usize) -> Result<FixedPoints> {
    let expected = expected_count(map, n)?;
    if expected > ROOTS_DEGREE_LIMIT {
        return Err(Error::DegreeOverflow {
            degree: expected,
            limit: ROOTS_DEGREE_LIMIT,
        });
    }
    let radius = start_radius(map, n)?;
    let ratio = |z: Complex64| map.fixed_point_newton_ratio(z, n);
    let out = poly::aberth(
        ratio,
        poly::circle_guesses(expected, Complex64::new(0.0, 0.0), radius),
        &[],
        2000,
        1e-14,
    );
    if let Some(i) = out.roots.iter().position(|r| !r.is_finite()) {
        return Err(Error::NonConvergence(format!(
            "roots method, period {n}, root slot {i}"
        )));
    }
    let polished: Vec<Complex64> = out
        .roots
        .par_iter()
        .map(|&z| poly::newton_polish(ratio, z, 20))
        .collect();
    let (points, merged) = dedupe(&polished, PAIRING_TOL);
    Ok(FixedPoints {
        n,
        points,
        expected,
        deficiency: merged,
        method: Method::Roots,
    })
}

/// Starting circle for the simultaneous iteration. Fixed points of high
/// iterates accumulate on the Julia set, so the circle through the outermost
/// low-period fixed point starts close to most roots; a far circle costs a
/// number of sweeps growing with the degree.
fn start_radius(map: &RationalMap, n: usize) -> Result<f64> {
    const PROBE_PERIOD: usize = 4;
    let fallback = if map.is_polynomial() {
        escape_radius(map)
    } else {
        2.0
    };
    if n <= PROBE_PERIOD {
        return Ok(fallback);
    }
    let probe = roots_method(map, PROBE_PERIOD)?;
    let outer = probe
        .points
        .iter()
        .map(|z| z.norm())
        .fold(0.0_f64, f64::max);
    Ok(if outer > 0.0 && outer.is_finite() {
        outer.min(fallback)
    } else {
        fallback
    })
}

/// The `k`-th inverse branch of `a·z^d + c`, principal root times `ω^k`.
fn inverse_branch(a: Complex64, c: Complex64, d: usize, k: usize, z: Complex64) -> Complex64 {
    let w = (z - c) / a;
    let base = if d == 2 {
        w.sqrt()
    } else {
        w.powf(1.0 / d as f64)
    };
    if k == 0 {
        base
    } else {
        base * Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / d as f64)
    }
}

enum WordOutcome {
    Converged(Complex64),
    Failed(Complex64),
}

fn backward(map: &RationalMap, n: usize, opts: &EnumerationOptions) -> Result<FixedPoints> {
    let (a, c) = map.unicritical_form().ok_or(Error::BackwardUnsupported)?;
    let d = map.degree();
    let expected = expected_count(map, n)?;
    let (cycles, decided) = attracting_cycles(map, opts.critical_max_iter)?;
    if !decided && !opts.override_hyperbolicity {
        return Err(Error::NotHyperbolic(
            "a critical orbit is undecided; pass the hyperbolicity override to proceed".into(),
        ));
    }
    let nonrepelling: Vec<Complex64> = cycles
        .iter()
        .filter(|cy| n.is_multiple_of(cy.period))
        .flat_map(|cy| cy.points.iter().copied())
        .collect();

    let seed = repelling_seed(map)?;
    let words = expected_words(d, n)?;
    let max_cycles = (4000 / n).max(200);
    let outcomes: Vec<WordOutcome> = (0..words)
        .into_par_iter()
        .map(|w| {
            let digits = word_digits(w, d, n);
            let mut z = seed;
            let mut last_step = f64::INFINITY;
            for _ in 0..max_cycles {
                let start = z;
                for &k in digits.iter().rev() {
                    z = inverse_branch(a, c, d, k, z);
                }
                last_step = (z - start).norm();
                if !z.is_finite() || last_step < CONTRACTION_TOL * z.norm().max(1.0) {
                    break;
                }
            }
            if z.is_finite() && last_step < 1e-6 * z.norm().max(1.0) {
                let polished = poly::newton_polish(|u| map.fixed_point_newton_ratio(u, n), z, 12);
                WordOutcome::Converged(polished)
            } else {
                WordOutcome::Failed(z)
            }
        })
        .collect();

    let mut candidates = Vec::with_capacity(words);
    let mut failed = Vec::new();
    for (w, o) in outcomes.into_iter().enumerate() {
        match o {
            WordOutcome::Converged(z) => candidates.push(z),
            WordOutcome::Failed(z) => failed.push((w, z)),
        }
    }
    // Non-repelling points first so that words that slid onto them are merged.
    let mut all = nonrepelling.clone();
    all.extend(candidates);
    let (mut points, _) = dedupe(&all, PAIRING_TOL);

    if points.len() > expected {
        return Err(Error::IncompleteCensus {
            n,
            reason: format!("{} distinct fixed points exceed {expected}", points.len()),
        });
    }
    let missing = expected - points.len();
    if missing > 0 {
        let recovered = deflated_fill(map, n, &points, &failed, missing);
        let mut merged = points.clone();
        merged.extend(recovered);
        let (kept, _) = dedupe(&merged, PAIRING_TOL);
        if kept.len() < expected {
            let word = failed.first().map_or(0, |&(w, _)| w);
            return Err(Error::BranchCut { word, n });
        }
        points = kept;
    }
    Ok(FixedPoints {
        n,
        points,
        expected,
        deficiency: 0,
        method: Method::Backward,
    })
}

/// Finds `missing` further roots of `fⁿ(z) − z` with the known ones deflated.
fn deflated_fill(
    map: &RationalMap,
    n: usize,
    known: &[Complex64],
    failed: &[(usize, Complex64)],
    missing: usize,
) -> Vec<Complex64> {
    let index = PointIndex::new(known.to_vec());
    let mut seeds: Vec<Complex64> = failed
        .iter()
        .map(|&(_, z)| z)
        .filter(|z| z.is_finite())
        .filter(|&z| index.nearest(z).is_none_or(|(_, dist)| dist > 1e-3))
        .take(missing)
        .collect();
    let extra = missing - seeds.len();
    seeds.extend(poly::circle_guesses(extra, Complex64::new(0.0, 0.0), 1.5));
    let ratio = |z: Complex64| map.fixed_point_newton_ratio(z, n);
    let out = poly::aberth(ratio, seeds, known, 2000, 1e-14);
    out.roots
        .into_iter()
        .zip(out.converged)
        .filter(|&(z, ok)| ok && z.is_finite())
        .map(|(z, _)| poly::newton_polish(ratio, z, 20))
        .filter(|&z| {
            map.iterate(z, n)
                .is_ok_and(|w| (w - z).norm() <= PAIRING_TOL * z.norm().max(1.0))
        })
        .collect()
}

fn expected_words(d: usize, n: usize) -> Result<usize> {
    d.checked_pow(n as u32)
        .ok_or_else(|| Error::Overflow(format!("{d}^{n} symbolic words")))
}

fn word_digits(mut w: usize, d: usize, n: usize) -> Vec<usize> {
    let mut digits = Vec::with_capacity(n);
    for _ in 0..n {
        digits.push(w % d);
        w /= d;
    }
    digits
}

/// Repelling fixed point of largest multiplier modulus.
pub fn repelling_seed(map: &RationalMap) -> Result<Complex64> {
    let fps = roots_method(map, 1)?;
    fps.points
        .iter()
        .filter_map(|&z| map.derivative(z).ok().map(|dz| (z, dz.norm())))
        .filter(|&(_, m)| m > 1.0)
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(z, _)| z)
        .ok_or_else(|| Error::NotHyperbolic("no repelling fixed point".into()))
}
