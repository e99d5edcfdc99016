//! Fates of critical orbits: convergence to an attracting cycle, escape to
//! infinity, or undecided within the iteration budget.

use num_complex::Complex64;

use crate::error::Result;
use crate::map::RationalMap;
use crate::poly;
use crate::spatial::dedupe;
use crate::tolerances::PAIRING_TOL;

/// Longest attracting cycle searched for.
const MAX_CYCLE_PERIOD: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct AttractingCycle {
    pub period: usize,
    /// Cycle points in forward order, starting at the lexicographically least.
    pub points: Vec<Complex64>,
    /// `log|λ|`; `-∞` for superattracting cycles.
    pub log_abs_multiplier: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CriticalFate {
    Attracting(AttractingCycle),
    EscapesToInfinity { after: usize },
    Undecided,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalOrbit {
    pub critical_point: Complex64,
    pub fate: CriticalFate,
}

/// Radius outside which a polynomial orbit provably escapes (`|f(z)| ≥ 2|z|`).
/// Rational maps get a large heuristic radius.
pub fn escape_radius(map: &RationalMap) -> f64 {
    if !map.is_polynomial() {
        return 1e8;
    }
    let q0 = map.denominator()[0];
    let coeffs: Vec<Complex64> = map.numerator().iter().map(|&c| c / q0).collect();
    let d = map.degree();
    let lead = coeffs[d].norm();
    let rest: f64 = coeffs[..d].iter().map(|c| c.norm()).sum();
    ((2.0 + rest) / lead).max(1.0)
}

pub fn critical_orbits(map: &RationalMap, max_iter: usize) -> Result<Vec<CriticalOrbit>> {
    let radius = escape_radius(map);
    let crit = map.critical_points()?;
    let (crit, _) = dedupe(&crit, 1e-7);
    Ok(crit
        .into_iter()
        .map(|c| CriticalOrbit {
            critical_point: c,
            fate: fate_of(map, c, max_iter, radius),
        })
        .collect())
}

fn fate_of(map: &RationalMap, c: Complex64, max_iter: usize, radius: f64) -> CriticalFate {
    let mut z = c;
    for k in 0..max_iter {
        if z.norm() > radius {
            return CriticalFate::EscapesToInfinity { after: k };
        }
        match map.evaluate(z) {
            Ok(w) if w.is_finite() => z = w,
            // Landing on a pole means the orbit passes through infinity.
            _ => return CriticalFate::EscapesToInfinity { after: k },
        }
    }
    if z.norm() > radius {
        return CriticalFate::EscapesToInfinity { after: max_iter };
    }
    detect_cycle(map, z).map_or(CriticalFate::Undecided, CriticalFate::Attracting)
}

fn detect_cycle(map: &RationalMap, z: Complex64) -> Option<AttractingCycle> {
    let mut w = z;
    for p in 1..=MAX_CYCLE_PERIOD {
        w = map.evaluate(w).ok()?;
        if (w - z).norm() > 1e-6 * z.norm().max(1.0) {
            continue;
        }
        let star = poly::newton_polish(|u| map.fixed_point_newton_ratio(u, p), z, 60);
        let back = map.iterate(star, p).ok()?;
        if (back - star).norm() > PAIRING_TOL * star.norm().max(1.0) {
            return None;
        }
        let mut points = Vec::with_capacity(p);
        let mut u = star;
        for _ in 0..p {
            points.push(u);
            u = map.evaluate(u).ok()?;
        }
        let log_abs = match map.cycle_multiplier(star, p) {
            Ok(m) => m.log_abs,
            Err(crate::Error::Superattracting { .. }) => f64::NEG_INFINITY,
            Err(_) => return None,
        };
        if log_abs >= 0.0 {
            return None;
        }
        let start = points
            .iter()
            .enumerate()
            .min_by(|a, b| lex_cmp(*a.1, *b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        points.rotate_left(start);
        return Some(AttractingCycle {
            period: p,
            points,
            log_abs_multiplier: log_abs,
        });
    }
    None
}

pub(crate) fn lex_cmp(a: Complex64, b: Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Distinct attracting cycles reached by critical orbits, plus whether every
/// critical orbit was decided.
pub fn attracting_cycles(
    map: &RationalMap,
    max_iter: usize,
) -> Result<(Vec<AttractingCycle>, bool)> {
    let orbits = critical_orbits(map, max_iter)?;
    let mut cycles: Vec<AttractingCycle> = Vec::new();
    let mut decided = true;
    for orbit in orbits {
        match orbit.fate {
            CriticalFate::Attracting(cycle) => {
                let known = cycles.iter().any(|k| {
                    k.period == cycle.period
                        && (k.points[0] - cycle.points[0]).norm()
                            <= PAIRING_TOL * k.points[0].norm().max(1.0) * 1e3
                });
                if !known {
                    cycles.push(cycle);
                }
            }
            CriticalFate::EscapesToInfinity { .. } => {}
            CriticalFate::Undecided => decided = false,
        }
    }
    Ok((cycles, decided))
}
