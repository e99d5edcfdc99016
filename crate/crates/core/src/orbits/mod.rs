//! Periodic orbits: enumeration of fixed points of iterates, grouping into
//! cycles, multiplier data, and the persistent census.

mod database;
mod fixed_points;

use num_complex::Complex64;
use rayon::prelude::*;

pub use database::{enumerate_primitive, OrbitDatabase, PeriodEntry, ToleranceRecord};
pub use fixed_points::{
    fixed_points, fixed_points_with, repelling_seed, unmatched_pairs, EnumerationOptions,
    FixedPoints, Method,
};

use crate::critical::lex_cmp;
use crate::error::{Error, Result};
use crate::map::RationalMap;
use crate::spatial::PointIndex;
use crate::tolerances::PAIRING_TOL;

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicOrbit {
    /// Least period of the cycle.
    pub period: usize,
    /// Cycle point with least `(re, im)`.
    pub representative: Complex64,
    /// `log|λ|`, `-∞` for superattracting cycles.
    pub log_abs_multiplier: f64,
    /// `arg λ` in `[0, 2π)`.
    pub holonomy_angle: f64,
    /// Least period equals the level at which the cycle was classified.
    pub primitive: bool,
    pub repelling: bool,
}

impl PeriodicOrbit {
    /// Holonomy as a fraction of a turn in `[-1/2, 1/2)`.
    pub fn holonomy_fraction(&self) -> f64 {
        crate::counting::holonomy_offset(self.holonomy_angle, 0.0)
    }
}

/// Groups fixed points of `fⁿ` into cycles and attaches multiplier data.
pub fn classify_orbits(
    map: &RationalMap,
    points: &[Complex64],
    n: usize,
) -> Result<Vec<PeriodicOrbit>> {
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let index = PointIndex::new(points.to_vec());
    let next: Vec<usize> = points
        .par_iter()
        .map(|&p| {
            let fp = map.evaluate(p)?;
            match index.nearest(fp) {
                Some((j, dist)) if dist <= PAIRING_TOL * fp.norm().max(1.0) => Ok(j),
                _ => Err(Error::OrbitMatching { z: p, n }),
            }
        })
        .collect::<Result<_>>()?;

    let mut visited = vec![false; points.len()];
    let mut cycles: Vec<Vec<usize>> = Vec::new();
    for i in 0..points.len() {
        if visited[i] {
            continue;
        }
        let mut path = vec![i];
        let mut cur = next[i];
        while cur != i {
            if visited[cur] || path.len() > n {
                return Err(Error::OrbitMatching { z: points[i], n });
            }
            path.push(cur);
            cur = next[cur];
        }
        for &j in &path {
            visited[j] = true;
        }
        if !n.is_multiple_of(path.len()) {
            return Err(Error::OrbitMatching { z: points[i], n });
        }
        cycles.push(path);
    }

    let orbits: Vec<PeriodicOrbit> = cycles
        .par_iter()
        .map(|cycle| {
            let m = cycle.len();
            let representative = cycle
                .iter()
                .map(|&j| points[j])
                .min_by(|a, b| lex_cmp(*a, *b))
                .expect("cycle is nonempty");
            let (log_abs, angle) = match map.cycle_multiplier(representative, m) {
                Ok(mult) => (mult.log_abs, mult.holonomy_angle),
                Err(Error::Superattracting { .. }) => (f64::NEG_INFINITY, 0.0),
                Err(e) => return Err(e),
            };
            Ok(PeriodicOrbit {
                period: m,
                representative,
                log_abs_multiplier: log_abs,
                holonomy_angle: angle,
                primitive: m == n,
                repelling: log_abs > 0.0,
            })
        })
        .collect::<Result<_>>()?;

    let bound = 2 * map.degree() - 2;
    let nonrep = orbits.iter().filter(|o| !o.repelling).count();
    if nonrep > bound {
        return Err(Error::TooManyNonRepelling {
            count: nonrep,
            bound,
        });
    }
    let mut orbits = orbits;
    orbits.sort_by(|a, b| {
        a.period
            .cmp(&b.period)
            .then(lex_cmp(a.representative, b.representative))
    });
    Ok(orbits)
}
