//! Per-period census of primitive orbits, keyed by map fingerprint and
//! persisted as JSON Lines.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::fixed_points::{fixed_points_with, EnumerationOptions, Method};
use super::{classify_orbits, PeriodicOrbit};
use crate::critical::lex_cmp;
use crate::error::{Error, Result};
use crate::map::RationalMap;
use crate::tolerances::{CLOSURE_TOL, CONTRACTION_TOL, CRITICAL_FLOOR, PAIRING_TOL};

const FORMAT_VERSION: u64 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceRecord {
    pub pairing: f64,
    pub critical_floor: f64,
    pub contraction: f64,
    pub closure: f64,
}

impl Default for ToleranceRecord {
    fn default() -> Self {
        Self {
            pairing: PAIRING_TOL,
            critical_floor: CRITICAL_FLOOR,
            contraction: CONTRACTION_TOL,
            closure: CLOSURE_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodEntry {
    pub n: usize,
    /// Primitive repelling orbits of least period `n`.
    pub repelling: Vec<PeriodicOrbit>,
    /// Primitive attracting, superattracting or neutral orbits of least period `n`.
    pub nonrepelling: Vec<PeriodicOrbit>,
    pub complete: bool,
    pub method: Method,
    /// Finite solutions of `fⁿ(z) = z` with multiplicity.
    pub fixed_point_count: usize,
}

#[derive(Clone, Debug)]
pub struct OrbitDatabase {
    pub fingerprint: String,
    pub degree: usize,
    pub tolerances: ToleranceRecord,
    entries: BTreeMap<usize, PeriodEntry>,
    /// Preferred method for new enumerations; not persisted.
    pub method: Option<Method>,
    /// Not persisted.
    pub options: EnumerationOptions,
}

impl PartialEq for OrbitDatabase {
    fn eq(&self, other: &Self) -> bool {
        self.fingerprint == other.fingerprint
            && self.degree == other.degree
            && self.tolerances == other.tolerances
            && self.entries == other.entries
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    version: u64,
    fingerprint: String,
    degree: usize,
    tolerances: ToleranceRecord,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CensusRecord {
    census: usize,
    complete: bool,
    method: Method,
    fixed_points: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OrbitRecord {
    n: usize,
    z: [f64; 2],
    /// Missing for superattracting cycles.
    log_abs: Option<f64>,
    theta: f64,
    primitive: bool,
    repelling: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    nonrepelling: bool,
}

impl OrbitDatabase {
    pub fn new(map: &RationalMap) -> Self {
        Self {
            fingerprint: map.fingerprint(),
            degree: map.degree(),
            tolerances: ToleranceRecord::default(),
            entries: BTreeMap::new(),
            method: None,
            options: EnumerationOptions::default(),
        }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = Some(method);
        self
    }

    pub fn check_map(&self, map: &RationalMap) -> Result<()> {
        let found = map.fingerprint();
        if found != self.fingerprint {
            return Err(Error::FingerprintMismatch {
                expected: self.fingerprint.clone(),
                found,
            });
        }
        Ok(())
    }

    pub fn entry(&self, n: usize) -> Option<&PeriodEntry> {
        self.entries.get(&n)
    }

    pub fn entries(&self) -> impl Iterator<Item = &PeriodEntry> {
        self.entries.values()
    }

    pub fn is_complete(&self, n: usize) -> bool {
        self.entries.get(&n).is_some_and(|e| e.complete)
    }

    /// Largest `N` with every period `1..=N` complete.
    pub fn complete_through(&self) -> usize {
        (1..)
            .take_while(|&n| self.is_complete(n))
            .last()
            .unwrap_or(0)
    }

    pub fn largest_complete(&self) -> Option<usize> {
        self.entries
            .values()
            .filter(|e| e.complete)
            .map(|e| e.n)
            .max()
    }

    fn complete_entry(&self, n: usize) -> Result<&PeriodEntry> {
        self.entries
            .get(&n)
            .filter(|e| e.complete)
            .ok_or_else(|| Error::IncompleteCensus {
                n,
                reason: "period not enumerated".into(),
            })
    }

    /// Primitive repelling orbits of least period `n`.
    pub fn repelling(&self, n: usize) -> Result<&[PeriodicOrbit]> {
        Ok(&self.complete_entry(n)?.repelling)
    }

    /// Repelling cycles whose points are fixed by `fⁿ`, i.e. primitive orbits
    /// of every period `m | n`.
    pub fn repelling_fixed_cycles(&self, n: usize) -> Result<Vec<&PeriodicOrbit>> {
        if n == 0 {
            return Err(Error::Domain("period must be >= 1".into()));
        }
        self.complete_entry(n)?;
        let mut out = Vec::new();
        for m in (1..=n).filter(|m| n.is_multiple_of(*m)) {
            out.extend(self.complete_entry(m)?.repelling.iter());
        }
        Ok(out)
    }

    /// Integer census identity at period `n`:
    /// `Σ_{m|n} m·(#repelling_m + #nonrepelling_m)` against the fixed-point count.
    pub fn census_identity(&self, n: usize) -> Result<(usize, usize)> {
        let expected = self.complete_entry(n)?.fixed_point_count;
        let mut total = 0usize;
        for m in (1..=n).filter(|m| n.is_multiple_of(*m)) {
            let e = self.complete_entry(m)?;
            total += m * (e.repelling.len() + e.nonrepelling.len());
        }
        Ok((total, expected))
    }

    fn default_method(&self, map: &RationalMap) -> Method {
        self.method.unwrap_or(if map.unicritical_form().is_some() {
            Method::Backward
        } else {
            Method::Roots
        })
    }

    /// Enumerates `fⁿ = id` and fills every divisor entry not yet complete.
    pub fn census(&mut self, map: &RationalMap, n: usize) -> Result<()> {
        self.check_map(map)?;
        let method = self.default_method(map);
        let fps = fixed_points_with(map, n, method, &self.options)?;
        if fps.deficiency > 0 {
            return Err(Error::IncompleteCensus {
                n,
                reason: format!("{} coincident fixed points", fps.deficiency),
            });
        }
        let orbits = classify_orbits(map, &fps.points, n)?;
        let mut grouped: BTreeMap<usize, (Vec<PeriodicOrbit>, Vec<PeriodicOrbit>)> = (1..=n)
            .filter(|m| n.is_multiple_of(*m))
            .map(|m| (m, Default::default()))
            .collect();
        for mut orbit in orbits {
            orbit.primitive = true;
            let slot = grouped.get_mut(&orbit.period).expect("period divides n");
            if orbit.repelling {
                slot.0.push(orbit);
            } else {
                slot.1.push(orbit);
            }
        }
        let total: usize = grouped
            .iter()
            .map(|(m, (r, nr))| m * (r.len() + nr.len()))
            .sum();
        if total != fps.expected {
            return Err(Error::IncompleteCensus {
                n,
                reason: format!("census counts {total} of {} fixed points", fps.expected),
            });
        }
        for (m, (mut rep, mut nonrep)) in grouped {
            if let Some(existing) = self.entries.get(&m).filter(|e| e.complete) {
                if existing.repelling.len() != rep.len()
                    || existing.nonrepelling.len() != nonrep.len()
                {
                    return Err(Error::IncompleteCensus {
                        n,
                        reason: format!(
                            "period {m} has {} repelling orbits in the cache but {} at level {n}",
                            existing.repelling.len(),
                            rep.len()
                        ),
                    });
                }
                continue;
            }
            rep.sort_by(|a, b| lex_cmp(a.representative, b.representative));
            nonrep.sort_by(|a, b| lex_cmp(a.representative, b.representative));
            self.entries.insert(
                m,
                PeriodEntry {
                    n: m,
                    repelling: rep,
                    nonrepelling: nonrep,
                    complete: true,
                    method,
                    fixed_point_count: map.fixed_point_count(m),
                },
            );
        }
        let nonrep_total: usize = self.entries.values().map(|e| e.nonrepelling.len()).sum();
        let bound = 2 * self.degree - 2;
        if nonrep_total > bound {
            return Err(Error::TooManyNonRepelling {
                count: nonrep_total,
                bound,
            });
        }
        Ok(())
    }

    /// Ensures every period in `range` is complete.
    pub fn ensure(
        &mut self,
        map: &RationalMap,
        periods: impl IntoIterator<Item = usize>,
    ) -> Result<()> {
        for n in periods {
            if !self.is_complete(n) {
                self.census(map, n)?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("jsonl.tmp");
        {
            let mut out = BufWriter::new(fs::File::create(&tmp)?);
            let header = Header {
                version: FORMAT_VERSION,
                fingerprint: self.fingerprint.clone(),
                degree: self.degree,
                tolerances: self.tolerances.clone(),
            };
            writeln!(out, "{}", serde_json::to_string(&header)?)?;
            for e in self.entries.values() {
                let census = CensusRecord {
                    census: e.n,
                    complete: e.complete,
                    method: e.method,
                    fixed_points: e.fixed_point_count,
                };
                writeln!(out, "{}", serde_json::to_string(&census)?)?;
                let rows = e
                    .repelling
                    .iter()
                    .map(|o| (o, false))
                    .chain(e.nonrepelling.iter().map(|o| (o, true)));
                for (o, sidecar) in rows {
                    let rec = OrbitRecord {
                        n: o.period,
                        z: [o.representative.re, o.representative.im],
                        log_abs: o
                            .log_abs_multiplier
                            .is_finite()
                            .then_some(o.log_abs_multiplier),
                        theta: o.holonomy_angle,
                        primitive: o.primitive,
                        repelling: o.repelling,
                        nonrepelling: sidecar,
                    };
                    writeln!(out, "{}", serde_json::to_string(&rec)?)?;
                }
            }
            out.flush()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let reader = BufReader::new(fs::File::open(path)?);
        let mut lines = reader.lines();
        let first = lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::VersionMismatch("empty database file".into()))?;
        let header: Header = serde_json::from_str(&first)
            .map_err(|e| Error::VersionMismatch(format!("unreadable header: {e}")))?;
        if header.version != FORMAT_VERSION {
            return Err(Error::VersionMismatch(format!(
                "found version {}, expected {FORMAT_VERSION}",
                header.version
            )));
        }
        let mut entries: BTreeMap<usize, PeriodEntry> = BTreeMap::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let value: Value = serde_json::from_str(&line)?;
            if value.get("census").is_some() {
                let c: CensusRecord = serde_json::from_value(value)?;
                entries.insert(
                    c.census,
                    PeriodEntry {
                        n: c.census,
                        repelling: Vec::new(),
                        nonrepelling: Vec::new(),
                        complete: c.complete,
                        method: c.method,
                        fixed_point_count: c.fixed_points,
                    },
                );
                continue;
            }
            let r: OrbitRecord = serde_json::from_value(value)?;
            let entry = entries.get_mut(&r.n).ok_or_else(|| {
                Error::VersionMismatch(format!("orbit record for period {} before its census", r.n))
            })?;
            let orbit = PeriodicOrbit {
                period: r.n,
                representative: Complex64::new(r.z[0], r.z[1]),
                log_abs_multiplier: r.log_abs.unwrap_or(f64::NEG_INFINITY),
                holonomy_angle: r.theta,
                primitive: r.primitive,
                repelling: r.repelling,
            };
            if r.nonrepelling {
                entry.nonrepelling.push(orbit);
            } else {
                entry.repelling.push(orbit);
            }
        }
        Ok(Self {
            fingerprint: header.fingerprint,
            degree: header.degree,
            tolerances: header.tolerances,
            entries,
            method: None,
            options: EnumerationOptions::default(),
        })
    }

    /// Loads and checks that the database belongs to `map`.
    pub fn load_for(path: &Path, map: &RationalMap) -> Result<Self> {
        let db = Self::load(path)?;
        db.check_map(map)?;
        Ok(db)
    }
}

/// Primitive repelling orbits of least period `n`, enumerating and caching
/// every period dividing `n` as needed.
pub fn enumerate_primitive(
    map: &RationalMap,
    n: usize,
    db: &mut OrbitDatabase,
) -> Result<Vec<PeriodicOrbit>> {
    db.check_map(map)?;
    if !db.is_complete(n) {
        db.census(map, n)?;
    }
    Ok(db.repelling(n)?.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn squaring_counts() {
        let f = RationalMap::monomial(2);
        let mut db = OrbitDatabase::new(&f);
        let one = enumerate_primitive(&f, 1, &mut db).unwrap();
        assert_eq!(one.len(), 1);
        assert!((one[0].representative - 1.0).norm() < 1e-12);
        assert_eq!(enumerate_primitive(&f, 4, &mut db).unwrap().len(), 3);
        assert_eq!(db.census_identity(4).unwrap(), (16, 16));
    }

    #[test]
    fn round_trip_and_mismatch() {
        let f = RationalMap::monomial(2);
        let mut db = OrbitDatabase::new(&f);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db.jsonl");
        db.save(&path).unwrap();
        assert_eq!(OrbitDatabase::load(&path).unwrap(), db);
        db.ensure(&f, 1..=4).unwrap();
        db.save(&path).unwrap();
        let back = OrbitDatabase::load_for(&path, &f).unwrap();
        assert_eq!(back, db);
        let g = RationalMap::quadratic(c(-1.0, 0.0));
        assert!(matches!(
            OrbitDatabase::load_for(&path, &g),
            Err(Error::FingerprintMismatch { .. })
        ));
        fs::write(&path, "{\"version\":7}\n").unwrap();
        assert!(matches!(
            OrbitDatabase::load(&path),
            Err(Error::VersionMismatch(_))
        ));
    }

    #[test]
    fn superattracting_sidecar_round_trip() {
        let f = RationalMap::quadratic(c(-1.0, 0.0));
        let mut db = OrbitDatabase::new(&f);
        db.ensure(&f, 1..=3).unwrap();
        let e2 = db.entry(2).unwrap();
        assert_eq!(e2.nonrepelling.len(), 1);
        assert_eq!(e2.repelling.len(), 0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db.jsonl");
        db.save(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"nonrepelling\":true"));
        assert!(text.contains("\"log_abs\":null"));
        assert_eq!(OrbitDatabase::load(&path).unwrap(), db);
    }

    #[test]
    fn complete_entries_are_not_overwritten() {
        let f = RationalMap::quadratic(c(-1.0, 0.0));
        let mut db = OrbitDatabase::new(&f);
        db.ensure(&f, [1]).unwrap();
        let before = db.entry(1).unwrap().clone();
        db.ensure(&f, [4]).unwrap();
        assert_eq!(db.entry(1).unwrap(), &before);
    }
}
