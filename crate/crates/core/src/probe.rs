//! Empirical hyperbolicity evidence: critical-orbit fates plus a linear lower
//! envelope `log|λ(τ)| ≥ log ĉ + |τ|·log γ̂` over sampled repelling cycles.

use serde::Serialize;

use crate::critical::{critical_orbits, CriticalFate, CriticalOrbit};
use crate::map::RationalMap;
use crate::orbits::{EnumerationOptions, OrbitDatabase};

/// Cycles with `|log|λ|| below this are treated as neutral.
const NEUTRAL_BAND: f64 = 1e-6;
/// Minimum `log|λ|/|τ|` accepted as uniform expansion at desk scale.
const MIN_RATE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    HyperbolicEvidence,
    Inconclusive,
    Fails,
}

#[derive(Clone, Debug)]
pub struct HyperbolicityReport {
    pub verdict: Verdict,
    /// γ̂.
    pub expansion_base: f64,
    /// ĉ.
    pub expansion_const: f64,
    pub min_log_multiplier_rate: f64,
    pub critical_orbits: Vec<CriticalOrbit>,
    /// Why the verdict is not hyperbolic evidence, if it is not.
    pub notes: Vec<String>,
}

pub fn hyperbolicity_probe(
    map: &RationalMap,
    max_iter: usize,
    sample_periods: &[usize],
) -> HyperbolicityReport {
    let mut notes = Vec::new();
    let crit = match critical_orbits(map, max_iter) {
        Ok(c) => c,
        Err(e) => {
            notes.push(format!("critical points unavailable: {e}"));
            Vec::new()
        }
    };
    let mut verdict = Verdict::HyperbolicEvidence;
    for c in &crit {
        match &c.fate {
            CriticalFate::Undecided => {
                verdict = Verdict::Inconclusive;
                notes.push(format!("critical orbit of {} undecided", c.critical_point));
            }
            CriticalFate::Attracting(cycle) if cycle.log_abs_multiplier > -NEUTRAL_BAND => {
                verdict = Verdict::Fails;
                notes.push(format!("neutral cycle of period {}", cycle.period));
            }
            _ => {}
        }
    }

    let mut db = OrbitDatabase::new(map);
    db.options = EnumerationOptions {
        override_hyperbolicity: true,
        critical_max_iter: max_iter,
    };
    // (period, log|λ|) of every sampled primitive repelling cycle.
    let mut samples: Vec<(usize, f64)> = Vec::new();
    for &n in sample_periods {
        if let Err(e) = db.ensure(map, [n]) {
            notes.push(format!("period {n} enumeration failed: {e}"));
            if verdict == Verdict::HyperbolicEvidence {
                verdict = Verdict::Inconclusive;
            }
            continue;
        }
    }
    for entry in db.entries() {
        for o in &entry.nonrepelling {
            if o.log_abs_multiplier.abs() < NEUTRAL_BAND {
                verdict = Verdict::Fails;
                notes.push(format!("neutral cycle of period {}", o.period));
            }
        }
        for o in &entry.repelling {
            samples.push((o.period, o.log_abs_multiplier));
        }
    }

    let (base, konst, min_rate) = fit_envelope(&samples);
    if samples.is_empty() {
        notes.push("no repelling cycles sampled".into());
    }
    if verdict == Verdict::HyperbolicEvidence {
        if !(base > 1.0) {
            verdict = Verdict::Inconclusive;
            notes.push(format!("fitted expansion base {base} is not above 1"));
        } else if !(min_rate >= MIN_RATE) {
            verdict = Verdict::Inconclusive;
            notes.push(format!(
                "slowest cycle expands at rate {min_rate:.4} per step"
            ));
        }
    }
    HyperbolicityReport {
        verdict,
        expansion_base: base,
        expansion_const: konst,
        min_log_multiplier_rate: min_rate,
        critical_orbits: crit,
        notes,
    }
}

/// Lower envelope of `log|λ|` against period: slope from least squares on the
/// per-period minima, intercept lowered until every sample lies above.
fn fit_envelope(samples: &[(usize, f64)]) -> (f64, f64, f64) {
    if samples.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mut minima: std::collections::BTreeMap<usize, f64> = Default::default();
    for &(p, l) in samples {
        let slot = minima.entry(p).or_insert(f64::INFINITY);
        *slot = slot.min(l);
    }
    let pts: Vec<(f64, f64)> = minima.iter().map(|(&p, &l)| (p as f64, l)).collect();
    let slope = if pts.len() >= 2 {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    } else {
        pts[0].1 / pts[0].0
    };
    let intercept = samples
        .iter()
        .map(|&(p, l)| l - slope * p as f64)
        .fold(f64::INFINITY, f64::min);
    let min_rate = samples
        .iter()
        .map(|&(p, l)| l / p as f64)
        .fold(f64::INFINITY, f64::min);
    (slope.exp(), intercept.exp(), min_rate)
}
