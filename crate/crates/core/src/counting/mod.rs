//! Orbit counts in multiplier and holonomy windows, and their predicted
//! asymptotics.
//!
//! Windows are closed: boundary hits count. Arcs are measured as fractions of
//! a full turn.

mod li;
mod window;

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

pub use li::{logarithmic_integral, ow_count, ow_count_report, OwCount};
pub use window::{
    make_bump, make_inner_bump, mollifier_cdf, BumpTarget, SmoothedWindow, WindowKind,
};

use crate::error::{Error, Result};
use crate::orbits::{OrbitDatabase, PeriodicOrbit};
use crate::thermo::{OrbitSums, ThermoProfile};

/// Signed offset of `angle` from `center` as a fraction of a turn, in `[-1/2, 1/2)`.
pub fn holonomy_offset(angle: f64, center: f64) -> f64 {
    let x = (angle - center) / TAU;
    x - (x + 0.5).floor()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    /// Radians in `[0, 2π)`.
    pub center_angle: f64,
    /// `ν(S)` in `[0, 1]`.
    pub width_fraction: f64,
}

impl Arc {
    pub const FULL: Arc = Arc {
        center_angle: 0.0,
        width_fraction: 1.0,
    };

    pub fn contains(&self, angle: f64) -> bool {
        self.width_fraction >= 1.0
            || holonomy_offset(angle, self.center_angle).abs() <= self.width_fraction / 2.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountQuery {
    pub n: usize,
    pub alpha: f64,
    /// Closed interval `[a, b]` for `log|λ| − nα`.
    pub interval: (f64, f64),
    pub arc: Arc,
}

impl CountQuery {
    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.interval;
        if !(a <= b) {
            return Err(Error::Domain(format!("interval [{a}, {b}] is reversed")));
        }
        if !(0.0..=1.0).contains(&self.arc.width_fraction) {
            return Err(Error::Domain(format!(
                "arc width {} is not a fraction of the circle",
                self.arc.width_fraction
            )));
        }
        Ok(())
    }

    pub fn matches(&self, orbit: &PeriodicOrbit) -> bool {
        let dev = orbit.log_abs_multiplier - self.n as f64 * self.alpha;
        dev >= self.interval.0 && dev <= self.interval.1 && self.arc.contains(orbit.holonomy_angle)
    }
}

/// `π(n, α, I, S)`.
pub fn count_orbits(db: &OrbitDatabase, q: &CountQuery) -> Result<usize> {
    q.validate()?;
    Ok(db.repelling(q.n)?.iter().filter(|o| q.matches(o)).count())
}

/// `∫_a^b e^{−ξx} dx`, with a series near `ξ = 0` against cancellation.
pub fn exponential_window_integral(xi: f64, a: f64, b: f64) -> f64 {
    let len = b - a;
    if xi.abs() < 1e-12 {
        len
    } else if xi.abs() < 1e-6 {
        len * (1.0 - xi * (a + b) / 2.0 + xi * xi * (a * a + a * b + b * b) / 6.0)
    } else {
        -(-xi * a).exp() * (-xi * len).exp_m1() / xi
    }
}

fn clt_scale(profile: &ThermoProfile, n: usize) -> Result<f64> {
    if !(profile.sigma2 > 0.0) {
        return Err(Error::Degenerate(format!(
            "variance {} is not positive",
            profile.sigma2
        )));
    }
    let nf = n as f64;
    Ok((profile.h * nf).exp() / (profile.sigma2.sqrt() * TAU.sqrt() * nf.powf(1.5)))
}

/// `ν(S)·∫_I e^{−ξx}dx·e^{Hn} / (σ√(2π)·n^{3/2})`.
pub fn predict(profile: &ThermoProfile, q: &CountQuery) -> Result<f64> {
    q.validate()?;
    let scale = clt_scale(profile, q.n)?;
    let j = exponential_window_integral(profile.xi, q.interval.0, q.interval.1);
    Ok(q.arc.width_fraction * j * scale)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sequence {
    Constant {
        value: f64,
    },
    /// `scale · n^exponent`.
    Power {
        scale: f64,
        exponent: f64,
    },
    /// `scale · e^{rate·n}`.
    Exponential {
        scale: f64,
        rate: f64,
    },
    Table {
        values: BTreeMap<usize, f64>,
    },
}

impl Sequence {
    pub fn at(&self, n: usize) -> Result<f64> {
        let nf = n as f64;
        Ok(match self {
            Sequence::Constant { value } => *value,
            Sequence::Power { scale, exponent } => scale * nf.powf(*exponent),
            Sequence::Exponential { scale, rate } => scale * (rate * nf).exp(),
            Sequence::Table { values } => *values
                .get(&n)
                .ok_or_else(|| Error::Schedule(format!("no table entry for n = {n}")))?,
        })
    }
}

/// Shrinking windows `I_n = [p_n − ℓ_n/2, p_n + ℓ_n/2]` and arcs of width `κ_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSchedule {
    pub center: Sequence,
    pub length: Sequence,
    pub arc_center: Sequence,
    pub arc_width: Sequence,
    pub compact_bound: (f64, f64),
    /// Inclusive range of `n` over which the schedule is declared.
    pub n_range: (usize, usize),
    /// Bound on `max |log ℓ_n|/n` and `max |log κ_n|/n` over the range.
    #[serde(default = "default_growth_bound")]
    pub growth_bound: f64,
}

fn default_growth_bound() -> f64 {
    0.2
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowAt {
    pub center: f64,
    pub length: f64,
    pub arc: Arc,
}

impl WindowAt {
    pub fn interval(&self) -> (f64, f64) {
        (
            self.center - self.length / 2.0,
            self.center + self.length / 2.0,
        )
    }
}

impl WindowSchedule {
    pub fn constant(center: f64, length: f64, arc: Arc, n_range: (usize, usize)) -> Self {
        Self {
            center: Sequence::Constant { value: center },
            length: Sequence::Constant { value: length },
            arc_center: Sequence::Constant {
                value: arc.center_angle,
            },
            arc_width: Sequence::Constant {
                value: arc.width_fraction,
            },
            compact_bound: (center - length, center + length),
            n_range,
            growth_bound: default_growth_bound(),
        }
    }

    pub fn window(&self, n: usize) -> Result<WindowAt> {
        let length = self.length.at(n)?;
        let width = self.arc_width.at(n)?;
        if !(length > 0.0) {
            return Err(Error::Schedule(format!(
                "window length {length} at n = {n}"
            )));
        }
        if !(width > 0.0 && width <= 1.0) {
            return Err(Error::Schedule(format!("arc width {width} at n = {n}")));
        }
        Ok(WindowAt {
            center: self.center.at(n)?,
            length,
            arc: Arc {
                center_angle: self.arc_center.at(n)?.rem_euclid(TAU),
                width_fraction: width,
            },
        })
    }

    /// Largest `|log ℓ_n|/n` and `|log κ_n|/n` over the declared range.
    pub fn growth(&self) -> Result<(f64, f64)> {
        let (mut gl, mut gk) = (0.0_f64, 0.0_f64);
        for n in self.n_range.0..=self.n_range.1 {
            let w = self.window(n)?;
            gl = gl.max(w.length.ln().abs() / n as f64);
            gk = gk.max(w.arc.width_fraction.ln().abs() / n as f64);
        }
        Ok((gl, gk))
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.n_range;
        if lo == 0 || lo > hi {
            return Err(Error::Schedule(format!("bad n range {lo}..={hi}")));
        }
        let (gl, gk) = self.growth()?;
        if gl > self.growth_bound || gk > self.growth_bound {
            return Err(Error::Schedule(format!(
                "windows shrink exponentially: max |log l_n|/n = {gl:.4}, max |log k_n|/n = {gk:.4}, bound {}",
                self.growth_bound
            )));
        }
        let (k0, k1) = self.compact_bound;
        for n in lo..=hi {
            let (a, b) = self.window(n)?.interval();
            if a < k0 || b > k1 {
                return Err(Error::Schedule(format!(
                    "I_{n} = [{a}, {b}] leaves the compact bound [{k0}, {k1}]"
                )));
            }
        }
        Ok(())
    }

    pub fn query(&self, n: usize, alpha: f64) -> Result<CountQuery> {
        let w = self.window(n)?;
        Ok(CountQuery {
            n,
            alpha,
            interval: w.interval(),
            arc: w.arc,
        })
    }
}

/// `κ_n·ℓ_n·e^{−ξp_n}·e^{Hn} / (σ√(2π)·n^{3/2})`.
pub fn predict_shrinking(
    profile: &ThermoProfile,
    schedule: &WindowSchedule,
    n: usize,
) -> Result<f64> {
    schedule.validate()?;
    let w = schedule.window(n)?;
    let scale = clt_scale(profile, n)?;
    Ok(w.arc.width_fraction * w.length * (-profile.xi * w.center).exp() * scale)
}

#[derive(Clone, Debug, Serialize)]
pub struct SmoothedCount {
    /// `Σ_{τ ∈ 𝒫_n} φ(·)ψ(·)` over primitive orbits.
    pub primitive_sum: f64,
    /// `(1/n)·Σ_{fⁿx=x} φ(·)ψ(·)` over all repelling fixed points.
    pub fixed_point_sum: f64,
    pub gap: f64,
}

/// Smoothed count `π_{φ,ψ}(n)`: `φ` sees `(log|λ| − nα − p_n)/ℓ_n`, `ψ`
/// sees the holonomy offset from the arc centre scaled by the arc width
/// when `ψ` was built for a unit target.
pub fn smoothed_count(
    db: &OrbitDatabase,
    n: usize,
    alpha: f64,
    phi: &SmoothedWindow,
    psi: &SmoothedWindow,
    schedule: &WindowSchedule,
) -> Result<SmoothedCount> {
    let w = schedule.window(n)?;
    let nf = n as f64;
    let weight = |r_n: f64, theta_n: f64| {
        let x = (r_n - nf * alpha - w.center) / w.length;
        let y = holonomy_offset(theta_n, w.arc.center_angle);
        phi.eval(x) * psi.eval(y)
    };
    let primitive_sum: f64 = db
        .repelling(n)?
        .iter()
        .map(|o| weight(o.log_abs_multiplier, o.holonomy_angle))
        .sum();
    let sums = OrbitSums::new(db, n)?;
    let fixed_point_sum = sums
        .r
        .iter()
        .zip(&sums.theta)
        .zip(&sums.weight)
        .map(|((&r, &th), &m)| m * weight(r, th))
        .sum::<f64>()
        / nf;
    Ok(SmoothedCount {
        primitive_sum,
        fixed_point_sum,
        gap: (primitive_sum - fixed_point_sum).abs(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct WeylSums {
    pub n: usize,
    pub sample_size: usize,
    /// `|Σ e^{ik·arg λ}| / #selected` for `k = 1..=k_max`; empty when nothing is selected.
    pub magnitudes: Vec<f64>,
}

impl WeylSums {
    pub fn is_empty(&self) -> bool {
        self.sample_size == 0
    }
}

/// Normalized holonomy Weyl sums over orbits with `log|λ| − nα ∈ interval`.
pub fn weyl_sums(
    db: &OrbitDatabase,
    n: usize,
    alpha: f64,
    interval: (f64, f64),
    k_max: usize,
) -> Result<WeylSums> {
    let q = CountQuery {
        n,
        alpha,
        interval,
        arc: Arc::FULL,
    };
    q.validate()?;
    let angles: Vec<f64> = db
        .repelling(n)?
        .iter()
        .filter(|o| q.matches(o))
        .map(|o| o.holonomy_angle)
        .collect();
    if angles.is_empty() {
        return Ok(WeylSums {
            n,
            sample_size: 0,
            magnitudes: Vec::new(),
        });
    }
    let size = angles.len() as f64;
    let magnitudes = (1..=k_max)
        .map(|k| weyl_magnitude(&angles, k as f64) / size)
        .collect();
    Ok(WeylSums {
        n,
        sample_size: angles.len(),
        magnitudes,
    })
}

pub(crate) fn weyl_magnitude(angles: &[f64], k: f64) -> f64 {
    let (c, s) = angles.iter().fold((0.0, 0.0), |(c, s), &a| {
        (c + (k * a).cos(), s + (k * a).sin())
    });
    c.hypot(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportRow {
    pub n: usize,
    pub count: usize,
    pub prediction: f64,
    /// `None` when the prediction vanishes.
    pub ratio: Option<f64>,
    pub alpha: f64,
    pub xi: f64,
    pub sigma2: f64,
    #[serde(rename = "H")]
    pub h: f64,
    pub interval_a: f64,
    pub interval_b: f64,
    pub arc_center: f64,
    pub arc_width: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ReportRow>,
    /// `|ratio − 1|` is non-increasing over the upper half of the range.
    pub improving: bool,
}

/// Count against prediction for each `n`, with the profile supplied per `n`.
pub fn convergence_report(
    db: &OrbitDatabase,
    mut profile_at: impl FnMut(usize) -> Result<ThermoProfile>,
    template: &CountQuery,
    n_range: std::ops::RangeInclusive<usize>,
) -> Result<ConvergenceReport> {
    let mut rows = Vec::new();
    for n in n_range {
        let q = CountQuery { n, ..*template };
        let profile = profile_at(n)?;
        let count = count_orbits(db, &q)?;
        let prediction = predict(&profile, &q)?;
        let ratio = (prediction > 0.0).then(|| count as f64 / prediction);
        rows.push(ReportRow {
            n,
            count,
            prediction,
            ratio,
            alpha: q.alpha,
            xi: profile.xi,
            sigma2: profile.sigma2,
            h: profile.h,
            interval_a: q.interval.0,
            interval_b: q.interval.1,
            arc_center: q.arc.center_angle,
            arc_width: q.arc.width_fraction,
        });
    }
    let top: Vec<f64> = rows[rows.len() / 2..]
        .iter()
        .filter_map(|r| r.ratio.map(|x| (x - 1.0).abs()))
        .collect();
    let improving = top.windows(2).all(|w| w[1] <= w[0]);
    Ok(ConvergenceReport { rows, improving })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::RationalMap;
    use std::f64::consts::LN_2;

    fn squaring_db(n: usize) -> OrbitDatabase {
        let f = RationalMap::monomial(2);
        let mut db = OrbitDatabase::new(&f);
        db.ensure(&f, 1..=n).unwrap();
        db
    }

    fn profile(xi: f64, sigma2: f64, h: f64) -> ThermoProfile {
        ThermoProfile {
            alpha: 0.0,
            xi,
            sigma2,
            h,
            residual: 0.0,
            n_used: 0,
        }
    }

    #[test]
    fn squaring_window_counts() {
        let db = squaring_db(3);
        let q = CountQuery {
            n: 3,
            alpha: LN_2,
            interval: (-0.5, 0.5),
            arc: Arc::FULL,
        };
        assert_eq!(count_orbits(&db, &q).unwrap(), 2);
        let empty = CountQuery {
            interval: (0.3, 0.3),
            ..q
        };
        assert_eq!(count_orbits(&db, &empty).unwrap(), 0);
    }

    #[test]
    fn prediction_branches() {
        let p = profile(0.0, 1.0, LN_2);
        let q = CountQuery {
            n: 10,
            alpha: 0.0,
            interval: (0.0, 1.0),
            arc: Arc::FULL,
        };
        let expect = 1024.0 / (TAU.sqrt() * 10f64.powf(1.5));
        assert!((predict(&p, &q).unwrap() - expect).abs() < 1e-12 * expect);
        let none = CountQuery {
            arc: Arc {
                center_angle: 0.0,
                width_fraction: 0.0,
            },
            ..q
        };
        assert_eq!(predict(&p, &none).unwrap(), 0.0);
        assert!(matches!(
            predict(&profile(0.0, 0.0, 1.0), &q),
            Err(Error::Degenerate(_))
        ));
        // Continuity across the small-ξ branches.
        for (a, b) in [(-1.0, 1.0), (0.0, 2.5), (-3.0, -0.5)] {
            let at = |xi: f64| exponential_window_integral(xi, a, b);
            assert!((at(0.999_999e-12) - at(1.000_001e-12)).abs() < 1e-10);
            assert!((at(0.999_999e-6) - at(1.000_001e-6)).abs() < 1e-10);
            let exact = (b - a) - 0.3 * (b * b - a * a) / 2.0;
            assert!((at(0.3) - ((-0.3 * a).exp() - (-0.3 * b).exp()) / 0.3).abs() < 1e-12);
            let _ = exact;
        }
    }

    #[test]
    fn shrinking_schedules() {
        let p = profile(0.2, 0.5, 0.6);
        let mut s = WindowSchedule::constant(0.3, 1.0, Arc::FULL, (5, 15));
        let q = s.query(12, 0.0).unwrap();
        let exact = predict(&p, &q).unwrap();
        let mid = predict_shrinking(&p, &s, 12).unwrap();
        let bound = 0.2f64.powi(2) / 8.0 * (0.2f64 / 2.0).exp();
        assert!(((mid - exact) / exact).abs() <= bound);
        s.length = Sequence::Exponential {
            scale: 1.0,
            rate: -1.0,
        };
        assert!(matches!(
            predict_shrinking(&p, &s, 12),
            Err(Error::Schedule(_))
        ));
        s.length = Sequence::Power {
            scale: 1.0,
            exponent: -0.5,
        };
        s.arc_width = Sequence::Power {
            scale: 1.0,
            exponent: -0.25,
        };
        let n = 14.0f64;
        let hand = n.powf(-0.25) * n.powf(-0.5) * (-0.2f64 * 0.3).exp() * (0.6 * n).exp()
            / (0.5f64.sqrt() * (2.0 * std::f64::consts::PI).sqrt() * n.powf(1.5));
        let got = predict_shrinking(&p, &s, 14).unwrap();
        assert!((got - hand).abs() < 1e-12 * hand);
    }

    #[test]
    fn squaring_weyl_sums_do_not_decay() {
        let db = squaring_db(8);
        let w = weyl_sums(&db, 8, LN_2, (-1.0, 1.0), 5).unwrap();
        assert_eq!(w.sample_size, 30);
        assert!(w.magnitudes.iter().all(|m| (m - 1.0).abs() < 1e-12));
        let angles = [0.3, 1.1, 4.0];
        assert_eq!(weyl_magnitude(&angles, 0.0) / 3.0, 1.0);
        let empty = weyl_sums(&db, 8, LN_2, (5.0, 6.0), 5).unwrap();
        assert!(empty.is_empty() && empty.magnitudes.is_empty());
    }

    #[test]
    fn arc_membership_is_closed() {
        let a = Arc {
            center_angle: 0.0,
            width_fraction: 0.5,
        };
        assert!(a.contains(TAU / 4.0));
        assert!(a.contains(TAU - TAU / 4.0));
        assert!(!a.contains(TAU / 4.0 + 1e-9));
        assert!((holonomy_offset(0.1, TAU - 0.1) - 0.2 / TAU).abs() < 1e-15);
    }
}
