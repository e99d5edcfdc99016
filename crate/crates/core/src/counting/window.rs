//! Smooth windows: plateau indicators convolved with a compactly supported
//! `C^∞` mollifier.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use serde::Serialize;

use super::holonomy_offset;

const QUAD_NODES: usize = 64;

fn bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

fn quadrature() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(QUAD_NODES).expect("nonzero")))
}

fn bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| quadrature().integrate(-1.0, 1.0, bump))
}

/// Distribution function of the unit mollifier on `[-1, 1]`.
pub fn mollifier_cdf(u: f64) -> f64 {
    if u <= -1.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else if u <= 0.0 {
        quadrature().integrate(-1.0, u, bump) / bump_mass()
    } else {
        1.0 - quadrature().integrate(u, 1.0, bump) / bump_mass()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "target")]
pub enum BumpTarget {
    /// `[-1/2, 1/2]` on the line.
    Interval,
    /// `[-κ/2, κ/2]` on the circle `ℝ/ℤ`, as offsets from the arc centre.
    Arc { width_fraction: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowKind {
    IntervalBump,
    ArcBump,
}

/// `height · (1_{[-w, w]} ∗ Φ_ε)`, or a constant when it covers the circle.
#[derive(Clone, Debug, Serialize)]
pub struct SmoothedWindow {
    pub kind: WindowKind,
    pub eta: f64,
    pub height: f64,
    pub half_width: f64,
    pub epsilon: f64,
    /// Set when the window is constant on the circle.
    pub constant: Option<f64>,
}

impl SmoothedWindow {
    fn profile(&self, x: f64) -> f64 {
        if self.half_width <= 0.0 {
            return 0.0;
        }
        let e = self.epsilon;
        self.height
            * (mollifier_cdf((x + self.half_width) / e) - mollifier_cdf((x - self.half_width) / e))
    }

    /// Value at `x`; arcs take the offset as a fraction of a turn and reduce
    /// it to `[-1/2, 1/2)`.
    pub fn eval(&self, x: f64) -> f64 {
        if let Some(c) = self.constant {
            return c;
        }
        match self.kind {
            WindowKind::IntervalBump => self.profile(x),
            WindowKind::ArcBump => self.profile(holonomy_offset(x * std::f64::consts::TAU, 0.0)),
        }
    }

    /// Closed support radius around the centre.
    pub fn support_radius(&self) -> f64 {
        match self.constant {
            Some(_) => f64::INFINITY,
            None => self.half_width + self.epsilon,
        }
    }

    /// `∫ φ` over the line (interval) or one turn (arc).
    pub fn integral(&self) -> f64 {
        match self.constant {
            Some(c) => c,
            None => 2.0 * self.height * self.half_width.max(0.0),
        }
    }
}

fn arc_width(target: BumpTarget) -> Option<f64> {
    match target {
        BumpTarget::Interval => None,
        BumpTarget::Arc { width_fraction } => Some(width_fraction.clamp(0.0, 1.0)),
    }
}

/// Window dominating the target indicator: at least 1 on the target, at
/// most `1 + η`, supported within the `η/4`-enlargement.
pub fn make_bump(target: BumpTarget, eta: f64) -> SmoothedWindow {
    let g1 = eta / 4.0;
    let g2 = eta / 8.0;
    let eps = eta / 8.0;
    let (kind, half) = match arc_width(target) {
        None => (WindowKind::IntervalBump, 0.5),
        Some(k) => (WindowKind::ArcBump, k / 2.0),
    };
    let mut w = SmoothedWindow {
        kind,
        eta,
        height: 1.0 + g1,
        half_width: half + g2,
        epsilon: eps,
        constant: None,
    };
    if kind == WindowKind::ArcBump {
        if half >= 0.5 {
            w.constant = Some(1.0);
        } else if w.half_width + eps >= 0.5 {
            w.constant = Some(1.0 + g1);
        }
    }
    w
}

/// Window dominated by the target indicator: at most 1, supported inside
/// the target, equal to 1 on the target shrunk by `3η/8`.
pub fn make_inner_bump(target: BumpTarget, eta: f64) -> SmoothedWindow {
    let eps = eta / 8.0;
    let (kind, half) = match arc_width(target) {
        None => (WindowKind::IntervalBump, 0.5),
        Some(k) => (WindowKind::ArcBump, k / 2.0),
    };
    let mut w = SmoothedWindow {
        kind,
        eta,
        height: 1.0,
        half_width: (half - eta / 4.0).max(0.0),
        epsilon: eps,
        constant: None,
    };
    if kind == WindowKind::ArcBump && half >= 0.5 {
        w.constant = Some(1.0);
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(w: &SmoothedWindow, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        (0..4096)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / 4095.0;
                (x, w.eval(x))
            })
            .collect()
    }

    #[test]
    fn interval_bump_sandwich() {
        let eta = 0.1;
        let w = make_bump(BumpTarget::Interval, eta);
        let pts = samples(&w, -1.0, 1.0);
        for &(x, v) in &pts {
            assert!(v <= 1.0 + eta + 1e-12);
            if x.abs() <= 0.5 {
                assert!(v >= 1.0);
            }
            if x.abs() > 0.5 + eta {
                assert_eq!(v, 0.0);
            }
        }
        assert!(w.eval(0.0) >= 1.0);
        let rule = GaussLegendre::new(NonZeroUsize::new(200).unwrap());
        let integral: f64 = (0..20)
            .map(|j| {
                let a = -0.7 + 1.4 * j as f64 / 20.0;
                rule.integrate(a, a + 0.07, |x| w.eval(x))
            })
            .sum();
        assert!(integral <= 1.0 + eta);
        assert!((integral - w.integral()).abs() < 1e-8);
    }

    #[test]
    fn inner_bump_is_dominated() {
        for target in [
            BumpTarget::Interval,
            BumpTarget::Arc {
                width_fraction: 0.5,
            },
        ] {
            let w = make_inner_bump(target, 0.1);
            let half = match target {
                BumpTarget::Interval => 0.5,
                BumpTarget::Arc { width_fraction } => width_fraction / 2.0,
            };
            for (x, v) in samples(&w, -0.5, 0.5) {
                assert!(v <= 1.0 + 1e-12);
                if x.abs() > half {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn arc_bump_wraps_and_saturates() {
        let w = make_bump(
            BumpTarget::Arc {
                width_fraction: 0.5,
            },
            0.1,
        );
        assert!((w.eval(0.2) - w.eval(1.2)).abs() < 1e-15);
        assert!(w.eval(0.25) >= 1.0);
        assert_eq!(w.eval(0.5), 0.0);
        let full = make_bump(
            BumpTarget::Arc {
                width_fraction: 1.0,
            },
            0.1,
        );
        assert_eq!(full.eval(0.37), 1.0);
    }

    #[test]
    fn fourth_differences_are_bounded() {
        let w = make_bump(BumpTarget::Interval, 0.1);
        let worst = |h: f64| {
            (0..2000)
                .map(|i| {
                    let x = -0.7 + 1.4 * i as f64 / 2000.0;
                    let d4 = w.eval(x + 2.0 * h) - 4.0 * w.eval(x + h) + 6.0 * w.eval(x)
                        - 4.0 * w.eval(x - h)
                        + w.eval(x - 2.0 * h);
                    (d4 / h.powi(4)).abs()
                })
                .fold(0.0_f64, f64::max)
        };
        // Bounded fourth derivative: the scaled difference settles as h shrinks,
        // whereas a jump would grow it sixteenfold per halving.
        let (coarse, fine) = (worst(1e-3), worst(5e-4));
        assert!(fine < 2.0 * coarse, "{coarse} -> {fine}");
    }
}
