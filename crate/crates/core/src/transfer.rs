//! Collocation discretization of the transfer operators
//! `(L_{s,k} w)(x) = Σ_{f(y)=x} exp(s·(r(y) − α) + i·k·θ(y))·w(y)`
//! on a backward-orbit mesh, with nearest-neighbour interpolation.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::map::RationalMap;
use crate::orbits::repelling_seed;
use crate::spatial::{dedupe, PointIndex};
use crate::thermo::{bisect_dimension, ls_slope, DimensionMethod, DimensionResult};
use crate::tolerances::PAIRING_TOL;

/// One inverse image `y` of a mesh point.
#[derive(Clone, Copy, Debug)]
pub struct PreimageRow {
    pub y: Complex64,
    /// Mesh point nearest to `y`.
    pub nearest: usize,
    pub r: f64,
    pub theta: f64,
}

#[derive(Clone, Debug)]
pub struct CollocationMesh {
    pub points: Vec<Complex64>,
    /// Rows `i·d .. (i+1)·d` hold the preimages of `points[i]`.
    pub preimages: Vec<PreimageRow>,
    pub depth: usize,
    pub degree: usize,
    /// Largest nearest-neighbour gap between mesh points.
    pub resolution: f64,
}

impl CollocationMesh {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn rows(&self, i: usize) -> &[PreimageRow] {
        &self.preimages[i * self.degree..(i + 1) * self.degree]
    }
}

fn checked_preimages(map: &RationalMap, x: Complex64) -> Result<Vec<Complex64>> {
    let pre = map.preimages(x)?;
    if pre.len() != map.degree() {
        return Err(Error::CriticalValue { z: x });
    }
    for (i, a) in pre.iter().enumerate() {
        for b in &pre[i + 1..] {
            if (a - b).norm() <= PAIRING_TOL * a.norm().max(1.0) {
                return Err(Error::CriticalValue { z: x });
            }
        }
    }
    Ok(pre)
}

/// Mesh `f^{−depth}(seed)` with the repelling fixed point of largest
/// multiplier as seed.
pub fn build_mesh(map: &RationalMap, depth: usize) -> Result<CollocationMesh> {
    let seed = repelling_seed(map)?;
    build_mesh_from(map, depth, seed)
}

pub fn build_mesh_from(
    map: &RationalMap,
    depth: usize,
    seed: Complex64,
) -> Result<CollocationMesh> {
    let d = map.degree();
    let mut level = vec![seed];
    for _ in 0..depth {
        let next: Vec<Vec<Complex64>> = level
            .par_iter()
            .map(|&x| checked_preimages(map, x))
            .collect::<Result<_>>()?;
        let flat: Vec<Complex64> = next.into_iter().flatten().collect();
        level = dedupe(&flat, PAIRING_TOL).0;
    }
    let points = level;
    let index = PointIndex::new(points.clone());
    let table: Vec<Vec<PreimageRow>> = points
        .par_iter()
        .map(|&x| {
            checked_preimages(map, x)?
                .into_iter()
                .map(|y| {
                    let (r, theta) = map
                        .distortion_rotation(y)
                        .map_err(|_| Error::CriticalValue { z: x })?;
                    let (nearest, _) = index.nearest(y).expect("mesh is nonempty");
                    Ok(PreimageRow {
                        y,
                        nearest,
                        r,
                        theta,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let resolution = if points.len() < 2 {
        0.0
    } else {
        (0..points.len())
            .into_par_iter()
            .map(|i| {
                index
                    .nearest_excluding(points[i], i)
                    .map_or(0.0, |(_, g)| g)
            })
            .reduce(|| 0.0, f64::max)
    };
    Ok(CollocationMesh {
        points,
        preimages: table.into_iter().flatten().collect(),
        depth,
        degree: d,
        resolution,
    })
}

/// `(L_{s,k} w)(x)` at every mesh point.
pub fn apply_operator(
    mesh: &CollocationMesh,
    s: Complex64,
    k: i64,
    alpha: f64,
    w: &[Complex64],
) -> Vec<Complex64> {
    let kf = k as f64;
    (0..mesh.len())
        .into_par_iter()
        .map(|i| {
            mesh.rows(i)
                .iter()
                .map(|row| {
                    let e = s * (row.r - alpha) + Complex64::new(0.0, kf * row.theta);
                    e.exp() * w[row.nearest]
                })
                .sum()
        })
        .collect()
}

fn apply_real(mesh: &CollocationMesh, weights: &[f64], w: &[f64]) -> Vec<f64> {
    let d = mesh.degree;
    (0..mesh.len())
        .into_par_iter()
        .map(|i| {
            mesh.rows(i)
                .iter()
                .zip(&weights[i * d..(i + 1) * d])
                .map(|(row, &c)| c * w[row.nearest])
                .sum()
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct Eigendata {
    pub log_eigenvalue: f64,
    /// Positive, normalized to maximum 1.
    pub eigfun: Vec<f64>,
    pub iterations: usize,
}

/// Power iteration with sup-norm renormalization for real `s`.
pub fn leading_eigendata(
    mesh: &CollocationMesh,
    s: f64,
    alpha: f64,
    max_iter: usize,
    tol: f64,
) -> Result<Eigendata> {
    let weights: Vec<f64> = mesh
        .preimages
        .iter()
        .map(|row| (s * (row.r - alpha)).exp())
        .collect();
    let mut v = vec![1.0; mesh.len()];
    let mut prev = f64::NAN;
    for it in 1..=max_iter {
        let u = apply_real(mesh, &weights, &v);
        let lam = u.iter().copied().fold(0.0_f64, f64::max);
        if !(lam > 0.0 && lam.is_finite()) {
            return Err(Error::NonConvergence(format!(
                "power iteration degenerate at s = {s}"
            )));
        }
        let next: Vec<f64> = u.iter().map(|x| x / lam).collect();
        let change = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        let log_lam = lam.ln();
        v = next;
        if (log_lam - prev).abs() < tol && change < tol {
            return Ok(Eigendata {
                log_eigenvalue: log_lam,
                eigfun: v,
                iterations: it,
            });
        }
        prev = log_lam;
    }
    Err(Error::NonConvergence(format!(
        "power iteration at s = {s} after {max_iter} steps"
    )))
}

pub const EIGEN_MAX_ITER: usize = 20_000;
pub const EIGEN_TOL: f64 = 1e-13;

#[derive(Clone, Debug)]
pub struct NormalizedOperator {
    pub mesh: CollocationMesh,
    pub xi: f64,
    pub alpha: f64,
    pub pressure: f64,
    pub log_eigfun: Vec<f64>,
    /// `exp(u(y))` per preimage row.
    pub weights: Vec<f64>,
    pub normalization_residual: f64,
}

/// Weights `e^{ξR(y)}·ψ(ŷ)/(ψ(x)·e^P)`, whose rows sum to one.
pub fn normalize(mesh: CollocationMesh, xi: f64, alpha: f64) -> Result<NormalizedOperator> {
    let eig = leading_eigendata(&mesh, xi, alpha, EIGEN_MAX_ITER, EIGEN_TOL)?;
    let psi = &eig.eigfun;
    if psi.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::NonConvergence(
            "eigenfunction is not positive".into(),
        ));
    }
    let lam = eig.log_eigenvalue.exp();
    let d = mesh.degree;
    let weights: Vec<f64> = mesh
        .preimages
        .iter()
        .enumerate()
        .map(|(j, row)| (xi * (row.r - alpha)).exp() * psi[row.nearest] / (psi[j / d] * lam))
        .collect();
    let residual = weights
        .chunks(d)
        .map(|c| (c.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0_f64, f64::max);
    if !(residual < 1e-6) {
        return Err(Error::Normalization { residual });
    }
    Ok(NormalizedOperator {
        log_eigfun: psi.iter().map(|p| p.ln()).collect(),
        mesh,
        xi,
        alpha,
        pressure: eig.log_eigenvalue,
        weights,
        normalization_residual: residual,
    })
}

impl NormalizedOperator {
    /// One step of `w ↦ L_{u+iv} w` with `v = b·R + k·θ`.
    pub fn apply_twisted(&self, b: f64, k: i64, w: &[Complex64]) -> Vec<Complex64> {
        let d = self.mesh.degree;
        let kf = k as f64;
        (0..self.mesh.len())
            .into_par_iter()
            .map(|i| {
                self.mesh
                    .rows(i)
                    .iter()
                    .zip(&self.weights[i * d..(i + 1) * d])
                    .map(|(row, &c)| {
                        let phase = b * (row.r - self.alpha) + kf * row.theta;
                        Complex64::from_polar(c, phase) * w[row.nearest]
                    })
                    .sum()
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayResult {
    pub b: f64,
    pub k: i64,
    pub depth: usize,
    pub n_steps: usize,
    pub rate: f64,
}

/// Per-step growth of `‖L^j_{u+iv} 1‖_∞`, geometric fit over the last half.
pub fn decay_probe(op: &NormalizedOperator, b: f64, k: i64, n_steps: usize) -> Result<DecayResult> {
    if n_steps < 10 {
        return Err(Error::Domain("decay probe needs at least 10 steps".into()));
    }
    let mut w = vec![Complex64::new(1.0, 0.0); op.mesh.len()];
    let mut logs = Vec::with_capacity(n_steps);
    // Running log-norm; w is renormalized to avoid underflow.
    let mut acc = 0.0;
    for j in 1..=n_steps {
        w = op.apply_twisted(b, k, &w);
        let norm = w.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
        if norm == 0.0 {
            return Ok(DecayResult {
                b,
                k,
                depth: op.mesh.depth,
                n_steps,
                rate: 0.0,
            });
        }
        acc += norm.ln();
        w.iter_mut().for_each(|z| *z /= norm);
        logs.push((j as f64, acc));
    }
    let tail = &logs[n_steps / 2..];
    Ok(DecayResult {
        b,
        k,
        depth: op.mesh.depth,
        n_steps,
        rate: ls_slope(tail).exp(),
    })
}

/// Root of `t ↦ log λ_max(L_{−t·r})`.
pub fn transfer_dimension(mesh: &CollocationMesh) -> Result<DimensionResult> {
    let (delta, residual) = bisect_dimension(|t| {
        Ok(leading_eigendata(mesh, -t, 0.0, EIGEN_MAX_ITER, EIGEN_TOL)?.log_eigenvalue)
    })?;
    Ok(DimensionResult {
        delta,
        residual,
        n_used: mesh.depth,
        method: DimensionMethod::TransferOp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{LN_2, TAU};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn squaring_mesh_is_roots_of_unity() {
        let f = RationalMap::monomial(2);
        let mesh = build_mesh(&f, 3).unwrap();
        assert_eq!(mesh.len(), 8);
        for k in 0..8 {
            let z = Complex64::from_polar(1.0, TAU * k as f64 / 8.0);
            assert!(mesh.points.iter().any(|p| (p - z).norm() < 1e-12));
        }
        let base = build_mesh(&f, 0).unwrap();
        assert_eq!(base.len(), 1);
        assert_eq!(base.preimages.len(), 2);
    }

    #[test]
    fn squaring_operator_examples() {
        let f = RationalMap::monomial(2);
        let mesh = build_mesh(&f, 6).unwrap();
        let ones = vec![c(1.0, 0.0); mesh.len()];
        for v in apply_operator(&mesh, c(0.0, 0.0), 0, 0.0, &ones) {
            assert!((v - 2.0).norm() < 1e-12);
        }
        for v in apply_operator(&mesh, c(1.0, 0.0), 0, 0.0, &ones) {
            assert!((v - 4.0).norm() < 1e-12);
        }
        let e = leading_eigendata(&mesh, 1.7, LN_2, 1000, 1e-13).unwrap();
        assert!((e.log_eigenvalue - LN_2).abs() < 1e-9);
        let op = normalize(mesh, 0.0, LN_2).unwrap();
        assert!(op.weights.iter().all(|w| (w - 0.5).abs() < 1e-12));
        assert!(op.normalization_residual < 1e-12);
        let r = decay_probe(&op, 0.0, 0, 20).unwrap();
        assert!((r.rate - 1.0).abs() < 1e-9);
    }

    #[test]
    fn basilica_mesh_forward_closure() {
        let f = RationalMap::quadratic(c(-1.0, 0.0));
        let mesh = build_mesh(&f, 10).unwrap();
        assert_eq!(mesh.len(), 1024);
        let index = PointIndex::new(mesh.points.clone());
        for &p in &mesh.points {
            let fp = f.evaluate(p).unwrap();
            let (_, dist) = index.nearest(fp).unwrap();
            assert!(dist < 1e-6);
        }
    }

    #[test]
    fn linearity_and_domination() {
        let f = RationalMap::quadratic(c(-1.0, 0.0));
        let mesh = build_mesh(&f, 8).unwrap();
        let n = mesh.len();
        let w1: Vec<Complex64> = (0..n)
            .map(|i| c((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let w2: Vec<Complex64> = (0..n).map(|i| c((i as f64 * 1.7).cos(), 0.2)).collect();
        let (a, b) = (c(0.3, -1.1), c(2.0, 0.5));
        let s = c(-0.4, 2.0);
        let combo: Vec<Complex64> = w1.iter().zip(&w2).map(|(x, y)| a * x + b * y).collect();
        let lhs = apply_operator(&mesh, s, 2, 0.1, &combo);
        let l1 = apply_operator(&mesh, s, 2, 0.1, &w1);
        let l2 = apply_operator(&mesh, s, 2, 0.1, &w2);
        for i in 0..n {
            assert!((lhs[i] - (a * l1[i] + b * l2[i])).norm() < 1e-12 * (1.0 + lhs[i].norm()));
        }
        let abs: Vec<Complex64> = w1.iter().map(|z| c(z.norm(), 0.0)).collect();
        let dom = apply_operator(&mesh, c(s.re, 0.0), 0, 0.1, &abs);
        for i in 0..n {
            assert!(l1[i].norm() <= dom[i].re + 1e-12);
        }
    }
}
