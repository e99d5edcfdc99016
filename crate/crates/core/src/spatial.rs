//! Uniform-grid point index for nearest-neighbour queries in the plane.

use std::collections::HashMap;

use num_complex::Complex64;

#[derive(Clone, Debug)]
pub struct PointIndex {
    points: Vec<Complex64>,
    cell: f64,
    origin: Complex64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    max_ring: i64,
}

impl PointIndex {
    /// Builds an index whose cell size gives roughly two points per occupied
    /// cell for points spread over their bounding box.
    pub fn new(points: Vec<Complex64>) -> Self {
        let (mut lo, mut hi) = (
            Complex64::new(f64::INFINITY, f64::INFINITY),
            Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        );
        for p in &points {
            lo.re = lo.re.min(p.re);
            lo.im = lo.im.min(p.im);
            hi.re = hi.re.max(p.re);
            hi.im = hi.im.max(p.im);
        }
        let span = if points.is_empty() {
            1.0
        } else {
            (hi.re - lo.re).max(hi.im - lo.im).max(1e-12)
        };
        let cell = (span / (points.len().max(1) as f64).sqrt()).max(1e-12);
        Self::with_cell(points, cell)
    }

    pub fn with_cell(points: Vec<Complex64>, cell: f64) -> Self {
        let origin = points
            .iter()
            .fold(Complex64::new(f64::INFINITY, f64::INFINITY), |acc, p| {
                Complex64::new(acc.re.min(p.re), acc.im.min(p.im))
            });
        let origin = if origin.is_finite() {
            origin
        } else {
            Complex64::new(0.0, 0.0)
        };
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let mut max_key = 0i64;
        for (i, &p) in points.iter().enumerate() {
            let key = Self::key_for(origin, cell, p);
            max_key = max_key.max(key.0.abs()).max(key.1.abs());
            buckets.entry(key).or_default().push(i);
        }
        Self {
            points,
            cell,
            origin,
            buckets,
            max_ring: max_key + 2,
        }
    }

    fn key_for(origin: Complex64, cell: f64, p: Complex64) -> (i64, i64) {
        (
            ((p.re - origin.re) / cell).floor() as i64,
            ((p.im - origin.im) / cell).floor() as i64,
        )
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index and distance of the closest indexed point; `None` when empty.
    pub fn nearest(&self, z: Complex64) -> Option<(usize, f64)> {
        self.nearest_filtered(z, |_| true)
    }

    /// Closest point other than `skip`.
    pub fn nearest_excluding(&self, z: Complex64, skip: usize) -> Option<(usize, f64)> {
        self.nearest_filtered(z, |i| i != skip)
    }

    fn nearest_filtered(
        &self,
        z: Complex64,
        accept: impl Fn(usize) -> bool,
    ) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let center = Self::key_for(self.origin, self.cell, z);
        let outside = |k: i64| k < -1 || k > self.max_ring;
        if outside(center.0) || outside(center.1) {
            // Far from the grid, ring search degenerates; scan directly.
            return self
                .points
                .iter()
                .enumerate()
                .filter(|(i, _)| accept(*i))
                .map(|(i, p)| (i, (p - z).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1));
        }
        let mut best: Option<(usize, f64)> = None;
        let limit = 2 * self.max_ring + 2;
        let mut ring = 0i64;
        while ring <= limit {
            for key in ring_keys(center, ring) {
                if let Some(ids) = self.buckets.get(&key) {
                    for &i in ids {
                        if !accept(i) {
                            continue;
                        }
                        let d = (self.points[i] - z).norm();
                        if best.is_none_or(|(_, bd)| d < bd) {
                            best = Some((i, d));
                        }
                    }
                }
            }
            if let Some((_, bd)) = best {
                // Every unvisited cell is at least `ring` cells away.
                if bd <= ring as f64 * self.cell {
                    break;
                }
            }
            ring += 1;
        }
        best
    }

    /// All points within `radius` of `z`.
    pub fn within(&self, z: Complex64, radius: f64) -> Vec<usize> {
        let reach = (radius / self.cell).ceil() as i64;
        let center = Self::key_for(self.origin, self.cell, z);
        let mut out = Vec::new();
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                if let Some(ids) = self.buckets.get(&(center.0 + dx, center.1 + dy)) {
                    out.extend(
                        ids.iter()
                            .copied()
                            .filter(|&i| (self.points[i] - z).norm() <= radius),
                    );
                }
            }
        }
        out
    }
}

fn ring_keys(center: (i64, i64), ring: i64) -> Vec<(i64, i64)> {
    if ring == 0 {
        return vec![center];
    }
    let mut keys = Vec::with_capacity(8 * ring as usize);
    for d in -ring..=ring {
        keys.push((center.0 + d, center.1 - ring));
        keys.push((center.0 + d, center.1 + ring));
    }
    for d in (-ring + 1)..ring {
        keys.push((center.0 - ring, center.1 + d));
        keys.push((center.0 + ring, center.1 + d));
    }
    keys
}

/// Deduplicates points closer than `tol`, keeping first occurrences.
/// Returns the kept points and the number of merged duplicates.
pub fn dedupe(points: &[Complex64], tol: f64) -> (Vec<Complex64>, usize) {
    let cell = tol.max(1e-300) * 4.0;
    let mut kept: Vec<Complex64> = Vec::with_capacity(points.len());
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let key = |p: Complex64| ((p.re / cell).floor() as i64, (p.im / cell).floor() as i64);
    let mut merged = 0;
    for &p in points {
        let (kx, ky) = key(p);
        let mut dup = false;
        'search: for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = grid.get(&(kx + dx, ky + dy)) {
                    if ids.iter().any(|&i| (kept[i] - p).norm() <= tol) {
                        dup = true;
                        break 'search;
                    }
                }
            }
        }
        if dup {
            merged += 1;
        } else {
            grid.entry((kx, ky)).or_default().push(kept.len());
            kept.push(p);
        }
    }
    (kept, merged)
}
