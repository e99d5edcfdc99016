use std::sync::OnceLock;

use orbitctl_core::orbits::{fixed_points, unmatched_pairs, Method, OrbitDatabase};
use orbitctl_core::{Complex64, Error, RationalMap};
use proptest::prelude::*;

fn basilica() -> RationalMap {
    RationalMap::quadratic(Complex64::new(-1.0, 0.0))
}

fn basilica_db() -> &'static OrbitDatabase {
    static DB: OnceLock<OrbitDatabase> = OnceLock::new();
    DB.get_or_init(|| {
        let f = basilica();
        let mut db = OrbitDatabase::new(&f);
        db.ensure(&f, 1..=10).unwrap();
        db
    })
}

/// Möbius function by trial division.
fn mobius(mut n: usize) -> i64 {
    let mut sign = 1;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

/// `(fⁿ)'(z)` by stepping the orbit one point at a time.
fn multiplier_from_scratch(f: &RationalMap, z: Complex64, n: usize) -> Complex64 {
    let mut w = z;
    let mut lam = Complex64::new(1.0, 0.0);
    for _ in 0..n {
        lam *= f.derivative(w).unwrap();
        w = f.evaluate(w).unwrap();
    }
    lam
}

#[test]
fn small_c_methods_pair_point_for_point() {
    let f = RationalMap::quadratic(Complex64::new(0.1, 0.0));
    let back = fixed_points(&f, 6, Method::Backward).unwrap();
    let roots = fixed_points(&f, 6, Method::Roots).unwrap();
    assert_eq!(back.points.len(), 64);
    assert_eq!(roots.points.len(), 64);
    assert_eq!(unmatched_pairs(&back.points, &roots.points), 0);
}

#[test]
fn period_eight_count_follows_mobius_inversion() {
    let f = basilica();
    // Independent enumeration by the roots method at every divisor.
    let repelling_fixed = |m: usize| -> i64 {
        fixed_points(&f, m, Method::Roots)
            .unwrap()
            .points
            .iter()
            .filter(|&&z| multiplier_from_scratch(&f, z, m).norm() > 1.0)
            .count() as i64
    };
    let n = 8;
    let sum: i64 = (1..=n)
        .filter(|m| n % m == 0)
        .map(|m| mobius(n / m) * repelling_fixed(m))
        .sum();
    assert_eq!(sum % n as i64, 0);
    let db = basilica_db();
    assert_eq!(db.repelling(n).unwrap().len() as i64, sum / n as i64);
}

#[test]
fn census_identity_holds_through_ten() {
    let db = basilica_db();
    for n in 1..=10 {
        let (total, expected) = db.census_identity(n).unwrap();
        assert_eq!(total, expected);
        assert_eq!(expected, 1 << n);
    }
}

#[test]
fn divisor_levels_are_nested() {
    let f = basilica();
    let six = fixed_points(&f, 6, Method::Backward).unwrap().points;
    for m in [1, 2, 3] {
        let sub = fixed_points(&f, m, Method::Backward).unwrap().points;
        let lost = unmatched_pairs(&sub, &six) - (six.len() - sub.len());
        assert_eq!(lost, 0, "fixed points of f^{m} missing from f^6");
    }
}

#[test]
fn primitive_sets_are_disjoint() {
    let f = basilica();
    let db = basilica_db();
    let mut seen: Vec<Complex64> = Vec::new();
    for n in 1..=8 {
        let mut level = Vec::new();
        for o in db.repelling(n).unwrap() {
            let mut z = o.representative;
            for _ in 0..n {
                level.push(z);
                z = f.evaluate(z).unwrap();
            }
        }
        assert!(level
            .iter()
            .all(|z| seen.iter().all(|w| (z - w).norm() > 1e-8)));
        seen.extend(level);
    }
}

#[test]
fn cache_round_trip_and_fingerprint_guard() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("basilica.jsonl");
    let db = basilica_db();
    db.save(&path).unwrap();
    let back = OrbitDatabase::load_for(&path, &basilica()).unwrap();
    assert_eq!(&back, db);
    let other = RationalMap::quadratic(Complex64::new(-1.0, 1e-9));
    assert!(matches!(
        OrbitDatabase::load_for(&path, &other),
        Err(Error::FingerprintMismatch { .. })
    ));
    assert_eq!(
        Error::FingerprintMismatch {
            expected: String::new(),
            found: String::new()
        }
        .kind(),
        "fingerprint_mismatch"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The multiplier does not depend on which cycle point starts the product.
    #[test]
    fn multiplier_is_basepoint_invariant(n in 1usize..=9, pick in 0usize..10_000, shift in 0usize..9) {
        let f = basilica();
        let orbits = basilica_db().repelling(n).unwrap();
        // Period 2 holds only the attracting cycle.
        prop_assume!(!orbits.is_empty());
        let o = &orbits[pick % orbits.len()];
        let z0 = o.representative;
        let zs = f.iterate(z0, shift % n).unwrap();
        let a = multiplier_from_scratch(&f, z0, n);
        let b = multiplier_from_scratch(&f, zs, n);
        prop_assert!((a - b).norm() <= 1e-8 * a.norm());
        prop_assert!((a.norm().ln() - o.log_abs_multiplier).abs() < 1e-9);
    }

    /// Backward and roots enumerations agree inside the main cardioid.
    #[test]
    fn methods_agree_in_the_cardioid(re in -0.2f64..0.2, im in -0.2f64..0.2, n in 1usize..=5) {
        let f = RationalMap::quadratic(Complex64::new(re, im));
        let back = fixed_points(&f, n, Method::Backward).unwrap();
        let roots = fixed_points(&f, n, Method::Roots).unwrap();
        prop_assert_eq!(back.points.len(), 1 << n);
        prop_assert_eq!(unmatched_pairs(&back.points, &roots.points), 0);
    }
}
