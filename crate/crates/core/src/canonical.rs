//! Rotation canonicalization of descriptors.
//!
//! `F_1` canonicalization rotates a density so that its first coefficient is
//! real and positive: `F̃_k = e^{-ik arg F_1} F_k`. Every rotated copy of the
//! same angle set maps to the same canonical descriptor.
//!
//! `F_k` canonicalization continues the chain: after level `j - 1`, rotate by
//! the principal `arg(F_j) / j` so `F_j` becomes real and positive. Only the
//! last level is guaranteed real afterwards; earlier ones pick up a phase. The
//! result is still a deterministic function of the `F_1`-canonical form and so
//! stays rotation invariant.

use serde::{Deserialize, Serialize};

use crate::descriptor::Descriptor;
use crate::error::{Error, Result};
use crate::scalar::{principal_arg, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalDescriptor<T> {
    pub descriptor: Descriptor<T>,
    pub level: usize,
    /// Total `φ` such that `descriptor == base.rotate(φ)`, modulo 2π.
    pub applied_rotation: T,
    /// Levels whose rotation was skipped because `|F_j|` was below the
    /// degeneracy threshold.
    pub degenerate_levels: Vec<usize>,
}

impl<T: Scalar> CanonicalDescriptor<T> {
    /// True when the final level's rotation was skipped, i.e. the result is not
    /// reliably canonical.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate_levels.last() == Some(&self.level)
    }
}

/// Which canonicalization to apply before comparing descriptors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CanonScheme {
    None,
    F1,
    Fk,
}

impl std::str::FromStr for CanonScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(CanonScheme::None),
            "f1" => Ok(CanonScheme::F1),
            "fk" => Ok(CanonScheme::Fk),
            other => Err(Error::InvalidParameter(format!("unknown canonicalization `{other}`"))),
        }
    }
}

/// Magnitudes below this make `arg(F_j)` meaningless.
pub fn degeneracy_threshold<T: Scalar>(d: &Descriptor<T>) -> T {
    T::of(1e-12) * (d.coeffs()[0].norm() + T::min_positive_value())
}

pub fn canonicalize_f1<T: Scalar>(d: &Descriptor<T>) -> CanonicalDescriptor<T> {
    let eps = degeneracy_threshold(d);
    match d.coeffs().get(1) {
        Some(f1) if f1.norm() > eps => {
            let phi = principal_arg(*f1);
            CanonicalDescriptor {
                descriptor: d.rotate(phi),
                level: 1,
                applied_rotation: phi,
                degenerate_levels: Vec::new(),
            }
        }
        _ => CanonicalDescriptor {
            descriptor: d.clone(),
            level: 1,
            applied_rotation: T::zero(),
            degenerate_levels: vec![1],
        },
    }
}

pub fn canonicalize_fk<T: Scalar>(d: &Descriptor<T>, level: usize) -> Result<CanonicalDescriptor<T>> {
    if level == 0 || level > d.order() {
        return Err(Error::LevelOutOfRange { level, order: d.order() });
    }
    let eps = degeneracy_threshold(d);
    let mut out = canonicalize_f1(d);
    for j in 2..=level {
        let fj = out.descriptor.coeffs()[j];
        if fj.norm() <= eps {
            out.degenerate_levels.push(j);
            continue;
        }
        let phi = principal_arg(fj) / T::of_usize(j);
        out.descriptor = out.descriptor.rotate(phi);
        out.applied_rotation = out.applied_rotation + phi;
    }
    out.level = level;
    Ok(out)
}

/// `min_ℓ ||f̃^ℓ - g̃^ℓ||` over levels where neither side is degenerate. When
/// no level qualifies (e.g. both descriptors are flat) the plain distance is
/// returned.
pub fn canonical_distance_fk<T: Scalar>(a: &Descriptor<T>, b: &Descriptor<T>) -> Result<T> {
    if a.order() != b.order() {
        return Err(Error::OrderMismatch { left: a.order(), right: b.order() });
    }
    let mut best: Option<T> = None;
    for level in 1..=a.order() {
        let ca = canonicalize_fk(a, level)?;
        if ca.is_degenerate() {
            continue;
        }
        let cb = canonicalize_fk(b, level)?;
        if cb.is_degenerate() {
            continue;
        }
        let dist = ca.descriptor.distance(&cb.descriptor);
        best = Some(best.map_or(dist, |m| if dist < m { dist } else { m }));
    }
    Ok(best.unwrap_or_else(|| a.distance(b)))
}

/// Distance after `F_1` canonicalization of both sides.
pub fn canonical_distance_f1<T: Scalar>(a: &Descriptor<T>, b: &Descriptor<T>) -> T {
    canonicalize_f1(a).descriptor.distance(&canonicalize_f1(b).descriptor)
}

/// Distance under the given scheme.
pub fn scheme_distance<T: Scalar>(a: &Descriptor<T>, b: &Descriptor<T>, scheme: CanonScheme) -> Result<T> {
    match scheme {
        CanonScheme::None => Ok(a.distance(b)),
        CanonScheme::F1 => Ok(canonical_distance_f1(a, b)),
        CanonScheme::Fk => canonical_distance_fk(a, b),
    }
}

/// Brute-force rotation search: `min_φ ||rotate(a, φ) - b||` on a uniform grid
/// of `grid_size` angles, refined by golden-section search in the best cell.
/// Returns the minimum distance and the minimizing `φ ∈ [0, 2π)`.
pub fn min_distance_search<T: Scalar>(a: &Descriptor<T>, b: &Descriptor<T>, grid_size: usize) -> Result<(T, T)> {
    if grid_size < 8 {
        return Err(Error::InvalidParameter(format!("rotation grid needs at least 8 points, got {grid_size}")));
    }
    let objective = |phi: T| a.rotate(phi).coefficient_distance_sq(b);
    let step = T::TAU() / T::of_usize(grid_size);
    let (best_i, _) = (0..grid_size)
        .map(|i| (i, objective(step * T::of_usize(i))))
        .fold((0, T::infinity()), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });

    let mut lo = step * (T::of_usize(best_i) - T::one());
    let mut hi = step * (T::of_usize(best_i) + T::one());
    let inv_phi = T::of((5f64.sqrt() - 1.0) / 2.0);
    let tol = T::of(1e-10).max(T::epsilon().sqrt());
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2);
        }
    }
    let mut phi = (lo + hi) * T::of(0.5);
    let mut value = objective(phi);
    let grid_phi = step * T::of_usize(best_i);
    let grid_value = objective(grid_phi);
    if grid_value < value {
        phi = grid_phi;
        value = grid_value;
    }
    let phi = phi.rem_euclid(T::TAU());
    Ok(((T::TAU() * value).sqrt(), phi))
}

trait RemEuclid {
    fn rem_euclid(self, m: Self) -> Self;
}

impl<T: Scalar> RemEuclid for T {
    fn rem_euclid(self, m: T) -> T {
        let r = self % m;
        if r < T::zero() {
            r + m
        } else {
            r
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptor::AngleWeightSet;
    use crate::kernel::{Kernel, KernelMode};
    use num_complex::Complex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_descriptor(rng: &mut ChaCha8Rng, order: usize) -> Descriptor<f64> {
        let n = rng.random_range(3..30);
        let angles = (0..n).map(|_| rng.random_range(-PI..PI)).collect();
        let weights = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        Descriptor::estimate(&AngleWeightSet::new(angles, weights).unwrap(), &Kernel::new(order, KernelMode::Exact))
    }

    fn max_dev(a: &Descriptor<f64>, b: &Descriptor<f64>) -> f64 {
        a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn real_positive_f1_is_fixed() {
        let d = Descriptor::from_coeffs(vec![
            Complex::new(0.2, 0.0),
            Complex::new(0.1, 0.0),
            Complex::new(0.03, -0.02),
        ])
        .unwrap();
        let c = canonicalize_f1(&d);
        assert_eq!(c.descriptor, d);
        assert!(!c.is_degenerate());
    }

    #[test]
    fn f1_makes_first_coefficient_real() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let d = random_descriptor(&mut rng, 8);
            let c = canonicalize_f1(&d);
            let f1 = c.descriptor.coeffs()[1];
            assert!(f1.im.abs() <= 1e-10 * f1.norm());
            assert!(f1.re > 0.0);
            assert!(max_dev(&c.descriptor, &d.rotate(c.applied_rotation)) < 1e-15);
        }
    }

    #[test]
    fn rotated_copies_share_canonical_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let d = random_descriptor(&mut rng, 10);
            let phi = rng.random_range(-10.0..10.0);
            let a = canonicalize_f1(&d).descriptor;
            let b = canonicalize_f1(&d.rotate(phi)).descriptor;
            assert!(max_dev(&a, &b) < 1e-10);
            for level in 1..=10 {
                let a = canonicalize_fk(&d, level).unwrap().descriptor;
                let b = canonicalize_fk(&d.rotate(phi), level).unwrap().descriptor;
                assert!(max_dev(&a, &b) < 1e-9, "level {level}");
            }
        }
    }

    #[test]
    fn symmetric_pair_is_f1_degenerate_but_f2_stable() {
        let kernel = Kernel::<f64>::new(4, KernelMode::Exact);
        let d = Descriptor::estimate(&AngleWeightSet::unweighted(vec![0.0, PI]).unwrap(), &kernel);
        let c1 = canonicalize_f1(&d);
        assert!(c1.is_degenerate());
        assert_eq!(c1.descriptor, d);
        let c2 = canonicalize_fk(&d, 2).unwrap();
        assert!(!c2.is_degenerate());
        assert!((d.coeffs()[2].re - kernel.coeffs()[2]).abs() < 1e-15);
        let rotated = Descriptor::estimate(&AngleWeightSet::unweighted(vec![0.9, 0.9 + PI]).unwrap(), &kernel);
        let r2 = canonicalize_fk(&rotated, 2).unwrap();
        assert!(max_dev(&c2.descriptor, &r2.descriptor) < 1e-12);
    }

    #[test]
    fn level_one_equals_f1() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = random_descriptor(&mut rng, 5);
        assert_eq!(canonicalize_fk(&d, 1).unwrap().descriptor, canonicalize_f1(&d).descriptor);
        assert!(matches!(canonicalize_fk(&d, 0), Err(Error::LevelOutOfRange { .. })));
        assert!(matches!(canonicalize_fk(&d, 6), Err(Error::LevelOutOfRange { .. })));
    }

    #[test]
    fn last_level_is_real_and_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for level in 1..=6 {
            let d = random_descriptor(&mut rng, 6);
            let c = canonicalize_fk(&d, level).unwrap();
            let f = c.descriptor.coeffs()[level];
            assert!(f.im.abs() <= 1e-10 * f.norm());
            assert!(f.re > 0.0);
        }
    }

    #[test]
    fn idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let d = random_descriptor(&mut rng, 7);
            for level in 1..=7 {
                let once = canonicalize_fk(&d, level).unwrap().descriptor;
                let twice = canonicalize_fk(&once, level).unwrap().descriptor;
                assert!(max_dev(&once, &twice) < 1e-12);
            }
        }
    }

    #[test]
    fn canonical_distance_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_descriptor(&mut rng, 8);
        assert_eq!(canonical_distance_fk(&a, &a).unwrap(), 0.0);
        assert!(canonical_distance_fk(&a, &a.rotate(2.1)).unwrap() < 1e-8);
        let short = random_descriptor(&mut rng, 4);
        assert!(matches!(canonical_distance_fk(&a, &short), Err(Error::OrderMismatch { .. })));
        let z = Descriptor::<f64>::zeros(8);
        assert_eq!(canonical_distance_fk(&z, &z).unwrap(), 0.0);
        assert!((canonical_distance_fk(&z, &a).unwrap() - z.distance(&a)).abs() < 1e-15);
    }

    #[test]
    fn search_recovers_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_descriptor(&mut rng, 8);
        let (dist, phi) = min_distance_search(&a, &a.rotate(1.0), 64).unwrap();
        assert!(dist < 1e-8);
        assert!((phi - 1.0).abs() < 1e-8);
        let b = random_descriptor(&mut rng, 8);
        let (dist, _) = min_distance_search(&a, &b, 64).unwrap();
        assert!(dist <= a.distance(&b) + 1e-15);
        assert!(min_distance_search(&a, &b, 7).is_err());
    }

    #[test]
    fn search_agrees_with_dense_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..3 {
            let a = random_descriptor(&mut rng, 6);
            let b = random_descriptor(&mut rng, 6);
            let (dist, _) = min_distance_search(&a, &b, 256).unwrap();
            let dense = (0..1_000_000)
                .map(|i| a.rotate(2.0 * PI * i as f64 / 1e6).distance(&b))
                .fold(f64::INFINITY, f64::min);
            assert!(dist <= dense + 1e-12);
            assert!((dist - dense).abs() < 1e-6);
        }
    }

    #[test]
    fn distance_ordering() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..40 {
            let a = random_descriptor(&mut rng, 6);
            let b = random_descriptor(&mut rng, 6);
            let (search, _) = min_distance_search(&a, &b, 256).unwrap();
            let canon = canonical_distance_fk(&a, &b).unwrap();
            assert!(search <= canon + 1e-9);
            assert!(canon <= canonical_distance_f1(&a, &b) + 1e-9);
        }
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!("fk".parse::<CanonScheme>().unwrap(), CanonScheme::Fk);
        assert!("f2".parse::<CanonScheme>().is_err());
    }
}
