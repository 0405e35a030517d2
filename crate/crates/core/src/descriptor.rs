//! FS-KDE descriptors of weighted angle sets.
//!
//! For samples `(θ_n, w_n)`, `n < N`, the estimate with kernel coefficients `H_k`
//! has Fourier coefficients
//!
//! ```text
//! F_k = H_k / N · Σ_n w_n e^{-ikθ_n}
//! ```
//!
//! Only `F_0..=F_K` are stored; `F_{-k}` is the conjugate of `F_k`.

use std::io::{Read, Write};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{Kernel, TruncationMask};
use crate::scalar::{cis, wrap_angle, Scalar};

/// Angles (radians, wrapped to `[-π, π)`) paired with nonnegative weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleWeightSet<T> {
    angles: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> AngleWeightSet<T> {
    pub fn new(angles: Vec<T>, weights: Vec<T>) -> Result<Self> {
        if angles.len() != weights.len() {
            return Err(Error::LengthMismatch { angles: angles.len(), weights: weights.len() });
        }
        if angles.is_empty() {
            return Err(Error::EmptySet);
        }
        for (index, (a, w)) in angles.iter().zip(&weights).enumerate() {
            if !a.is_finite() {
                return Err(Error::InvalidSample { index, reason: "angle is not finite" });
            }
            if !w.is_finite() || *w < T::zero() {
                return Err(Error::InvalidSample { index, reason: "weight is negative or not finite" });
            }
        }
        let angles = angles.into_iter().map(wrap_angle).collect();
        Ok(AngleWeightSet { angles, weights })
    }

    /// Unit weights.
    pub fn unweighted(angles: Vec<T>) -> Result<Self> {
        let weights = vec![T::one(); angles.len()];
        Self::new(angles, weights)
    }

    pub fn angles(&self) -> &[T] {
        &self.angles
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.angles.iter().copied().zip(self.weights.iter().copied())
    }

    /// Every angle shifted by `phi`.
    pub fn rotated(&self, phi: T) -> Self {
        AngleWeightSet {
            angles: self.angles.iter().map(|a| wrap_angle(*a + phi)).collect(),
            weights: self.weights.clone(),
        }
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.angles.extend_from_slice(&other.angles);
        out.weights.extend_from_slice(&other.weights);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor<T> {
    order: usize,
    coeffs: Vec<Complex<T>>,
    trunc: Option<TruncationMask<T>>,
}

impl<T: Scalar> Descriptor<T> {
    /// Descriptor from raw one-sided coefficients `F_0..=F_K`. The imaginary
    /// part of `F_0` is dropped.
    pub fn from_coeffs(mut coeffs: Vec<Complex<T>>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter("descriptor needs at least F_0".into()));
        }
        coeffs[0].im = T::zero();
        Ok(Descriptor { order: coeffs.len() - 1, coeffs, trunc: None })
    }

    pub fn zeros(order: usize) -> Self {
        Descriptor { order, coeffs: vec![Complex::new(T::zero(), T::zero()); order + 1], trunc: None }
    }

    /// Kernel density estimate of `samples` in coefficient form.
    pub fn estimate(samples: &AngleWeightSet<T>, kernel: &Kernel<T>) -> Self {
        let order = kernel.order();
        let inv_n = T::of_usize(samples.len()).recip();
        let mut sums = vec![Complex::new(T::zero(), T::zero()); order + 1];
        for (theta, w) in samples.iter() {
            if w == T::zero() {
                continue;
            }
            sums[0].re = sums[0].re + w;
            for (k, s) in sums.iter_mut().enumerate().skip(1) {
                *s = *s + cis(-T::of_usize(k) * theta) * w;
            }
        }
        let coeffs = sums.into_iter().zip(kernel.coeffs()).map(|(s, h)| s * (*h * inv_n)).collect();
        Descriptor { order, coeffs, trunc: None }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// One-sided coefficients `F_0..=F_K`.
    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    /// `F_k` for any integer `k`, using conjugate symmetry; zero outside the band.
    pub fn coeff(&self, k: i64) -> Complex<T> {
        match self.coeffs.get(k.unsigned_abs() as usize) {
            Some(c) if k < 0 => c.conj(),
            Some(c) => *c,
            None => Complex::new(T::zero(), T::zero()),
        }
    }

    pub fn truncation(&self) -> Option<&TruncationMask<T>> {
        self.trunc.as_ref()
    }

    /// Largest retained index: the mask cutoff, or `K` when untruncated.
    pub fn cutoff(&self) -> usize {
        self.trunc.map_or(self.order, |m| m.cutoff)
    }

    /// Number of reals needed to store the retained coefficients.
    pub fn real_len(&self) -> usize {
        2 * (self.cutoff() + 1)
    }

    /// Density at `theta`: `F_0 + 2 Σ_{k≥1} Re(F_k e^{ikθ})`.
    pub fn evaluate(&self, theta: T) -> T {
        let two = T::of(2.0);
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .fold(self.coeffs[0].re, |acc, (k, f)| acc + two * (*f * cis(T::of_usize(k) * theta)).re)
    }

    /// Descriptor of the density shifted by `phi`: `F_k ↦ e^{-ikφ} F_k`.
    pub fn rotate(&self, phi: T) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, f)| if k == 0 { *f } else { *f * cis(-T::of_usize(k) * phi) })
            .collect();
        Descriptor { order: self.order, coeffs, trunc: self.trunc }
    }

    /// Zeroes every `F_k` with `|k|` above the mask cutoff.
    pub fn truncate(&self, mask: &TruncationMask<T>) -> Result<Self> {
        if mask.order != self.order {
            return Err(Error::OrderMismatch { left: self.order, right: mask.order });
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, f)| if k <= mask.cutoff { *f } else { Complex::new(T::zero(), T::zero()) })
            .collect();
        Ok(Descriptor { order: self.order, coeffs, trunc: Some(*mask) })
    }

    /// Squared coefficient norm `Σ_{k=-K..K} |F_k - G_k|²`, zero-padding the
    /// shorter descriptor.
    pub fn coefficient_distance_sq(&self, other: &Self) -> T {
        let n = self.coeffs.len().max(other.coeffs.len());
        let two = T::of(2.0);
        (0..n).fold(T::zero(), |acc, k| {
            let d = (self.coeff(k as i64) - other.coeff(k as i64)).norm_sqr();
            if k == 0 {
                acc + d
            } else {
                acc + two * d
            }
        })
    }

    /// `||F - G||` over the two-sided coefficient vectors.
    pub fn coefficient_distance(&self, other: &Self) -> T {
        self.coefficient_distance_sq(other).sqrt()
    }

    /// `sqrt(Σ_{k=-K..K} |F_k|²)`.
    pub fn coefficient_norm(&self) -> T {
        self.coefficient_distance(&Self::zeros(0))
    }

    /// L2 distance between the two densities on `[-π, π]`, by Parseval:
    /// `||f - g|| = sqrt(2π ||F - G||²)`.
    pub fn distance(&self, other: &Self) -> T {
        (T::TAU() * self.coefficient_distance_sq(other)).sqrt()
    }

    pub fn to_json(&self) -> DescriptorJson {
        DescriptorJson {
            order: self.order,
            cutoff: self.cutoff(),
            re: self.coeffs.iter().map(|c| c.re.to_f64_lossy()).collect(),
            im: self.coeffs.iter().map(|c| c.im.to_f64_lossy()).collect(),
        }
    }

    pub fn from_json(json: &DescriptorJson) -> Result<Self> {
        if json.re.len() != json.order + 1 || json.im.len() != json.order + 1 {
            return Err(Error::InvalidParameter(format!(
                "descriptor of order {} needs {} coefficients, got re {} / im {}",
                json.order,
                json.order + 1,
                json.re.len(),
                json.im.len()
            )));
        }
        if json.cutoff > json.order {
            return Err(Error::InvalidParameter(format!(
                "cutoff {} exceeds order {}",
                json.cutoff, json.order
            )));
        }
        let coeffs = json.re.iter().zip(&json.im).map(|(r, i)| Complex::new(T::of(*r), T::of(*i))).collect();
        let mut d = Descriptor::from_coeffs(coeffs)?;
        if json.cutoff < json.order {
            // The threshold itself is not serialized; keep the cutoff.
            d.trunc = Some(TruncationMask { order: json.order, cutoff: json.cutoff, epsilon: T::nan() });
            d.coeffs.iter_mut().skip(json.cutoff + 1).for_each(|c| *c = Complex::new(T::zero(), T::zero()));
        }
        Ok(d)
    }

    /// Little-endian `u32` order, `u32` cutoff, then `(re, im)` as `f64` for
    /// `k = 0..=K`.
    pub fn write_binary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(&(self.order as u32).to_le_bytes())?;
        out.write_all(&(self.cutoff() as u32).to_le_bytes())?;
        for c in &self.coeffs {
            out.write_all(&c.re.to_f64_lossy().to_le_bytes())?;
            out.write_all(&c.im.to_f64_lossy().to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let io = |e| Error::io("<binary descriptor>", e);
        let mut word = [0u8; 4];
        input.read_exact(&mut word).map_err(io)?;
        let order = u32::from_le_bytes(word) as usize;
        input.read_exact(&mut word).map_err(io)?;
        let cutoff = u32::from_le_bytes(word) as usize;
        let mut re = Vec::with_capacity(order + 1);
        let mut im = Vec::with_capacity(order + 1);
        let mut buf = [0u8; 8];
        for _ in 0..=order {
            input.read_exact(&mut buf).map_err(io)?;
            re.push(f64::from_le_bytes(buf));
            input.read_exact(&mut buf).map_err(io)?;
            im.push(f64::from_le_bytes(buf));
        }
        Self::from_json(&DescriptorJson { order, cutoff, re, im })
    }
}

/// JSON form `{"K":.., "cutoff":.., "re":[..], "im":[..]}`, coefficients in
/// `k = 0..=K` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorJson {
    #[serde(rename = "K")]
    pub order: usize,
    pub cutoff: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelMode;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_set(rng: &mut ChaCha8Rng, n: usize) -> AngleWeightSet<f64> {
        let angles = (0..n).map(|_| rng.random_range(-PI..PI)).collect();
        let weights = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
        AngleWeightSet::new(angles, weights).unwrap()
    }

    #[test]
    fn set_validation() {
        assert!(matches!(AngleWeightSet::<f64>::new(vec![], vec![]), Err(Error::EmptySet)));
        assert!(matches!(
            AngleWeightSet::new(vec![0.0], vec![1.0, 2.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(AngleWeightSet::new(vec![0.0], vec![-1.0]).is_err());
        assert!(AngleWeightSet::new(vec![f64::NAN], vec![1.0]).is_err());
        let s = AngleWeightSet::new(vec![3.5 * PI], vec![0.0]).unwrap();
        assert!((s.angles()[0] + 0.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn single_sample_reproduces_kernel() {
        for order in [0, 1, 5, 17] {
            let kernel = Kernel::<f64>::new(order, KernelMode::Exact);
            let d = Descriptor::estimate(&AngleWeightSet::unweighted(vec![0.0]).unwrap(), &kernel);
            for (f, h) in d.coeffs().iter().zip(kernel.coeffs()) {
                assert_eq!(f.re, *h);
                assert_eq!(f.im, 0.0);
            }
            assert!((d.evaluate(0.0) - kernel.eval(0.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn opposite_pair_cancels_first_coefficient() {
        let kernel = Kernel::<f64>::new(1, KernelMode::Exact);
        let d = Descriptor::estimate(&AngleWeightSet::unweighted(vec![0.0, PI]).unwrap(), &kernel);
        assert!((d.coeffs()[0].re - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!(d.coeffs()[1].norm() < 1e-15);
    }

    #[test]
    fn zero_weights_give_zero_descriptor() {
        let kernel = Kernel::<f64>::new(6, KernelMode::Exact);
        let d = Descriptor::estimate(&AngleWeightSet::new(vec![0.1, 2.0], vec![0.0, 0.0]).unwrap(), &kernel);
        assert_eq!(d, Descriptor::zeros(6));
    }

    #[test]
    fn estimate_matches_angular_kde() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for order in [1, 4, 9, 30] {
            let kernel = Kernel::<f64>::new(order, KernelMode::Exact);
            let set = random_set(&mut rng, 23);
            let d = Descriptor::estimate(&set, &kernel);
            for i in 0..1000 {
                let theta = -PI + 2.0 * PI * i as f64 / 1000.0;
                let brute: f64 =
                    set.iter().map(|(a, w)| w * kernel.eval(theta - a)).sum::<f64>() / set.len() as f64;
                assert!((d.evaluate(theta) - brute).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn evaluate_matches_two_sided_synthesis() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let coeffs: Vec<Complex<f64>> =
            (0..9).map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let d = Descriptor::from_coeffs(coeffs).unwrap();
        let two_sided: Vec<_> = (-8i64..=8).map(|k| d.coeff(k)).collect();
        for i in 0..500 {
            let theta = -PI + 2.0 * PI * i as f64 / 500.0;
            let s = crate::kernel::synthesize(&two_sided, theta);
            assert!((s.re - d.evaluate(theta)).abs() < 1e-12);
            assert!(s.im.abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_spread_approaches_flat_density() {
        let kernel = Kernel::<f64>::new(8, KernelMode::Exact);
        let n = 4096;
        let angles = (0..n).map(|i| -PI + 2.0 * PI * i as f64 / n as f64).collect();
        let d = Descriptor::estimate(&AngleWeightSet::new(angles, vec![0.5; n]).unwrap(), &kernel);
        for theta in [-2.0, 0.0, 0.3, 3.0] {
            assert!((d.evaluate(theta) - 0.5 / (2.0 * PI)).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let kernel = Kernel::<f64>::new(10, KernelMode::Exact);
        let d = Descriptor::estimate(&random_set(&mut rng, 15), &kernel);
        assert_eq!(d.rotate(0.0), d);
        let back = d.rotate(1.234).rotate(-1.234);
        for (a, b) in back.coeffs().iter().zip(d.coeffs()) {
            assert!((a - b).norm() < 1e-12);
        }
        let r = d.rotate(0.7);
        for i in 0..100 {
            let theta = -PI + 0.0628 * i as f64;
            assert!((r.evaluate(theta) - d.evaluate(theta - 0.7)).abs() < 1e-12);
        }
        assert!(d.distance(&d.rotate(PI)) > 0.0);
    }

    #[test]
    fn distance_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let kernel = Kernel::<f64>::new(7, KernelMode::Exact);
        let a = Descriptor::estimate(&random_set(&mut rng, 12), &kernel);
        let b = Descriptor::estimate(&random_set(&mut rng, 12), &kernel);
        assert_eq!(a.distance(&a), 0.0);
        assert!((a.distance(&b) - b.distance(&a)).abs() < 1e-15);
        // zero padding: a lower-order descriptor is the higher one with zeros appended
        let short = Descriptor::from_coeffs(a.coeffs()[..4].to_vec()).unwrap();
        let padded = a.truncate(&TruncationMask { order: 7, cutoff: 3, epsilon: 0.5 }).unwrap();
        assert!((short.distance(&b) - padded.distance(&b)).abs() < 1e-14);
    }

    #[test]
    fn truncation_tail_bound() {
        let kernel = Kernel::<f64>::new(64, KernelMode::Exact);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let d = Descriptor::estimate(&random_set(&mut rng, 9), &kernel);
        let mask = TruncationMask::new(64, 1e-5).unwrap();
        let t = d.truncate(&mask).unwrap();
        assert_eq!(t.coeffs().iter().filter(|c| c.norm() > 0.0).count(), 28);
        assert_eq!(t.real_len(), 56);
        let tail: f64 = d.coeffs()[28..].iter().map(|c| c.norm_sqr()).sum();
        assert!((d.distance(&t) - (2.0 * PI * 2.0 * tail).sqrt()).abs() < 1e-15);
        let full = TruncationMask::<f64> { order: 64, cutoff: 64, epsilon: 1e-300 };
        assert_eq!(d.truncate(&full).unwrap().coeffs(), d.coeffs());
        assert!(matches!(d.truncate(&TruncationMask::new(8, 1e-5).unwrap()), Err(Error::OrderMismatch { .. })));
    }

    #[test]
    fn linearity_over_concatenation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let kernel = Kernel::<f64>::new(12, KernelMode::Exact);
        let s1 = random_set(&mut rng, 7);
        let s2 = random_set(&mut rng, 19);
        let f1 = Descriptor::estimate(&s1, &kernel);
        let f2 = Descriptor::estimate(&s2, &kernel);
        let f = Descriptor::estimate(&s1.concat(&s2), &kernel);
        for k in 0..=12 {
            let mixed = (f1.coeffs()[k] * 7.0 + f2.coeffs()[k] * 19.0) / 26.0;
            assert!((mixed - f.coeffs()[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn storage_parity() {
        let kernel = Kernel::<f64>::new(15, KernelMode::Exact);
        let d = Descriptor::estimate(&AngleWeightSet::unweighted(vec![0.2]).unwrap(), &kernel);
        assert_eq!(d.coeffs().len(), 16);
        assert_eq!(d.real_len(), 32);
    }

    #[test]
    fn json_and_binary_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let kernel = Kernel::<f64>::new(64, KernelMode::Exact);
        let d = Descriptor::estimate(&random_set(&mut rng, 5), &kernel)
            .truncate(&TruncationMask::new(64, 1e-5).unwrap())
            .unwrap();
        let text = serde_json::to_string(&d.to_json()).unwrap();
        assert!(text.starts_with("{\"K\":64,\"cutoff\":27,\"re\":["));
        let back: Descriptor<f64> = Descriptor::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.coeffs(), d.coeffs());
        assert_eq!(back.cutoff(), 27);

        let mut bytes = Vec::new();
        d.write_binary(&mut bytes).unwrap();
        assert_eq!(bytes.len(), 8 + 16 * 65);
        assert_eq!(&bytes[..8], &[64, 0, 0, 0, 27, 0, 0, 0]);
        let back = Descriptor::<f64>::read_binary(bytes.as_slice()).unwrap();
        assert_eq!(back.coeffs(), d.coeffs());
    }

    #[test]
    fn malformed_json_rejected() {
        let bad = DescriptorJson { order: 3, cutoff: 3, re: vec![0.0; 3], im: vec![0.0; 4] };
        assert!(Descriptor::<f64>::from_json(&bad).is_err());
        let bad = DescriptorJson { order: 1, cutoff: 2, re: vec![0.0; 2], im: vec![0.0; 2] };
        assert!(Descriptor::<f64>::from_json(&bad).is_err());
    }
}
