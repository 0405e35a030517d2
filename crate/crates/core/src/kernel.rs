//! The bandlimited `cos^2K` kernel.
//!
//! `h(θ) = C_K cos^{2K}(θ/2)` has exactly `2K + 1` nonzero Fourier series
//! coefficients
//!
//! ```text
//! H_k = C_K binom(2K, K + k) / 2^{2K},   C_K = 2^{2K-1} / (binom(2K, K) π)
//! ```
//!
//! so `H_0 = 1/(2π)` and consecutive coefficients obey
//! `H_{k+1} / H_k = (K - k) / (K + k + 1)`. Both the coefficients and `C_K` are
//! built from ratios of that kind; no factorial is ever formed, so any order is
//! representable without overflow.
//!
//! For large orders the binomial weights are close to a Gaussian and the
//! normal approximation `H_k ≈ e^{-k²/K} / (2π)` is used instead.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cis, wrap_angle, Scalar};

/// Orders with `2K` at or above this use the normal approximation by default.
pub const APPROX_SWITCH_2K: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMode {
    /// Binomial coefficients.
    Exact,
    /// `H_k = e^{-k²/K} / (2π)`.
    NormalApprox,
}

impl KernelMode {
    /// Exact below `2K = 80`, normal approximation from there on.
    pub fn default_for(order: usize) -> Self {
        if 2 * order >= APPROX_SWITCH_2K {
            KernelMode::NormalApprox
        } else {
            KernelMode::Exact
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Kernel<T> {
    order: usize,
    coeffs: Vec<T>,
    norm_const: T,
    mode: KernelMode,
}

/// Validating constructor for orders that arrive as signed integers.
pub fn make_kernel<T: Scalar>(order: i64, mode: KernelMode) -> Result<Kernel<T>> {
    let order = usize::try_from(order).map_err(|_| Error::InvalidOrder(order))?;
    Ok(Kernel::new(order, mode))
}

impl<T: Scalar> Kernel<T> {
    pub fn new(order: usize, mode: KernelMode) -> Self {
        let two_pi = T::TAU();
        let coeffs = match mode {
            KernelMode::Exact => {
                let mut h = Vec::with_capacity(order + 1);
                let mut cur = two_pi.recip();
                h.push(cur);
                for k in 0..order {
                    cur = cur * T::of_usize(order - k) / T::of_usize(order + k + 1);
                    h.push(cur);
                }
                h
            }
            KernelMode::NormalApprox => {
                let kk = T::of_usize(order);
                (0..=order)
                    .map(|k| {
                        if k == 0 {
                            two_pi.recip()
                        } else {
                            let kf = T::of_usize(k);
                            (-(kf * kf) / kk).exp() / two_pi
                        }
                    })
                    .collect()
            }
        };
        Kernel { order, coeffs, norm_const: norm_const(order), mode }
    }

    /// Kernel with the mode chosen by [`KernelMode::default_for`].
    pub fn with_default_mode(order: usize) -> Self {
        Self::new(order, KernelMode::default_for(order))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn mode(&self) -> KernelMode {
        self.mode
    }

    /// `C_K`.
    pub fn norm_const(&self) -> T {
        self.norm_const
    }

    /// One-sided coefficients `H_0..=H_K`.
    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// `H_k` for any integer `k`; zero outside the band.
    pub fn coeff(&self, k: i64) -> T {
        let idx = k.unsigned_abs() as usize;
        self.coeffs.get(idx).copied().unwrap_or_else(T::zero)
    }

    /// Value of the kernel at `theta`.
    ///
    /// Exact mode evaluates the closed form; the normal approximation has no
    /// closed form and is synthesized from its coefficients.
    pub fn eval(&self, theta: T) -> T {
        let theta = wrap_angle(theta);
        match self.mode {
            KernelMode::Exact => {
                // cos²(θ/2) = (1 + cos θ) / 2
                let c2 = (T::one() + theta.cos()) * T::of(0.5);
                self.norm_const * c2.powi(self.order as i32)
            }
            KernelMode::NormalApprox => {
                let mut acc = Complex::new(T::zero(), T::zero());
                for k in -(self.order as i64)..=(self.order as i64) {
                    acc = acc + cis(T::of(k as f64) * theta) * self.coeff(k);
                }
                debug_assert!(acc.im.abs() < T::of(1e-12).max(T::epsilon() * T::of(64.0)));
                acc.re
            }
        }
    }

    /// Coefficients `(ik)^n H_k` of the `n`-th derivative, for `k = -K..=K`
    /// (index `k + K`).
    pub fn derivative_coeffs(&self, n: u32) -> Vec<Complex<T>> {
        let kk = self.order as i64;
        (-kk..=kk)
            .map(|k| {
                let ik = Complex::new(T::zero(), T::of(k as f64));
                let mut factor = Complex::new(T::one(), T::zero());
                for _ in 0..n {
                    factor = factor * ik;
                }
                factor * self.coeff(k)
            })
            .collect()
    }
}

/// `C_K = 1 / (2π · binom(2K, K) / 4^K)`; the central binomial over `4^K` is
/// the product of `(2j - 1) / (2j)` for `j = 1..=K`.
fn norm_const<T: Scalar>(order: usize) -> T {
    let mut central = T::one();
    for j in 1..=order {
        central = central * T::of_usize(2 * j - 1) / T::of_usize(2 * j);
    }
    (T::TAU() * central).recip()
}

/// Evaluates a two-sided coefficient array (index `k + K`) at `theta`.
pub fn synthesize<T: Scalar>(two_sided: &[Complex<T>], theta: T) -> Complex<T> {
    let kk = (two_sided.len() / 2) as i64;
    two_sided
        .iter()
        .zip(-kk..=kk)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (c, k)| acc + *c * cis(T::of(k as f64) * theta))
}

/// Which coefficients survive truncation at threshold `epsilon`:
/// `k` is kept iff `e^{-k²/K} ≥ epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationMask<T> {
    pub order: usize,
    pub cutoff: usize,
    pub epsilon: T,
}

impl<T: Scalar> TruncationMask<T> {
    pub fn new(order: usize, epsilon: T) -> Result<Self> {
        if !(epsilon > T::zero() && epsilon < T::one()) {
            return Err(Error::InvalidEpsilon(epsilon.to_f64_lossy()));
        }
        let kept = |k: usize| -> bool {
            if order == 0 {
                return k == 0;
            }
            let kf = T::of_usize(k);
            (-(kf * kf) / T::of_usize(order)).exp() >= epsilon
        };
        let estimate = (T::of_usize(order) * epsilon.recip().ln()).sqrt().floor();
        let mut cutoff = estimate.to_usize().unwrap_or(order).min(order);
        // The closed form can land one off at the rounding boundary.
        while cutoff < order && kept(cutoff + 1) {
            cutoff += 1;
        }
        while cutoff > 0 && !kept(cutoff) {
            cutoff -= 1;
        }
        Ok(TruncationMask { order, cutoff, epsilon })
    }

    /// Whether coefficient `k` (either sign) is retained.
    pub fn retains(&self, k: i64) -> bool {
        (k.unsigned_abs() as usize) <= self.cutoff
    }

    /// Number of retained one-sided complex coefficients.
    pub fn retained(&self) -> usize {
        self.cutoff + 1
    }
}

pub fn truncation_mask<T: Scalar>(order: usize, epsilon: T) -> Result<TruncationMask<T>> {
    TruncationMask::new(order, epsilon)
}
