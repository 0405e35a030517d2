use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the numerical core is written against (`f32` or `f64`).
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable")
    }

    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize is representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

/// Reduces an angle to `[-π, π)`.
pub fn wrap_angle<T: Scalar>(theta: T) -> T {
    let two_pi = T::TAU();
    let pi = T::PI();
    if theta >= -pi && theta < pi {
        return theta;
    }
    let mut r = (theta + pi) % two_pi;
    if r < T::zero() {
        r = r + two_pi;
    }
    let out = r - pi;
    // `%` can round up to exactly 2π - π.
    if out >= pi {
        out - two_pi
    } else {
        out
    }
}

/// Principal argument in `(-π, π]`; `atan2` returns `-π` for a negative-zero
/// imaginary part, which is folded onto `π`.
pub fn principal_arg<T: Scalar>(z: Complex<T>) -> T {
    let a = z.im.atan2(z.re);
    if a <= -T::PI() {
        T::PI()
    } else {
        a
    }
}

#[inline]
pub(crate) fn cis<T: Scalar>(theta: T) -> Complex<T> {
    let (s, c) = theta.sin_cos();
    Complex::new(c, s)
}
