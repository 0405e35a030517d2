//! Fourier-series kernel density estimation (FS-KDE) of angular distributions.
//!
//! An FS-KDE represents a weighted angular kernel density estimate exactly by
//! its Fourier series coefficients. With the bandlimited `cos^2K` kernel
//!
//! ```text
//! h(θ) = C_K cos^{2K}(θ/2) = Σ_{k=-K..K} H_k e^{ikθ}
//! ```
//!
//! an order-`K` estimate is stored as `K + 1` complex numbers, rotations of the
//! input angles become phase shifts of the coefficients, and L2 distances are
//! finite sums.
//!
//! The numerical core ([`kernel`], [`descriptor`], [`canonical`],
//! [`image_field`]) is generic over the floating point type through
//! [`Scalar`]; the `*64` / `*32` aliases below pin it for the common cases.
//! The simulation and benchmark harnesses ([`stability`], [`patch_bench`]) work
//! in `f64`.

pub mod canonical;
pub mod descriptor;
pub mod error;
pub mod image_field;
pub mod io;
pub mod kernel;
pub mod patch_bench;
pub mod scalar;
pub mod stability;

pub use canonical::{
    canonical_distance_fk, canonicalize_f1, canonicalize_fk, min_distance_search,
    CanonicalDescriptor, CanonScheme,
};
pub use descriptor::{AngleWeightSet, Descriptor};
pub use error::{Error, Result};
pub use image_field::{AngularImage, DescriptorField, GradientOperator, Window, WindowShape};
pub use kernel::{Kernel, KernelMode, TruncationMask};
pub use scalar::Scalar;

pub type Kernel64 = Kernel<f64>;
pub type Kernel32 = Kernel<f32>;
pub type Descriptor64 = Descriptor<f64>;
pub type Descriptor32 = Descriptor<f32>;
pub type AngleWeightSet64 = AngleWeightSet<f64>;
pub type AngleWeightSet32 = AngleWeightSet<f32>;
pub type TruncationMask64 = TruncationMask<f64>;
pub type CanonicalDescriptor64 = CanonicalDescriptor<f64>;
pub type AngularImage64 = AngularImage<f64>;
pub type DescriptorField64 = DescriptorField<f64>;
pub type Window64 = Window<f64>;
