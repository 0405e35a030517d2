//! Local FS-KDEs over images.
//!
//! A weighted angular image `(Θ(x), W(x))` (typically gradient orientation and
//! magnitude) and a window `φ` with `||φ||₁ = 1` define at every pixel the
//! density `f(x, θ) = Σ_y W(y) h(θ - Θ(y)) φ(x - y)`, whose coefficients are
//!
//! ```text
//! F_k(x) = H_k · ((W e^{-ikΘ}) ∗ φ)(x)
//! ```
//!
//! one complex convolution per `k = 0..=K`. Borders are zero padded.

use ndarray::{Array2, ArrayView2, Zip};
use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descriptor::{AngleWeightSet, Descriptor};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::scalar::{cis, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientOperator {
    /// Central differences inside, one-sided differences on the border.
    #[default]
    Central,
    /// 3x3 Sobel, normalized by 1/8, with replicated borders.
    Sobel,
}

/// Per-pixel angles in `[-π, π)` and nonnegative weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularImage<T> {
    angles: Array2<T>,
    weights: Array2<T>,
}

impl<T: Scalar> AngularImage<T> {
    pub fn new(angles: Array2<T>, weights: Array2<T>) -> Result<Self> {
        if angles.dim() != weights.dim() {
            return Err(Error::ShapeMismatch(angles.dim(), weights.dim()));
        }
        if let Some(index) = angles.iter().position(|a| !a.is_finite()) {
            return Err(Error::InvalidSample { index, reason: "angle is not finite" });
        }
        if let Some(index) = weights.iter().position(|w| !w.is_finite() || *w < T::zero()) {
            return Err(Error::InvalidSample { index, reason: "weight is negative or not finite" });
        }
        let angles = angles.mapv(crate::scalar::wrap_angle);
        Ok(AngularImage { angles, weights })
    }

    pub fn angles(&self) -> ArrayView2<'_, T> {
        self.angles.view()
    }

    pub fn weights(&self) -> ArrayView2<'_, T> {
        self.weights.view()
    }

    pub fn dim(&self) -> (usize, usize) {
        self.angles.dim()
    }

    /// Copy with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        AngularImage { angles: self.angles.clone(), weights: self.weights.mapv(|w| w * factor) }
    }
}

/// Gradient orientation `atan2(∂y, ∂x)` and magnitude of an intensity image,
/// with `x` along columns and `y` along rows. Zero-magnitude pixels get angle 0.
pub fn gradient_field<T: Scalar>(image: ArrayView2<'_, T>, op: GradientOperator) -> Result<AngularImage<T>> {
    let (rows, cols) = image.dim();
    if rows < 3 || cols < 3 {
        return Err(Error::ImageTooSmall { rows, cols, min: 3 });
    }
    let (gx, gy) = match op {
        GradientOperator::Central => central_differences(image),
        GradientOperator::Sobel => sobel(image),
    };
    let mut angles = Array2::zeros((rows, cols));
    let mut weights = Array2::zeros((rows, cols));
    Zip::from(&mut angles).and(&mut weights).and(&gx).and(&gy).for_each(|a, w, &dx, &dy| {
        let mag = dx.hypot(dy);
        *w = mag;
        *a = if mag > T::zero() { crate::scalar::wrap_angle(dy.atan2(dx)) } else { T::zero() };
    });
    AngularImage::new(angles, weights)
}

fn central_differences<T: Scalar>(img: ArrayView2<'_, T>) -> (Array2<T>, Array2<T>) {
    let (rows, cols) = img.dim();
    let half = T::of(0.5);
    let mut gx = Array2::zeros((rows, cols));
    let mut gy = Array2::zeros((rows, cols));
    for r in 0..rows {
        for c in 0..cols {
            gx[[r, c]] = if c == 0 {
                img[[r, 1]] - img[[r, 0]]
            } else if c == cols - 1 {
                img[[r, c]] - img[[r, c - 1]]
            } else {
                (img[[r, c + 1]] - img[[r, c - 1]]) * half
            };
            gy[[r, c]] = if r == 0 {
                img[[1, c]] - img[[0, c]]
            } else if r == rows - 1 {
                img[[r, c]] - img[[r - 1, c]]
            } else {
                (img[[r + 1, c]] - img[[r - 1, c]]) * half
            };
        }
    }
    (gx, gy)
}

fn sobel<T: Scalar>(img: ArrayView2<'_, T>) -> (Array2<T>, Array2<T>) {
    let (rows, cols) = img.dim();
    let at = |r: isize, c: isize| {
        let r = r.clamp(0, rows as isize - 1) as usize;
        let c = c.clamp(0, cols as isize - 1) as usize;
        img[[r, c]]
    };
    let two = T::of(2.0);
    let eighth = T::of(0.125);
    let mut gx = Array2::zeros((rows, cols));
    let mut gy = Array2::zeros((rows, cols));
    for r in 0..rows as isize {
        for c in 0..cols as isize {
            let dx = (at(r - 1, c + 1) + two * at(r, c + 1) + at(r + 1, c + 1))
                - (at(r - 1, c - 1) + two * at(r, c - 1) + at(r + 1, c - 1));
            let dy = (at(r + 1, c - 1) + two * at(r + 1, c) + at(r + 1, c + 1))
                - (at(r - 1, c - 1) + two * at(r - 1, c) + at(r - 1, c + 1));
            gx[[r as usize, c as usize]] = dx * eighth;
            gy[[r as usize, c as usize]] = dy * eighth;
        }
    }
    (gx, gy)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowShape {
    Box,
    TruncatedGaussian,
    Custom,
}

/// Nonnegative filter taps summing to one, anchored at `(rows / 2, cols / 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window<T> {
    taps: Array2<T>,
    shape: WindowShape,
    /// `(column factor, row factor)` when the window is an outer product.
    separable: Option<(Vec<T>, Vec<T>)>,
}

impl<T: Scalar> Window<T> {
    /// Arbitrary taps; normalized to unit L1 norm.
    pub fn from_taps(taps: Array2<T>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::InvalidWindow("no taps".into()));
        }
        if taps.iter().any(|t| !t.is_finite() || *t < T::zero()) {
            return Err(Error::InvalidWindow("taps must be finite and nonnegative".into()));
        }
        let total = taps.iter().fold(T::zero(), |a, t| a + *t);
        if total <= T::zero() {
            return Err(Error::InvalidWindow("taps sum to zero".into()));
        }
        Ok(Window { taps: taps.mapv(|t| t / total), shape: WindowShape::Custom, separable: None })
    }

    /// `rows x cols` box.
    pub fn boxed(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidWindow("box window needs positive size".into()));
        }
        let row_f = vec![T::of_usize(rows).recip(); rows];
        let col_f = vec![T::of_usize(cols).recip(); cols];
        Ok(Self::outer(col_f, row_f, WindowShape::Box))
    }

    /// Isotropic Gaussian with standard deviation `sigma`, truncated to a
    /// `(2 radius + 1)²` support.
    pub fn truncated_gaussian(sigma: T, radius: usize) -> Result<Self> {
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::InvalidWindow(format!("gaussian sigma must be positive, got {sigma}")));
        }
        let g: Vec<T> = (0..=2 * radius)
            .map(|i| {
                let x = T::of(i as f64 - radius as f64) / sigma;
                (-(x * x) * T::of(0.5)).exp()
            })
            .collect();
        let total = g.iter().fold(T::zero(), |a, t| a + *t);
        let g: Vec<T> = g.into_iter().map(|t| t / total).collect();
        Ok(Self::outer(g.clone(), g, WindowShape::TruncatedGaussian))
    }

    fn outer(col_f: Vec<T>, row_f: Vec<T>, shape: WindowShape) -> Self {
        let taps = Array2::from_shape_fn((row_f.len(), col_f.len()), |(r, c)| row_f[r] * col_f[c]);
        Window { taps, shape, separable: Some((col_f, row_f)) }
    }

    pub fn taps(&self) -> ArrayView2<'_, T> {
        self.taps.view()
    }

    pub fn shape(&self) -> WindowShape {
        self.shape
    }

    pub fn dim(&self) -> (usize, usize) {
        self.taps.dim()
    }

    pub fn anchor(&self) -> (usize, usize) {
        let (r, c) = self.taps.dim();
        (r / 2, c / 2)
    }

    pub fn is_separable(&self) -> bool {
        self.separable.is_some()
    }
}

/// How the per-plane convolution is evaluated. Both give the same result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvolutionPath {
    /// Separable passes when the window allows it, direct 2-D otherwise.
    #[default]
    Auto,
    Direct,
}

/// Coefficient planes `F_k(x)` for `k = 0..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorField<T> {
    order: usize,
    planes: Vec<Array2<Complex<T>>>,
}

impl<T: Scalar> DescriptorField<T> {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn planes(&self) -> &[Array2<Complex<T>>] {
        &self.planes
    }

    pub fn dim(&self) -> (usize, usize) {
        self.planes[0].dim()
    }

    /// The local descriptor at pixel `(row, col)`.
    pub fn descriptor_at(&self, row: usize, col: usize) -> Descriptor<T> {
        let coeffs = self.planes.iter().map(|p| p[[row, col]]).collect();
        Descriptor::from_coeffs(coeffs).expect("field has at least one plane")
    }
}

pub fn local_fskde<T: Scalar>(
    field: &AngularImage<T>,
    window: &Window<T>,
    kernel: &Kernel<T>,
) -> Result<DescriptorField<T>> {
    local_fskde_with(field, window, kernel, ConvolutionPath::Auto)
}

pub fn local_fskde_with<T: Scalar>(
    field: &AngularImage<T>,
    window: &Window<T>,
    kernel: &Kernel<T>,
    path: ConvolutionPath,
) -> Result<DescriptorField<T>> {
    let (wr, wc) = window.dim();
    let (rows, cols) = field.dim();
    if wr > rows || wc > cols {
        return Err(Error::WindowTooLarge { window: (wr, wc), image: (rows, cols) });
    }
    let planes = kernel
        .coeffs()
        .par_iter()
        .enumerate()
        .map(|(k, h)| {
            let kf = T::of_usize(k);
            let mut src = Array2::from_elem((rows, cols), Complex::new(T::zero(), T::zero()));
            Zip::from(&mut src).and(&field.angles).and(&field.weights).for_each(|s, &a, &w| {
                *s = if k == 0 { Complex::new(w, T::zero()) } else { cis(-kf * a) * w };
            });
            let mut out = match (&window.separable, path) {
                (Some((col_f, row_f)), ConvolutionPath::Auto) => convolve_separable(&src, col_f, row_f, window.anchor()),
                _ => convolve_direct(&src, window.taps.view(), window.anchor()),
            };
            out.mapv_inplace(|v| v * *h);
            if k == 0 {
                out.mapv_inplace(|v| Complex::new(v.re, T::zero()));
            }
            out
        })
        .collect();
    Ok(DescriptorField { order: kernel.order(), planes })
}

/// `out(x) = Σ_d src(x - d) φ(d)`, with `d` measured from the window anchor.
fn convolve_direct<T: Scalar>(
    src: &Array2<Complex<T>>,
    taps: ArrayView2<'_, T>,
    anchor: (usize, usize),
) -> Array2<Complex<T>> {
    let (rows, cols) = src.dim();
    let (wr, wc) = taps.dim();
    let mut out = Array2::from_elem((rows, cols), Complex::new(T::zero(), T::zero()));
    for r in 0..rows {
        for c in 0..cols {
            let mut acc = Complex::new(T::zero(), T::zero());
            for i in 0..wr {
                let y = r as isize - (i as isize - anchor.0 as isize);
                if y < 0 || y >= rows as isize {
                    continue;
                }
                for j in 0..wc {
                    let x = c as isize - (j as isize - anchor.1 as isize);
                    if x < 0 || x >= cols as isize {
                        continue;
                    }
                    acc = acc + src[[y as usize, x as usize]] * taps[[i, j]];
                }
            }
            out[[r, c]] = acc;
        }
    }
    out
}

fn convolve_separable<T: Scalar>(
    src: &Array2<Complex<T>>,
    col_f: &[T],
    row_f: &[T],
    anchor: (usize, usize),
) -> Array2<Complex<T>> {
    let (rows, cols) = src.dim();
    let zero = Complex::new(T::zero(), T::zero());
    let mut tmp = Array2::from_elem((rows, cols), zero);
    for r in 0..rows {
        for c in 0..cols {
            let mut acc = zero;
            for (j, f) in col_f.iter().enumerate() {
                let x = c as isize - (j as isize - anchor.1 as isize);
                if x >= 0 && x < cols as isize {
                    acc = acc + src[[r, x as usize]] * *f;
                }
            }
            tmp[[r, c]] = acc;
        }
    }
    let mut out = Array2::from_elem((rows, cols), zero);
    for r in 0..rows {
        for c in 0..cols {
            let mut acc = zero;
            for (i, f) in row_f.iter().enumerate() {
                let y = r as isize - (i as isize - anchor.0 as isize);
                if y >= 0 && y < rows as isize {
                    acc = acc + tmp[[y as usize, c]] * *f;
                }
            }
            out[[r, c]] = acc;
        }
    }
    out
}

/// Pixels within `diameter / 2` of the patch center `((rows-1)/2, (cols-1)/2)`.
pub fn circular_mask(rows: usize, cols: usize, diameter: f64) -> Array2<bool> {
    let cy = (rows as f64 - 1.0) / 2.0;
    let cx = (cols as f64 - 1.0) / 2.0;
    let r2 = (diameter / 2.0) * (diameter / 2.0);
    Array2::from_shape_fn((rows, cols), |(r, c)| {
        let dy = r as f64 - cy;
        let dx = c as f64 - cx;
        dy * dy + dx * dx <= r2
    })
}

/// Gradient angles and magnitudes of the pixels inside the centered circular
/// mask, in row-major order.
pub fn masked_gradients<T: Scalar>(
    patch: ArrayView2<'_, T>,
    mask_diameter: f64,
    op: GradientOperator,
) -> Result<AngleWeightSet<T>> {
    let (rows, cols) = patch.dim();
    if !(mask_diameter > 0.0) || mask_diameter > rows.min(cols) as f64 {
        return Err(Error::MaskTooLarge { diameter: mask_diameter, rows, cols });
    }
    let grad = gradient_field(patch, op)?;
    let mask = circular_mask(rows, cols, mask_diameter);
    let mut angles = Vec::new();
    let mut weights = Vec::new();
    Zip::from(&mask).and(&grad.angles).and(&grad.weights).for_each(|&m, &a, &w| {
        if m {
            angles.push(a);
            weights.push(w);
        }
    });
    AngleWeightSet::new(angles, weights)
}

/// One descriptor for a whole patch: masked gradients estimated as a single
/// angle-weight set.
pub fn patch_descriptor<T: Scalar>(
    patch: ArrayView2<'_, T>,
    kernel: &Kernel<T>,
    mask_diameter: f64,
) -> Result<Descriptor<T>> {
    let set = masked_gradients(patch, mask_diameter, GradientOperator::Central)?;
    Ok(Descriptor::estimate(&set, kernel))
}
