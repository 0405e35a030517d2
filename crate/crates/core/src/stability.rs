//! Monte-Carlo study of how noise interacts with `F_1` canonicalization.
//!
//! Each sample `w_n e^{iθ_n}` of an angle-weight set (normalized so that
//! `Σ w_n = N` and the weighted mean angle is zero) is perturbed by complex
//! Gaussian noise with per-component variance `σ²/N`, and the weights are
//! rescaled to sum to `N` again. For the noisy estimate `F̃` the expected
//! canonicalization displacement is bounded by
//!
//! ```text
//! E ||F̃ - canon(F̃)|| ≤ E sqrt( Σ_{k=-K..K} (2 B_k N sin((k/2) atan(B_1 ε / (|F_1| + B_1 υ))))² )
//! ```
//!
//! with `ε, υ ~ N(0, σ²)` and `B_k = H_k / N`. Norms here are plain coefficient
//! norms (no `2π` factor).
//!
//! Randomness comes from ChaCha8 seeded with the user seed; each `(σ index,
//! trial)` pair reads its own stream (`stream = σ_index << 32 | trial`), so
//! results do not depend on how trials are scheduled across threads.

use std::io::Write;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canonical::canonicalize_f1;
use crate::descriptor::{AngleWeightSet, Descriptor};
use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::kernel::Kernel;

/// Number of rotation angles in the rotation-distance curves.
pub const ROTATION_GRID: usize = 720;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma: f64,
    pub n: usize,
    pub rng_seed: u64,
}

impl NoiseModel {
    pub fn new(sigma: f64, n: usize, rng_seed: u64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidSigma(sigma));
        }
        if n == 0 {
            return Err(Error::EmptySet);
        }
        Ok(NoiseModel { sigma, n, rng_seed })
    }

    /// Standard deviation of each real / imaginary noise component, `σ/√N`.
    pub fn component_std(&self) -> f64 {
        self.sigma / (self.n as f64).sqrt()
    }

    /// Independent generator for one stream of this model's seed.
    pub fn stream(&self, stream: u64) -> ChaCha8Rng {
        seeded_stream(self.rng_seed, stream)
    }
}

pub fn seeded_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Rescales weights to sum to `N` and rotates the angles so the weighted mean
/// angle is zero. Sets with zero total weight or zero resultant are left
/// unscaled / unrotated respectively.
pub fn normalize(set: &AngleWeightSet<f64>) -> AngleWeightSet<f64> {
    let n = set.len() as f64;
    let total: f64 = set.weights().iter().sum();
    let scale = if total > 0.0 { n / total } else { 1.0 };
    let resultant: Complex<f64> = set.iter().map(|(a, w)| Complex::from_polar(w, a)).sum();
    let mean = if resultant.norm() > 1e-12 * total.max(f64::MIN_POSITIVE) { resultant.arg() } else { 0.0 };
    let weights = set.weights().iter().map(|w| w * scale).collect();
    let angles = set.angles().iter().map(|a| a - mean).collect();
    AngleWeightSet::new(angles, weights).expect("normalizing preserves validity")
}

/// Noisy version of `set`: `w̃ e^{iθ̃} = w e^{iθ} + ε`, then weights rescaled so
/// `Σ α w̃ = N`. The input is normalized first.
pub fn perturb<R: Rng + ?Sized>(set: &AngleWeightSet<f64>, model: &NoiseModel, rng: &mut R) -> Result<AngleWeightSet<f64>> {
    if !(model.sigma > 0.0) || !model.sigma.is_finite() {
        return Err(Error::InvalidSigma(model.sigma));
    }
    if model.n != set.len() {
        return Err(Error::InvalidParameter(format!(
            "noise model is for N = {} samples but the set has {}",
            model.n,
            set.len()
        )));
    }
    let base = normalize(set);
    let noise = Normal::new(0.0, model.component_std()).map_err(|_| Error::InvalidSigma(model.sigma))?;
    let mut angles = Vec::with_capacity(set.len());
    let mut weights = Vec::with_capacity(set.len());
    for (a, w) in base.iter() {
        let eps = Complex::new(noise.sample(rng), noise.sample(rng));
        let z = Complex::from_polar(w, a) + eps;
        angles.push(z.im.atan2(z.re));
        weights.push(z.norm());
    }
    let total: f64 = weights.iter().sum();
    let alpha = if total > 0.0 { set.len() as f64 / total } else { 1.0 };
    weights.iter_mut().for_each(|w| *w *= alpha);
    AngleWeightSet::new(angles, weights)
}

/// `B_k = H_k / N` for `k = 0..=K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCoefficients {
    pub b: Vec<f64>,
    pub n: usize,
}

impl BoundCoefficients {
    pub fn new(kernel: &Kernel<f64>, n: usize) -> Self {
        BoundCoefficients { b: kernel.coeffs().iter().map(|h| h / n as f64).collect(), n }
    }

    pub fn order(&self) -> usize {
        self.b.len() - 1
    }
}

/// How the phase of the noisy `F_1` is recovered inside the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseBranch {
    /// `atan(B_1 ε / (|F_1| + B_1 υ))`, the principal arctangent of the ratio.
    Principal,
    /// `atan2(B_1 ε, |F_1| + B_1 υ)`, the true argument.
    Quadrant,
}

/// The bound integrand for fixed noise draws `ε`, `υ`.
pub fn bound_value(f1_mag: f64, eps: f64, ups: f64, coeffs: &BoundCoefficients, branch: PhaseBranch) -> f64 {
    let b1 = coeffs.b.get(1).copied().unwrap_or(0.0);
    let num = b1 * eps;
    let den = f1_mag + b1 * ups;
    let phase = match branch {
        PhaseBranch::Principal => {
            if num == 0.0 {
                0.0
            } else {
                (num / den).atan()
            }
        }
        PhaseBranch::Quadrant => num.atan2(den),
    };
    let n = coeffs.n as f64;
    // k and -k contribute equally; k = 0 contributes nothing.
    let sum: f64 = coeffs
        .b
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, b)| {
            let t = 2.0 * b * n * (0.5 * k as f64 * phase).sin();
            2.0 * t * t
        })
        .sum();
    sum.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundDraw {
    pub principal: f64,
    pub quadrant: f64,
}

/// One Monte-Carlo draw of the bound integrand under both phase branches.
pub fn bound_draw<R: Rng + ?Sized>(f1_mag: f64, sigma: f64, coeffs: &BoundCoefficients, rng: &mut R) -> Result<BoundDraw> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidSigma(sigma));
    }
    if !(f1_mag >= 0.0) {
        return Err(Error::InvalidParameter(format!("|F_1| must be nonnegative, got {f1_mag}")));
    }
    let z: [f64; 2] = [StandardNormal.sample(rng), StandardNormal.sample(rng)];
    let (eps, ups) = (sigma * z[0], sigma * z[1]);
    Ok(BoundDraw {
        principal: bound_value(f1_mag, eps, ups, coeffs, PhaseBranch::Principal),
        quadrant: bound_value(f1_mag, eps, ups, coeffs, PhaseBranch::Quadrant),
    })
}

/// One Monte-Carlo draw of the bound integrand, principal arctangent branch.
pub fn bound_sample<R: Rng + ?Sized>(f1_mag: f64, sigma: f64, coeffs: &BoundCoefficients, rng: &mut R) -> Result<f64> {
    bound_draw(f1_mag, sigma, coeffs, rng).map(|d| d.principal)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub sigma: f64,
    pub trial: usize,
    /// `||F - F̃||`
    pub noise_dist: f64,
    /// `||F̃ - canon(F̃)||`
    pub canon_dist: f64,
    pub bound_sample: f64,
    pub bound_sample_quadrant: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        MeanSe { mean, se: (var / n).sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaSummary {
    pub sigma: f64,
    pub noise_dist: MeanSe,
    pub canon_dist: MeanSe,
    pub bound: MeanSe,
    pub bound_quadrant: MeanSe,
    /// `||F - rotate(F̃, φ)||` on the rotation grid for the first trial.
    pub noisy_rotation_curve: Vec<f64>,
    /// `||F - canon(F̃)||` for the first trial.
    pub noisy_canonical_dist: f64,
}

impl SigmaSummary {
    /// `sqrt(se_canon² + se_bound²)`.
    pub fn pooled_se(&self) -> f64 {
        self.canon_dist.se.hypot(self.bound.se)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub order: usize,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub f1_mag: f64,
    pub rotation_grid: Vec<f64>,
    /// `||F - rotate(F, φ)||` on `rotation_grid`.
    pub rotation_curve: Vec<f64>,
    pub summaries: Vec<SigmaSummary>,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

impl SimulationReport {
    pub fn mean_rotation_dist(&self) -> f64 {
        self.rotation_curve.iter().sum::<f64>() / self.rotation_curve.len() as f64
    }

    /// Columns `sigma,trial,noise_dist,canon_dist,bound_sample`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "sigma,trial,noise_dist,canon_dist,bound_sample")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt_f64(r.sigma),
                r.trial,
                fmt_f64(r.noise_dist),
                fmt_f64(r.canon_dist),
                fmt_f64(r.bound_sample)
            )?;
        }
        Ok(())
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

/// Base set with a dominant direction: angles uniform on a half circle, so
/// `|F_1|` is large and the higher coefficients are small.
pub fn random_base<R: Rng + ?Sized>(n: usize, rng: &mut R) -> AngleWeightSet<f64> {
    let half = std::f64::consts::FRAC_PI_2;
    let angles = (0..n).map(|_| rng.random_range(-half..half)).collect();
    let weights = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    normalize(&AngleWeightSet::new(angles, weights).expect("valid base"))
}

/// Half the samples at 0 and half at π with equal weights: `F_1 = 0`.
pub fn symmetric_base(n: usize) -> AngleWeightSet<f64> {
    let angles = (0..n).map(|i| if i % 2 == 0 { 0.0 } else { -std::f64::consts::PI }).collect();
    AngleWeightSet::new(angles, vec![1.0; n]).expect("valid base")
}

pub fn simulate_stability(
    base: &AngleWeightSet<f64>,
    kernel: &Kernel<f64>,
    sigmas: &[f64],
    trials: usize,
    seed: u64,
) -> Result<SimulationReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if let Some(s) = sigmas.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
        return Err(Error::InvalidSigma(*s));
    }
    let n = base.len();
    let normalized = normalize(base);
    let reference = Descriptor::estimate(&normalized, kernel);
    let f1_mag = reference.coeffs().get(1).map_or(0.0, |c| c.norm());
    let coeffs = BoundCoefficients::new(kernel, n);
    let rotation_grid: Vec<f64> = (0..ROTATION_GRID)
        .map(|i| -std::f64::consts::PI + std::f64::consts::TAU * i as f64 / ROTATION_GRID as f64)
        .collect();
    let rotation_curve = rotation_grid.iter().map(|phi| reference.coefficient_distance(&reference.rotate(*phi))).collect();

    let mut records = Vec::with_capacity(sigmas.len() * trials);
    let mut summaries = Vec::with_capacity(sigmas.len());
    for (si, &sigma) in sigmas.iter().enumerate() {
        let run_trial = |t: usize| -> Result<(TrialRecord, Descriptor<f64>)> {
            let mut rng = seeded_stream(seed, ((si as u64) << 32) | t as u64);
            let (noisy, draw) = if sigma > 0.0 {
                let model = NoiseModel::new(sigma, n, seed)?;
                let noisy = perturb(&normalized, &model, &mut rng)?;
                (noisy, bound_draw(f1_mag, sigma, &coeffs, &mut rng)?)
            } else {
                (normalized.clone(), BoundDraw { principal: 0.0, quadrant: 0.0 })
            };
            let noisy_d = Descriptor::estimate(&noisy, kernel);
            let canon = canonicalize_f1(&noisy_d).descriptor;
            let record = TrialRecord {
                sigma,
                trial: t,
                noise_dist: reference.coefficient_distance(&noisy_d),
                canon_dist: noisy_d.coefficient_distance(&canon),
                bound_sample: draw.principal,
                bound_sample_quadrant: draw.quadrant,
            };
            Ok((record, noisy_d))
        };
        let outcomes: Vec<(TrialRecord, Descriptor<f64>)> =
            (0..trials).into_par_iter().map(run_trial).collect::<Result<_>>()?;
        let column = |f: fn(&TrialRecord) -> f64| outcomes.iter().map(|(r, _)| f(r)).collect::<Vec<_>>();
        let first = &outcomes[0].1;
        summaries.push(SigmaSummary {
            sigma,
            noise_dist: MeanSe::of(&column(|r| r.noise_dist)),
            canon_dist: MeanSe::of(&column(|r| r.canon_dist)),
            bound: MeanSe::of(&column(|r| r.bound_sample)),
            bound_quadrant: MeanSe::of(&column(|r| r.bound_sample_quadrant)),
            noisy_rotation_curve: rotation_grid.iter().map(|phi| reference.coefficient_distance(&first.rotate(*phi))).collect(),
            noisy_canonical_dist: reference.coefficient_distance(&canonicalize_f1(first).descriptor),
        });
        records.extend(outcomes.into_iter().map(|(r, _)| r));
    }
    Ok(SimulationReport {
        order: kernel.order(),
        n,
        trials,
        seed,
        f1_mag,
        rotation_grid,
        rotation_curve,
        summaries,
        records,
    })
}
