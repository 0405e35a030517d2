//! Patch-matching benchmark.
//!
//! A dataset is a set of square grayscale patches plus labeled pairs. Each
//! method turns a patch into a descriptor, every pair gets a distance, and the
//! area under the ROC curve measures how well distances separate
//! corresponding from non-corresponding pairs.
//!
//! Methods:
//! - `intensity`: masked pixel values, Euclidean distance.
//! - `hist` / `hist_canon`: hard-binned gradient-orientation histogram weighted
//!   by gradient magnitude, optionally shifted so the largest bin comes first.
//! - `fskde` / `fskde_f1` / `fskde_fk`: truncated FS-KDE of the same gradients,
//!   compared plainly, after `F_1` canonicalization, or with the `F_k`
//!   canonical distance.
//!
//! For the histogram methods `size_param` is the number of bins; for the FS-KDE
//! methods it is the number of reals kept, `2 (cutoff + 1)`, so both families
//! are compared at the same storage budget.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canonical::{canonical_distance_fk, canonicalize_f1};
use crate::descriptor::Descriptor;
use crate::error::{Error, Result};
use crate::image_field::{circular_mask, masked_gradients, GradientOperator};
use crate::io::{fmt_f64, load_gray, save_pgm};
use crate::kernel::{Kernel, KernelMode, TruncationMask};
use crate::stability::seeded_stream;

pub const DEFAULT_MASK_DIAMETER: f64 = 60.0;
pub const DEFAULT_EPSILON: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairLabel {
    Corresponding,
    NonCorresponding,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchPair {
    pub id_a: String,
    pub id_b: String,
    pub label: PairLabel,
    index_a: usize,
    index_b: usize,
}

impl PatchPair {
    pub fn indices(&self) -> (usize, usize) {
        (self.index_a, self.index_b)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    ids: Vec<String>,
    patches: Vec<Array2<f64>>,
    index: HashMap<String, usize>,
    pairs: Vec<PatchPair>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a patch; replaces any patch with the same id.
    pub fn add_patch(&mut self, id: impl Into<String>, patch: Array2<f64>) -> usize {
        let id = id.into();
        if let Some(&i) = self.index.get(&id) {
            self.patches[i] = patch;
            return i;
        }
        let i = self.ids.len();
        self.index.insert(id.clone(), i);
        self.ids.push(id);
        self.patches.push(patch);
        i
    }

    pub fn add_pair(&mut self, id_a: &str, id_b: &str, label: PairLabel) -> Result<()> {
        let index_a = *self.index.get(id_a).ok_or_else(|| Error::UnknownPatch(id_a.to_string()))?;
        let index_b = *self.index.get(id_b).ok_or_else(|| Error::UnknownPatch(id_b.to_string()))?;
        self.pairs.push(PatchPair { id_a: id_a.to_string(), id_b: id_b.to_string(), label, index_a, index_b });
        Ok(())
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn patches(&self) -> &[Array2<f64>] {
        &self.patches
    }

    pub fn patch(&self, id: &str) -> Option<&Array2<f64>> {
        self.index.get(id).map(|&i| &self.patches[i])
    }

    pub fn pairs(&self) -> &[PatchPair] {
        &self.pairs
    }

    pub fn count(&self, label: PairLabel) -> usize {
        self.pairs.iter().filter(|p| p.label == label).count()
    }
}

/// `{"patch_dir": "...", "pairs_file": "...", "patch_size": 64}`; relative
/// paths are resolved against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub patch_dir: String,
    pub pairs_file: String,
    pub patch_size: usize,
}

/// Parses `idA idB 0|1` lines (1 = corresponding). Blank lines and lines
/// starting with `#` are skipped.
pub fn parse_pairs(text: &str, path: &Path) -> Result<Vec<(String, String, PairLabel)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |reason: String| Error::Parse { path: path.to_path_buf(), line: i + 1, reason };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(format!("expected `idA idB 0|1`, got {} fields", fields.len())));
        }
        let label = match fields[2] {
            "1" => PairLabel::Corresponding,
            "0" => PairLabel::NonCorresponding,
            other => return Err(err(format!("label must be 0 or 1, got `{other}`"))),
        };
        out.push((fields[0].to_string(), fields[1].to_string(), label));
    }
    Ok(out)
}

pub fn load_dataset(manifest_path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|source| Error::Json { path: manifest_path.to_path_buf(), source })?;
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    let patch_dir = root.join(&manifest.patch_dir);
    let pairs_path = root.join(&manifest.pairs_file);

    let mut files: Vec<PathBuf> = fs::read_dir(&patch_dir)
        .map_err(|e| Error::io(&patch_dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("pgm") || e.eq_ignore_ascii_case("png"))
        })
        .collect();
    files.sort();

    let loaded: Vec<(String, Array2<f64>)> = files
        .par_iter()
        .map(|path| {
            let patch = load_gray(path)?;
            let (rows, cols) = patch.dim();
            if rows != cols || rows != manifest.patch_size {
                return Err(Error::BadPatch { path: path.clone(), rows, cols, expected: manifest.patch_size });
            }
            let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            Ok((id, patch))
        })
        .collect::<Result<_>>()?;

    let mut dataset = Dataset::new();
    for (id, patch) in loaded {
        dataset.add_patch(id, patch);
    }
    let pairs_text = fs::read_to_string(&pairs_path).map_err(|e| Error::io(&pairs_path, e))?;
    for (a, b, label) in parse_pairs(&pairs_text, &pairs_path)? {
        dataset.add_pair(&a, &b, label)?;
    }
    Ok(dataset)
}

/// Writes patches as `<patch_dir>/<id>.pgm`, the pairs file and
/// `manifest.json` into `dir`.
pub fn write_dataset(dataset: &Dataset, dir: &Path) -> Result<PathBuf> {
    let patch_dir = dir.join("patches");
    fs::create_dir_all(&patch_dir).map_err(|e| Error::io(&patch_dir, e))?;
    dataset
        .ids
        .par_iter()
        .zip(dataset.patches.par_iter())
        .try_for_each(|(id, patch)| save_pgm(&patch_dir.join(format!("{id}.pgm")), patch.view()))?;
    let mut pairs = String::new();
    for p in &dataset.pairs {
        let label = if p.label == PairLabel::Corresponding { 1 } else { 0 };
        pairs.push_str(&format!("{} {} {}\n", p.id_a, p.id_b, label));
    }
    let pairs_path = dir.join("pairs.txt");
    fs::write(&pairs_path, pairs).map_err(|e| Error::io(&pairs_path, e))?;
    let patch_size = dataset.patches.first().map_or(0, |p| p.nrows());
    let manifest = Manifest { patch_dir: "patches".into(), pairs_file: "pairs.txt".into(), patch_size };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|source| Error::Json { path: path.clone(), source })?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Bin `b` covers `[-π + 2πb/B, -π + 2π(b+1)/B)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramDescriptor {
    pub bins: Vec<f64>,
}

impl HistogramDescriptor {
    pub fn from_angles(angles: &[f64], weights: &[f64], bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::TooFewBins(bins));
        }
        let mut h = vec![0.0; bins];
        let width = std::f64::consts::TAU / bins as f64;
        for (a, w) in angles.iter().zip(weights) {
            let b = (((a + std::f64::consts::PI) / width).floor().max(0.0) as usize).min(bins - 1);
            h[b] += w;
        }
        Ok(HistogramDescriptor { bins: h })
    }

    pub fn distance(&self, other: &Self) -> f64 {
        euclidean(&self.bins, &other.bins)
    }
}

pub fn hist_descriptor(patch: ArrayView2<'_, f64>, bins: usize, mask_diameter: f64) -> Result<HistogramDescriptor> {
    if bins < 2 {
        return Err(Error::TooFewBins(bins));
    }
    let set = masked_gradients(patch, mask_diameter, GradientOperator::Central)?;
    HistogramDescriptor::from_angles(set.angles(), set.weights(), bins)
}

/// Circular shift putting the largest bin first; ties go to the smallest shift.
pub fn canonical_hist(h: &HistogramDescriptor) -> HistogramDescriptor {
    let shift = h
        .bins
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if *v > best.1 { (i, *v) } else { best })
        .0;
    let mut bins = h.bins.clone();
    bins.rotate_left(shift);
    HistogramDescriptor { bins }
}

/// Area under the ROC curve for "distance below threshold means
/// corresponding": the probability that a random positive distance is smaller
/// than a random negative one, ties counting one half.
pub fn roc_auc(pos: &[f64], neg: &[f64]) -> Result<f64> {
    if pos.is_empty() {
        return Err(Error::EmptyDistances("corresponding"));
    }
    if neg.is_empty() {
        return Err(Error::EmptyDistances("non-corresponding"));
    }
    if pos.iter().chain(neg).any(|d| d.is_nan()) {
        return Err(Error::InvalidParameter("distance is NaN".into()));
    }
    let mut sorted = neg.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut wins = 0.0;
    for &p in pos {
        let below_or_eq = sorted.partition_point(|&x| x <= p);
        let below = sorted.partition_point(|&x| x < p);
        let greater = sorted.len() - below_or_eq;
        wins += greater as f64 + 0.5 * (below_or_eq - below) as f64;
    }
    Ok(wins / (pos.len() as f64 * neg.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Intensity,
    Hist,
    HistCanon,
    Fskde,
    FskdeF1,
    FskdeFk,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Intensity, Method::Hist, Method::HistCanon, Method::Fskde, Method::FskdeF1, Method::FskdeFk];

    pub fn name(self) -> &'static str {
        match self {
            Method::Intensity => "intensity",
            Method::Hist => "hist",
            Method::HistCanon => "hist_canon",
            Method::Fskde => "fskde",
            Method::FskdeF1 => "fskde_f1",
            Method::FskdeFk => "fskde_fk",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// Largest order whose truncation at `epsilon` keeps exactly
/// `real_len / 2` complex coefficients.
pub fn fskde_order_for_budget(real_len: usize, epsilon: f64) -> Result<(usize, TruncationMask<f64>)> {
    if real_len < 2 || real_len % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "FS-KDE budget must be an even number of reals >= 2, got {real_len}"
        )));
    }
    let cutoff = real_len / 2 - 1;
    if cutoff == 0 {
        return Ok((0, TruncationMask::new(0, epsilon)?));
    }
    let mut found = None;
    let mut order = cutoff;
    loop {
        let mask = TruncationMask::new(order, epsilon)?;
        if mask.cutoff > cutoff {
            break;
        }
        if mask.cutoff == cutoff {
            found = Some((order, mask));
        }
        order += 1;
    }
    found.ok_or_else(|| {
        Error::InvalidParameter(format!("no order keeps exactly {} coefficients at epsilon {epsilon}", cutoff + 1))
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchOptions {
    pub mask_diameter: f64,
    pub epsilon: f64,
    /// Rotate every patch by an independent uniform angle drawn from this seed.
    pub rotate_seed: Option<u64>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions { mask_diameter: DEFAULT_MASK_DIAMETER, epsilon: DEFAULT_EPSILON, rotate_seed: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub method: Method,
    pub size_param: usize,
    pub auc: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    /// Per-pair distances in dataset pair order.
    pub distances: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchmarkReport {
    pub results: Vec<MethodResult>,
}

impl BenchmarkReport {
    pub fn auc(&self, method: Method) -> Option<f64> {
        self.results.iter().find(|r| r.method == method).map(|r| r.auc)
    }

    /// Columns `method,size_param,auc,n_pos,n_neg`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "method,size_param,auc,n_pos,n_neg")?;
        for r in &self.results {
            writeln!(out, "{},{},{},{},{}", r.method, r.size_param, fmt_f64(r.auc), r.n_pos, r.n_neg)?;
        }
        Ok(())
    }

    /// Columns `method,size_param,id_a,id_b,label,distance`.
    pub fn write_distances<W: Write>(&self, dataset: &Dataset, mut out: W) -> std::io::Result<()> {
        writeln!(out, "method,size_param,id_a,id_b,label,distance")?;
        for r in &self.results {
            for (p, d) in dataset.pairs().iter().zip(&r.distances) {
                let label = if p.label == PairLabel::Corresponding { 1 } else { 0 };
                writeln!(out, "{},{},{},{},{},{}", r.method, r.size_param, p.id_a, p.id_b, label, fmt_f64(*d))?;
            }
        }
        Ok(())
    }
}

/// Rotates a patch by `angle` about its center with bilinear resampling;
/// samples falling outside the source read as zero.
pub fn rotate_patch(patch: ArrayView2<'_, f64>, angle: f64) -> Array2<f64> {
    let (rows, cols) = patch.dim();
    let cy = (rows as f64 - 1.0) / 2.0;
    let cx = (cols as f64 - 1.0) / 2.0;
    let (s, c) = angle.sin_cos();
    Array2::from_shape_fn((rows, cols), |(r, col)| {
        let dx = col as f64 - cx;
        let dy = r as f64 - cy;
        // inverse map: rotate the output offset by -angle
        let sx = c * dx + s * dy + cx;
        let sy = -s * dx + c * dy + cy;
        bilinear(patch, sy, sx)
    })
}

fn bilinear(img: ArrayView2<'_, f64>, y: f64, x: f64) -> f64 {
    let (rows, cols) = img.dim();
    let y0 = y.floor();
    let x0 = x.floor();
    let fy = y - y0;
    let fx = x - x0;
    let at = |r: f64, c: f64| -> f64 {
        if r < 0.0 || c < 0.0 || r >= rows as f64 || c >= cols as f64 {
            0.0
        } else {
            img[[r as usize, c as usize]]
        }
    };
    at(y0, x0) * (1.0 - fy) * (1.0 - fx)
        + at(y0, x0 + 1.0) * (1.0 - fy) * fx
        + at(y0 + 1.0, x0) * fy * (1.0 - fx)
        + at(y0 + 1.0, x0 + 1.0) * fy * fx
}

enum PatchDescriptor {
    Vector(Vec<f64>),
    Fskde(Descriptor<f64>),
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn describe(
    patch: ArrayView2<'_, f64>,
    method: Method,
    size_param: usize,
    kernel: Option<&(Kernel<f64>, TruncationMask<f64>)>,
    options: &BenchOptions,
) -> Result<PatchDescriptor> {
    match method {
        Method::Intensity => {
            let (rows, cols) = patch.dim();
            if options.mask_diameter > rows.min(cols) as f64 {
                return Err(Error::MaskTooLarge { diameter: options.mask_diameter, rows, cols });
            }
            let mask = circular_mask(rows, cols, options.mask_diameter);
            Ok(PatchDescriptor::Vector(patch.iter().zip(mask.iter()).filter(|(_, m)| **m).map(|(v, _)| *v).collect()))
        }
        Method::Hist | Method::HistCanon => {
            let h = hist_descriptor(patch, size_param, options.mask_diameter)?;
            let h = if method == Method::HistCanon { canonical_hist(&h) } else { h };
            Ok(PatchDescriptor::Vector(h.bins))
        }
        Method::Fskde | Method::FskdeF1 | Method::FskdeFk => {
            let (kernel, mask) = kernel.expect("kernel prepared for FS-KDE methods");
            let set = masked_gradients(patch, options.mask_diameter, GradientOperator::Central)?;
            let d = Descriptor::estimate(&set, kernel).truncate(mask)?;
            let d = if method == Method::FskdeF1 { canonicalize_f1(&d).descriptor } else { d };
            Ok(PatchDescriptor::Fskde(d))
        }
    }
}

fn pair_distance(a: &PatchDescriptor, b: &PatchDescriptor, method: Method) -> Result<f64> {
    match (a, b) {
        (PatchDescriptor::Vector(x), PatchDescriptor::Vector(y)) => Ok(euclidean(x, y)),
        (PatchDescriptor::Fskde(x), PatchDescriptor::Fskde(y)) => {
            if method == Method::FskdeFk {
                canonical_distance_fk(x, y)
            } else {
                Ok(x.distance(y))
            }
        }
        _ => unreachable!("descriptors of one method share a representation"),
    }
}

/// The patches a benchmark run sees: rotated copies when requested.
pub fn prepared_patches(dataset: &Dataset, options: &BenchOptions) -> Vec<Array2<f64>> {
    match options.rotate_seed {
        None => dataset.patches().to_vec(),
        Some(seed) => dataset
            .patches()
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                let angle = seeded_stream(seed, i as u64).random_range(0.0..std::f64::consts::TAU);
                rotate_patch(p.view(), angle)
            })
            .collect(),
    }
}

pub fn run_benchmark(dataset: &Dataset, method: Method, size_param: usize, options: &BenchOptions) -> Result<MethodResult> {
    let patches = prepared_patches(dataset, options);
    run_on_patches(dataset, &patches, method, size_param, options)
}

/// Runs several methods, rotating the patches once.
pub fn run_benchmarks(
    dataset: &Dataset,
    methods: &[Method],
    size_param: usize,
    options: &BenchOptions,
) -> Result<BenchmarkReport> {
    let patches = prepared_patches(dataset, options);
    let results = methods
        .iter()
        .map(|m| run_on_patches(dataset, &patches, *m, size_param, options))
        .collect::<Result<_>>()?;
    Ok(BenchmarkReport { results })
}

fn run_on_patches(
    dataset: &Dataset,
    patches: &[Array2<f64>],
    method: Method,
    size_param: usize,
    options: &BenchOptions,
) -> Result<MethodResult> {
    if matches!(method, Method::Hist | Method::HistCanon) && size_param < 2 {
        return Err(Error::TooFewBins(size_param));
    }
    let kernel = match method {
        Method::Fskde | Method::FskdeF1 | Method::FskdeFk => {
            let (order, mask) = fskde_order_for_budget(size_param, options.epsilon)?;
            Some((Kernel::new(order, KernelMode::default_for(order)), mask))
        }
        _ => None,
    };
    let descriptors: Vec<PatchDescriptor> = patches
        .par_iter()
        .map(|p| describe(p.view(), method, size_param, kernel.as_ref(), options))
        .collect::<Result<_>>()?;
    let distances: Vec<f64> = dataset
        .pairs()
        .par_iter()
        .map(|p| {
            let (a, b) = p.indices();
            pair_distance(&descriptors[a], &descriptors[b], method)
        })
        .collect::<Result<_>>()?;
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for (p, d) in dataset.pairs().iter().zip(&distances) {
        match p.label {
            PairLabel::Corresponding => pos.push(*d),
            PairLabel::NonCorresponding => neg.push(*d),
        }
    }
    let auc = roc_auc(&pos, &neg)?;
    Ok(MethodResult { method, size_param, auc, n_pos: pos.len(), n_neg: neg.len(), distances })
}

/// Parameters of the built-in synthetic patch generator.
///
/// Each scene is band-limited oriented noise: a sum of plane waves whose
/// directions cluster around a dominant orientation (and, with some
/// probability, a weaker second one), plus a linear shading ramp of random
/// direction and strength. Contrast, orientation spread and pass band are drawn
/// per scene from the given ranges. A corresponding pair renders one scene
/// twice under small independent viewpoint jitter (rotation, scale, shift),
/// photometric jitter (gain, offset) and pixel noise. A non-corresponding pair
/// renders two independent scenes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_corresponding: usize,
    pub n_non_corresponding: usize,
    pub patch_size: usize,
    pub seed: u64,
    pub waves: usize,
    /// Range of the per-scene standard deviation of wave directions.
    pub orientation_spread: (f64, f64),
    /// Probability that a scene has a second orientation.
    pub second_orientation: f64,
    /// Range of the per-scene center wavelength, pixels; each scene's band
    /// spans ±25% around its center.
    pub wavelength: (f64, f64),
    pub contrast: (f64, f64),
    /// Maximum shading-ramp slope, intensity units per pixel.
    pub max_ramp: f64,
    pub jitter_rotation: f64,
    pub jitter_scale: f64,
    pub jitter_shift: f64,
    pub jitter_gain: f64,
    pub jitter_offset: f64,
    pub pixel_noise: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_corresponding: 2000,
            n_non_corresponding: 2000,
            patch_size: 64,
            seed: 0,
            waves: 24,
            orientation_spread: (0.1, 0.6),
            second_orientation: 0.5,
            wavelength: (5.0, 16.0),
            contrast: (15.0, 60.0),
            max_ramp: 1.0,
            jitter_rotation: 0.2,
            jitter_scale: 0.05,
            jitter_shift: 1.5,
            jitter_gain: 0.15,
            jitter_offset: 15.0,
            pixel_noise: 4.0,
        }
    }
}

struct Scene {
    waves: Vec<(f64, f64, f64, f64)>,
    ramp: (f64, f64),
    contrast: f64,
}

fn uniform<R: Rng>(rng: &mut R, range: (f64, f64)) -> f64 {
    if range.1 > range.0 {
        rng.random_range(range.0..=range.1)
    } else {
        range.0
    }
}

impl Scene {
    fn sample<R: Rng>(cfg: &SyntheticConfig, rng: &mut R) -> Scene {
        let orientation = rng.random_range(0.0..std::f64::consts::PI);
        let second = rng.random_bool(cfg.second_orientation.clamp(0.0, 1.0));
        let other = orientation + rng.random_range(0.3..std::f64::consts::PI - 0.3);
        let other_share = rng.random_range(0.2..0.5);
        let spread = Normal::new(0.0, uniform(rng, cfg.orientation_spread).max(1e-12)).expect("finite spread");
        let center = uniform(rng, cfg.wavelength);
        let amp = (cfg.waves.max(1) as f64).sqrt().recip();
        let waves = (0..cfg.waves)
            .map(|_| {
                let base = if second && rng.random_bool(other_share) { other } else { orientation };
                let dir = base + spread.sample(rng);
                let wl = center * rng.random_range(0.75..=1.25);
                let freq = std::f64::consts::TAU / wl;
                let phase = rng.random_range(0.0..std::f64::consts::TAU);
                let a = amp * rng.random_range(0.5..1.5);
                (freq * dir.cos(), freq * dir.sin(), phase, a)
            })
            .collect();
        let ramp_dir = rng.random_range(0.0..std::f64::consts::TAU);
        let ramp_mag = rng.random_range(0.0..=cfg.max_ramp);
        Scene { waves, ramp: (ramp_mag * ramp_dir.cos(), ramp_mag * ramp_dir.sin()), contrast: uniform(rng, cfg.contrast) }
    }

    fn intensity(&self, x: f64, y: f64) -> f64 {
        let tex: f64 = self.waves.iter().map(|(kx, ky, ph, a)| a * (kx * x + ky * y + ph).cos()).sum();
        128.0 + self.contrast * tex + self.ramp.0 * x + self.ramp.1 * y
    }

    fn render<R: Rng>(&self, cfg: &SyntheticConfig, rng: &mut R) -> Array2<f64> {
        let n = cfg.patch_size;
        let center = (n as f64 - 1.0) / 2.0;
        let gauss = Normal::new(0.0, 1.0).expect("unit normal");
        let rot = cfg.jitter_rotation * gauss.sample(rng);
        let scale = 1.0 + cfg.jitter_scale * gauss.sample(rng);
        let (tx, ty) = (cfg.jitter_shift * gauss.sample(rng), cfg.jitter_shift * gauss.sample(rng));
        let gain = 1.0 + cfg.jitter_gain * gauss.sample(rng);
        let offset = cfg.jitter_offset * gauss.sample(rng);
        let (s, c) = rot.sin_cos();
        let mut img = Array2::zeros((n, n));
        for ((r, col), v) in img.indexed_iter_mut() {
            let dx = col as f64 - center;
            let dy = r as f64 - center;
            let x = (c * dx - s * dy) / scale + tx;
            let y = (s * dx + c * dy) / scale + ty;
            let value = gain * (self.intensity(x, y) - 128.0) + 128.0 + offset;
            let noisy = value + cfg.pixel_noise * gauss.sample(rng);
            *v = noisy.round().clamp(0.0, 255.0);
        }
        img
    }
}

/// Generates a synthetic dataset. Patches are quantized to 8 bits so the
/// in-memory dataset equals its PGM export.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<Dataset> {
    if cfg.patch_size < 3 {
        return Err(Error::InvalidParameter(format!("patch size {} too small", cfg.patch_size)));
    }
    if !(cfg.wavelength.0 > 0.0 && cfg.wavelength.0 <= cfg.wavelength.1)
        || cfg.orientation_spread.0 > cfg.orientation_spread.1
        || cfg.contrast.0 > cfg.contrast.1
    {
        return Err(Error::InvalidParameter("generator ranges must be ordered, wavelengths positive".into()));
    }
    let total = cfg.n_corresponding + cfg.n_non_corresponding;
    let rendered: Vec<(Array2<f64>, Array2<f64>)> = (0..total)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeded_stream(cfg.seed, i as u64);
            if i < cfg.n_corresponding {
                let scene = Scene::sample(cfg, &mut rng);
                (scene.render(cfg, &mut rng), scene.render(cfg, &mut rng))
            } else {
                let a = Scene::sample(cfg, &mut rng);
                let b = Scene::sample(cfg, &mut rng);
                (a.render(cfg, &mut rng), b.render(cfg, &mut rng))
            }
        })
        .collect();
    let mut dataset = Dataset::new();
    for (i, (a, b)) in rendered.into_iter().enumerate() {
        let id_a = format!("{:06}", 2 * i);
        let id_b = format!("{:06}", 2 * i + 1);
        dataset.add_patch(id_a.clone(), a);
        dataset.add_patch(id_b.clone(), b);
        let label = if i < cfg.n_corresponding { PairLabel::Corresponding } else { PairLabel::NonCorresponding };
        dataset.add_pair(&id_a, &id_b, label)?;
    }
    Ok(dataset)
}
