//! File formats: grayscale images, angle CSVs and descriptor-field exports.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, GrayImage, ImageEncoder, ImageFormat, Luma};
use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::descriptor::AngleWeightSet;
use crate::error::{Error, Result};
use crate::image_field::DescriptorField;
use crate::scalar::Scalar;

/// Full round-trip decimal: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Loads an 8-bit grayscale PGM (`P5`) or PNG as intensities in `[0, 255]`,
/// indexed `(row, col)`.
pub fn load_gray(path: &Path) -> Result<Array2<f64>> {
    let img = image::open(path).map_err(|source| Error::Image { path: path.to_path_buf(), source })?;
    let gray = img.into_luma8();
    let (w, h) = gray.dimensions();
    Ok(Array2::from_shape_fn((h as usize, w as usize), |(r, c)| gray.get_pixel(c as u32, r as u32)[0] as f64))
}

/// Writes an intensity array as 8-bit binary PGM, rounding and clamping to
/// `[0, 255]`.
pub fn save_pgm(path: &Path, img: ArrayView2<'_, f64>) -> Result<()> {
    let buf = to_gray(img);
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    PnmEncoder::new(&mut out)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(buf.as_raw(), buf.width(), buf.height(), ExtendedColorType::L8)
        .map_err(|source| Error::Image { path: path.to_path_buf(), source })?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn save_png(path: &Path, img: ArrayView2<'_, f64>) -> Result<()> {
    to_gray(img)
        .save_with_format(path, ImageFormat::Png)
        .map_err(|source| Error::Image { path: path.to_path_buf(), source })
}

fn to_gray(img: ArrayView2<'_, f64>) -> GrayImage {
    let (rows, cols) = img.dim();
    GrayImage::from_fn(cols as u32, rows as u32, |c, r| {
        Luma([img[[r as usize, c as usize]].round().clamp(0.0, 255.0) as u8])
    })
}

/// Reads `theta,weight` rows (header required). Angles are radians unless
/// `degrees` is set.
pub fn read_angle_csv(path: &Path, degrees: bool) -> Result<AngleWeightSet<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_angle_csv(&text, path, degrees)
}

pub fn parse_angle_csv(text: &str, path: &Path, degrees: bool) -> Result<AngleWeightSet<f64>> {
    let parse_err = |line: usize, reason: String| Error::Parse { path: path.to_path_buf(), line, reason };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, header)) => {
            let cols: Vec<&str> = header.split(',').map(str::trim).collect();
            if cols != ["theta", "weight"] {
                return Err(parse_err(1, format!("expected header `theta,weight`, got `{header}`")));
            }
        }
        None => return Err(parse_err(1, "missing header `theta,weight`".into())),
    }
    let mut angles = Vec::new();
    let mut weights = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(parse_err(i + 1, format!("expected 2 fields, got {}", fields.len())));
        }
        let theta: f64 = fields[0].parse().map_err(|_| parse_err(i + 1, format!("bad angle `{}`", fields[0])))?;
        let weight: f64 = fields[1].parse().map_err(|_| parse_err(i + 1, format!("bad weight `{}`", fields[1])))?;
        angles.push(if degrees { theta.to_radians() } else { theta });
        weights.push(weight);
    }
    AngleWeightSet::new(angles, weights)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldManifest {
    #[serde(rename = "K")]
    pub order: usize,
    pub rows: usize,
    pub cols: usize,
    /// Plane file names relative to the manifest, for `k = 0..=K`.
    pub planes: Vec<String>,
    pub layout: String,
}

/// Writes one raw file per plane (row-major little-endian `f64` pairs
/// `(re, im)`) plus `manifest.json` into `dir`.
pub fn export_field<T: Scalar>(field: &DescriptorField<T>, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (rows, cols) = field.dim();
    let mut names = Vec::with_capacity(field.order() + 1);
    for (k, plane) in field.planes().iter().enumerate() {
        let name = format!("plane_{k:03}.bin");
        let path = dir.join(&name);
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = BufWriter::new(file);
        for v in plane.iter() {
            out.write_all(&v.re.to_f64_lossy().to_le_bytes()).map_err(|e| Error::io(&path, e))?;
            out.write_all(&v.im.to_f64_lossy().to_le_bytes()).map_err(|e| Error::io(&path, e))?;
        }
        out.flush().map_err(|e| Error::io(&path, e))?;
        names.push(name);
    }
    let manifest = FieldManifest {
        order: field.order(),
        rows,
        cols,
        planes: names,
        layout: "row-major little-endian f64 (re, im) pairs".into(),
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|source| Error::Json { path: path.clone(), source })?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Reads the planes written by [`export_field`].
pub fn import_field_planes(manifest_path: &Path) -> Result<(FieldManifest, Vec<Vec<(f64, f64)>>)> {
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: FieldManifest =
        serde_json::from_str(&text).map_err(|source| Error::Json { path: manifest_path.to_path_buf(), source })?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let mut planes = Vec::new();
    for name in &manifest.planes {
        let path = dir.join(name);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if bytes.len() != manifest.rows * manifest.cols * 16 {
            return Err(Error::Parse { path, line: 0, reason: "plane size does not match manifest".into() });
        }
        let vals = bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                (re, im)
            })
            .collect();
        planes.push(vals);
    }
    Ok((manifest, planes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image_field::{gradient_field, local_fskde, GradientOperator, Window};
    use crate::kernel::{Kernel, KernelMode};

    #[test]
    fn pgm_and_png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let img = Array2::from_shape_fn((5, 7), |(r, c)| (r * 30 + c * 5) as f64);
        for name in ["a.pgm", "a.png"] {
            let path = dir.path().join(name);
            if name.ends_with("pgm") {
                save_pgm(&path, img.view()).unwrap();
                assert!(fs::read(&path).unwrap().starts_with(b"P5"));
            } else {
                save_png(&path, img.view()).unwrap();
            }
            assert_eq!(load_gray(&path).unwrap(), img);
        }
        assert!(load_gray(&dir.path().join("missing.pgm")).unwrap_err().is_io());
    }

    #[test]
    fn angle_csv() {
        let p = Path::new("in.csv");
        let set = parse_angle_csv("theta,weight\n0.5,1\n\n-1.0, 2.5\n", p, false).unwrap();
        assert_eq!(set.angles(), &[0.5, -1.0]);
        assert_eq!(set.weights(), &[1.0, 2.5]);
        let set = parse_angle_csv("theta,weight\n90,1\n", p, true).unwrap();
        assert!((set.angles()[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        match parse_angle_csv("theta,weight\n0.5,1\nx,2\n", p, false) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(parse_angle_csv("angle,w\n", p, false).is_err());
        assert!(matches!(parse_angle_csv("theta,weight\n", p, false), Err(Error::EmptySet)));
    }

    #[test]
    fn field_export_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let img = Array2::from_shape_fn((9, 11), |(r, c)| ((r * c) % 7) as f64);
        let grad = gradient_field(img.view(), GradientOperator::Central).unwrap();
        let field = local_fskde(&grad, &Window::boxed(3, 3).unwrap(), &Kernel::new(3, KernelMode::Exact)).unwrap();
        let manifest = export_field(&field, &dir.path().join("out")).unwrap();
        let (m, planes) = import_field_planes(&manifest).unwrap();
        assert_eq!((m.order, m.rows, m.cols), (3, 9, 11));
        for (k, plane) in planes.iter().enumerate() {
            for (v, w) in plane.iter().zip(field.planes()[k].iter()) {
                assert_eq!(*v, (w.re, w.im));
            }
        }
    }

    #[test]
    fn full_precision_format() {
        let x = 0.1 + 0.2;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    }
}
