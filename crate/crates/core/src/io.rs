//! File formats: layouts and measurements as CSV, images as PGM or CSV, run
//! manifests as JSON with SHA-256 content hashes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use image::{ImageBuffer, Luma};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{CoreLayout, Optics, Point};

const LAYOUT_HEADER: [&str; 2] = ["x_m", "y_m"];

/// Writes core positions as `x_m,y_m` rows. Values use the shortest
/// representation that parses back to the same `f64`, so reading and
/// rewriting a file produced here is byte-exact.
pub fn write_layout_csv(path: &Path, positions: &[Point]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(LAYOUT_HEADER)?;
    for p in positions {
        w.write_record([p[0].to_string(), p[1].to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_layout_positions(path: &Path) -> Result<Vec<Point>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.iter().map(str::trim).ne(LAYOUT_HEADER) {
        return Err(Error::Parse(format!(
            "{}: expected header 'x_m,y_m', found '{}'",
            path.display(),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| {
                    Error::Parse(format!(
                        "{}: bad coordinate on data row {}",
                        path.display(),
                        line + 1
                    ))
                })
        };
        out.push([parse(0)?, parse(1)?]);
    }
    Ok(out)
}

/// Explicit layout from a CSV file; the fiber diameter is inferred when not
/// given.
pub fn read_layout_csv(
    path: &Path,
    fiber_diameter: Option<f64>,
    optics: Optics,
) -> Result<CoreLayout> {
    CoreLayout::explicit(read_layout_positions(path)?, fiber_diameter, optics)
}

/// One value per row under a `y` header.
pub fn write_vector_csv(path: &Path, header: &str, values: ArrayView1<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([header])?;
    for v in values {
        w.write_record([v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_vector_csv(path: &Path) -> Result<Array1<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let v = rec
            .get(0)
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|v| v.is_finite())
            .ok_or_else(|| {
                Error::Parse(format!(
                    "{}: bad value on data row {}",
                    path.display(),
                    line + 1
                ))
            })?;
        out.push(v);
    }
    Ok(Array1::from(out))
}

/// Headerless matrix of exact values, one image row per line.
pub fn write_image_csv(path: &Path, image: ArrayView2<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    for row in image.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_image_csv(path: &Path) -> Result<Array2<f64>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        rows.push(row);
    }
    let h = rows.len();
    let w = rows.first().map_or(0, Vec::len);
    if h == 0 || w == 0 || rows.iter().any(|r| r.len() != w) {
        return Err(Error::Parse(format!(
            "{}: image rows must be non-empty and equally long",
            path.display()
        )));
    }
    Ok(
        Array2::from_shape_vec((h, w), rows.into_iter().flatten().collect())
            .expect("shape checked"),
    )
}

/// 16-bit PGM, linearly mapped so that 0 is black and the maximum is white;
/// negative values clip to black.
pub fn write_image_pgm(path: &Path, image: ArrayView2<f64>) -> Result<()> {
    let (h, w) = image.dim();
    let peak = image.iter().fold(0.0f64, |m, &v| m.max(v));
    let scale = if peak > 0.0 { 65535.0 / peak } else { 0.0 };
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
        let v = image[[y as usize, x as usize]].max(0.0) * scale;
        Luma([v.round().min(65535.0) as u16])
    });
    buf.save_with_format(path, image::ImageFormat::Pnm)?;
    Ok(())
}

/// Grey levels scaled to `[0, 1]` by the format's maximum value.
pub fn read_image_pgm(path: &Path) -> Result<Array2<f64>> {
    let img = image::ImageReader::open(path)?
        .with_guessed_format()?
        .decode()?
        .into_luma16();
    let (w, h) = img.dimensions();
    Ok(Array2::from_shape_fn((h as usize, w as usize), |(r, c)| {
        img.get_pixel(c as u32, r as u32)[0] as f64 / 65535.0
    }))
}

/// Reads an image by extension: `.csv` exact values, anything else PGM.
pub fn read_image(path: &Path) -> Result<Array2<f64>> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("csv") => read_image_csv(path),
        _ => read_image_pgm(path),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

/// Everything needed to reproduce a run: the resolved configuration, the
/// master seed, the tool version, and hashes of the files it wrote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    /// SHA-256 of the compact JSON encoding of `config`.
    pub config_hash: String,
    /// File name relative to the manifest's directory → SHA-256.
    pub files: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new<C: Serialize>(command: &str, seed: u64, config: &C) -> Result<Self> {
        let config = serde_json::to_value(config)?;
        Ok(Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            config_hash: sha256_hex(serde_json::to_string(&config)?.as_bytes()),
            config,
            files: BTreeMap::new(),
        })
    }

    /// Records the hash of `dir/name`.
    pub fn record_file(&mut self, dir: &Path, name: &str) -> Result<()> {
        let h = file_sha256(&dir.join(name))?;
        self.files.insert(name.to_string(), h);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        Ok(())
    }

    /// Parses and checks the config hash. Any structural or hash problem is
    /// reported as a configuration mismatch.
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let m: Self = serde_json::from_str(&text).map_err(|e| {
            Error::ConfigMismatch(format!("{}: corrupted manifest: {e}", path.display()))
        })?;
        let expected = sha256_hex(serde_json::to_string(&m.config)?.as_bytes());
        if expected != m.config_hash {
            return Err(Error::ConfigMismatch(format!(
                "{}: config hash does not match its contents",
                path.display()
            )));
        }
        Ok(m)
    }

    /// Checks that `dir/name` still has the recorded hash.
    pub fn verify_file(&self, dir: &Path, name: &str) -> Result<()> {
        let recorded = self
            .files
            .get(name)
            .ok_or_else(|| Error::ConfigMismatch(format!("manifest does not list '{name}'")))?;
        let actual = file_sha256(&dir.join(name))?;
        if &actual != recorded {
            return Err(Error::ConfigMismatch(format!(
                "'{name}' does not match the hash in its manifest"
            )));
        }
        Ok(())
    }

    /// The stored configuration, deserialized.
    pub fn config_as<C: for<'de> Deserialize<'de>>(&self) -> Result<C> {
        serde_json::from_value(self.config.clone()).map_err(|e| {
            Error::ConfigMismatch(format!("manifest config does not fit this command: {e}"))
        })
    }
}
