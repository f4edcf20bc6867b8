//! Continuous-domain forward model evaluated on the image raster: speckle
//! illumination, focused beams, raster scanning and photon noise.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{CoreLayout, ImageGrid, Point};
use crate::rng::rng_from_seed;

/// Intensity `S(x; α)` sampled on the raster.
#[derive(Debug, Clone, PartialEq)]
pub struct IlluminationField {
    intensity: Array2<f64>,
}

impl IlluminationField {
    pub fn intensity(&self) -> &Array2<f64> {
        &self.intensity
    }

    pub fn into_intensity(self) -> Array2<f64> {
        self.intensity
    }

    /// Raster sum `Σ_x S(x)·f(x)`.
    pub fn integrate(&self, f: ArrayView2<f64>) -> f64 {
        self.intensity
            .iter()
            .zip(f.iter())
            .map(|(s, v)| s * v)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    None,
    Poisson,
    AdditiveGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    /// Expected photon counts per unit intensity (Poisson).
    pub photon_scale: f64,
    /// Standard deviation (additive Gaussian).
    pub sigma: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::none()
    }
}

impl NoiseModel {
    pub fn none() -> Self {
        Self {
            kind: NoiseKind::None,
            photon_scale: 1.0,
            sigma: 0.0,
        }
    }

    pub fn poisson(photon_scale: f64) -> Result<Self> {
        let m = Self {
            kind: NoiseKind::Poisson,
            photon_scale,
            sigma: 0.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        let m = Self {
            kind: NoiseKind::AdditiveGaussian,
            photon_scale: 1.0,
            sigma,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            NoiseKind::Poisson if !(self.photon_scale > 0.0 && self.photon_scale.is_finite()) => {
                Err(invalid(format!(
                    "photon scale must be positive, got {}",
                    self.photon_scale
                )))
            }
            NoiseKind::AdditiveGaussian if !(self.sigma >= 0.0 && self.sigma.is_finite()) => {
                Err(invalid(format!(
                    "noise sigma must be nonnegative, got {}",
                    self.sigma
                )))
            }
            _ => Ok(()),
        }
    }

    /// One noisy realization of a clean value.
    pub fn sample<R: Rng + ?Sized>(&self, clean: f64, rng: &mut R) -> Result<f64> {
        match self.kind {
            NoiseKind::None => Ok(clean),
            NoiseKind::AdditiveGaussian => {
                if self.sigma == 0.0 {
                    return Ok(clean);
                }
                let d = Normal::new(0.0, self.sigma).map_err(|e| invalid(e.to_string()))?;
                Ok(clean + d.sample(rng))
            }
            NoiseKind::Poisson => {
                let rate = self.photon_scale * clean;
                if rate < 0.0 || !rate.is_finite() {
                    return Err(Error::Domain(format!(
                        "Poisson noise needs a nonnegative clean value, got {clean}"
                    )));
                }
                if rate == 0.0 {
                    return Ok(0.0);
                }
                let d = Poisson::new(rate).map_err(|e| invalid(e.to_string()))?;
                let counts: f64 = d.sample(rng);
                Ok(counts / self.photon_scale)
            }
        }
    }

    /// Noisy copy of a whole measurement vector from a single seeded stream.
    pub fn apply(&self, clean: ArrayView1<f64>, seed: u64) -> Result<Array1<f64>> {
        self.validate()?;
        let mut rng = rng_from_seed(seed);
        clean.iter().map(|&v| self.sample(v, &mut rng)).collect()
    }
}

fn check_alpha(alpha: ArrayView1<Complex64>, layout: &CoreLayout) -> Result<()> {
    if alpha.len() != layout.core_count() {
        return Err(invalid(format!(
            "modulation vector has {} entries for {} cores",
            alpha.len(),
            layout.core_count()
        )));
    }
    if alpha.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(invalid("modulation vector must be finite"));
    }
    Ok(())
}

/// Speckle `S(x) = w(x)·|Σ_q α_q exp(i(2π/λz) p_q·x)|²` on every pixel.
pub fn speckle_intensity(
    alpha: ArrayView1<Complex64>,
    layout: &CoreLayout,
    grid: &ImageGrid,
) -> Result<IlluminationField> {
    check_alpha(alpha, layout)?;
    let n = grid.side();
    let c = layout.optics().frequency_scale();
    let coords: Vec<f64> = (0..n).map(|i| grid.coordinate(i)).collect();
    let mut field = Array2::<Complex64>::zeros((n, n));
    let mut rows = vec![Complex64::new(0.0, 0.0); n];
    let mut cols = vec![Complex64::new(0.0, 0.0); n];
    for (a, p) in alpha.iter().zip(layout.positions()) {
        if *a == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (i, &x) in coords.iter().enumerate() {
            rows[i] = *a * Complex64::from_polar(1.0, c * p[0] * x);
            cols[i] = Complex64::from_polar(1.0, c * p[1] * x);
        }
        for ((i0, i1), z) in field.indexed_iter_mut() {
            *z += rows[i0] * cols[i1];
        }
    }
    let w = grid.vignette();
    Ok(IlluminationField {
        intensity: Array2::from_shape_fn((n, n), |ix| w[ix] * field[ix].norm_sqr()),
    })
}

/// One single-pixel measurement under illumination `α`. The clean value is
/// the raster sum `Σ_x S(x; α) f(x)`, with the vignette inside `S`.
pub fn measure(
    f: ArrayView2<f64>,
    alpha: ArrayView1<Complex64>,
    layout: &CoreLayout,
    grid: &ImageGrid,
    noise: &NoiseModel,
    seed: u64,
) -> Result<f64> {
    if f.dim() != grid.shape() {
        return Err(invalid(format!(
            "image is {:?}, grid expects {:?}",
            f.dim(),
            grid.shape()
        )));
    }
    noise.validate()?;
    let clean = speckle_intensity(alpha, layout, grid)?.integrate(f);
    noise.sample(clean, &mut rng_from_seed(seed))
}

/// Modulation focusing all cores on `x0`: `α_q = exp(−i(2π/λz) p_q·x0)/√Q`.
pub fn focused_beam(x0: Point, layout: &CoreLayout) -> Array1<Complex64> {
    let c = layout.optics().frequency_scale();
    let norm = 1.0 / (layout.core_count() as f64).sqrt();
    layout
        .positions()
        .iter()
        .map(|p| Complex64::from_polar(norm, -c * (p[0] * x0[0] + p[1] * x0[1])))
        .collect()
}

/// Focused-spot scan: one measurement per point, noise drawn from a single
/// stream seeded by `seed`.
pub fn raster_scan(
    f: ArrayView2<f64>,
    layout: &CoreLayout,
    grid: &ImageGrid,
    points: &[Point],
    noise: &NoiseModel,
    seed: u64,
) -> Result<Array1<f64>> {
    if f.dim() != grid.shape() {
        return Err(invalid(format!(
            "image is {:?}, grid expects {:?}",
            f.dim(),
            grid.shape()
        )));
    }
    noise.validate()?;
    if let Some(p) = points.iter().find(|p| !grid.contains(**p)) {
        return Err(invalid(format!(
            "scan point ({}, {}) lies outside the field of view",
            p[0], p[1]
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut y = Array1::zeros(points.len());
    for (v, &p) in y.iter_mut().zip(points) {
        let clean = speckle_intensity(focused_beam(p, layout).view(), layout, grid)?.integrate(f);
        *v = noise.sample(clean, &mut rng)?;
    }
    Ok(y)
}

/// Centers of every raster pixel, row-major.
pub fn full_scan_points(grid: &ImageGrid) -> Vec<Point> {
    let n = grid.side();
    (0..n * n).map(|i| grid.position(i / n, i % n)).collect()
}
