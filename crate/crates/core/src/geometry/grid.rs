use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::layout::{CoreLayout, Point};
use crate::error::{invalid, Result};

/// Largest side the automatic grid choice will accept.
pub const MAX_AUTO_SIDE: usize = 1 << 24;

/// Discretization of the sample plane: an `n × n` raster covering `fov`
/// meters, with a Gaussian vignetting envelope of scale `vignette_sigma`.
///
/// Pixel `(i0, i1)` is centered at `((i0 − n/2)·Δ, (i1 − n/2)·Δ)` with
/// `Δ = fov/n`, so the optical axis falls on pixel `(n/2, n/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageGrid {
    side: usize,
    fov: f64,
    vignette_sigma: f64,
}

impl ImageGrid {
    /// Grid with the default vignette scale `fov/4`.
    pub fn new(side: usize, fov: f64) -> Result<Self> {
        Self::with_vignette(side, fov, fov / 4.0)
    }

    pub fn with_vignette(side: usize, fov: f64, vignette_sigma: f64) -> Result<Self> {
        if side < 2 {
            return Err(invalid(format!("grid side must be at least 2, got {side}")));
        }
        if !(fov > 0.0 && fov.is_finite()) {
            return Err(invalid(format!(
                "field of view must be positive, got {fov}"
            )));
        }
        if vignette_sigma.is_nan() || vignette_sigma <= 0.0 {
            return Err(invalid(format!(
                "vignette scale must be positive, got {vignette_sigma}"
            )));
        }
        if !side.is_power_of_two() {
            log::debug!(
                "grid side {side} is not a power of two; Haar sparsity will be unavailable"
            );
        }
        Ok(Self {
            side,
            fov,
            vignette_sigma,
        })
    }

    /// Default grid for a layout: the field of view is chosen so that any two
    /// distinct core differences are at least one DFT bin apart on some axis,
    /// then `n` is the smallest power of two keeping every visibility within
    /// `n/4` bins (a 2× margin below the band edge `n/2`).
    ///
    /// The result can be very large (tens of thousands of pixels per side for
    /// dense spirals); it is meant for visibility bookkeeping rather than for
    /// allocating images.
    pub fn resolving(layout: &CoreLayout) -> Result<Self> {
        let diffs = differences(layout);
        let span = layout.max_axis_separation();
        let sep = min_axis_separation(&diffs, 1e-9 * span.max(f64::MIN_POSITIVE));
        // Slightly more than one bin per minimal separation.
        let bins_per_meter = match sep {
            Some(s) => 1.01 / s,
            None => 1.0 / layout.fiber_diameter(),
        };
        let max_bin = diffs
            .iter()
            .map(|d| {
                round_half_away(d[0] * bins_per_meter)
                    .abs()
                    .max(round_half_away(d[1] * bins_per_meter).abs())
            })
            .fold(0.0, f64::max) as usize;
        let side = (4 * max_bin).max(2).next_power_of_two();
        if side > MAX_AUTO_SIDE {
            return Err(invalid(format!(
                "layout needs a {side}-pixel grid to resolve its visibilities, beyond the {MAX_AUTO_SIDE} limit"
            )));
        }
        Self::new(side, bins_per_meter * layout.optics().lambda_z())
    }

    /// Grid of side `side` whose field of view stretches the visibility set
    /// to the band edge: the largest per-axis visibility lands on bin
    /// `n/2 − 1` (or bin 1 when `n = 2`).
    pub fn fitted(layout: &CoreLayout, side: usize) -> Result<Self> {
        if side < 2 {
            return Err(invalid(format!("grid side must be at least 2, got {side}")));
        }
        let target = ((side / 2).saturating_sub(1)).max(1) as f64;
        let span = layout.max_axis_separation();
        let bins_per_meter = if span > 0.0 {
            target / span
        } else {
            1.0 / layout.fiber_diameter()
        };
        Self::new(side, bins_per_meter * layout.optics().lambda_z())
    }

    /// Grid on which a lattice of spacing `pitch` maps to exactly one DFT bin
    /// per lattice step (`fov = λz/pitch`).
    pub fn lattice(layout: &CoreLayout, pitch: f64, side: usize) -> Result<Self> {
        if pitch.is_nan() || pitch <= 0.0 {
            return Err(invalid(format!(
                "lattice pitch must be positive, got {pitch}"
            )));
        }
        Self::new(side, layout.optics().lambda_z() / pitch)
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Number of pixels `N = n²`.
    pub fn len(&self) -> usize {
        self.side * self.side
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn fov(&self) -> f64 {
        self.fov
    }

    pub fn pixel_pitch(&self) -> f64 {
        self.fov / self.side as f64
    }

    pub fn vignette_sigma(&self) -> f64 {
        self.vignette_sigma
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.side, self.side)
    }

    /// Physical offset of pixel index `i` along one axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        (i as f64 - (self.side / 2) as f64) * self.pixel_pitch()
    }

    pub fn position(&self, i0: usize, i1: usize) -> Point {
        [self.coordinate(i0), self.coordinate(i1)]
    }

    /// Pixel whose center is nearest to `x` (clamped to the raster).
    pub fn nearest_pixel(&self, x: Point) -> (usize, usize) {
        let idx = |v: f64| {
            let i = (v / self.pixel_pitch()).round() + (self.side / 2) as f64;
            i.clamp(0.0, (self.side - 1) as f64) as usize
        };
        (idx(x[0]), idx(x[1]))
    }

    /// Whether `x` lies inside the raster extent.
    pub fn contains(&self, x: Point) -> bool {
        let lo = self.coordinate(0) - 0.5 * self.pixel_pitch();
        let hi = self.coordinate(self.side - 1) + 0.5 * self.pixel_pitch();
        (lo..=hi).contains(&x[0]) && (lo..=hi).contains(&x[1])
    }

    /// Gaussian envelope `w(x) = exp(−‖x‖²/2σ_w²)`; `w(0) = 1`.
    pub fn vignette_at(&self, x: Point) -> f64 {
        let r2 = x[0] * x[0] + x[1] * x[1];
        (-r2 / (2.0 * self.vignette_sigma * self.vignette_sigma)).exp()
    }

    pub fn vignette(&self) -> Array2<f64> {
        Array2::from_shape_fn(self.shape(), |(a, b)| self.vignette_at(self.position(a, b)))
    }
}

/// Half-away-from-zero rounding (the same as `f64::round`).
#[inline]
pub(crate) fn round_half_away(v: f64) -> f64 {
    v.round()
}

fn differences(layout: &CoreLayout) -> Vec<Point> {
    let p = layout.positions();
    let mut out = Vec::with_capacity(p.len() * p.len());
    out.push([0.0, 0.0]);
    for (j, a) in p.iter().enumerate() {
        for (k, b) in p.iter().enumerate() {
            if j != k {
                out.push([a[0] - b[0], a[1] - b[1]]);
            }
        }
    }
    out
}

/// Smallest Chebyshev distance between two points of `points` that are more
/// than `tol` apart; `None` when all points coincide within `tol`.
fn min_axis_separation(points: &[Point], tol: f64) -> Option<f64> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let mut best = f64::INFINITY;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let dx = pts[j][0] - pts[i][0];
            if dx >= best {
                break;
            }
            let d = dx.max((pts[j][1] - pts[i][1]).abs());
            if d > tol && d < best {
                best = d;
            }
        }
    }
    best.is_finite().then_some(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{fermat_spiral_layout, Optics};

    #[test]
    fn vignette_peaks_at_axis() {
        let g = ImageGrid::new(16, 1e-3).unwrap();
        let w = g.vignette();
        assert_eq!(w[[8, 8]], 1.0);
        assert!(w.iter().all(|&v| v > 0.0 && v <= 1.0));
        assert!((g.vignette_sigma() - 2.5e-4).abs() < 1e-18);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(ImageGrid::new(1, 1.0).is_err());
        assert!(ImageGrid::new(8, 0.0).is_err());
        assert!(ImageGrid::with_vignette(8, 1.0, 0.0).is_err());
    }

    #[test]
    fn nearest_pixel_round_trips_centers() {
        let g = ImageGrid::new(8, 2.0).unwrap();
        for a in 0..8 {
            for b in 0..8 {
                assert_eq!(g.nearest_pixel(g.position(a, b)), (a, b));
            }
        }
    }

    #[test]
    fn min_separation_ignores_duplicates() {
        let pts = [[0.0, 0.0], [0.0, 0.0], [1.0, 0.5], [3.0, 0.0]];
        assert_eq!(min_axis_separation(&pts, 1e-12), Some(1.0));
        assert_eq!(min_axis_separation(&[[1.0, 1.0]; 3], 1e-12), None);
    }

    #[test]
    fn resolving_grid_keeps_two_x_margin() {
        let l = fermat_spiral_layout(10, 1e-4, Optics::default()).unwrap();
        let g = ImageGrid::resolving(&l).unwrap();
        assert!(g.side().is_power_of_two());
        let s = g.fov() / l.optics().lambda_z();
        let max_bin = (l.max_axis_separation() * s).round() as usize;
        assert!(4 * max_bin <= g.side());
    }
}
