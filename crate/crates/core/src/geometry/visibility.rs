use std::collections::BTreeMap;
use std::f64::consts::PI;

use super::grid::{round_half_away, ImageGrid};
use super::layout::{CoreLayout, Point};
use crate::error::{Error, Result};
use crate::fft::wrap_bin;

/// Core-difference frequencies `ν_jk = (2π/λz)(p_j − p_k)` and their nearest
/// bins on an image DFT grid.
///
/// Gridding rounds each coordinate half away from zero for `j < k` and
/// mirrors the result for `j > k`, so `grid(ν_kj) = −grid(ν_jk)` holds
/// exactly. Multiplicities are counted per DFT grid cell (bins wrapped onto
/// `0..n`).
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilitySet {
    cores: usize,
    side: usize,
    offgrid: Vec<Point>,
    gridded: Vec<[i64; 2]>,
    multiplicity: BTreeMap<[usize; 2], usize>,
}

impl VisibilitySet {
    pub fn core_count(&self) -> usize {
        self.cores
    }

    /// Side of the grid the visibilities were binned on.
    pub fn side(&self) -> usize {
        self.side
    }

    /// Off-grid angular frequency `ν_jk` (rad/m).
    pub fn offgrid(&self, j: usize, k: usize) -> Point {
        self.offgrid[j * self.cores + k]
    }

    /// Signed DFT bin of `ν_jk`.
    pub fn gridded(&self, j: usize, k: usize) -> [i64; 2] {
        self.gridded[j * self.cores + k]
    }

    /// Grid cell of `ν_jk` in standard DFT order.
    pub fn cell(&self, j: usize, k: usize) -> [usize; 2] {
        let b = self.gridded(j, k);
        [wrap_bin(b[0], self.side), wrap_bin(b[1], self.side)]
    }

    pub fn offgrid_all(&self) -> &[Point] {
        &self.offgrid
    }

    pub fn gridded_all(&self) -> &[[i64; 2]] {
        &self.gridded
    }

    /// Number of distinct grid cells hit by the `Q²` visibilities.
    pub fn distinct_count(&self) -> usize {
        self.multiplicity.len()
    }

    pub fn multiplicity(&self) -> &BTreeMap<[usize; 2], usize> {
        &self.multiplicity
    }

    /// `Q(Q − 1) + 1`, the count reached when every off-diagonal visibility
    /// lands on its own cell.
    pub fn max_distinct(&self) -> usize {
        self.cores * (self.cores - 1) + 1
    }

    /// Histogram: multiplicity value → number of cells with that multiplicity.
    pub fn multiplicity_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for &m in self.multiplicity.values() {
            *h.entry(m).or_insert(0) += 1;
        }
        h
    }
}

/// Computes all `Q²` visibilities of `layout` and grids them onto `grid`.
///
/// A bin is converted as `round(ν · fov / 2π)`; any pair whose bin exceeds
/// `n/2` in magnitude on either axis is an aliasing error.
pub fn compute_visibilities(layout: &CoreLayout, grid: &ImageGrid) -> Result<VisibilitySet> {
    let q = layout.core_count();
    let n = grid.side();
    let half = (n / 2) as i64;
    let scale = layout.optics().frequency_scale();
    let to_bin = grid.fov() / (2.0 * PI);
    let p = layout.positions();

    let mut offgrid = vec![[0.0; 2]; q * q];
    let mut gridded = vec![[0i64; 2]; q * q];
    for j in 0..q {
        for k in 0..q {
            offgrid[j * q + k] = [scale * (p[j][0] - p[k][0]), scale * (p[j][1] - p[k][1])];
        }
    }
    for j in 0..q {
        for k in (j + 1)..q {
            let nu = offgrid[j * q + k];
            let b = [
                round_half_away(nu[0] * to_bin) as i64,
                round_half_away(nu[1] * to_bin) as i64,
            ];
            if b[0].abs() > half || b[1].abs() > half {
                return Err(Error::Aliasing { j, k, bin: b, half });
            }
            gridded[j * q + k] = b;
            gridded[k * q + j] = [-b[0], -b[1]];
        }
    }

    let mut multiplicity = BTreeMap::new();
    for b in &gridded {
        *multiplicity
            .entry([wrap_bin(b[0], n), wrap_bin(b[1], n)])
            .or_insert(0) += 1;
    }

    Ok(VisibilitySet {
        cores: q,
        side: n,
        offgrid,
        gridded,
        multiplicity,
    })
}
