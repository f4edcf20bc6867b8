//! Independent reference implementations used by the integration tests.
//! Everything here is written from the defining sums, without FFTs or the
//! library's fused paths.

#![allow(dead_code)]

use std::f64::consts::PI;

use mcf_core::geometry::Point;
use mcf_core::{CoreLayout, ImageGrid, InterfMatrix, Optics, SketchSet, VisibilitySet};
use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

/// `H_jk = Σ_ab f[a,b] exp(−2πi (g·(a − n/2, b − n/2))/n)` with `g` the
/// gridded visibility of the pair.
pub fn dft_interf(f: ArrayView2<f64>, vis: &VisibilitySet) -> Array2<Complex64> {
    let n = f.nrows();
    let q = vis.core_count();
    let half = (n / 2) as f64;
    let mut h = Array2::zeros((q, q));
    for j in 0..q {
        for k in 0..q {
            let g = vis.gridded(j, k);
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..n {
                for b in 0..n {
                    let phase = -2.0
                        * PI
                        * (g[0] as f64 * (a as f64 - half) + g[1] as f64 * (b as f64 - half))
                        / n as f64;
                    acc += f[[a, b]] * cis(phase);
                }
            }
            h[[j, k]] = acc;
        }
    }
    h
}

/// The `M × N` sensing matrix, entry by entry:
/// `B[m, (a,b)] = Re Σ_jk conj(α_j) α_k exp(−2πi g_jk·(a − n/2, b − n/2)/n)`.
pub fn materialized_sensing(vis: &VisibilitySet, sketches: &SketchSet) -> Array2<f64> {
    let n = vis.side();
    let q = vis.core_count();
    let half = (n / 2) as f64;
    let mut b = Array2::zeros((sketches.len(), n * n));
    for m in 0..sketches.len() {
        let alpha = sketches.vector(m);
        for a in 0..n {
            for c in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..q {
                    for k in 0..q {
                        let g = vis.gridded(j, k);
                        let phase = -2.0
                            * PI
                            * (g[0] as f64 * (a as f64 - half) + g[1] as f64 * (c as f64 - half))
                            / n as f64;
                        acc += alpha[j].conj() * alpha[k] * cis(phase);
                    }
                }
                b[[m, a * n + c]] = acc.re;
            }
        }
    }
    b
}

/// Dense block-circulant matrix `C_jk = v[(a_j − a_k) mod n0, (b_j − b_k) mod n1]`.
pub fn dense_circulant(v: ArrayView2<Complex64>) -> Array2<Complex64> {
    let (n0, n1) = v.dim();
    let n = n0 * n1;
    Array2::from_shape_fn((n, n), |(j, k)| {
        let (aj, bj) = (j / n1, j % n1);
        let (ak, bk) = (k / n1, k % n1);
        v[[(aj + n0 - ak) % n0, (bj + n1 - bk) % n1]]
    })
}

/// Speckle at one point: `|Σ_q α_q exp(i(2π/λz) p_q·x)|²`, without vignette.
pub fn speckle_at(alpha: &[Complex64], layout: &CoreLayout, x: Point) -> f64 {
    let c = 2.0 * PI / layout.optics().lambda_z();
    alpha
        .iter()
        .zip(layout.positions())
        .map(|(a, p)| a * cis(c * (p[0] * x[0] + p[1] * x[1])))
        .sum::<Complex64>()
        .norm_sqr()
}

/// Interferometric matrix of point sources: `H_jk = Σ_s ρ_s exp(i(2π/λz)(p_k − p_j)·x_s)`.
pub fn spike_interf(layout: &CoreLayout, spikes: &[(Point, f64)]) -> Array2<Complex64> {
    let c = 2.0 * PI / layout.optics().lambda_z();
    let p = layout.positions();
    let q = p.len();
    Array2::from_shape_fn((q, q), |(j, k)| {
        spikes
            .iter()
            .map(|(x, rho)| {
                *rho * cis(c * ((p[k][0] - p[j][0]) * x[0] + (p[k][1] - p[j][1]) * x[1]))
            })
            .sum()
    })
}

/// Singular values of a Hermitian matrix, descending.
pub fn hermitian_singular_values(h: &Array2<Complex64>) -> Vec<f64> {
    let q = h.nrows();
    let m = DMatrix::<Complex64>::from_fn(q, q, |i, j| h[[i, j]]);
    let mut s: Vec<f64> = m.symmetric_eigenvalues().iter().map(|v| v.abs()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(h: &Array2<Complex64>) -> f64 {
    let q = h.nrows();
    let m = DMatrix::<Complex64>::from_fn(q, q, |i, j| h[[i, j]]);
    m.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn max_abs_diff_c(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn frob_c(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn norm2(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

pub fn rel_diff(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    let d: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    d / norm2(b).max(f64::MIN_POSITIVE)
}

pub fn random_image<R: Rng>(n: usize, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_simple_fn((n, n), || rng.sample(StandardNormal))
}

pub fn random_nonnegative_image<R: Rng>(n: usize, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_simple_fn((n, n), || rng.gen::<f64>())
}

pub fn random_alpha<R: Rng>(q: usize, rng: &mut R) -> Vec<Complex64> {
    (0..q)
        .map(|_| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                * std::f64::consts::FRAC_1_SQRT_2
        })
        .collect()
}

pub fn random_hermitian<R: Rng>(q: usize, rng: &mut R) -> InterfMatrix {
    let mut h = Array2::<Complex64>::zeros((q, q));
    for j in 0..q {
        h[[j, j]] = Complex64::new(rng.sample(StandardNormal), 0.0);
        for k in (j + 1)..q {
            let z = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            h[[j, k]] = z;
            h[[k, j]] = z.conj();
        }
    }
    InterfMatrix::from_hermitian(h).expect("hermitian by construction")
}

/// `q` cores uniformly inside a disc of the given diameter.
pub fn random_layout<R: Rng>(q: usize, diameter: f64, rng: &mut R) -> CoreLayout {
    let positions: Vec<Point> = (0..q)
        .map(|_| {
            let r = 0.5 * diameter * rng.gen::<f64>().sqrt();
            let t = 2.0 * PI * rng.gen::<f64>();
            [r * t.cos(), r * t.sin()]
        })
        .collect();
    CoreLayout::explicit(positions, Some(diameter), Optics::default()).expect("layout")
}

pub fn grid_for(layout: &CoreLayout, n: usize) -> ImageGrid {
    ImageGrid::fitted(layout, n).expect("grid")
}
