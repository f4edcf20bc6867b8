//! Two-dimensional FFT helpers on centered image rasters.
//!
//! Images are stored in display order: pixel `(i0, i1)` sits at the physical
//! offset `((i0 - n/2)·Δ, (i1 - n/2)·Δ)` from the optical axis, so the
//! center pixel is `x = 0`. Spectra are stored in standard DFT order with
//! bin `b` at index `b mod n`. The forward transform is unnormalized:
//! `F[b] = Σ_x f(x) exp(-2πi b·x/n)`.

use std::sync::Arc;

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Cached forward and inverse plans for an `n0 × n1` grid.
#[derive(Clone)]
pub struct Fft2 {
    shape: (usize, usize),
    fwd_rows: Arc<dyn Fft<f64>>,
    fwd_cols: Arc<dyn Fft<f64>>,
    inv_rows: Arc<dyn Fft<f64>>,
    inv_cols: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("shape", &self.shape).finish()
    }
}

impl Fft2 {
    pub fn new(n0: usize, n1: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            shape: (n0, n1),
            fwd_rows: planner.plan_fft_forward(n1),
            fwd_cols: planner.plan_fft_forward(n0),
            inv_rows: planner.plan_fft_inverse(n1),
            inv_cols: planner.plan_fft_inverse(n0),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, data: &mut Array2<Complex64>) {
        self.run(data, &self.fwd_rows, &self.fwd_cols);
    }

    /// Unnormalized inverse transform in place (no `1/N` factor).
    pub fn inverse(&self, data: &mut Array2<Complex64>) {
        self.run(data, &self.inv_rows, &self.inv_cols);
    }

    fn run(
        &self,
        data: &mut Array2<Complex64>,
        rows: &Arc<dyn Fft<f64>>,
        cols: &Arc<dyn Fft<f64>>,
    ) {
        assert_eq!(data.dim(), self.shape, "FFT buffer shape mismatch");
        let (n0, n1) = self.shape;
        let scratch_len = rows
            .get_inplace_scratch_len()
            .max(cols.get_inplace_scratch_len());
        let mut scratch = vec![Complex64::new(0.0, 0.0); scratch_len];

        if !data.is_standard_layout() {
            *data = data.as_standard_layout().to_owned();
        }
        let buf = data.as_slice_mut().expect("standard layout");
        if n1 > 1 {
            rows.process_with_scratch(buf, &mut scratch);
        }
        if n0 > 1 {
            let mut column = vec![Complex64::new(0.0, 0.0); n0];
            for c in 0..n1 {
                for r in 0..n0 {
                    column[r] = buf[r * n1 + c];
                }
                cols.process_with_scratch(&mut column, &mut scratch);
                for r in 0..n0 {
                    buf[r * n1 + c] = column[r];
                }
            }
        }
    }

    /// Spectrum of a real image given in centered display order.
    pub fn spectrum(&self, image: ArrayView2<f64>) -> Array2<Complex64> {
        let (n0, n1) = self.shape;
        assert_eq!(image.dim(), self.shape, "image shape mismatch");
        let (c0, c1) = (n0 / 2, n1 / 2);
        let mut buf = Array2::<Complex64>::zeros(self.shape);
        for ((i0, i1), &v) in image.indexed_iter() {
            buf[[(i0 + n0 - c0) % n0, (i1 + n1 - c1) % n1]] = Complex64::new(v, 0.0);
        }
        self.forward(&mut buf);
        buf
    }

    /// Real adjoint of [`Fft2::spectrum`]: maps spectral weights `G` to the
    /// image `x ↦ Re Σ_b G[b] exp(+2πi b·x/n)` in display order.
    pub fn spectrum_adjoint(&self, mut weights: Array2<Complex64>) -> Array2<f64> {
        let (n0, n1) = self.shape;
        let (c0, c1) = (n0 / 2, n1 / 2);
        self.inverse(&mut weights);
        Array2::from_shape_fn(self.shape, |(i0, i1)| {
            weights[[(i0 + n0 - c0) % n0, (i1 + n1 - c1) % n1]].re
        })
    }
}

/// Wraps a signed frequency bin onto `0..n`.
#[inline]
pub fn wrap_bin(b: i64, n: usize) -> usize {
    b.rem_euclid(n as i64) as usize
}
