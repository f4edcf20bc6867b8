use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64;

use super::bpdn::{run, validate, ReconResult, SparsityBasis};
use super::pdhg::{FidelityNorm, SolverSettings};
use crate::error::{invalid, Result};
use crate::fft::Fft2;
use crate::geometry::{ImageGrid, VisibilitySet};
use crate::operators::{power_norm, InterfMatrix, LinearOperator, POWER_ITERATIONS};

/// Prior and stopping rule for the partial-Fourier stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsityPrior {
    pub basis: SparsityBasis,
    /// Radius `ε₂` of the ℓ2 ball around the measured matrix entries.
    pub epsilon: f64,
    pub settings: SolverSettings,
}

impl Default for SparsityPrior {
    fn default() -> Self {
        Self {
            basis: SparsityBasis::Identity,
            epsilon: 0.0,
            settings: SolverSettings::default(),
        }
    }
}

/// `u ↦ (√m_c · (F u)[c])_c` over the visited cells `c` with multiplicity
/// `m_c`, split into real and imaginary parts. Its squared distance to the
/// weighted cell means of `H` equals `‖R_Ṽ F u − vec H‖₂²` up to a constant.
struct WeightedSampling {
    fft: Fft2,
    cells: Vec<[usize; 2]>,
    weights: Vec<f64>,
    side: usize,
}

impl LinearOperator for WeightedSampling {
    fn domain_len(&self) -> usize {
        self.side * self.side
    }

    fn range_len(&self) -> usize {
        2 * self.cells.len()
    }

    fn matvec(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let img = x.to_shape((self.side, self.side)).expect("domain length");
        let s = self.fft.spectrum(img.view());
        let p = self.cells.len();
        let mut out = Array1::zeros(2 * p);
        for (i, (&c, &w)) in self.cells.iter().zip(&self.weights).enumerate() {
            out[i] = w * s[c].re;
            out[p + i] = w * s[c].im;
        }
        out
    }

    fn rmatvec(&self, y: ArrayView1<f64>) -> Array1<f64> {
        let p = self.cells.len();
        let mut spec = Array2::<Complex64>::zeros((self.side, self.side));
        for (i, (&c, &w)) in self.cells.iter().zip(&self.weights).enumerate() {
            spec[c] = Complex64::new(w * y[i], w * y[p + i]);
        }
        Array1::from_iter(self.fft.spectrum_adjoint(spec))
    }
}

/// Second reconstruction stage: infers the image from its sampled spectrum
/// held in `H`, solving
/// `min ‖Ψ* u‖₁  s.t.  ‖R_Ṽ F u − vec H‖₂ ≤ ε₂`.
pub fn frequencies_to_image(
    h: &InterfMatrix,
    vis: &VisibilitySet,
    grid: &ImageGrid,
    prior: &SparsityPrior,
) -> Result<ReconResult> {
    let q = vis.core_count();
    if h.dim() != q {
        return Err(invalid(format!(
            "matrix is {}×{}, layout has {q} cores",
            h.dim(),
            h.dim()
        )));
    }
    if vis.side() != grid.side() {
        return Err(invalid("visibilities were gridded for a different raster"));
    }
    let mut sums: BTreeMap<[usize; 2], (Complex64, usize)> = BTreeMap::new();
    for j in 0..q {
        for k in 0..q {
            let e = sums
                .entry(vis.cell(j, k))
                .or_insert((Complex64::new(0.0, 0.0), 0));
            e.0 += h.entries()[[j, k]];
            e.1 += 1;
        }
    }
    let mut within = 0.0;
    for j in 0..q {
        for k in 0..q {
            let (s, c) = sums[&vis.cell(j, k)];
            within += (h.entries()[[j, k]] - s / c as f64).norm_sqr();
        }
    }
    let p = sums.len();
    let mut data = Array1::zeros(2 * p);
    let mut cells = Vec::with_capacity(p);
    let mut weights = Vec::with_capacity(p);
    for (i, (&cell, &(s, c))) in sums.iter().enumerate() {
        let w = (c as f64).sqrt();
        let mean = s / c as f64;
        data[i] = w * mean.re;
        data[p + i] = w * mean.im;
        cells.push(cell);
        weights.push(w);
    }
    let eps = (prior.epsilon * prior.epsilon - within).max(0.0).sqrt();
    validate(&data, 2 * p, eps)?;

    let n = grid.side();
    let op = WeightedSampling {
        fft: Fft2::new(n, n),
        cells,
        weights,
        side: n,
    };
    let op_norm = power_norm(&op, POWER_ITERATIONS);
    run(
        op,
        op_norm,
        n,
        &data,
        FidelityNorm::L2,
        eps,
        prior.basis,
        &prior.settings,
    )
}
