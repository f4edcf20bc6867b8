use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::fft::Fft2;
use crate::geometry::{ImageGrid, VisibilitySet};

/// Relative tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// A `Q × Q` Hermitian matrix: the interferometric matrix of an image, or
/// anything living in the same space (adjoint outputs, estimates).
#[derive(Debug, Clone, PartialEq)]
pub struct InterfMatrix {
    entries: Array2<Complex64>,
}

impl InterfMatrix {
    /// Accepts `entries` if it is square and Hermitian to within
    /// [`HERMITIAN_TOL`] (relative to its Frobenius norm), then symmetrizes
    /// it exactly.
    pub fn from_hermitian(entries: Array2<Complex64>) -> Result<Self> {
        let (r, c) = entries.dim();
        if r != c {
            return Err(invalid(format!(
                "interferometric matrix must be square, got {r}×{c}"
            )));
        }
        let dev = hermitian_deviation(entries.view());
        let scale = frobenius(entries.view());
        if dev > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Contract(format!(
                "matrix is not Hermitian: ‖H − H*‖ = {dev:.3e} vs ‖H‖ = {scale:.3e}"
            )));
        }
        Ok(Self::symmetrized(entries))
    }

    /// Replaces the matrix by its Hermitian part `(H + H*)/2`.
    pub(crate) fn symmetrized(mut entries: Array2<Complex64>) -> Self {
        let q = entries.nrows();
        for j in 0..q {
            entries[[j, j]] = Complex64::new(entries[[j, j]].re, 0.0);
            for k in (j + 1)..q {
                let avg = 0.5 * (entries[[j, k]] + entries[[k, j]].conj());
                entries[[j, k]] = avg;
                entries[[k, j]] = avg.conj();
            }
        }
        Self { entries }
    }

    pub fn zeros(q: usize) -> Self {
        Self {
            entries: Array2::zeros((q, q)),
        }
    }

    pub fn identity(q: usize) -> Self {
        Self {
            entries: Array2::from_diag_elem(q, Complex64::new(1.0, 0.0)),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> Array2<Complex64> {
        self.entries
    }

    pub fn norm(&self) -> f64 {
        frobenius(self.entries.view())
    }

    /// Real Frobenius inner product `Re tr(A* B)`.
    pub fn inner(&self, other: &InterfMatrix) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }
}

pub(crate) fn frobenius(m: ArrayView2<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn hermitian_deviation(m: ArrayView2<Complex64>) -> f64 {
    let q = m.nrows();
    let mut acc = 0.0;
    for j in 0..q {
        for k in 0..q {
            acc += (m[[j, k]] - m[[k, j]].conj()).norm_sqr();
        }
    }
    acc.sqrt()
}

fn check_shapes(image_shape: (usize, usize), vis: &VisibilitySet, grid: &ImageGrid) -> Result<()> {
    if vis.side() != grid.side() {
        return Err(invalid(format!(
            "visibilities were gridded for n = {}, but the image grid has n = {}",
            vis.side(),
            grid.side()
        )));
    }
    if image_shape != grid.shape() {
        return Err(invalid(format!(
            "image is {}×{}, grid expects {}×{}",
            image_shape.0,
            image_shape.1,
            grid.side(),
            grid.side()
        )));
    }
    Ok(())
}

/// Discrete interferometric matrix `H = R_Ṽ F f`: one unnormalized FFT of the
/// image followed by a gather of the spectrum at each gridded visibility,
/// `H_jk = (F f)[grid(ν_jk)]`. The upper triangle is gathered and mirrored,
/// so `H` is exactly Hermitian and `H_jj = Σ f`.
pub fn interf_forward(
    image: ArrayView2<f64>,
    vis: &VisibilitySet,
    grid: &ImageGrid,
) -> Result<InterfMatrix> {
    let fft = Fft2::new(grid.side(), grid.side());
    interf_forward_with(&fft, image, vis, grid)
}

pub(crate) fn interf_forward_with(
    fft: &Fft2,
    image: ArrayView2<f64>,
    vis: &VisibilitySet,
    grid: &ImageGrid,
) -> Result<InterfMatrix> {
    check_shapes(image.dim(), vis, grid)?;
    if image.iter().any(|v| !v.is_finite()) {
        return Err(invalid("image has non-finite pixels"));
    }
    let spec = fft.spectrum(image);
    Ok(gather(&spec, vis))
}

pub(crate) fn gather(spec: &Array2<Complex64>, vis: &VisibilitySet) -> InterfMatrix {
    let q = vis.core_count();
    let mut h = Array2::<Complex64>::zeros((q, q));
    let dc = spec[[0, 0]].re;
    for j in 0..q {
        h[[j, j]] = Complex64::new(dc, 0.0);
        for k in (j + 1)..q {
            let v = spec[vis.cell(j, k)];
            h[[j, k]] = v;
            h[[k, j]] = v.conj();
        }
    }
    InterfMatrix { entries: h }
}

/// Adjoint of [`interf_forward`] for the real inner products on images and
/// on Hermitian matrices: scatter-add every entry onto its DFT cell, then
/// apply the real adjoint of the spectrum map.
pub fn interf_adjoint(
    h: &InterfMatrix,
    vis: &VisibilitySet,
    grid: &ImageGrid,
) -> Result<Array2<f64>> {
    let fft = Fft2::new(grid.side(), grid.side());
    interf_adjoint_with(&fft, h.entries.view(), vis, grid)
}

/// Same as [`interf_adjoint`] but accepts any complex matrix; only its
/// Hermitian part contributes since the forward map is Hermitian-valued.
pub(crate) fn interf_adjoint_with(
    fft: &Fft2,
    h: ArrayView2<Complex64>,
    vis: &VisibilitySet,
    grid: &ImageGrid,
) -> Result<Array2<f64>> {
    check_shapes(grid.shape(), vis, grid)?;
    let q = vis.core_count();
    if h.dim() != (q, q) {
        return Err(invalid(format!(
            "matrix is {:?}, expected {q}×{q}",
            h.dim()
        )));
    }
    let mut weights = Array2::<Complex64>::zeros(grid.shape());
    for j in 0..q {
        for k in 0..q {
            weights[vis.cell(j, k)] += h[[j, k]];
        }
    }
    Ok(fft.spectrum_adjoint(weights))
}
