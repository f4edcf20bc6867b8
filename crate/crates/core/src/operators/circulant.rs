use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::fft::Fft2;

/// Implicit (block-)circulant matrix on an `n0 × n1` periodic lattice.
///
/// Index `j = a·n1 + b` refers to lattice site `(a, b)`, and
/// `C_jk = v[(a_j − a_k) mod n0, (b_j − b_k) mod n1]`: the first column is
/// `v` and the matrix is diagonalized by the 2-D DFT. Products cost one
/// forward and one inverse FFT; the matrix is never formed.
#[derive(Debug, Clone)]
pub struct CirculantMatrix {
    symbol: Array2<Complex64>,
    fft: Fft2,
}

/// Circulant matrix of a flat `N`-vector (a single periodic axis).
pub fn circulant_embed(v: &[Complex64]) -> Result<CirculantMatrix> {
    if v.is_empty() {
        return Err(invalid("circulant generator must be non-empty"));
    }
    let grid = Array2::from_shape_vec((1, v.len()), v.to_vec()).expect("shape matches length");
    Ok(CirculantMatrix::from_generator(grid.view()))
}

impl CirculantMatrix {
    /// Block-circulant matrix whose first column is `v` read in row-major order.
    pub fn from_generator(v: ArrayView2<Complex64>) -> Self {
        let (n0, n1) = v.dim();
        let fft = Fft2::new(n0, n1);
        let mut symbol = v.to_owned();
        fft.forward(&mut symbol);
        Self { symbol, fft }
    }

    pub fn dim(&self) -> usize {
        self.symbol.len()
    }

    pub fn lattice_shape(&self) -> (usize, usize) {
        self.symbol.dim()
    }

    /// The generator `v`, recovered from the stored eigenvalues.
    pub fn generator(&self) -> Array2<Complex64> {
        let mut v = self.symbol.clone();
        self.fft.inverse(&mut v);
        let scale = 1.0 / self.dim() as f64;
        v.mapv_inplace(|z| z * scale);
        v
    }

    /// `C x`, as a cyclic convolution of the generator with `x`.
    pub fn matvec(&self, x: ArrayView1<Complex64>) -> Result<Array1<Complex64>> {
        self.product(x, false)
    }

    /// `C* x`.
    pub fn rmatvec(&self, x: ArrayView1<Complex64>) -> Result<Array1<Complex64>> {
        self.product(x, true)
    }

    fn product(&self, x: ArrayView1<Complex64>, adjoint: bool) -> Result<Array1<Complex64>> {
        if x.len() != self.dim() {
            return Err(invalid(format!(
                "vector has length {}, circulant matrix is {}×{}",
                x.len(),
                self.dim(),
                self.dim()
            )));
        }
        let mut buf =
            Array2::from_shape_vec(self.symbol.dim(), x.to_vec()).expect("length checked");
        self.fft.forward(&mut buf);
        buf.zip_mut_with(&self.symbol, |b, s| {
            *b *= if adjoint { s.conj() } else { *s }
        });
        self.fft.inverse(&mut buf);
        let scale = 1.0 / self.dim() as f64;
        Ok(buf.into_iter().map(|z| z * scale).collect())
    }

    /// `x* C x`.
    pub fn quadratic_form(&self, x: ArrayView1<Complex64>) -> Result<Complex64> {
        let cx = self.matvec(x)?;
        Ok(x.iter().zip(cx.iter()).map(|(a, b)| a.conj() * b).sum())
    }
}

/// Cyclic autocorrelation `r[d] = Σ_k conj(α_{k⊕d}) α_k` on the lattice, so
/// that `α* C α = Σ_d v[d] r[d]` for the circulant `C` generated by `v`.
pub(crate) fn autocorrelation(fft: &Fft2, alpha: ArrayView1<Complex64>) -> Array2<Complex64> {
    let shape = fft.shape();
    let mut buf = Array2::from_shape_fn(shape, |(a, b)| alpha[a * shape.1 + b].conj());
    fft.forward(&mut buf);
    buf.mapv_inplace(|z| Complex64::new(z.norm_sqr(), 0.0));
    fft.inverse(&mut buf);
    let scale = 1.0 / buf.len() as f64;
    buf.mapv_inplace(|z| z * scale);
    buf
}
